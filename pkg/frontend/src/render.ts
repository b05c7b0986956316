import type { BreadcrumbEntry, WizardState } from "./wizard.js";
import type { QuestionPayload, VerdictPayload } from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderQuestion(question: QuestionPayload, selection: number[]): string {
  const options = question.options
    .map((option) => {
      const checked = selection.includes(option.index) ? " checked" : "";
      const nota = option.index === question.nota_index ? " data-nota=\"true\"" : "";
      return [
        `<li>`,
        `<label${nota}>`,
        `<input type="checkbox" data-option="${option.index}"${checked} />`,
        ` <span class="option-index">${option.index}.</span> ${escapeHtml(option.label)}`,
        `</label>`,
        `</li>`,
      ].join("");
    })
    .join("\n");
  const background = question.background
    ? `<details class="background"><summary>Definitions and background</summary><p>${escapeHtml(
        question.background,
      )}</p></details>`
    : "";
  const notaHint =
    question.nota_index !== null
      ? `<p class="nota-hint">Selecting “None of the above” records a context gap.</p>`
      : "";
  const disabled = selection.length === 0 ? " disabled" : "";
  return [
    `<section class="question" data-question="${escapeHtml(question.id)}">`,
    `<h2>${escapeHtml(question.text)}</h2>`,
    background,
    `<ul class="options">${options}</ul>`,
    notaHint,
    `<button type="button" data-action="submit"${disabled}>Continue</button>`,
    `<button type="button" data-action="undo">Back</button>`,
    `</section>`,
  ].join("\n");
}

export function renderVerdict(verdict: VerdictPayload, contextGap: boolean): string {
  const cited = verdict.cited.length
    ? `<ul class="cited">${verdict.cited
        .map((ref) => `<li><a href="#provision-${escapeHtml(ref)}">${escapeHtml(ref)}</a></li>`)
        .join("")}</ul>`
    : `<p class="cited-none">No provisions cited.</p>`;
  const factors = verdict.unknown_factors.length
    ? `<ul class="factors">${verdict.unknown_factors
        .map(
          (factor) =>
            `<li><code>${escapeHtml(factor.provision)}</code> <em>(${
              factor.origin === "none_of_the_above" ? "none of the above" : "not sure"
            })</em></li>`,
        )
        .join("")}</ul>`
    : `<p class="factors-none">No unknown contextual factors recorded.</p>`;
  const flags = [
    verdict.indeterminate
      ? `<p class="flag flag-indeterminate">No determinate rule applied; this outcome needs human review.</p>`
      : "",
    contextGap ? `<p class="flag flag-context-gap">Context gap recorded during this session.</p>` : "",
  ].join("");
  return [
    `<section class="verdict verdict-${verdict.label.toLowerCase()}">`,
    `<h2>Outcome: ${escapeHtml(verdict.label)}</h2>`,
    flags,
    `<h3>Cited provisions</h3>`,
    cited,
    `<h3>Unknown contextual factors</h3>`,
    factors,
    `</section>`,
  ].join("\n");
}

export function renderBreadcrumb(breadcrumb: BreadcrumbEntry[]): string {
  if (breadcrumb.length === 0) {
    return `<nav class="breadcrumb" data-length="0"></nav>`;
  }
  const items = breadcrumb
    .map(
      (entry) =>
        `<li${entry.notaSelected ? ' class="context-gap" title="context gap recorded"' : ""}>` +
        `${escapeHtml(entry.questionId)} → ${entry.selected.join(", ")}</li>`,
    )
    .join("");
  return `<nav class="breadcrumb" data-length="${breadcrumb.length}"><ol>${items}</ol></nav>`;
}

export function renderErrorBanner(message: string, retryable: boolean): string {
  const retry = retryable
    ? `<button type="button" data-action="retry">Retry</button>`
    : "";
  return `<div class="error-banner" role="alert">${escapeHtml(message)} ${retry}</div>`;
}

export function renderState(state: WizardState, contextGap: boolean): string {
  const parts: string[] = [renderBreadcrumb(state.breadcrumb)];
  if (state.errorMessage) {
    parts.push(renderErrorBanner(state.errorMessage, state.errorRetryable));
  }
  if (state.status === "complete" && state.verdict) {
    parts.push(renderVerdict(state.verdict, contextGap));
  } else if (state.question) {
    parts.push(renderQuestion(state.question, state.selection));
  }
  return parts.join("\n");
}

import { describe, expect, it } from "vitest";

import { renderBreadcrumb, renderErrorBanner, renderQuestion, renderState, renderVerdict } from "../src/render.js";
import type { QuestionPayload, VerdictPayload } from "../src/types.js";
import { loadFixture } from "./helpers.js";

const fixture = loadFixture();

const entityQuestion = fixture.scripts[0]!.create_response.question as QuestionPayload;

describe("renderQuestion", () => {
  it("renders all six entity options with indices", () => {
    const html = renderQuestion(entityQuestion, []);
    for (const label of ["Provider", "Deployer", "Distributor", "Importer", "Product manufacturer", "Authorised representative"]) {
      expect(html).toContain(label);
    }
    expect(html).toContain('data-option="6"');
  });

  it("disables the submit button with zero selections", () => {
    const html = renderQuestion(entityQuestion, []);
    expect(html).toContain('data-action="submit" disabled');
  });

  it("enables the submit button once something is selected", () => {
    const html = renderQuestion(entityQuestion, [2]);
    expect(html).not.toContain('data-action="submit" disabled');
    expect(html).toContain('data-option="2" checked');
  });

  it("marks the NOTA option and shows the context-gap hint", () => {
    const notaQuestion: QuestionPayload = {
      id: "question_2",
      text: "Any modifications?",
      options: [
        { index: 1, label: "Renamed" },
        { index: 2, label: "None of the above" },
      ],
      background: null,
      nota_index: 2,
    };
    const html = renderQuestion(notaQuestion, []);
    expect(html).toContain('data-nota="true"');
    expect(html).toContain("records a context gap");
  });

  it("puts background definitions behind an expandable section", () => {
    const html = renderQuestion(entityQuestion, []);
    expect(html).toContain("<details");
    expect(html).toContain("Definitions");
  });

  it("escapes markup in question text", () => {
    const hostile: QuestionPayload = {
      id: "q",
      text: "<script>alert(1)</script>",
      options: [{ index: 1, label: "a & b" }],
      background: null,
      nota_index: null,
    };
    const html = renderQuestion(hostile, []);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
    expect(html).toContain("a &amp; b");
  });
});

describe("renderVerdict", () => {
  const verdict: VerdictPayload = {
    label: "Permitted",
    indeterminate: false,
    unknown_factors: [
      { provision: "question_10", origin: "none_of_the_above", context: "question_10" },
    ],
    cited: ["Article 6(1)", "Article 8"],
    chunk_trace: [],
  };

  it("shows the label, cited provisions and unknown factors", () => {
    const html = renderVerdict(verdict, true);
    expect(html).toContain("Outcome: Permitted");
    expect(html).toContain("Article 6(1)");
    expect(html).toContain("question_10");
    expect(html).toContain("none of the above");
    expect(html).toContain("Context gap recorded");
  });

  it("flags indeterminate outcomes as needing review", () => {
    const flagged = { ...verdict, label: "Prohibited" as const, indeterminate: true };
    const html = renderVerdict(flagged, false);
    expect(html).toContain("human review");
    expect(html).toContain("verdict-prohibited");
  });

  it("handles empty citations without inventing content", () => {
    const bare = { ...verdict, cited: [], unknown_factors: [] };
    const html = renderVerdict(bare, false);
    expect(html).toContain("No provisions cited");
    expect(html).toContain("No unknown contextual factors");
  });
});

describe("renderBreadcrumb and banners", () => {
  it("exposes the history length for invariant checks", () => {
    const html = renderBreadcrumb([
      { questionId: "question_1", questionText: "t", selected: [1], notaSelected: false },
      { questionId: "question_2", questionText: "t", selected: [4], notaSelected: true },
    ]);
    expect(html).toContain('data-length="2"');
    expect(html).toContain("context-gap");
  });

  it("renders a retry button only for retryable errors", () => {
    expect(renderErrorBanner("boom", true)).toContain('data-action="retry"');
    expect(renderErrorBanner("boom", false)).not.toContain('data-action="retry"');
  });
});

describe("renderState", () => {
  it("renders the final view from a completed script", () => {
    const script = fixture.scripts[0]!;
    const finalPayload = script.steps[script.steps.length - 1]!.response;
    const html = renderState(
      {
        sessionId: script.create_response.session_id,
        status: "complete",
        question: null,
        selection: [],
        breadcrumb: script.steps.map((s) => ({
          questionId: s.request.question_id,
          questionText: s.request.question_id,
          selected: s.request.selected,
          notaSelected: false,
        })),
        verdict: finalPayload.verdict!,
        errorMessage: null,
        errorRetryable: false,
      },
      false,
    );
    expect(html).toContain(`Outcome: ${finalPayload.verdict!.label}`);
    expect(html).toContain(`data-length="${script.steps.length}"`);
  });
});

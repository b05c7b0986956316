import { ApiError, ServiceUnreachableError, WizardApi } from "./api.js";
import type { QuestionPayload, SessionPayload, VerdictPayload } from "./types.js";

export interface BreadcrumbEntry {
  questionId: string;
  questionText: string;
  selected: number[];
  notaSelected: boolean;
}

export type WizardStatus = "idle" | "in_progress" | "complete" | "error";

export interface WizardState {
  sessionId: string | null;
  status: WizardStatus;
  question: QuestionPayload | null;
  selection: number[];
  breadcrumb: BreadcrumbEntry[];
  verdict: VerdictPayload | null;
  errorMessage: string | null;
  errorRetryable: boolean;
}

/** Local view diverged from the server history; a bug, not a user error. */
export class StateDesyncError extends Error {
  constructor(local: number, server: number) {
    super(`breadcrumb length ${local} != server history length ${server}`);
    this.name = "StateDesyncError";
  }
}

/** One-question-at-a-time session driver.
 *
 * Holds no compliance logic: every verdict byte comes from the service.
 * The only local state beyond the session id is presentation state, and
 * the breadcrumb is checked against the server history on every response.
 */
export class WizardController {
  readonly state: WizardState = {
    sessionId: null,
    status: "idle",
    question: null,
    selection: [],
    breadcrumb: [],
    verdict: null,
    errorMessage: null,
    errorRetryable: false,
  };

  constructor(private readonly api: WizardApi) {}

  async start(): Promise<WizardState> {
    this.state.breadcrumb = [];
    return this.guarded(async () => {
      const payload = await this.api.createSession();
      this.state.sessionId = payload.session_id;
      this.apply(payload);
    });
  }

  /** Reload state for an existing session (e.g. after a page reload). */
  async rehydrate(sessionId: string): Promise<WizardState> {
    return this.guarded(async () => {
      const payload = await this.api.getSession(sessionId);
      this.state.sessionId = payload.session_id;
      this.state.breadcrumb = payload.answered.map((entry) => ({
        questionId: entry.question_id,
        questionText: entry.question_id,
        selected: [...entry.selected],
        notaSelected: false,
      }));
      this.apply(payload);
    });
  }

  toggleOption(index: number): void {
    const position = this.state.selection.indexOf(index);
    if (position >= 0) {
      this.state.selection.splice(position, 1);
    } else {
      this.state.selection.push(index);
      this.state.selection.sort((a, b) => a - b);
    }
  }

  /** The "select at least one option" rule, enforced before any request. */
  canSubmit(): boolean {
    return this.state.status === "in_progress" && this.state.selection.length > 0;
  }

  async submitSelection(): Promise<WizardState> {
    const { sessionId, question } = this.state;
    if (!sessionId || !question) {
      throw new Error("no active question to answer");
    }
    if (!this.canSubmit()) {
      throw new Error("select at least one option");
    }
    const selected = [...this.state.selection];
    return this.guarded(async () => {
      const payload = await this.api.submitAnswer(sessionId, question.id, selected);
      this.state.breadcrumb.push({
        questionId: question.id,
        questionText: question.text,
        selected,
        notaSelected: question.nota_index !== null && selected.includes(question.nota_index),
      });
      this.apply(payload);
    });
  }

  async undo(): Promise<WizardState> {
    const { sessionId } = this.state;
    if (!sessionId) {
      throw new Error("no session");
    }
    return this.guarded(async () => {
      const payload = await this.api.undo(sessionId);
      this.state.breadcrumb.pop();
      this.apply(payload);
    });
  }

  /** True when any answer so far selected "None of the above". */
  contextGapRecorded(): boolean {
    return this.state.breadcrumb.some((entry) => entry.notaSelected);
  }

  private apply(payload: SessionPayload): void {
    if (this.state.breadcrumb.length !== payload.history_length) {
      throw new StateDesyncError(this.state.breadcrumb.length, payload.history_length);
    }
    this.state.selection = [];
    this.state.errorMessage = null;
    this.state.errorRetryable = false;
    if (payload.status === "complete") {
      this.state.status = "complete";
      this.state.question = null;
      this.state.verdict = payload.verdict ?? null;
    } else {
      this.state.status = "in_progress";
      this.state.question = payload.question ?? null;
      this.state.verdict = null;
    }
  }

  private async guarded(action: () => Promise<void>): Promise<WizardState> {
    try {
      await action();
    } catch (error) {
      if (error instanceof ServiceUnreachableError) {
        this.state.status = "error";
        this.state.errorMessage = error.message;
        this.state.errorRetryable = true;
      } else if (error instanceof ApiError) {
        // surface inline; session state on the server is unchanged
        this.state.errorMessage = `${error.code}: ${error.message}`;
        this.state.errorRetryable = false;
      } else {
        throw error;
      }
    }
    return this.state;
  }
}

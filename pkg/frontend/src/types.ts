/** Payload shapes of the wizard service API. The client renders these
 * verbatim; it never derives compliance conclusions of its own. */

export interface OptionPayload {
  index: number;
  label: string;
}

export interface QuestionPayload {
  id: string;
  text: string;
  options: OptionPayload[];
  background: string | null;
  nota_index: number | null;
}

export interface UnknownFactorPayload {
  provision: string;
  origin: "not_sure" | "none_of_the_above";
  context: string;
}

export interface VerdictPayload {
  label: "Permitted" | "Prohibited" | "NotApplicable";
  indeterminate: boolean;
  unknown_factors: UnknownFactorPayload[];
  cited: string[];
  chunk_trace: unknown[];
}

export interface AnsweredEntry {
  question_id: string;
  selected: number[];
}

export interface SessionPayload {
  session_id: string;
  graph_version: string;
  history_length: number;
  answered: AnsweredEntry[];
  status: "in_progress" | "complete";
  question?: QuestionPayload;
  pending_questions?: string[];
  verdict?: VerdictPayload;
}

export interface ApiErrorPayload {
  code: string;
  message: string;
}

export interface GraphMetaPayload {
  version: string;
  root: string;
  question_count: number;
  leaf_count: number;
  nota_question_count: number;
}

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";
import type { SessionPayload, VerdictPayload } from "../src/types.js";

export interface RecordedStep {
  request: { question_id: string; selected: number[] };
  status: number;
  response: SessionPayload;
}

export interface RecordedScript {
  script_id: string;
  create_response: SessionPayload;
  steps: RecordedStep[];
  batch_verdict: VerdictPayload;
}

export interface RecordedFixture {
  graph_version: string;
  graph_meta: Record<string, unknown>;
  scripts: RecordedScript[];
  undo_scenario: {
    create_response: SessionPayload;
    answer_response: SessionPayload;
    undo_response: SessionPayload;
    answer_again_response: SessionPayload;
  };
  error_scenario: {
    create_response: SessionPayload;
    request: { question_id: string; selected: number[] };
    status: number;
    response: { code: string; message: string };
  };
}

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixture(): RecordedFixture {
  const raw = readFileSync(join(here, "..", "fixtures", "recorded_scripts.json"), "utf-8");
  return JSON.parse(raw) as RecordedFixture;
}

export interface Exchange {
  method: string;
  path: string;
  body?: unknown;
  status: number;
  payload: unknown;
}

/** Fetch double that replays recorded exchanges in order and fails fast on
 * any request the recording did not anticipate. */
export class ReplayFetch {
  private cursor = 0;

  constructor(
    private readonly exchanges: Exchange[],
    private readonly baseUrl = "http://service",
  ) {}

  get fetch(): FetchLike {
    return async (input, init) => {
      const expected = this.exchanges[this.cursor];
      if (!expected) {
        throw new Error(`unexpected request beyond recording: ${init?.method} ${input}`);
      }
      this.cursor += 1;
      const method = init?.method ?? "GET";
      if (method !== expected.method || input !== `${this.baseUrl}${expected.path}`) {
        throw new Error(
          `request mismatch: got ${method} ${input}, ` +
            `expected ${expected.method} ${this.baseUrl}${expected.path}`,
        );
      }
      if (expected.body !== undefined) {
        const got = JSON.parse((init?.body as string) ?? "null");
        const want = JSON.stringify(expected.body);
        if (JSON.stringify(got) !== want) {
          throw new Error(`body mismatch for ${expected.path}: ${init?.body} != ${want}`);
        }
      }
      return new Response(JSON.stringify(expected.payload), {
        status: expected.status,
        headers: { "Content-Type": "application/json" },
      });
    };
  }

  get exhausted(): boolean {
    return this.cursor === this.exchanges.length;
  }
}

export function scriptExchanges(script: RecordedScript): Exchange[] {
  const sid = script.create_response.session_id;
  return [
    {
      method: "POST",
      path: "/sessions",
      body: { graph_version: null },
      status: 201,
      payload: script.create_response,
    },
    ...script.steps.map((step) => ({
      method: "POST",
      path: `/sessions/${sid}/answers`,
      body: step.request,
      status: step.status,
      payload: step.response,
    })),
  ];
}

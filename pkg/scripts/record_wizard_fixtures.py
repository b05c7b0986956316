#!/usr/bin/env python3
"""Record wizard API exchanges for the browser client's offline tests.

Drives the real service in-process through the shared answer scripts and
dumps every request/response pair, plus the batch engine verdict for the
equivalent answer map, into frontend/fixtures/recorded_scripts.json.
Re-run after changing the graph, the service payloads, or the scripts.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from lawcheck.graph import default_aiact_graph  # noqa: E402
from lawcheck.service import create_app  # noqa: E402
from wizard_scripts import batch_verdict, generate_scripts  # noqa: E402

OUT_PATH = REPO / "frontend" / "fixtures" / "recorded_scripts.json"


def record() -> dict:
    graph = default_aiact_graph()
    client = TestClient(create_app(graph))

    scripts_out = []
    for i, steps in enumerate(generate_scripts(graph, count=20)):
        create_response = client.post("/sessions", json={})
        payload = create_response.json()
        sid = payload["session_id"]
        exchanges = []
        for question_id, selected in steps:
            body = {"question_id": question_id, "selected": selected}
            response = client.post(f"/sessions/{sid}/answers", json=body)
            exchanges.append(
                {
                    "request": body,
                    "status": response.status_code,
                    "response": response.json(),
                }
            )
        scripts_out.append(
            {
                "script_id": f"script_{i:02d}",
                "create_response": payload,
                "steps": exchanges,
                "batch_verdict": batch_verdict(graph, steps).to_json(),
            }
        )

    # one undo scenario for the back-navigation tests
    payload = client.post("/sessions", json={}).json()
    sid = payload["session_id"]
    first = client.post(
        f"/sessions/{sid}/answers", json={"question_id": "question_1", "selected": [6]}
    ).json()
    undone = client.post(f"/sessions/{sid}/undo").json()
    again = client.post(
        f"/sessions/{sid}/answers", json={"question_id": "question_1", "selected": [6]}
    ).json()
    undo_scenario = {
        "create_response": payload,
        "answer_response": first,
        "undo_response": undone,
        "answer_again_response": again,
    }

    # one error scenario: stale question answered out of turn
    payload = client.post("/sessions", json={}).json()
    sid = payload["session_id"]
    stale = client.post(
        f"/sessions/{sid}/answers", json={"question_id": "question_9", "selected": [1]}
    )
    error_scenario = {
        "create_response": payload,
        "request": {"question_id": "question_9", "selected": [1]},
        "status": stale.status_code,
        "response": stale.json(),
    }

    meta = client.get("/graph/meta").json()
    return {
        "graph_version": graph.version,
        "graph_meta": meta,
        "scripts": scripts_out,
        "undo_scenario": undo_scenario,
        "error_scenario": error_scenario,
    }


def main() -> None:
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    data = record()
    OUT_PATH.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", "utf-8")
    print(f"wrote {OUT_PATH} ({len(data['scripts'])} scripts)")


if __name__ == "__main__":
    main()

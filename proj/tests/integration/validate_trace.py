#!/usr/bin/env python3
"""Run the CLI on the case questions under each ablation flag and validate every trace against the schema."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

FLAG_SETS = [[], ["--no-tree"], ["--no-memory"], ["--no-graph-retrieval"], ["--no-embed-retrieval"]]


def main() -> int:
    if len(sys.argv) != 3:
        print("usage: validate_trace.py <chronoqa> <data dir>", file=sys.stderr)
        return 2
    cli, data = sys.argv[1], Path(sys.argv[2])
    schema = json.loads((data / "schema" / "trace.schema.json").read_text())
    validator = jsonschema.Draft202012Validator(schema)
    questions = [json.loads(line) for line in (data / "fixtures" / "case_questions.jsonl").read_text().splitlines() if line.strip()]
    failures = 0
    checked = 0
    with tempfile.TemporaryDirectory() as tmp:
        for flags in FLAG_SETS:
            pool = Path(tmp) / ("pool" + "".join(flags) + ".jsonl")
            for q in questions:
                # Twice with a persisted pool so reuse paths are covered too.
                for attempt in (1, 2):
                    out = Path(tmp) / f"{q['id']}{''.join(flags)}-{attempt}.json"
                    cmd = [cli, "ask", q["question"],
                           "--tkg", str(data / "fixtures" / "case_studies.tsv"),
                           "--aliases", str(data / "fixtures" / "aliases.tsv"),
                           "--script", str(data / "scripts" / "case_studies.rules.json"),
                           "--memory", str(pool), "--trace-out", str(out), *flags]
                    run = subprocess.run(cmd, capture_output=True, text=True)
                    label = f"{q['id']} {' '.join(flags) or '(default)'} run {attempt}"
                    if run.returncode != 0:
                        print(f"FAIL {label}: exit {run.returncode}: {run.stderr.strip()}")
                        failures += 1
                        continue
                    errors = sorted(validator.iter_errors(json.loads(out.read_text())), key=lambda e: list(e.path))
                    checked += 1
                    for e in errors[:5]:
                        print(f"FAIL {label}: {'/'.join(map(str, e.path))}: {e.message}")
                    failures += 1 if errors else 0
    print(f"{checked} traces validated, {failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

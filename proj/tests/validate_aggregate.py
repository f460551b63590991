"""Validate an aggregate.json report against the shipped JSON schema."""
import json
import sys

import jsonschema


def main() -> int:
    schema_path, report_path = sys.argv[1], sys.argv[2]
    with open(schema_path) as f:
        schema = json.load(f)
    with open(report_path) as f:
        report = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(report), key=lambda e: list(e.path))
    for e in errors:
        print(f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}")
    if errors:
        return 1
    # the run bundle must carry the objective and constraint with intervals
    for run in report["runs"]:
        for part in ("objective", "constraint"):
            assert "point" in run[part] and "ci" in run[part], part
    print(f"ok: {len(report['runs'])} runs")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Validate CLI outputs against the JSON schemas in schemas/."""
import json
import pathlib
import subprocess
import sys

import jsonschema
from referencing import Registry, Resource

exe, schema_dir, out_dir = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
out_dir.mkdir(parents=True, exist_ok=True)

schemas = {p.name.split(".")[0]: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
registry = Registry().with_resources(
    (s["$id"], Resource.from_contents(s)) for s in schemas.values()
)


def check(instance, name):
    cls = jsonschema.validators.validator_for(schemas[name])
    cls(schemas[name], registry=registry).validate(instance)


runs = [
    ("trace", ["--model", "loose-straight", "--kmax", "8", "--resolution", "16"]),
    ("trace", ["--model", "tight-carpet", "--kmax", "5", "--resolution", "16"]),
    ("bands", ["--model", "loose-zigzag", "--kmax", "20"]),
    ("bands", ["--model", "tight-carpet", "--kmax", "15"]),
    ("stats", ["--model", "loose-straight", "--kmax", "40", "--regime", "both"]),
    ("stats", ["--model", "tight-zigzag", "--kmax", "30"]),
    ("verify", ["--model", "loose-straight"]),
    ("verify", ["--model", "tight-straight", "--kmax", "30"]),
]
failed = 0
for i, (cmd, args) in enumerate(runs):
    for fmt in ("json", "csv"):
        out = out_dir / f"{i}_{cmd}.{fmt}"
        rc = subprocess.run([exe, cmd, *args, "--format", fmt, "--out", str(out)]).returncode
        if rc not in (0, 3):
            print(f"FAIL {cmd} {args}: exit {rc}")
            failed += 1
            continue
        try:
            if fmt == "json":
                doc = json.loads(out.read_text())
                check(doc, cmd)
            else:
                head = [l for l in out.read_text().splitlines() if l.startswith("# config: ")]
                assert head, "no config line"
                check(json.loads(head[0][len("# config: "):]), "config")
            print(f"ok   {out.name}")
        except (jsonschema.ValidationError, AssertionError) as e:
            print(f"FAIL {out.name}: {e}")
            failed += 1
sys.exit(1 if failed else 0)

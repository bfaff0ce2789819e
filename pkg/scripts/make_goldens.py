"""Regenerate tests/golden from the shipped fixtures.

Run from the repository root: ``python3 scripts/make_goldens.py``.
"""

import json
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"
COMMANDS = {"validate": "txt", "globalize": "json"}


def run(cmd: str, fixture: Path):
    p = subprocess.run(
        [sys.executable, "-m", "twistdescent.cli", cmd, str(fixture.relative_to(ROOT))],
        cwd=ROOT,
        capture_output=True,
    )
    return p.returncode, p.stdout, p.stderr


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for fixture in sorted((ROOT / "fixtures").glob("*.json")):
        for cmd, ext in COMMANDS.items():
            code, out, err = run(cmd, fixture)
            stem = f"{fixture.stem}.{cmd}"
            (GOLDEN / f"{stem}.{ext}").write_bytes(out)
            (GOLDEN / f"{stem}.stderr").write_bytes(err)
            manifest[stem] = code
    (GOLDEN / "exit_codes.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")


if __name__ == "__main__":
    main()

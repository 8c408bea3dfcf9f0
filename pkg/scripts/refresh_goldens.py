#!/usr/bin/env python3
"""Regenerate the golden artifacts under tests/golden/.

Goldens pin the offline pipeline output (profile of the bundled mini corpus)
and the four bundled reference correlation matrices. Run after an intentional
behavior change, inspect the diff, and commit the result.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"
SYNTH = ROOT / "src" / "trace_profiler" / "data" / "synthetic"
REFERENCE = ROOT / "src" / "trace_profiler" / "data" / "reference"


def run_cli(out_dir: Path, *args: str) -> None:
    cmd = [
        sys.executable,
        "-m",
        "trace_profiler.cli",
        "--offline",
        "--output-dir",
        str(out_dir),
        "--seed",
        "0",
        *args,
    ]
    subprocess.run(cmd, cwd=ROOT, check=True, capture_output=True, text=True)


def main() -> int:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        run_cli(out, "profile", "--corpus", f"mini20={SYNTH / 'mini20.jsonl'}")
        shutil.copy(out / "profiles" / "mini20.profile.json", GOLDEN / "mini20.profile.json")
        print("refreshed mini20.profile.json")

        for fixture in sorted(REFERENCE.glob("*.json")):
            run_cli(out, "correlate", "--fixture", str(fixture))
            family = json.loads(fixture.read_text(encoding="utf-8"))["family"]
            stem = family.replace("/", "_").replace(" ", "_")
            shutil.copy(
                out / "correlation" / f"{stem}.matrix.csv",
                GOLDEN / f"{fixture.stem}.matrix.csv",
            )
            print(f"refreshed {fixture.stem}.matrix.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())

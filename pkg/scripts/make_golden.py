#!/usr/bin/env python3
"""Regenerate the golden outputs of the sample pipeline (data/sample/golden/).

Run from the repository root after any intentional behavior change:

    python scripts/make_golden.py

The acceptance suite compares fresh pipeline runs against these files
byte-for-byte, so regenerate them only when the change in output is intended
and reviewed.
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

from dialoprep.cli import main
from dialoprep.demo import GOLDEN_FILES, sample_pipeline_argv

ROOT = Path(__file__).resolve().parent.parent
SAMPLE = ROOT / "data" / "sample"


def run() -> int:
    golden = SAMPLE / "golden"
    if golden.exists():
        shutil.rmtree(golden)
    golden.mkdir(parents=True)
    for argv in sample_pipeline_argv(SAMPLE / "raw_sample.jsonl",
                                     SAMPLE / "ingest_spec.json", golden):
        code = main(argv)
        if code != 0:
            print(f"stage failed with exit code {code}: {argv}", file=sys.stderr)
            return code
    missing = [name for name in GOLDEN_FILES if not (golden / name).exists()]
    if missing:
        print(f"expected golden files missing: {missing}", file=sys.stderr)
        return 1
    print(f"regenerated {len(GOLDEN_FILES)} golden files in {golden}")
    return 0


if __name__ == "__main__":
    sys.exit(run())

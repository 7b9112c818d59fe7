#!/usr/bin/env python3
"""End-to-end demo: generate, validate, emit SQL, and load into SQLite.

Usage: python scripts/run_demo.py [outdir]
"""
from __future__ import annotations

import sys
from pathlib import Path

from ehrsynth.cli import main as cli_main


def main() -> int:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out")
    code = cli_main(["pipeline", "--patients", "42", "--seed", "1",
                     "--backend", "grammar", "--out", str(outdir)])
    if code != 0:
        return code
    db_url = f"sqlite:///{outdir / 'ehr.db'}"
    code = cli_main(["load", "--out", str(outdir), "--database-url", db_url])
    if code != 0:
        return code
    print(f"\ndemo artifacts in {outdir}/ (database: {outdir / 'ehr.db'})")
    print((outdir / "summary.txt").read_text())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

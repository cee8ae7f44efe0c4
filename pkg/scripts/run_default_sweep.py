#!/usr/bin/env python3
"""Run the default verification sweep and write report.json / report.csv.

Usage: python scripts/run_default_sweep.py [OUTDIR]
"""

import pathlib
import sys

from lce import harness


def main() -> int:
    outdir = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path("sweep_out")
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = harness.default_config(output=str(outdir / "report.json"))
    doc = harness.run_config(cfg)
    harness.emit_report(doc, outdir / "report.json", outdir / "report.csv")
    harness.save_config(cfg, outdir / "config.json")
    print(f"wrote {outdir}/report.json and {outdir}/report.csv")
    print(f"pass={doc.summary['pass']} fail={doc.summary['fail']} flagged={doc.summary['flagged']}")
    for r in doc.results:
        if r.status != "pass":
            print(f"  [{r.status}] {r.check_id} {r.inputs}")
    return doc.exit_code()


if __name__ == "__main__":
    sys.exit(main())

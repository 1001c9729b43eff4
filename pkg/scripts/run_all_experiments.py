"""Run every sample config in configs/ through the CLI entry point.

Fast configs run by default; the multi-minute scans (criticality period/fit,
thermal) need --all.  Each run lands in <out>/<config-stem>/.
"""

import argparse
import json
import sys
from pathlib import Path

from zenosim.cli import main as zenosim_main

SLOW = {"criticality_period", "criticality_fit", "thermal", "twophoton"}


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=None, help="config directory")
    ap.add_argument("--out", default="runs", help="output root")
    ap.add_argument("--all", action="store_true", help="include the slow scans")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    cfg_dir = Path(args.configs) if args.configs else (
        Path(__file__).resolve().parent.parent / "configs")
    failures = []
    for path in sorted(cfg_dir.glob("*.json")):
        if path.stem in SLOW and not args.all:
            print(f"-- skipping {path.name} (slow; pass --all)")
            continue
        outdir = Path(args.out) / path.stem
        cmd = ["run", str(path), "--output-dir", str(outdir)]
        if args.workers:
            cmd += ["--workers", str(args.workers)]
        print(f"== {path.name} -> {outdir}")
        code = zenosim_main(cmd)
        if code != 0:
            failures.append((path.name, code))
            print(f"!! {path.name} exited {code}")
        else:
            summary = json.loads((outdir / "manifest.json").read_text())["summary"]
            print("   " + ", ".join(f"{k}={v}" for k, v in summary.items()))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(run())

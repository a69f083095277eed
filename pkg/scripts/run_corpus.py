#!/usr/bin/env python3
"""Protection experiment over the firmware corpus.

For every corpus program: protect, build, patch, verify, attack, evaluate;
collect the per-program evaluation reports in a run directory and print the
aggregate table. Unlike the firmware acceptance suite this script asserts
nothing; it exists to rerun the measurement with different seeds or attack
strengths.

Usage:
  python scripts/run_corpus.py [--corpus firmware/corpus] [--out runs/exp1]
                               [--seed 2024] [--strings 8] [--attack-seed 99]
"""

import argparse
import json
import shlex
import shutil
import subprocess
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CLBFORGE = [sys.executable, "-m", "clbforge"]


def run_tool(*args, check=True):
    cmd = CLBFORGE + [str(a) for a in args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if check and proc.returncode != 0:
        sys.exit(f"{shlex.join(cmd)}:\n{proc.stdout}{proc.stderr}")
    return proc


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", type=Path, default=ROOT / "firmware" / "corpus")
    parser.add_argument("--out", type=Path, default=ROOT / "runs" / "corpus")
    parser.add_argument("--seed", type=int, default=2024, help="protection seed")
    parser.add_argument("--attack-seed", type=int, default=99)
    parser.add_argument("--strings", type=int, default=8, help="strings tampered per binary")
    args = parser.parse_args()

    manifest = json.loads((args.corpus / "manifest.json").read_text())
    args.out.mkdir(parents=True, exist_ok=True)

    for prog in manifest["programs"]:
        name = prog["name"]
        src = args.corpus / prog["dir"]
        work = args.out / name
        if work.exists():
            shutil.rmtree(work)
        work.mkdir(parents=True)

        t0 = time.monotonic()
        run_tool("--seed", args.seed, "protect", src, "-o", work / "src",
                 "--keymap", work / "keymap.json")
        run_tool("build", work / "src", "-o", work / "unpatched")
        run_tool("patch", work / "unpatched", "--keymap", work / "keymap.json",
                 "-o", work / "protected", "--report", work / "patch.json")
        pipeline_seconds = time.monotonic() - t0
        run_tool("build", src, "-o", work / "original")
        verify = run_tool("verify", work / "protected", "--keymap", work / "keymap.json",
                          check=False)
        if verify.returncode != 0:
            sys.exit(f"{name}: verification failed\n{verify.stdout}")

        shutil.copy(work / "protected", work / "shipped")
        if shutil.which("strip"):
            subprocess.run(["strip", str(work / "shipped")], check=True)
        run_tool("--seed", args.attack_seed, "attack", "strings", work / "shipped",
                 "-n", args.strings, "--sections", ".text,.rodata,.data",
                 "-o", work / "tampered", "--report", work / "tamper.json")

        run_tool("evaluate",
                 "--original", work / "original",
                 "--protected", work / "protected",
                 "--tampered", work / "tampered",
                 "--script", args.corpus / prog["script"],
                 "--name", name,
                 "--patch-report", work / "patch.json",
                 "-o", args.out / f"{name}.eval.json")
        doc = json.loads((args.out / f"{name}.eval.json").read_text())
        doc["stage_seconds"]["pipeline"] = pipeline_seconds
        (args.out / f"{name}.eval.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(f"{name}: clbs={doc['clb_count']} {doc['equivalence']}"
              f" {doc['detection']} overhead={doc['size_overhead_percent']:.2f}%",
              flush=True)

    print(flush=True)
    subprocess.run(CLBFORGE + ["report", str(args.out)], check=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())

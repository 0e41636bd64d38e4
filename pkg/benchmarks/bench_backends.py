#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure NumPy/Python fallback.

Runs the full evaluation pipeline on a synthetic workload in two child
processes (one per backend, selected via TETAEVAL_NO_NUMBA), checks that
both produce byte-identical reports, and prints the timing comparison.

    python3 benchmarks/bench_backends.py --sequences 8 --frames 40 --tracks 10
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time


def build_workload(seed, n_sequences, n_frames, n_tracks):
    import numpy as np

    from tetaeval import (
        BBox,
        CategoryEntry,
        CategoryTable,
        Dataset,
        Frame,
        GtBox,
        PredBox,
        Sequence,
        canonicalize,
    )

    rng = np.random.default_rng(seed)
    cats = CategoryTable({c: CategoryEntry(f"class_{c}") for c in range(4)})
    gt_seqs = []
    pred_seqs = []
    for s in range(n_sequences):
        tracks = []
        for t in range(n_tracks):
            x0, y0 = rng.random(2) * 200
            vx, vy = rng.random(2) * 3 - 1.5
            tracks.append((t, x0, y0, vx, vy, int(rng.integers(0, 4))))
        gt_frames = []
        pred_frames = []
        for fi in range(n_frames):
            gt = []
            preds = []
            for t, x0, y0, vx, vy, cat in tracks:
                x, y = x0 + vx * fi, y0 + vy * fi
                gt.append(GtBox(BBox(x, y, 14.0, 14.0), t, cat))
                dx, dy = rng.random(2) * 3 - 1.5
                preds.append(PredBox(BBox(x + dx, y + dy, 14.0, 14.0), t, cat, float(rng.random())))
                if rng.random() < 0.3:
                    preds.append(
                        PredBox(BBox(x + 5, y + 3, 14.0, 14.0), t + 500, cat, float(rng.random()))
                    )
            gt_frames.append(Frame(fi, tuple(gt), ()))
            pred_frames.append(Frame(fi, (), tuple(preds)))
        gt_seqs.append(Sequence(f"seq{s:03d}", tuple(gt_frames)))
        pred_seqs.append(Sequence(f"seq{s:03d}", tuple(pred_frames)))
    return canonicalize(Dataset(tuple(gt_seqs), cats)), canonicalize(
        Dataset(tuple(pred_seqs), cats)
    )


def run_child(args):
    from tetaeval import EvalConfig, backend_name, evaluate

    gt, pred = build_workload(args.seed, args.sequences, args.frames, args.tracks)
    cfg = EvalConfig()
    evaluate(gt, pred, cfg)  # warmup: JIT compilation and caches
    t0 = time.perf_counter()
    for _ in range(args.repeat):
        report = evaluate(gt, pred, cfg)
    elapsed = (time.perf_counter() - t0) / args.repeat
    payload = json.dumps(report.to_json_dict(), sort_keys=True).encode()
    print(
        json.dumps(
            {
                "backend": backend_name(),
                "seconds": elapsed,
                "digest": hashlib.sha256(payload).hexdigest(),
            }
        )
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sequences", type=int, default=8)
    parser.add_argument("--frames", type=int, default=40)
    parser.add_argument("--tracks", type=int, default=10)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.child:
        run_child(args)
        return

    results = {}
    for flag in ("0", "1"):
        env = dict(os.environ, TETAEVAL_NO_NUMBA=flag)
        cmd = [sys.executable, os.path.abspath(__file__), "--child"]
        for name in ("sequences", "frames", "tracks", "repeat", "seed"):
            cmd += [f"--{name}", str(getattr(args, name))]
        out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        row = json.loads(out.stdout.strip().splitlines()[-1])
        results[row["backend"]] = row

    numba = results.get("numba")
    numpy_row = results["numpy"]
    print(f"{'backend':<10}{'seconds/run':>14}")
    print("-" * 24)
    for name, row in results.items():
        print(f"{name:<10}{row['seconds']:>14.4f}")
    if numba:
        print(f"\nspeedup: {numpy_row['seconds'] / numba['seconds']:.1f}x")
        if numba["digest"] == numpy_row["digest"]:
            print("reports: byte-identical across backends")
        else:
            print("WARNING: backends disagree!")
            sys.exit(1)
    else:
        print("\nnumba unavailable; only the fallback was measured")


if __name__ == "__main__":
    main()

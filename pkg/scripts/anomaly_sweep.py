#!/usr/bin/env python3
"""Sweep autoencoder training settings on the outlier fixture.

Reports injected-outlier recall, false positives, and the dynamic threshold
for each (epochs, seed) combination; useful when tuning anomaly defaults.

Usage: python scripts/anomaly_sweep.py [--epochs 50,100,200] [--seeds 0,7,42]
"""
from __future__ import annotations

import argparse
import time

from ehrsynth.anomaly import (make_anomaly_fixture, preprocess,
                              reconstruction_errors, threshold_and_flag,
                              train_autoencoder)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--epochs", default="50,100,200")
    parser.add_argument("--seeds", default="0,7,42,123")
    args = parser.parse_args()
    epoch_grid = [int(x) for x in args.epochs.split(",")]
    seed_grid = [int(x) for x in args.seeds.split(",")]

    rows, outliers, plan = make_anomaly_fixture()
    prep = preprocess(rows, plan)
    print(f"fixture: {len(rows)} rows, {len(outliers)} injected outliers, "
          f"matrix {prep.matrix.shape}")
    print(f"{'epochs':>7} {'seed':>5} {'recall':>7} {'false+':>7} "
          f"{'threshold':>10} {'loss':>8} {'time':>6}")
    for epochs in epoch_grid:
        for seed in seed_grid:
            started = time.monotonic()
            model = train_autoencoder(prep.matrix, epochs=epochs, seed=seed)
            errors = reconstruction_errors(model, prep.matrix)
            report = threshold_and_flag(errors)
            flagged = set(report.flagged_indices)
            hits = sum(1 for i in outliers if i in flagged)
            elapsed = time.monotonic() - started
            print(f"{epochs:>7} {seed:>5} {hits:>4}/20 "
                  f"{len(flagged) - hits:>7} {report.threshold:>10.4f} "
                  f"{model.loss_history[-1]:>8.4f} {elapsed:>5.1f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

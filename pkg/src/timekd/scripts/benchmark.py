#!/usr/bin/env python3
"""
Benchmark TimeKD over seeds, horizons, ablation variants and training fractions.

Usage:
    python scripts/benchmark.py [--config CONFIG] [--seeds 0 1 2] [--horizons 24 48]
                                [--variants full no_pkd w/o_SCA] [--fractions 1.0 0.1]
"""

import argparse
import logging
import sys
import time
from pathlib import Path

import pandas as pd

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from timekd import MetricsReport, Settings, TimeKDPipeline
from timekd.errors import TimeKDError

FULL = "full"
NO_PKD = "no_pkd"


def variant_settings(base: Settings, variant: str) -> Settings:
    """``full`` is the base config, ``no_pkd`` drops distillation, else an ablation name."""
    if variant == FULL:
        return base
    if variant == NO_PKD:
        return base.with_overrides({"lambda_p": 0.0})
    return base.with_ablation(variant)


def run_single_benchmark(settings: Settings) -> MetricsReport:
    """Train and evaluate one configuration for a single seed."""
    pipeline = TimeKDPipeline(settings)
    if settings.training_mode == "staged" and settings.lambda_p > 0:
        pipeline.train_teacher()
    pipeline.distill()
    return pipeline.evaluate()


def benchmark_configuration(
    name: str, settings: Settings, seeds: list[int], output_root: Path
) -> MetricsReport:
    """Run one configuration for every seed and merge the per-seed metrics."""
    print(f"\n🔍 Testing {name}...")
    report = None
    for seed in seeds:
        run_settings = settings.with_overrides(
            {"seeds": [seed], "output_dir": output_root / _slug(name) / f"seed{seed}"}
        )
        print(f"   Seed {seed}...", end=" ", flush=True)
        start_time = time.time()
        result = run_single_benchmark(run_settings)
        print(f"{time.time() - start_time:.2f}s (MSE {result.mse[0]:.4f}, MAE {result.mae[0]:.4f})")
        report = result if report is None else report.merged(result)
    return report


def summary_frame(rows: list[dict]) -> pd.DataFrame:
    return pd.DataFrame(rows).sort_values(["horizon", "fraction", "variant"], kind="stable")


def pkd_verdicts(frame: pd.DataFrame) -> list[str]:
    """Whether full distillation beats lambda_p = 0 on mean MSE per horizon and fraction."""
    verdicts = []
    for (horizon, fraction), group in frame.groupby(["horizon", "fraction"]):
        by_variant = group.set_index("variant")
        if FULL not in by_variant.index or NO_PKD not in by_variant.index:
            continue
        full, plain = by_variant.loc[FULL, "mse_mean"], by_variant.loc[NO_PKD, "mse_mean"]
        mark = "✅ PKD helps" if full < plain else "⚠️  PKD does not help"
        verdicts.append(
            f"horizon {horizon}, fraction {fraction}: {mark} ({full:.4f} vs {plain:.4f})"
        )
    return verdicts


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def main():
    parser = argparse.ArgumentParser(description="Benchmark TimeKD variants")
    parser.add_argument("--config", help="YAML or key = value config (default: bundled)")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--horizons", type=int, nargs="+", default=None)
    parser.add_argument("--variants", nargs="+", default=[FULL, NO_PKD])
    parser.add_argument("--fractions", type=float, nargs="+", default=[1.0])
    parser.add_argument("--output", default="runs/benchmark", help="root output directory")
    parser.add_argument("--csv", help="also write the summary table here")
    args = parser.parse_args()

    base = Settings.from_file(args.config)
    logging.basicConfig(level=logging.WARNING, format=base.log_format, force=True)
    horizons = args.horizons or [base.horizon]

    print("=" * 80)
    print("TimeKD Benchmark")
    print("=" * 80)
    print(f"Dataset: {base.dataset_path or 'synthetic'}")
    print(f"Seeds: {args.seeds}  Horizons: {horizons}")
    print(f"Variants: {args.variants}  Fractions: {args.fractions}")

    rows = []
    for horizon in horizons:
        for fraction in args.fractions:
            for variant in args.variants:
                name = f"{variant} G={horizon} p={fraction}"
                try:
                    settings = variant_settings(
                        base.with_overrides({"horizon": horizon, "train_fraction": fraction}),
                        variant,
                    )
                    report = benchmark_configuration(
                        name, settings, args.seeds, Path(args.output)
                    )
                except TimeKDError as e:
                    print(f"   ❌ Error: {e.one_line()}")
                    continue
                mse_mean, mse_std = report.mse_mean_std
                mae_mean, mae_std = report.mae_mean_std
                rows.append(
                    {
                        "variant": variant,
                        "horizon": horizon,
                        "fraction": fraction,
                        "seeds": len(report.seeds),
                        "mse_mean": mse_mean,
                        "mse_std": mse_std,
                        "mae_mean": mae_mean,
                        "mae_std": mae_std,
                        "runtime_s": report.runtime_seconds,
                        "student_params": report.student_trainable_parameters,
                    }
                )

    # Print summary
    print("\n" + "=" * 80)
    print("BENCHMARK SUMMARY")
    print("=" * 80)
    if not rows:
        print("No configuration finished.")
        sys.exit(1)
    frame = summary_frame(rows)
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    for verdict in pkd_verdicts(frame):
        print(verdict)
    if args.csv:
        frame.to_csv(args.csv, index=False)
        print(f"\nSummary written to {args.csv}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""
Delete the teacher checkpoint and artifact cache of a run.

Evaluation and forecasting only need the student checkpoint, so a run stays
usable afterwards.

Usage:
    python scripts/clear_artifacts.py [--output-dir OUTPUT_DIR]
"""

import argparse
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from timekd.core import RunPaths


def clear_artifacts(output_dir: str = "runs/default") -> list[Path]:
    """Remove teacher-side files; returns what was deleted."""
    paths = RunPaths(Path(output_dir))
    present = [p for p in paths.teacher_artifacts() if p.is_file()]

    if not present:
        print(f"✅ No teacher artifacts in '{output_dir}' - nothing to clear")
        return []

    size_mb = sum(p.stat().st_size for p in present) / (1024 * 1024)
    print(f"🗑️  Clearing teacher artifacts in: {output_dir}")
    print(f"   Files: {', '.join(p.name for p in present)}")
    print(f"   Size: {size_mb:.2f} MB")

    for path in present:
        path.unlink()

    print("✅ Teacher artifacts cleared successfully!")
    return present


def main():
    parser = argparse.ArgumentParser(description="Delete teacher checkpoint and cache")
    parser.add_argument(
        "--output-dir",
        default="runs/default",
        help="Run directory to clear (default: runs/default)",
    )

    args = parser.parse_args()
    clear_artifacts(args.output_dir)


if __name__ == "__main__":
    main()

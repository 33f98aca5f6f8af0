#!/usr/bin/env python3
"""
Validate configuration files.

Usage:
    python scripts/validate_config.py [--config CONFIG_PATH]
"""

import argparse
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from timekd.config import Settings
from timekd.errors import ConfigError


def validate_config(config_path: str | None = None) -> bool:
    """Validate a configuration file and print what it resolves to."""
    print("🔍 Validating Configuration...")
    print("=" * 60)

    try:
        print(f"Loading: {config_path or 'config/config.yaml (default)'}")
        settings = Settings.from_file(config_path)
    except ConfigError as e:
        print("\n❌ Configuration validation failed!")
        print(f"  • {e}")
        return False

    print("\n✅ Configuration is valid!")
    print("\nSettings:")
    print(f"  Dataset: {settings.dataset_path or 'synthetic'}")
    print(f"  Window: H={settings.history_length}, G=M={settings.horizon}")
    print(f"  CLM: D={settings.clm_hidden_dim}, {settings.clm_layers} layers, delta={settings.effective_delta:.4f}")
    print(f"  Model dim: {settings.model_dim}")
    print(f"  Training: {settings.training_mode}, {settings.precision}, seeds {settings.seeds}")
    print(
        f"  Loss weights: c={settings.effective_lambda_c} e={settings.effective_lambda_e} "
        f"r={settings.lambda_r} p={settings.lambda_p} f={settings.lambda_f}"
    )
    print(f"  Ablations: {', '.join(settings.active_ablations()) or 'none'}")
    print(f"  Output Dir: {settings.output_dir}")

    if settings.dataset_path is not None:
        if Path(settings.dataset_path).is_file():
            print("  ✅ Dataset file exists")
        else:
            print("  ⚠️  Warning: Dataset file not found")
    if settings.clm_weights_path is not None and not Path(settings.clm_weights_path).is_file():
        print("  ⚠️  Warning: CLM weight file not found")

    print("\n✅ Configuration validation complete!")
    return True


def main():
    parser = argparse.ArgumentParser(description="Validate configuration file")
    parser.add_argument("--config", help="Path to config file (default: config/config.yaml)")

    args = parser.parse_args()

    success = validate_config(args.config)
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()

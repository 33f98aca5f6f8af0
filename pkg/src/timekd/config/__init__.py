"""
Configuration package - run settings loaded from YAML or key = value files.
"""

from .settings import ABLATIONS, DEFAULT_CONFIG_PATH, Settings, parse_assignment

__all__ = ["ABLATIONS", "DEFAULT_CONFIG_PATH", "Settings", "parse_assignment"]

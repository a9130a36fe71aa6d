"""Command-line interface: YAML configs, experiment runners and report writing."""

from .main import main

__all__ = ["main"]

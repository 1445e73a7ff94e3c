"""Experiment harness: configs, sweeps, self-checks and the CLI."""

"""Fixtures drive the simulation CLI as a subprocess and consume its CSV files."""

import subprocess
import sys

import pytest


def run_sim(args, out_dir):
    cmd = [sys.executable, "-m", "unlearnlab.cli", "run", "--out", str(out_dir), *args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, f"simulation CLI failed: {proc.stderr}"
    return out_dir / "rounds.csv"


@pytest.fixture(scope="session")
def paper_sweep_rounds(tmp_path_factory):
    """The full paper-default sweep (9 treatment groups x 20 seeds)."""
    out = tmp_path_factory.mktemp("paper_sweep")
    return run_sim([], out)


@pytest.fixture(scope="session")
def stationary_reset_rounds(tmp_path_factory):
    """Stationary ONS with the alpha=0.5 partial reset plus its baseline."""
    out = tmp_path_factory.mktemp("stationary_reset")
    return run_sim(["--model", "ons", "--env", "stationary",
                    "--alpha-grid", "0.5", "--beta-grid", "", "--seeds", "5"], out)


@pytest.fixture(scope="session")
def no_deletion_rounds(tmp_path_factory):
    """A sweep with the deletion event disabled: twins never diverge."""
    out = tmp_path_factory.mktemp("no_deletion")
    return run_sim(["--model", "ons", "--env", "drifting", "--deletion", "off",
                    "--alpha-grid", "", "--beta-grid", "", "--seeds", "3"], out)

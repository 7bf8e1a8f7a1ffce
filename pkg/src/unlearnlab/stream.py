"""Observation streams and the squared-error loss model.

The data-generating process is a noisy linear model y = <x, w_star(t)> + e_t
over a horizon of T rounds. The ground truth w_star is fixed in the
stationary environment and rotates at a constant angular rate in the
drifting one.

Feature directions are persistently exciting: in d=2 they sweep the circle
deterministically with an angular step of 3*pi/10 (each 10 consecutive rounds
cover a full direction grid evenly, so the empirical second moment is exactly
isotropic), with a seeded random phase per stream. In d != 2 directions are
drawn uniformly at random. All features have norm sqrt(d), matching the
second moment E[x x^T] = I of a standard normal. The disturbance e_t is a
zero-mean quasi-periodic probe with RMS sigma and a seeded random phase.
Substreams are keyed by (seed, purpose-tag) so twin runs consume identical
per-round randomness.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import ConfigError, UsageError
from .rng import substream

FEATURE_SWEEP_STEP = 3.0 * math.pi / 10.0
NOISE_PHASE_STEP = math.pi / 10.0


class Environment(enum.Enum):
    STATIONARY = "stationary"
    DRIFTING = "drifting"


@dataclass(frozen=True)
class StreamConfig:
    """Parameters of one observation stream."""

    dimension: int
    horizon: int
    environment: Environment
    target_radius: float = 2.0
    drift_rate: float = 0.0365
    noise_std: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.dimension}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.target_radius < 0:
            raise ConfigError(f"target_radius must be >= 0, got {self.target_radius}")
        if self.environment is Environment.DRIFTING and self.dimension < 2:
            raise ConfigError("drifting environment requires dimension >= 2")


@dataclass(frozen=True)
class Observation:
    """One stream element: features, target, and the ground truth behind it.

    ``w_star`` is recorded for diagnostics only; learners never see it.
    """

    t: int
    x: np.ndarray
    y: float
    w_star: np.ndarray


def drift_target(t: float, cfg: StreamConfig) -> np.ndarray:
    """Ground-truth parameter at time ``t`` of a drifting stream.

    Rotates in the first two coordinates at ``drift_rate`` radians per round
    with constant norm ``target_radius``. Continuous in ``t``; rounds sample
    it at integers.
    """
    if cfg.environment is not Environment.DRIFTING:
        raise UsageError("drift_target is only defined for drifting streams")
    w = np.zeros(cfg.dimension)
    w[0] = cfg.target_radius * math.cos(cfg.drift_rate * t)
    w[1] = cfg.target_radius * math.sin(cfg.drift_rate * t)
    return w


def _stationary_target(cfg: StreamConfig) -> np.ndarray:
    # Matches drift_target in the zero-rate limit: radius along the first axis.
    w = np.zeros(cfg.dimension)
    w[0] = cfg.target_radius
    return w


def _features(cfg: StreamConfig) -> np.ndarray:
    rng = substream(cfg.seed, "features")
    scale = math.sqrt(cfg.dimension)
    if cfg.dimension == 2:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        ts = np.arange(1, cfg.horizon + 1)
        angles = FEATURE_SWEEP_STEP * ts + phase
        return scale * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    z = rng.standard_normal((cfg.horizon, cfg.dimension))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return scale * z / norms


def _disturbance(cfg: StreamConfig) -> np.ndarray:
    rng = substream(cfg.seed, "noise")
    phase = rng.uniform(0.0, 2.0 * math.pi)
    ts = np.arange(1, cfg.horizon + 1)
    return cfg.noise_std * math.sqrt(2.0) * np.cos(NOISE_PHASE_STEP * ts + phase)


def gen_stream(cfg: StreamConfig) -> list[Observation]:
    """Generate the full observation sequence for ``cfg``.

    Pure function of the config: identical configs give bit-identical streams.
    """
    cfg.validate()
    X = _features(cfg)
    eps = _disturbance(cfg)
    out: list[Observation] = []
    for i in range(cfg.horizon):
        t = i + 1
        if cfg.environment is Environment.DRIFTING:
            w_star = drift_target(t, cfg)
        else:
            w_star = _stationary_target(cfg)
        x = X[i]
        y = float(x @ w_star + eps[i])
        out.append(Observation(t=t, x=x, y=y, w_star=w_star))
    return out


def loss_value(w: np.ndarray, obs: Observation) -> float:
    """Squared-error loss 0.5 * (<x, w> - y)^2."""
    w = np.asarray(w, dtype=float)
    if w.shape != obs.x.shape:
        raise UsageError(f"parameter has shape {w.shape}, features have {obs.x.shape}")
    r = float(obs.x @ w) - obs.y
    return 0.5 * r * r


def loss_grad(w: np.ndarray, obs: Observation) -> np.ndarray:
    """Gradient (<x, w> - y) * x of the squared-error loss."""
    w = np.asarray(w, dtype=float)
    if w.shape != obs.x.shape:
        raise UsageError(f"parameter has shape {w.shape}, features have {obs.x.shape}")
    r = float(obs.x @ w) - obs.y
    return r * obs.x


def stream_to_csv(observations: Sequence[Observation], fh: IO[str]) -> None:
    """Dump a stream for audit: t, x_1..x_d, y, wstar_1..wstar_d."""
    if not observations:
        raise UsageError("cannot dump an empty stream")
    d = observations[0].x.shape[0]
    writer = csv.writer(fh)
    header = (["t"] + [f"x_{i}" for i in range(1, d + 1)] + ["y"]
              + [f"wstar_{i}" for i in range(1, d + 1)])
    writer.writerow(header)
    for obs in observations:
        writer.writerow([obs.t] + [repr(float(v)) for v in obs.x]
                        + [repr(float(obs.y))] + [repr(float(v)) for v in obs.w_star])

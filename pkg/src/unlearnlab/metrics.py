"""Comparators and diagnostics over paired realized/counterfactual runs.

Recovery and overshoot operate on the W-round forward moving average of the
per-round loss, against a reference level taken from the window [tau-50, tau].
The regret comparator is the exact ball-constrained least-squares minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, UsageError
from .geometry import cond_number, cos_frobenius, cos_vectors
from .stream import Observation, loss_value

DEFAULT_SMOOTHING_WINDOW = 10
DEFAULT_RECOVERY_TOLERANCE = 0.1
DEFAULT_REFERENCE_WINDOW = 50
_COMPARATOR_NORM_SLACK = 1e-8


@dataclass(frozen=True)
class RoundRecord:
    """Per-round metrics of one realized run against its counterfactual.

    Spectral fields are present only for ONS. ``cos_update`` is absent on
    rounds where either run has a zero gradient or the counterfactual skipped
    the round.
    """

    t: int
    loss: float
    cum_regret: float
    tracking_error: float
    trace_A: float | None = None
    cond_A: float | None = None
    cos_state: float | None = None
    cos_update: float | None = None


@dataclass(frozen=True)
class SummaryRecord:
    """Table-style aggregate of one (model, environment, intervention) group."""

    model: str
    environment: str
    intervention: str
    n_seeds: int
    recovery_time_mean: float
    recovery_time_std: float
    overshoot_mean: float
    overshoot_std: float
    param_shock_mean: float
    param_shock_std: float
    final_regret_mean: float
    final_regret_std: float
    censored_runs: int


def tracking_error(w_realized: np.ndarray, w_cf: np.ndarray) -> float:
    """Euclidean distance between realized and counterfactual parameters."""
    w_realized = np.asarray(w_realized, dtype=float)
    w_cf = np.asarray(w_cf, dtype=float)
    if w_realized.shape != w_cf.shape:
        raise UsageError(f"shape mismatch: {w_realized.shape} vs {w_cf.shape}")
    return float(np.linalg.norm(w_realized - w_cf))


def parameter_shock(tracking_errors: Sequence[float], tau: int) -> float:
    """Tracking error at index tau+1, the first post-deletion round.

    ``tracking_errors`` is 1-based by position: element i is round i+1.
    """
    if tau + 1 > len(tracking_errors):
        raise UsageError(f"tau={tau} out of range for a series of length {len(tracking_errors)}")
    return float(tracking_errors[tau])


def hindsight_comparator(observations: Sequence[Observation], radius: float) -> np.ndarray:
    """Best fixed parameter in hindsight over the ball of the given radius.

    Unconstrained least squares when that solution is feasible; otherwise the
    boundary solution of (X^T X + mu I) w = X^T y with mu >= 0 found by
    bisection so that ||w|| lands in [radius - 1e-8, radius]. Rank-deficient
    prefixes use the minimum-norm solution.
    """
    if not observations:
        raise UsageError("comparator needs at least one observation")
    X = np.stack([obs.x for obs in observations])
    y = np.array([obs.y for obs in observations])
    m = X.T @ X
    b = X.T @ y
    return ball_least_squares(m, b, radius)


def ball_least_squares(m: np.ndarray, b: np.ndarray, radius: float) -> np.ndarray:
    """Minimizer of w^T m w - 2 b^T w over the ball of the given radius."""
    w, *_ = np.linalg.lstsq(m, b, rcond=None)
    if float(np.linalg.norm(w)) <= radius:
        return w
    d = m.shape[0]
    eye = np.eye(d)

    def w_of(mu: float) -> np.ndarray:
        return np.linalg.solve(m + mu * eye, b)

    hi = 1.0
    for _ in range(200):
        if float(np.linalg.norm(w_of(hi))) <= radius:
            break
        hi *= 2.0
    else:
        raise ConfigError("comparator bisection failed to bracket")
    lo = 0.0
    w_hi = w_of(hi)
    for _ in range(500):
        n_hi = float(np.linalg.norm(w_hi))
        if radius - _COMPARATOR_NORM_SLACK <= n_hi <= radius:
            return w_hi
        mid = 0.5 * (lo + hi)
        w_mid = w_of(mid)
        if float(np.linalg.norm(w_mid)) > radius:
            lo = mid
        else:
            hi = mid
            w_hi = w_mid
    return w_hi


def cumulative_regret(
    losses: Sequence[float], observations: Sequence[Observation], radius: float
) -> float:
    """Sum of incurred losses minus the ball-constrained hindsight optimum's."""
    if len(losses) != len(observations):
        raise UsageError("loss series and stream are not aligned")
    comparator = hindsight_comparator(observations, radius)
    best = sum(loss_value(comparator, obs) for obs in observations)
    return float(sum(losses) - best)


def smoothed_series(losses: Sequence[float], window: int = DEFAULT_SMOOTHING_WINDOW) -> np.ndarray:
    """Forward-looking moving average: entry t covers rounds t .. t+window-1.

    The value at the deletion round therefore reflects the first post-deletion
    window. Windows truncate at the end of the horizon.
    """
    if window < 1:
        raise ConfigError(f"smoothing window must be >= 1, got {window}")
    arr = np.asarray(losses, dtype=float)
    n = arr.shape[0]
    csum = np.concatenate([[0.0], np.cumsum(arr)])
    out = np.empty(n)
    for i in range(n):
        hi = min(n, i + window)
        out[i] = (csum[hi] - csum[i]) / (hi - i)
    return out


def _reference_level(
    smoothed: np.ndarray, tau: int, reference_window: int
) -> float:
    if tau <= reference_window:
        raise ConfigError(
            f"reference window undefined: tau={tau} must exceed window length {reference_window}"
        )
    # Rounds tau-reference_window .. tau inclusive; series is 0-indexed by t-1.
    return float(np.mean(smoothed[tau - reference_window - 1:tau]))


def recovery_time(
    losses: Sequence[float],
    tau: int,
    window: int = DEFAULT_SMOOTHING_WINDOW,
    epsilon_rec: float = DEFAULT_RECOVERY_TOLERANCE,
    reference_window: int = DEFAULT_REFERENCE_WINDOW,
) -> tuple[int, bool]:
    """Rounds after deletion until the smoothed loss re-enters the tolerance band.

    Returns (rounds, censored): the smallest k >= 0 with
    smoothed(tau+k) <= reference * (1 + epsilon_rec), or (T - tau, True)
    when the series never re-enters.
    """
    horizon = len(losses)
    if not (0 < tau < horizon):
        raise ConfigError(f"tau={tau} out of range for horizon {horizon}")
    if tau + window > horizon:
        raise ConfigError(f"tau={tau} leaves no room for a {window}-round window")
    sm = smoothed_series(losses, window)
    band = _reference_level(sm, tau, reference_window) * (1.0 + epsilon_rec)
    for k in range(0, horizon - tau + 1):
        if sm[tau + k - 1] <= band:
            return k, False
    return horizon - tau, True


def overshoot(
    losses: Sequence[float],
    tau: int,
    window: int = DEFAULT_SMOOTHING_WINDOW,
    reference_window: int = DEFAULT_REFERENCE_WINDOW,
) -> float:
    """Maximum post-deletion excess of the smoothed loss over the reference.

    Can be negative when deletion helps.
    """
    horizon = len(losses)
    if not (0 < tau < horizon):
        raise ConfigError(f"tau={tau} out of range for horizon {horizon}")
    if tau + window > horizon:
        raise ConfigError(f"tau={tau} leaves no room for a {window}-round window")
    sm = smoothed_series(losses, window)
    reference = _reference_level(sm, tau, reference_window)
    return float(np.max(sm[tau:]) - reference)


def spectral_series(
    a_realized: Sequence[np.ndarray],
    a_cf: Sequence[np.ndarray],
    g_realized: Sequence[np.ndarray],
    g_cf: Sequence[np.ndarray | None],
) -> list[tuple[float, float, float, float | None]]:
    """Per-round (trace, cond, cos_state, cos_update) for an ONS pair.

    ``g_cf[i]`` is None on rounds the counterfactual skipped; cos_update is
    None there and on rounds where either gradient vanishes.
    """
    if not (len(a_realized) == len(a_cf) == len(g_realized) == len(g_cf)):
        raise UsageError("spectral series are not aligned")
    out: list[tuple[float, float, float, float | None]] = []
    for a_r, a_c, g_r, g_c in zip(a_realized, a_cf, g_realized, g_cf):
        if a_r.shape != a_c.shape:
            raise UsageError(f"matrix shapes differ: {a_r.shape} vs {a_c.shape}")
        trace = float(np.trace(a_r))
        cond = cond_number(a_r)
        cos_state = cos_frobenius(a_r, a_c)
        cos_update: float | None = None
        if g_c is not None and float(np.linalg.norm(g_r)) != 0.0 and float(np.linalg.norm(g_c)) != 0.0:
            dir_r = -np.linalg.solve(a_r, g_r)
            dir_c = -np.linalg.solve(a_c, g_c)
            cos_update = cos_vectors(dir_r, dir_c)
        out.append((trace, cond, cos_state, cos_update))
    return out


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (n-1), with std 0 for n == 1."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise UsageError("cannot summarize an empty group")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(np.mean(arr)), float(np.std(arr, ddof=1))

"""The two online learners as explicit state machines.

Both learners are pure state-in/state-out: a step returns a fresh state and
an outcome record, never mutating its input. The gradient log kept on each
state is experiment bookkeeping for the deletion operator, not part of the
learner's conceptual state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericError, UsageError
from .geometry import eig_sym, project_ball_euclid, project_ball_metric, symmetrize
from .stream import Observation, loss_grad, loss_value

_SINGULAR_EIG = 1e-12


@dataclass(frozen=True)
class OgdLogEntry:
    t: int
    gradient: np.ndarray
    step_size: float


@dataclass(frozen=True)
class OnsLogEntry:
    t: int
    gradient: np.ndarray


@dataclass(frozen=True)
class OgdState:
    """Online gradient descent with a square-root decay schedule."""

    w: np.ndarray
    t: int
    eta0: float
    radius: float
    grad_log: tuple[OgdLogEntry, ...] = ()


@dataclass(frozen=True)
class OnsState:
    """Online Newton step: parameters plus the accumulated preconditioner."""

    w: np.ndarray
    A: np.ndarray
    t: int
    eta: float
    lam: float
    radius: float
    grad_log: tuple[OnsLogEntry, ...] = ()


@dataclass(frozen=True)
class StepOutcome:
    loss: float
    gradient: np.ndarray
    update_direction: np.ndarray
    w_after: np.ndarray


def init_ogd(w0: np.ndarray, eta0: float, radius: float) -> OgdState:
    return OgdState(w=np.asarray(w0, dtype=float).copy(), t=0, eta0=eta0, radius=radius)


def init_ons(w0: np.ndarray, eta: float, lam: float, radius: float) -> OnsState:
    w0 = np.asarray(w0, dtype=float).copy()
    return OnsState(w=w0, A=lam * np.eye(w0.shape[0]), t=0, eta=eta, lam=lam, radius=radius)


def _checked_grad(w: np.ndarray, obs: Observation) -> np.ndarray:
    g = loss_grad(w, obs)
    if not np.isfinite(g).all():
        raise NumericError(f"non-finite gradient at round {obs.t}")
    return g


def ogd_step(state: OgdState, obs: Observation) -> tuple[OgdState, StepOutcome]:
    """One round: play w, observe the loss, take an eta0/sqrt(t) step, project."""
    if state.w.shape != obs.x.shape:
        raise UsageError(f"state dimension {state.w.shape} does not match observation {obs.x.shape}")
    loss = loss_value(state.w, obs)
    g = _checked_grad(state.w, obs)
    t = state.t + 1
    eta = state.eta0 / math.sqrt(t)
    direction = -eta * g
    w_new = project_ball_euclid(state.w + direction, state.radius)
    entry = OgdLogEntry(t=t, gradient=g.copy(), step_size=eta)
    new_state = replace(state, w=w_new, t=t, grad_log=state.grad_log + (entry,))
    return new_state, StepOutcome(loss=loss, gradient=g, update_direction=direction, w_after=w_new)


def ons_step(state: OnsState, obs: Observation) -> tuple[OnsState, StepOutcome]:
    """One round: accumulate g g^T into A, then step along -eta A^{-1} g.

    The preconditioner used for the step already includes the current
    gradient, so A stays invertible from the first round for any lam > 0.
    """
    if state.w.shape != obs.x.shape:
        raise UsageError(f"state dimension {state.w.shape} does not match observation {obs.x.shape}")
    loss = loss_value(state.w, obs)
    g = _checked_grad(state.w, obs)
    a_new = symmetrize(state.A + np.outer(g, g))
    lam_min = float(eig_sym(a_new).eigenvalues[-1])
    if lam_min < _SINGULAR_EIG:
        raise NumericError(f"preconditioner numerically singular: lambda_min={lam_min}")
    direction = -state.eta * np.linalg.solve(a_new, g)
    w_new = project_ball_metric(state.w + direction, a_new, state.radius)
    entry = OnsLogEntry(t=state.t + 1, gradient=g.copy())
    new_state = replace(state, w=w_new, A=a_new, t=state.t + 1,
                        grad_log=state.grad_log + (entry,))
    return new_state, StepOutcome(loss=loss, gradient=g, update_direction=direction, w_after=w_new)


def state_snapshot(state: OgdState | OnsState) -> tuple[np.ndarray, np.ndarray | None, int]:
    """Deep copy of (w, auxiliary A or None, step counter)."""
    if isinstance(state, OnsState):
        return state.w.copy(), state.A.copy(), state.t
    return state.w.copy(), None, state.t

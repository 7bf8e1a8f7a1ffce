"""Deletion events: standard unlearning plus deletion-time spectral surgery.

A deletion event fires after round tau completes. It removes the influence of
the logged gradients of the deleted rounds from both state components, then
(ONS only) applies the configured spectral intervention to the
preconditioner. The ordering is normative: the parameter correction uses the
pre-removal preconditioner, and the intervention happens after the parameter
side is fully settled, so the instantaneous parameter shock is identical
across intervention settings by construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DeletionError, NumericError
from .geometry import eig_sym, project_ball_euclid, project_ball_metric, psd_floor, symmetrize
from .optim import OgdState, OnsState

INTERVENTION_FLOOR = 1e-6


class InterventionKind(enum.Enum):
    NONE = "none"
    PARTIAL_RESET = "partial_reset"
    DECAY = "decay"


@dataclass(frozen=True)
class InterventionSpec:
    """Spectral treatment applied to the ONS state matrix at deletion time.

    Partial reset subtracts ``alpha`` from every eigenvalue; decay destroys
    the fraction ``beta`` of every eigenvalue (retaining 1 - beta). Both floor
    the result at a small positive constant.
    """

    kind: InterventionKind = InterventionKind.NONE
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.kind is InterventionKind.PARTIAL_RESET:
            if self.alpha is None or not self.alpha > 0:
                raise ConfigError(f"partial reset needs alpha > 0, got {self.alpha}")
        elif self.kind is InterventionKind.DECAY:
            if self.beta is None or not 0 < self.beta < 1:
                raise ConfigError(f"decay needs beta in (0, 1), got {self.beta}")

    def label(self) -> str:
        if self.kind is InterventionKind.PARTIAL_RESET:
            return f"reset({self.alpha:g})"
        if self.kind is InterventionKind.DECAY:
            return f"decay({self.beta:g})"
        return "none"


@dataclass(frozen=True)
class DeletionEvent:
    """Deletion request at round ``tau`` for the rounds in ``deleted_rounds``."""

    tau: int
    deleted_rounds: tuple[int, ...]
    intervention: InterventionSpec = InterventionSpec()

    def __post_init__(self) -> None:
        if len(self.deleted_rounds) == 0:
            raise ConfigError("deletion event needs at least one deleted round")
        if any(s > self.tau for s in self.deleted_rounds):
            raise ConfigError("deleted rounds must not exceed the deletion time tau")
        if any(s < 1 for s in self.deleted_rounds):
            raise ConfigError("deleted rounds are 1-based")


def default_deleted_rounds(tau: int, count: int = 10) -> tuple[int, ...]:
    """The most recent ``count`` rounds up to and including ``tau``."""
    if count < 1:
        raise ConfigError(f"deletion count must be >= 1, got {count}")
    if tau < count:
        raise ConfigError(f"deletion set precedes stream start: tau={tau}, count={count}")
    return tuple(range(tau - count + 1, tau + 1))


def _collect(entries, rounds: tuple[int, ...]):
    by_round = {e.t: e for e in entries}
    missing = [s for s in rounds if s not in by_round]
    if missing:
        raise DeletionError(f"gradient log has no entry for round {missing[0]}")
    return [by_round[s] for s in rounds]


def delete_ogd(state: OgdState, event: DeletionEvent) -> OgdState:
    """Re-add the recorded steps of the deleted rounds, then project."""
    deleted = _collect(state.grad_log, event.deleted_rounds)
    correction = np.zeros_like(state.w)
    for e in deleted:
        correction += e.step_size * e.gradient
    w_new = project_ball_euclid(state.w + correction, state.radius)
    kept = tuple(e for e in state.grad_log if e.t not in set(event.deleted_rounds))
    return replace(state, w=w_new, grad_log=kept)


def delete_ons_standard(state: OnsState, event: DeletionEvent) -> OnsState:
    """Newton-style deletion acting on both state components.

    Order is normative: (i) parameter correction with the pre-removal
    preconditioner, (ii) rank-one downdates of the preconditioner with a PSD
    floor, (iii) log cleanup.
    """
    deleted = _collect(state.grad_log, event.deleted_rounds)
    g_sum = np.zeros_like(state.w)
    outer_sum = np.zeros_like(state.A)
    for e in deleted:
        g_sum += e.gradient
        outer_sum += np.outer(e.gradient, e.gradient)
    w_new = project_ball_metric(
        state.w + state.eta * np.linalg.solve(state.A, g_sum), state.A, state.radius
    )
    a_new = psd_floor(symmetrize(state.A - outer_sum), min(state.lam, INTERVENTION_FLOOR))
    kept = tuple(e for e in state.grad_log if e.t not in set(event.deleted_rounds))
    return replace(state, w=w_new, A=a_new, grad_log=kept)


def intervene(a: np.ndarray, spec: InterventionSpec) -> np.ndarray:
    """Apply the spectral treatment to a positive definite matrix.

    Eigenvectors are preserved; eigenvalues are shifted (partial reset) or
    rescaled to the retained fraction (decay), floored at a small positive
    constant.
    """
    if spec.kind is InterventionKind.NONE:
        return symmetrize(np.asarray(a, dtype=float))
    spectrum = eig_sym(a)
    lam = spectrum.eigenvalues
    if float(lam[-1]) <= 0.0:
        raise NumericError(f"intervention needs a positive definite matrix: lambda_min={float(lam[-1])}")
    if spec.kind is InterventionKind.PARTIAL_RESET:
        new_lam = np.maximum(lam - spec.alpha, INTERVENTION_FLOOR)
    else:
        new_lam = np.maximum((1.0 - spec.beta) * lam, INTERVENTION_FLOOR)
    v = spectrum.eigenvectors
    return symmetrize((v * new_lam) @ v.T)


def apply_deletion_event(
    state: OgdState | OnsState, event: DeletionEvent
) -> tuple[OgdState | OnsState, np.ndarray]:
    """Execute a deletion event on a realized run's state.

    Returns the updated state together with a copy of the post-correction
    parameter (the quantity the parameter-shock metric reads). The spectral
    intervention runs strictly after that snapshot, so the snapshot is
    intervention-independent.
    """
    if state.t != event.tau:
        raise ConfigError(f"event fires after round {event.tau}, but state is at round {state.t}")
    if isinstance(state, OnsState):
        new_state = delete_ons_standard(state, event)
        w_post = new_state.w.copy()
        new_state = replace(new_state, A=intervene(new_state.A, event.intervention))
        return new_state, w_post
    new_state = delete_ogd(state, event)
    return new_state, new_state.w.copy()

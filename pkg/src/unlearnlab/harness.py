"""Twin-run experiments and treatment sweeps.

A run pairs a realized learner (sees every round, then suffers the deletion
event after round tau) with a counterfactual learner on the identical stream
that simply never consumes the deleted rounds. Both learners start at the
round-1 ground truth, so the horizon isolates the deletion response from
cold-start transients. Randomness is attached to the stream, never to the
learners, so the pair consumes identical per-round data by construction.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .metrics import (
    DEFAULT_RECOVERY_TOLERANCE,
    DEFAULT_REFERENCE_WINDOW,
    DEFAULT_SMOOTHING_WINDOW,
    RoundRecord,
    SummaryRecord,
    ball_least_squares,
    mean_std,
    overshoot,
    parameter_shock,
    recovery_time,
    spectral_series,
    tracking_error,
)
from .optim import init_ogd, init_ons, ogd_step, ons_step
from .stream import Environment, Observation, StreamConfig, gen_stream
from .unlearn import (
    DeletionEvent,
    InterventionKind,
    InterventionSpec,
    apply_deletion_event,
    default_deleted_rounds,
)


class Model(enum.Enum):
    OGD = "ogd"
    ONS = "ons"


PAPER_ALPHA_GRID = (0.3, 0.5, 0.7)
PAPER_BETA_GRID = (0.5, 0.7, 0.9)
PAPER_SEEDS = tuple(range(1, 21))


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep's worth of settings; paper defaults throughout."""

    stream: StreamConfig = StreamConfig(
        dimension=2, horizon=400, environment=Environment.DRIFTING
    )
    tau: int = 200
    deleted_count: int = 10
    eta0: float = 0.6
    ogd_radius: float = 5.0
    eta: float = 1.0
    lam: float = 1.0
    ons_radius: float = 5.0
    seeds: tuple[int, ...] = PAPER_SEEDS
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW
    recovery_tolerance: float = DEFAULT_RECOVERY_TOLERANCE
    reference_window: int = DEFAULT_REFERENCE_WINDOW

    def validate(self) -> None:
        self.stream.validate()
        if not (self.deleted_count < self.tau < self.stream.horizon):
            raise ConfigError(
                f"tau={self.tau} must lie strictly between the deletion count "
                f"{self.deleted_count} and the horizon {self.stream.horizon}"
            )
        if self.tau <= self.reference_window:
            raise ConfigError(
                f"tau={self.tau} must exceed the reference window {self.reference_window}"
            )
        for name, value in (("eta0", self.eta0), ("eta", self.eta), ("lambda", self.lam),
                            ("ogd_radius", self.ogd_radius), ("ons_radius", self.ons_radius)):
            if value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.smoothing_window < 1:
            raise ConfigError("smoothing window must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.recovery_tolerance < 0:
            raise ConfigError("recovery tolerance must be >= 0")


@dataclass(frozen=True)
class RunSpec:
    """One sweep cell: a model, an environment, a treatment, and a seed."""

    model: Model
    environment: Environment
    intervention: InterventionSpec
    seed: int

    def run_id(self) -> str:
        return f"{self.model.value}-{self.environment.value}-{self.intervention.label()}-s{self.seed}"


@dataclass(frozen=True)
class RunResult:
    spec: RunSpec
    records: tuple[RoundRecord, ...]
    recovery_time: int
    censored: bool
    overshoot: float
    param_shock: float
    final_regret: float


@dataclass(frozen=True)
class RunFailure:
    spec: RunSpec
    error: str


def _step(model: Model, state, obs: Observation):
    if model is Model.OGD:
        return ogd_step(state, obs)
    return ons_step(state, obs)


def run_pair(cfg: ExperimentConfig, spec: RunSpec, with_event: bool = True) -> RunResult:
    """Run one realized/counterfactual pair and compute every metric."""
    cfg.validate()
    stream_cfg = replace(cfg.stream, environment=spec.environment, seed=spec.seed)
    stream = gen_stream(stream_cfg)
    horizon = stream_cfg.horizon
    dim = stream_cfg.dimension
    radius = cfg.ogd_radius if spec.model is Model.OGD else cfg.ons_radius
    event = None
    if with_event:
        event = DeletionEvent(
            tau=cfg.tau,
            deleted_rounds=default_deleted_rounds(cfg.tau, cfg.deleted_count),
            intervention=spec.intervention,
        )
    deleted = set(event.deleted_rounds) if event else set()

    w0 = stream[0].w_star
    if spec.model is Model.OGD:
        realized = init_ogd(w0, cfg.eta0, cfg.ogd_radius)
        counterfactual = init_ogd(w0, cfg.eta0, cfg.ogd_radius)
    else:
        realized = init_ons(w0, cfg.eta, cfg.lam, cfg.ons_radius)
        counterfactual = init_ons(w0, cfg.eta, cfg.lam, cfg.ons_radius)

    losses: list[float] = []
    errors: list[float] = []
    cum_regrets: list[float] = []
    cum_loss = 0.0
    # Hindsight-comparator accumulators: X^T X, X^T y, sum(y^2).
    gram = np.zeros((dim, dim))
    moment = np.zeros(dim)
    sq_targets = 0.0
    a_realized: list[np.ndarray] = []
    a_cf: list[np.ndarray] = []
    g_realized: list[np.ndarray] = []
    g_cf: list[np.ndarray | None] = []

    for i, obs in enumerate(stream):
        t = i + 1
        errors.append(tracking_error(realized.w, counterfactual.w))
        realized, out_r = _step(spec.model, realized, obs)
        if t in deleted:
            out_c = None
        else:
            counterfactual, out_c = _step(spec.model, counterfactual, obs)
        losses.append(out_r.loss)
        cum_loss += out_r.loss
        gram += np.outer(obs.x, obs.x)
        moment += obs.y * obs.x
        sq_targets += obs.y * obs.y
        comparator = ball_least_squares(gram, moment, radius)
        best = 0.5 * float(comparator @ gram @ comparator - 2.0 * moment @ comparator + sq_targets)
        cum_regrets.append(cum_loss - best)
        if spec.model is Model.ONS:
            a_realized.append(realized.A.copy())
            a_cf.append(counterfactual.A.copy())
            g_realized.append(out_r.gradient.copy())
            g_cf.append(out_c.gradient.copy() if out_c is not None else None)
        if event is not None and t == event.tau:
            realized, _ = apply_deletion_event(realized, event)

    records: list[RoundRecord] = []
    if spec.model is Model.ONS:
        spectra = spectral_series(a_realized, a_cf, g_realized, g_cf)
        for i in range(horizon):
            trace, cond, cos_state, cos_update = spectra[i]
            records.append(RoundRecord(
                t=i + 1, loss=losses[i], cum_regret=cum_regrets[i],
                tracking_error=errors[i], trace_A=trace, cond_A=cond,
                cos_state=cos_state, cos_update=cos_update,
            ))
    else:
        for i in range(horizon):
            records.append(RoundRecord(
                t=i + 1, loss=losses[i], cum_regret=cum_regrets[i],
                tracking_error=errors[i],
            ))

    if event is not None:
        rec, censored = recovery_time(
            losses, cfg.tau, cfg.smoothing_window, cfg.recovery_tolerance, cfg.reference_window
        )
        over = overshoot(losses, cfg.tau, cfg.smoothing_window, cfg.reference_window)
        shock = parameter_shock(errors, cfg.tau)
    else:
        rec, censored, over, shock = 0, False, 0.0, 0.0
    return RunResult(
        spec=spec, records=tuple(records), recovery_time=rec, censored=censored,
        overshoot=over, param_shock=shock, final_regret=cum_regrets[-1],
    )


def table_row_specs(
    seeds: tuple[int, ...],
    models: tuple[Model, ...] = (Model.OGD, Model.ONS),
    ogd_environments: tuple[Environment, ...] = (Environment.STATIONARY, Environment.DRIFTING),
    ons_environments: tuple[Environment, ...] = (Environment.DRIFTING,),
    alpha_grid: tuple[float, ...] = PAPER_ALPHA_GRID,
    beta_grid: tuple[float, ...] = PAPER_BETA_GRID,
) -> list[RunSpec]:
    """The sweep grid in deterministic order: treatments outermost, seeds innermost.

    OGD rows get the baseline deletion only; ONS rows get the baseline plus
    the partial-reset and decay grids.
    """
    interventions = [InterventionSpec()]
    interventions += [InterventionSpec(InterventionKind.PARTIAL_RESET, alpha=a) for a in alpha_grid]
    interventions += [InterventionSpec(InterventionKind.DECAY, beta=b) for b in beta_grid]
    specs: list[RunSpec] = []
    for model in models:
        envs = ogd_environments if model is Model.OGD else ons_environments
        treatments = [InterventionSpec()] if model is Model.OGD else interventions
        for env in envs:
            for treatment in treatments:
                for seed in seeds:
                    specs.append(RunSpec(model, env, treatment, seed))
    return specs


def _run_cell(args: tuple[ExperimentConfig, RunSpec, bool]) -> RunResult | RunFailure:
    cfg, spec, with_event = args
    try:
        return run_pair(cfg, spec, with_event=with_event)
    except Exception as exc:  # per-cell isolation: one pathology cannot void a sweep
        return RunFailure(spec=spec, error=f"{type(exc).__name__}: {exc}")


def run_sweep(
    cfg: ExperimentConfig, specs: list[RunSpec], parallelism: int = 1,
    with_event: bool = True,
) -> list[RunResult | RunFailure]:
    """Execute every cell; results follow ``specs`` order regardless of schedule."""
    if not specs:
        raise ConfigError("sweep grid is empty")
    cfg.validate()
    jobs = [(cfg, spec, with_event) for spec in specs]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(job) for job in jobs]


def summarize(results: list[RunResult | RunFailure]) -> list[SummaryRecord]:
    """Group results by (model, environment, intervention) and aggregate."""
    ok = [r for r in results if isinstance(r, RunResult)]
    if not ok:
        raise ConfigError("nothing to summarize: no successful runs")
    groups: dict[tuple[str, str, str], list[RunResult]] = {}
    order: list[tuple[str, str, str]] = []
    for r in ok:
        key = (r.spec.model.value, r.spec.environment.value, r.spec.intervention.label())
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    out: list[SummaryRecord] = []
    for key in order:
        rs = groups[key]
        rec_m, rec_s = mean_std([r.recovery_time for r in rs])
        over_m, over_s = mean_std([r.overshoot for r in rs])
        shock_m, shock_s = mean_std([r.param_shock for r in rs])
        reg_m, reg_s = mean_std([r.final_regret for r in rs])
        out.append(SummaryRecord(
            model=key[0], environment=key[1], intervention=key[2], n_seeds=len(rs),
            recovery_time_mean=rec_m, recovery_time_std=rec_s,
            overshoot_mean=over_m, overshoot_std=over_s,
            param_shock_mean=shock_m, param_shock_std=shock_s,
            final_regret_mean=reg_m, final_regret_std=reg_s,
            censored_runs=sum(1 for r in rs if r.censored),
        ))
    return out

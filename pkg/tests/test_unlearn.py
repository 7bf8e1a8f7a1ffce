import numpy as np
import pytest

from unlearnlab.errors import ConfigError, DeletionError
from unlearnlab.geometry import symmetrize
from unlearnlab.harness import ExperimentConfig, Model, RunSpec, run_pair
from unlearnlab.optim import init_ogd, init_ons, ogd_step, ons_step
from unlearnlab.stream import Environment, Observation, StreamConfig, gen_stream
from unlearnlab.unlearn import (
    DeletionEvent,
    InterventionKind,
    InterventionSpec,
    apply_deletion_event,
    default_deleted_rounds,
    delete_ogd,
    delete_ons_standard,
    intervene,
)

RESET = InterventionKind.PARTIAL_RESET
DECAY = InterventionKind.DECAY


def random_pd(rng, d, spread=3.0):
    q = np.linalg.qr(rng.normal(size=(d, d)))[0]
    lam = rng.uniform(0.2, spread, size=d)
    return symmetrize(q @ np.diag(lam) @ q.T)


def obs_at(x, y, t=1):
    x = np.asarray(x, dtype=float)
    return Observation(t=t, x=x, y=float(y), w_star=np.zeros_like(x))


def run_learner(model, stream, tau=None, event=None, **params):
    if model == "ogd":
        state = init_ogd(np.zeros(2), eta0=params.get("eta0", 0.6), radius=5.0)
        step = ogd_step
    else:
        state = init_ons(np.zeros(2), eta=1.0, lam=1.0, radius=5.0)
        step = ons_step
    for obs in stream:
        state, _ = step(state, obs)
        if tau is not None and obs.t == tau:
            state, _ = apply_deletion_event(state, event)
    return state


class TestSpecValidation:
    def test_empty_deleted_set_rejected(self):
        with pytest.raises(ConfigError):
            DeletionEvent(tau=10, deleted_rounds=())

    def test_rounds_after_tau_rejected(self):
        with pytest.raises(ConfigError):
            DeletionEvent(tau=10, deleted_rounds=(9, 11))

    def test_intervention_grids_validated(self):
        with pytest.raises(ConfigError):
            InterventionSpec(RESET, alpha=0.0)
        with pytest.raises(ConfigError):
            InterventionSpec(DECAY, beta=1.2)
        assert InterventionSpec(DECAY, beta=0.9).label() == "decay(0.9)"

    def test_default_deleted_rounds(self):
        assert default_deleted_rounds(200, 10) == tuple(range(191, 201))
        with pytest.raises(ConfigError):
            default_deleted_rounds(5, 10)


class TestDeleteOgd:
    def test_zero_gradient_deletions_keep_w(self):
        state = init_ogd(np.array([1.0, 0.0]), eta0=0.5, radius=5.0)
        x = np.array([0.0, 1.0])
        for t in range(1, 4):
            state, _ = ogd_step(state, Observation(t=t, x=x, y=float(x @ state.w), w_star=x))
        event = DeletionEvent(tau=3, deleted_rounds=(1, 2, 3))
        after = delete_ogd(state, event)
        np.testing.assert_allclose(after.w, state.w)
        assert after.grad_log == ()

    def test_hand_correction(self):
        # One logged round with eta=0.1, g=(1,0): deletion re-adds (0.1, 0).
        state = init_ogd(np.zeros(2), eta0=0.1, radius=5.0)
        state, _ = ogd_step(state, obs_at([1.0, 0.0], -1.0))
        np.testing.assert_allclose(state.grad_log[0].gradient, [1.0, 0.0])
        after = delete_ogd(state, DeletionEvent(tau=1, deleted_rounds=(1,)))
        np.testing.assert_allclose(after.w, state.w + np.array([0.1, 0.0]))

    def test_correction_is_projected(self):
        state = init_ogd(np.array([4.9, 0.0]), eta0=1.0, radius=5.0)
        log_entry_obs = obs_at([1.0, 0.0], 10.0)
        state, _ = ogd_step(state, log_entry_obs)
        after = delete_ogd(state, DeletionEvent(tau=1, deleted_rounds=(1,)))
        assert np.linalg.norm(after.w) <= 5.0 + 1e-12

    def test_exact_inverse_of_recorded_steps(self):
        stream = gen_stream(StreamConfig(
            dimension=2, horizon=50, environment=Environment.DRIFTING, seed=9))
        state = init_ogd(np.zeros(2), eta0=0.6, radius=5.0)
        w_before_tail = None
        for obs in stream:
            if obs.t == 41:
                w_before_tail = state.w.copy()
            state, _ = ogd_step(state, obs)
        event = DeletionEvent(tau=50, deleted_rounds=default_deleted_rounds(50, 10))
        after = delete_ogd(state, event)
        # Inside the ball the re-added steps rewind exactly to the pre-tail parameter.
        np.testing.assert_allclose(after.w, w_before_tail, atol=1e-12)

    def test_missing_round_named(self):
        state = init_ogd(np.zeros(2), eta0=0.6, radius=5.0)
        state, _ = ogd_step(state, obs_at([1.0, 0.0], 1.0))
        with pytest.raises(DeletionError, match="round 7"):
            delete_ogd(state, DeletionEvent(tau=8, deleted_rounds=(7,)))


class TestDeleteOnsStandard:
    def test_rank_one_removal_restores_identity(self):
        state = init_ons(np.zeros(2), eta=1.0, lam=1.0, radius=5.0)
        state, _ = ons_step(state, obs_at([1.0, 0.0], -1.0))
        np.testing.assert_allclose(state.A, np.diag([2.0, 1.0]))
        after = delete_ons_standard(state, DeletionEvent(tau=1, deleted_rounds=(1,)))
        np.testing.assert_allclose(after.A, np.eye(2), atol=1e-9)

    def test_zero_gradient_deletion_is_noop(self):
        state = init_ons(np.array([2.0, 0.0]), eta=1.0, lam=1.0, radius=5.0)
        x = np.array([0.0, 1.0])
        state, _ = ons_step(state, Observation(t=1, x=x, y=0.0, w_star=x))
        after = delete_ons_standard(state, DeletionEvent(tau=1, deleted_rounds=(1,)))
        np.testing.assert_allclose(after.w, state.w)
        np.testing.assert_allclose(after.A, state.A, atol=1e-12)
        assert after.grad_log == ()

    def test_brute_force_reconstruction_over_survivors(self):
        # Oracle: after deletion (no flooring) A must equal lam*I plus the
        # outer products of the surviving logged gradients.
        stream = gen_stream(StreamConfig(
            dimension=2, horizon=60, environment=Environment.DRIFTING, seed=13))
        state = init_ons(np.zeros(2), eta=1.0, lam=1.0, radius=5.0)
        for obs in stream:
            state, _ = ons_step(state, obs)
        event = DeletionEvent(tau=60, deleted_rounds=default_deleted_rounds(60, 10))
        after = delete_ons_standard(state, event)
        recon = np.eye(2)
        for entry in after.grad_log:
            recon += np.outer(entry.gradient, entry.gradient)
        assert np.linalg.norm(after.A - recon) <= 1e-8
        assert len(after.grad_log) == 50

    def test_correction_uses_pre_removal_matrix(self):
        stream = gen_stream(StreamConfig(
            dimension=2, horizon=30, environment=Environment.DRIFTING, seed=21))
        state = init_ons(np.zeros(2), eta=1.0, lam=1.0, radius=5.0)
        for obs in stream:
            state, _ = ons_step(state, obs)
        event = DeletionEvent(tau=30, deleted_rounds=(29, 30))
        g_sum = sum(e.gradient for e in state.grad_log if e.t in (29, 30))
        expected_w = state.w + np.linalg.solve(state.A, g_sum)
        after = delete_ons_standard(state, event)
        np.testing.assert_allclose(after.w, expected_w, atol=1e-9)


class TestIntervene:
    def test_partial_reset_hand_values(self, rng):
        q = np.linalg.qr(rng.normal(size=(2, 2)))[0]
        a = symmetrize(q @ np.diag([2.0, 1.0]) @ q.T)
        out = intervene(a, InterventionSpec(RESET, alpha=0.5))
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(out)), [0.5, 1.5], atol=1e-8)

    def test_decay_hand_values_and_condition_number(self, rng):
        q = np.linalg.qr(rng.normal(size=(2, 2)))[0]
        a = symmetrize(q @ np.diag([2.0, 1.0]) @ q.T)
        out = intervene(a, InterventionSpec(DECAY, beta=0.9))
        lam = np.sort(np.linalg.eigvalsh(out))
        np.testing.assert_allclose(lam, [0.1, 0.2], atol=1e-8)
        assert lam[1] / lam[0] == pytest.approx(2.0, rel=1e-8)

    def test_none_is_identity(self, rng):
        a = random_pd(rng, 3)
        np.testing.assert_allclose(intervene(a, InterventionSpec()), a, atol=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_spectral_contract_random_matrices(self, rng, d):
        # Oracle: numpy eigenvalues before and after, compared per the rules.
        for _ in range(50):
            a = random_pd(rng, d)
            pre = np.sort(np.linalg.eigvalsh(a))[::-1]
            alpha = rng.uniform(0.1, 1.0)
            out = intervene(a, InterventionSpec(RESET, alpha=alpha))
            post = np.sort(np.linalg.eigvalsh(out))[::-1]
            np.testing.assert_allclose(post, np.maximum(pre - alpha, 1e-6), atol=1e-8)
            beta = rng.uniform(0.1, 0.9)
            out = intervene(a, InterventionSpec(DECAY, beta=beta))
            post = np.sort(np.linalg.eigvalsh(out))[::-1]
            np.testing.assert_allclose(post, np.maximum((1 - beta) * pre, 1e-6), atol=1e-8)

    def test_decay_preserves_condition_number_unfloored(self, rng):
        for _ in range(50):
            a = random_pd(rng, 3)
            pre = np.linalg.eigvalsh(a)
            out = intervene(a, InterventionSpec(DECAY, beta=0.5))
            post = np.linalg.eigvalsh(out)
            assert post[-1] / post[0] == pytest.approx(pre[-1] / pre[0], rel=1e-8)

    def test_eigenvectors_preserved_commutator(self, rng):
        # Distinct eigenvalues: intervened matrix must commute with the original.
        for _ in range(50):
            q = np.linalg.qr(rng.normal(size=(3, 3)))[0]
            a = symmetrize(q @ np.diag([3.0, 1.7, 0.6]) @ q.T)
            out = intervene(a, InterventionSpec(RESET, alpha=0.4))
            comm = a @ out - out @ a
            assert np.linalg.norm(comm) <= 1e-8 * (1 + np.linalg.norm(a) * np.linalg.norm(out))

    def test_positive_definite_preserved(self, rng):
        for _ in range(30):
            a = random_pd(rng, 2, spread=0.4)
            out = intervene(a, InterventionSpec(RESET, alpha=5.0))
            assert np.linalg.eigvalsh(out).min() > 0


class TestApplyDeletionEvent:
    def _ons_at_tau(self, seed=3, tau=30):
        stream = gen_stream(StreamConfig(
            dimension=2, horizon=tau, environment=Environment.DRIFTING, seed=seed))
        state = init_ons(np.zeros(2), eta=1.0, lam=1.0, radius=5.0)
        for obs in stream:
            state, _ = ons_step(state, obs)
        return state

    def test_parameter_side_identical_across_treatments(self):
        specs = [
            InterventionSpec(),
            InterventionSpec(RESET, alpha=0.3), InterventionSpec(RESET, alpha=0.5),
            InterventionSpec(RESET, alpha=0.7), InterventionSpec(DECAY, beta=0.5),
            InterventionSpec(DECAY, beta=0.7), InterventionSpec(DECAY, beta=0.9),
        ]
        ws = []
        a_none = None
        for spec in specs:
            state = self._ons_at_tau()
            event = DeletionEvent(tau=30, deleted_rounds=default_deleted_rounds(30, 10),
                                  intervention=spec)
            new_state, w_post = apply_deletion_event(state, event)
            np.testing.assert_allclose(new_state.w, w_post)
            ws.append(w_post)
            if spec.kind is InterventionKind.NONE:
                a_none = new_state.A
            elif spec.kind is DECAY and spec.beta == 0.5:
                assert not np.allclose(new_state.A, a_none)
        spread = max(np.linalg.norm(w - ws[0]) for w in ws)
        assert spread <= 1e-12

    def test_wrong_round_rejected(self):
        state = self._ons_at_tau(tau=20)
        event = DeletionEvent(tau=25, deleted_rounds=(20,))
        with pytest.raises(ConfigError):
            apply_deletion_event(state, event)

    def test_determinism(self):
        outs = []
        for _ in range(2):
            state = self._ons_at_tau(seed=8)
            event = DeletionEvent(tau=30, deleted_rounds=default_deleted_rounds(30, 5),
                                  intervention=InterventionSpec(DECAY, beta=0.7))
            new_state, _ = apply_deletion_event(state, event)
            outs.append(new_state)
        assert (outs[0].w == outs[1].w).all()
        assert (outs[0].A == outs[1].A).all()

    def test_ogd_dispatch(self):
        stream = gen_stream(StreamConfig(
            dimension=2, horizon=20, environment=Environment.STATIONARY, seed=5))
        state = init_ogd(np.zeros(2), eta0=0.6, radius=5.0)
        for obs in stream:
            state, _ = ogd_step(state, obs)
        event = DeletionEvent(tau=20, deleted_rounds=default_deleted_rounds(20, 10))
        new_state, w_post = apply_deletion_event(state, event)
        np.testing.assert_allclose(new_state.w, w_post)
        assert len(new_state.grad_log) == 10

import math

import numpy as np
import pytest

from unlearnlab.errors import ConfigError, UsageError
from unlearnlab.stream import (
    Environment,
    Observation,
    StreamConfig,
    drift_target,
    gen_stream,
    loss_grad,
    loss_value,
    stream_to_csv,
)


def cfg(**kw):
    base = dict(dimension=2, horizon=400, environment=Environment.STATIONARY,
                target_radius=2.0, drift_rate=0.04, noise_std=0.1, seed=7)
    base.update(kw)
    return StreamConfig(**base)


def fd_gradient(w, obs, h=1e-5):
    """Central finite differences of loss_value: the gradient oracle."""
    g = np.zeros_like(w)
    for i in range(len(w)):
        wp = w.copy(); wp[i] += h
        wm = w.copy(); wm[i] -= h
        g[i] = (loss_value(wp, obs) - loss_value(wm, obs)) / (2 * h)
    return g


class TestGenStream:
    def test_zero_noise_targets_are_exact(self):
        stream = gen_stream(cfg(noise_std=0.0))
        for obs in stream:
            assert obs.y == pytest.approx(float(obs.x @ obs.w_star), abs=0.0)

    def test_determinism_bit_identical(self):
        a = gen_stream(cfg(environment=Environment.DRIFTING))
        b = gen_stream(cfg(environment=Environment.DRIFTING))
        for oa, ob in zip(a, b):
            assert oa.t == ob.t
            assert (oa.x == ob.x).all()
            assert oa.y == ob.y
            assert (oa.w_star == ob.w_star).all()

    def test_seeds_differ(self):
        a = gen_stream(cfg(seed=1))
        b = gen_stream(cfg(seed=2))
        assert not all(oa.y == ob.y for oa, ob in zip(a, b))

    def test_length_and_indexing(self):
        stream = gen_stream(cfg(horizon=37))
        assert len(stream) == 37
        assert [o.t for o in stream] == list(range(1, 38))

    def test_feature_second_moment_isotropic(self):
        # Monte Carlo oracle for E[x x^T]: direct averaging over the stream.
        stream = gen_stream(cfg(horizon=400))
        x = np.stack([o.x for o in stream])
        second_moment = x.T @ x / len(stream)
        assert np.abs(second_moment - np.eye(2)).max() < 0.15

    def test_feature_second_moment_isotropic_d5(self):
        streams = [gen_stream(cfg(dimension=5, horizon=400, seed=s)) for s in range(3)]
        x = np.stack([o.x for st in streams for o in st])
        second_moment = x.T @ x / x.shape[0]
        assert np.abs(second_moment - np.eye(5)).max() < 0.15

    def test_noise_rms_matches_sigma(self):
        stream = gen_stream(cfg(horizon=400, noise_std=0.1))
        resid = np.array([o.y - o.x @ o.w_star for o in stream])
        assert math.sqrt(np.mean(resid ** 2)) == pytest.approx(0.1, rel=0.05)

    def test_invalid_dimension_rejected(self):
        with pytest.raises(ConfigError):
            gen_stream(cfg(dimension=0))

    def test_invalid_horizon_rejected(self):
        with pytest.raises(ConfigError):
            gen_stream(cfg(horizon=0))

    def test_drifting_needs_two_dims(self):
        with pytest.raises(ConfigError):
            gen_stream(cfg(dimension=1, environment=Environment.DRIFTING))


class TestDriftTarget:
    def test_constant_norm(self):
        c = cfg(environment=Environment.DRIFTING, target_radius=2.0)
        for t in (1, 17, 93, 400):
            assert np.linalg.norm(drift_target(t, c)) == pytest.approx(2.0, abs=1e-12)

    def test_zero_rate_is_stationary(self):
        c = cfg(environment=Environment.DRIFTING, drift_rate=0.0)
        first = drift_target(1, c)
        for t in (2, 50, 400):
            assert (drift_target(t, c) == first).all()

    def test_quarter_period_monotone_decrease(self):
        # Oracle: evaluate the cosine at sampled rounds across a quarter period.
        c = cfg(environment=Environment.DRIFTING, target_radius=2.0, drift_rate=0.01)
        quarter = int((math.pi / 0.01) / 2)
        ts = list(range(0, quarter + 1, 15)) + [quarter]
        samples = [drift_target(t, c)[0] for t in ts]
        assert samples[0] == pytest.approx(2.0, abs=1e-9)
        assert all(a > b for a, b in zip(samples, samples[1:]))
        assert samples[-1] < 0.1

    def test_periodicity(self):
        c = cfg(environment=Environment.DRIFTING, drift_rate=0.04)
        period = 2 * math.pi / 0.04
        for t in (3, 40):
            np.testing.assert_allclose(
                drift_target(t, c), drift_target(t + period, c), atol=1e-9
            )

    def test_stationary_config_rejected(self):
        with pytest.raises(UsageError):
            drift_target(1, cfg(environment=Environment.STATIONARY))


class TestLoss:
    def test_perfect_predictor_zero_noise(self):
        stream = gen_stream(cfg(noise_std=0.0))
        for obs in stream[:20]:
            assert loss_value(obs.w_star, obs) == pytest.approx(0.0, abs=1e-18)

    def test_hand_value(self):
        obs = Observation(t=1, x=np.array([1.0, 0.0]), y=1.0, w_star=np.zeros(2))
        assert loss_value(np.zeros(2), obs) == pytest.approx(0.5)

    def test_orthogonal_zero(self):
        obs = Observation(t=1, x=np.array([1.0, 1.0]), y=0.0, w_star=np.zeros(2))
        assert loss_value(np.array([1.0, -1.0]), obs) == pytest.approx(0.0)

    def test_gradient_hand_value(self):
        obs = Observation(t=1, x=np.array([1.0, 0.0]), y=1.0, w_star=np.zeros(2))
        np.testing.assert_allclose(loss_grad(np.zeros(2), obs), [-1.0, 0.0])

    def test_gradient_zero_at_fit(self):
        obs = Observation(t=1, x=np.array([2.0, 1.0]), y=5.0, w_star=np.zeros(2))
        np.testing.assert_allclose(loss_grad(np.array([2.0, 1.0]), obs), [0.0, 0.0])

    def test_gradient_matches_finite_differences(self, rng):
        stream = gen_stream(cfg(environment=Environment.DRIFTING, horizon=100))
        for _ in range(100):
            obs = stream[rng.integers(0, len(stream))]
            w = rng.normal(size=2) * 3
            g = loss_grad(w, obs)
            fd = fd_gradient(w, obs)
            assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))

    def test_gradient_unchanged_by_constant_loss_shift(self, rng):
        # Finite differences of loss_value + c: the constant drops out.
        stream = gen_stream(cfg(horizon=50))
        obs = stream[3]
        w = rng.normal(size=2)
        h = 1e-5
        shifted = np.zeros(2)
        for i in range(2):
            wp = w.copy(); wp[i] += h
            wm = w.copy(); wm[i] -= h
            shifted[i] = ((loss_value(wp, obs) + 10.0) - (loss_value(wm, obs) + 10.0)) / (2 * h)
        assert np.linalg.norm(loss_grad(w, obs) - shifted) < 1e-6

    def test_convexity_witness(self, rng):
        stream = gen_stream(cfg(horizon=50))
        for _ in range(200):
            obs = stream[rng.integers(0, 50)]
            w1 = rng.normal(size=2) * 4
            w2 = rng.normal(size=2) * 4
            lam = rng.uniform()
            mix = loss_value(lam * w1 + (1 - lam) * w2, obs)
            assert mix <= lam * loss_value(w1, obs) + (1 - lam) * loss_value(w2, obs) + 1e-12

    def test_dimension_mismatch_rejected(self):
        obs = Observation(t=1, x=np.array([1.0, 0.0]), y=1.0, w_star=np.zeros(2))
        with pytest.raises(UsageError):
            loss_value(np.zeros(3), obs)
        with pytest.raises(UsageError):
            loss_grad(np.zeros(3), obs)


class TestCsvDump:
    def test_audit_columns(self, tmp_path):
        stream = gen_stream(cfg(horizon=5))
        path = tmp_path / "stream.csv"
        with open(path, "w", newline="") as fh:
            stream_to_csv(stream, fh)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,x_1,x_2,y,wstar_1,wstar_2"
        assert len(lines) == 6
        first = lines[1].split(",")
        assert first[0] == "1"
        assert float(first[3]) == stream[0].y

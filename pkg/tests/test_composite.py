"""Structure-aware model: physics field, objective, loss, gradients."""

import math

import numpy as np
import pytest

from lfbo import (
    CompositeConfig,
    CompositeObjective,
    DegenerateTrainingError,
    DomainError,
    EnvModelParams,
    InvalidArgumentError,
    VectorObservation,
    composite_loss,
    env_concentration,
    env_field,
    env_objective,
    make_env_objective,
    train_composite,
)
from lfbo.composite import (
    ENV_GRID_LOCATIONS,
    ENV_GRID_TIMES,
    ENV_TRUE_PARAMS,
    CompositeClassifier,
    composite_forward,
    grad_composite_loss,
)
from lfbo.benchmarks import get_benchmark

ENV_SPACE = get_benchmark("env").space


def reference_concentration(a, b, p):
    """Hand-written two-source field, independent of the implementation."""
    c = p.mass / math.sqrt(4 * math.pi * p.diffusion * b) * math.exp(
        -(a**2) / (4 * p.diffusion * b)
    )
    if b > p.second_time:
        dt = b - p.second_time
        c += p.mass / math.sqrt(4 * math.pi * p.diffusion * dt) * math.exp(
            -((a - p.second_location) ** 2) / (4 * p.diffusion * dt)
        )
    return c


class TestConcentration:
    def test_frozen_values(self):
        p = ENV_TRUE_PARAMS
        assert env_concentration(0.0, 15.0, p) == pytest.approx(
            2.7529632787052893, abs=1e-14
        )
        assert env_concentration(1.0, 60.0, p) == pytest.approx(
            3.189890449705125, abs=1e-14
        )
        assert env_concentration(2.5, 45.0, p) == pytest.approx(
            3.1485675095092365, abs=1e-14
        )

    def test_matches_reference_on_grid(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            p = EnvModelParams(
                mass=rng.uniform(7, 13),
                diffusion=rng.uniform(0.02, 0.12),
                second_location=rng.uniform(0.01, 3),
                second_time=rng.uniform(30.01, 30.295),
            )
            for a in ENV_GRID_LOCATIONS:
                for b in ENV_GRID_TIMES:
                    assert env_concentration(a, b, p) == pytest.approx(
                        reference_concentration(a, b, p), rel=1e-12
                    )

    def test_second_source_activates_strictly_after(self):
        # measure right at the second source, where its plume is strongest
        p = ENV_TRUE_PARAMS
        a = p.second_location
        before = env_concentration(a, p.second_time, p)
        single = (
            p.mass
            / math.sqrt(4 * math.pi * p.diffusion * p.second_time)
            * math.exp(-(a**2) / (4 * p.diffusion * p.second_time))
        )
        assert before == pytest.approx(single, rel=1e-12)
        after = env_concentration(a, p.second_time + 1e-6, p)
        assert after > before + 1000.0  # fresh point release dominates

    def test_nonpositive_time_rejected(self):
        with pytest.raises(DomainError):
            env_concentration(0.0, 0.0, ENV_TRUE_PARAMS)

    def test_params_validation(self):
        with pytest.raises(InvalidArgumentError):
            EnvModelParams(10.0, 0.0, 1.0, 30.1)

    def test_vector_round_trip(self):
        vec = ENV_TRUE_PARAMS.as_vector()
        np.testing.assert_array_equal(vec, [10.0, 0.07, 1.505, 30.1525])
        again = EnvModelParams.from_vector(vec)
        assert again == ENV_TRUE_PARAMS


class TestField:
    def test_layout_is_location_major(self):
        p = ENV_TRUE_PARAMS
        field = env_field(p)
        assert field.shape == (12,)
        k = 0
        for a in ENV_GRID_LOCATIONS:
            for b in ENV_GRID_TIMES:
                assert field[k] == pytest.approx(env_concentration(a, b, p))
                k += 1

    def test_objective_is_squared_field_gap(self):
        rng = np.random.default_rng(1)
        p = EnvModelParams(9.0, 0.05, 2.0, 30.2)
        want = 0.0
        for a in ENV_GRID_LOCATIONS:
            for b in ENV_GRID_TIMES:
                want += (
                    reference_concentration(a, b, p)
                    - reference_concentration(a, b, ENV_TRUE_PARAMS)
                ) ** 2
        assert env_objective(p, ENV_TRUE_PARAMS) == pytest.approx(want, rel=1e-12)

    def test_objective_zero_only_at_truth(self):
        assert env_objective(ENV_TRUE_PARAMS, ENV_TRUE_PARAMS) == 0.0
        other = EnvModelParams(10.5, 0.07, 1.505, 30.1525)
        assert env_objective(other, ENV_TRUE_PARAMS) > 0.0


class TestCompositeObjective:
    def test_score_is_negated_squared_distance(self):
        obj = make_env_objective()
        x = ENV_TRUE_PARAMS.as_vector()
        assert obj.g(x) == pytest.approx(0.0, abs=1e-20)
        x2 = np.array([9.0, 0.05, 2.0, 30.2])
        want = -float(np.sum((obj.h(x2) - obj.z_star) ** 2))
        assert obj.g(x2) == pytest.approx(want, rel=1e-12)

    def test_custom_structure(self):
        obj = CompositeObjective(
            h=lambda x: np.array([x[0], 2 * x[0]]), z_star=np.array([1.0, 2.0])
        )
        assert obj.g(np.array([1.0])) == 0.0
        assert obj.g(np.array([0.0])) == pytest.approx(-5.0)


def make_observations(n=30, seed=0):
    rng = np.random.default_rng(seed)
    obj = make_env_objective()
    xs = ENV_SPACE.sample_batch(rng, n)
    return [VectorObservation(x, obj.h(x)) for x in xs], obj


class TestCompositeModel:
    def test_forward_consistency(self):
        obs, obj = make_observations(10, seed=2)
        g_obs = np.array([o.scalar_outcome(obj.z_star) for o in obs])
        tau = float(np.quantile(g_obs, 0.10))
        model = CompositeClassifier.initialize(
            ENV_SPACE, obj.z_star, tau, (16, 16), np.random.default_rng(0)
        )
        x = obs[0].x
        c, s, h = composite_forward(model, x)
        assert s == pytest.approx(-float(np.sum((h - obj.z_star) ** 2)))
        u = max(s - tau, 0.0)
        assert c == pytest.approx(u / (u + 1.0))
        assert 0.0 <= c < 1.0

    def test_loss_finite_without_positives(self):
        obs, obj = make_observations(8, seed=3)
        g_obs = np.array([o.scalar_outcome(obj.z_star) for o in obs])
        tau = float(g_obs.max()) + 1.0  # nothing clears the bar
        model = CompositeClassifier.initialize(
            ENV_SPACE, obj.z_star, tau, (8, 8), np.random.default_rng(1)
        )
        val = composite_loss(model, obs, obj.z_star, tau)
        assert math.isfinite(val)

    @pytest.mark.parametrize("seed", range(4))
    def test_gradients_match_central_differences(self, seed):
        obs, obj = make_observations(12, seed=seed)
        g_obs = np.array([o.scalar_outcome(obj.z_star) for o in obs])
        tau = float(np.quantile(g_obs, 0.10))
        rng = np.random.default_rng(seed + 10)
        model = CompositeClassifier.initialize(
            ENV_SPACE, obj.z_star, tau, (8, 6), rng
        )
        # keep the threshold clear of every predicted score so the finite
        # difference never brackets the hinge kink
        s_init = model.predict_s(np.stack([o.x for o in obs]))
        while np.min(np.abs(s_init - tau)) < 1e-3:
            tau -= 2e-3
        grads = grad_composite_loss(model, obs, obj.z_star, tau)

        def loss_at():
            return composite_loss(model, obs, obj.z_star, tau)

        h_step = 1e-5
        worst = 0.0
        for layer, (dw, db) in enumerate(grads):
            for arr, grad in ((model.weights[layer], dw), (model.biases[layer], db)):
                flat = arr.reshape(-1)
                gflat = grad.reshape(-1)
                # normalize coordinate errors by the tensor's gradient scale;
                # dividing by a near-zero coordinate only measures roundoff
                scale = max(float(np.max(np.abs(gflat))), 1e-8)
                idxs = np.random.default_rng(seed + layer).choice(
                    flat.size, size=min(5, flat.size), replace=False
                )
                for k in idxs:
                    orig = flat[k]
                    flat[k] = orig + h_step
                    up = loss_at()
                    flat[k] = orig - h_step
                    down = loss_at()
                    flat[k] = orig
                    fd = (up - down) / (2 * h_step)
                    denom = max(abs(fd), abs(gflat[k]), scale)
                    worst = max(worst, abs(fd - gflat[k]) / denom)
        assert worst <= 1e-4


class TestCompositeTraining:
    def test_loss_decreases(self):
        obs, obj = make_observations(40, seed=4)
        g_obs = np.array([o.scalar_outcome(obj.z_star) for o in obs])
        tau = float(np.quantile(g_obs, 0.10))
        cfg = CompositeConfig(
            space=ENV_SPACE,
            z_star=obj.z_star,
            tau=tau,
            hidden_units=(32, 32),
            epochs=200,
            seed=0,
        )
        init = CompositeClassifier.initialize(
            ENV_SPACE, obj.z_star, tau, cfg.hidden_units, np.random.default_rng(0)
        )
        init_loss = composite_loss(init, obs, obj.z_star, tau)
        model = train_composite(obs, cfg)
        final_loss = composite_loss(model, obs, obj.z_star, tau)
        assert final_loss < init_loss

    def test_predictions_track_structure(self):
        # after training, the predicted score should rank the true optimum
        # above a far-away parameter setting
        obs, obj = make_observations(60, seed=5)
        g_obs = np.array([o.scalar_outcome(obj.z_star) for o in obs])
        tau = float(np.quantile(g_obs, 0.10))
        cfg = CompositeConfig(
            space=ENV_SPACE, z_star=obj.z_star, tau=tau, epochs=300, seed=1
        )
        model = train_composite(obs, cfg)
        s_true = model.predict_s(ENV_TRUE_PARAMS.as_vector()[None, :])[0]
        far = np.array([13.0, 0.12, 3.0, 30.295])
        s_far = model.predict_s(far[None, :])[0]
        assert s_true > s_far

    def test_no_positives_raises(self):
        obs, obj = make_observations(8, seed=6)
        g_obs = np.array([o.scalar_outcome(obj.z_star) for o in obs])
        cfg = CompositeConfig(
            space=ENV_SPACE,
            z_star=obj.z_star,
            tau=float(g_obs.max()) + 1.0,
            epochs=10,
            seed=0,
        )
        with pytest.raises(DegenerateTrainingError):
            train_composite(obs, cfg)

    def test_deterministic(self):
        obs, obj = make_observations(25, seed=7)
        g_obs = np.array([o.scalar_outcome(obj.z_star) for o in obs])
        tau = float(np.quantile(g_obs, 0.10))
        cfg = CompositeConfig(
            space=ENV_SPACE, z_star=obj.z_star, tau=tau, epochs=50, seed=9
        )
        a = train_composite(obs, cfg)
        b = train_composite(obs, cfg)
        grid = ENV_SPACE.sample_batch(np.random.default_rng(0), 20)
        np.testing.assert_array_equal(a.predict_s(grid), b.predict_s(grid))

"""Tests for smoothing, normalization and reward shaping."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from ssdlab.core.errors import ConfigurationError, EstimateError
from ssdlab.core.estimates import init_tables, propagate
from ssdlab.core.shaping import (
    ShapingAudit,
    SmoothedTracker,
    effective_weights,
    ia_penalty,
    ia_shape,
    normalize,
    shape_rewards,
    svo_angle,
    svo_penalty,
    svo_shape,
    update_smoothed,
)
from ssdlab.models.agents import AgentSpec, AgentType
from ssdlab.models.environment import Environment
from ssdlab.models.shaping import ShapingConfig, ShapingMethod


def smooth(rewards, gamma=0.99, lam=0.9):
    tracker = SmoothedTracker()
    for r in rewards:
        tracker = update_smoothed(tracker, r, gamma, lam)
    return tracker


class TestSmoothing:
    """Test the smoothed reward and its normalization."""

    def test_recurrence(self):
        """Each update decays by gamma * lambda and adds the reward."""
        assert smooth([1.0]).e == pytest.approx(1.0)
        assert smooth([1.0, 0.0]).e == pytest.approx(0.891)
        assert smooth([1.0, 0.0, 1.0]).e == pytest.approx(1.793881)

    def test_extrema_and_normalized_value(self):
        """The normalized value is the position within the running extrema."""
        first = smooth([1.0])
        second = smooth([1.0, 0.0])
        third = smooth([1.0, 0.0, 1.0])

        assert first.e_hat == 0.5
        assert second.e_min == pytest.approx(0.891)
        assert second.e_max == pytest.approx(1.0)
        assert second.e_hat == pytest.approx(0.0)
        assert third.e_hat == pytest.approx(1.0)
        assert third.range == pytest.approx(1.793881 - 0.891)

    def test_fresh_tracker_is_neutral(self):
        tracker = SmoothedTracker()

        assert normalize(tracker) == 0.5
        assert tracker.range == 0.0

    def test_normalized_value_stays_in_unit_interval(self):
        """e_hat lies in [0, 1] for arbitrary reward streams."""
        rng = np.random.default_rng(3)
        tracker = SmoothedTracker()
        for r in rng.normal(0.0, 5.0, size=200):
            tracker = update_smoothed(tracker, float(r), 0.99, 0.9)
            assert 0.0 <= tracker.e_hat <= 1.0

    def test_non_finite_reward(self):
        with pytest.raises(ValueError, match="finite"):
            update_smoothed(SmoothedTracker(), math.nan, 0.99, 0.9)

    def test_bad_discount(self):
        with pytest.raises(ConfigurationError):
            update_smoothed(SmoothedTracker(), 1.0, 1.5, 0.9)


class TestInequityAversion:
    """Test the inequity-averse penalty."""

    def test_hand_computed_penalty(self):
        """Envy and guilt are averaged over the N-1 others."""
        # behind agent 2 by 4, ahead of agent 3 by 2
        assert ia_penalty(2.0, [6.0, 0.0], alpha=1.0, beta=0.5) == pytest.approx(2.5)
        assert ia_shape(1.0, 2.0, [6.0, 0.0], alpha=1.0, beta=0.5) == pytest.approx(-1.5)

    def test_matches_closed_form(self):
        """The penalty equals the vectorized closed form."""
        rng = np.random.default_rng(0)
        for _ in range(25):
            values = rng.uniform(-3.0, 3.0, size=5)
            e_i, others = float(values[0]), values[1:]
            expected = (
                0.7 / 4 * np.maximum(others - e_i, 0.0).sum()
                + 0.2 / 4 * np.maximum(e_i - others, 0.0).sum()
            )

            assert ia_penalty(e_i, others.tolist(), 0.7, 0.2) == pytest.approx(expected)

    def test_equal_values_are_neutral(self):
        assert ia_penalty(0.4, [0.4, 0.4, 0.4], alpha=5.0, beta=5.0) == 0.0

    def test_single_agent(self):
        with pytest.raises(ConfigurationError, match="at least 2"):
            ia_penalty(1.0, [], 1.0, 1.0)

    def test_negative_weights(self):
        with pytest.raises(ConfigurationError):
            ia_penalty(1.0, [0.0], -1.0, 1.0)


class TestSocialValueOrientation:
    """Test the reward angle and the SVO penalty."""

    def test_angles(self):
        assert svo_angle(1.0, [1.0]) == 45.0
        assert svo_angle(0.0, [0.0]) == 45.0
        assert svo_angle(1.0, [0.0]) == pytest.approx(0.0)
        assert svo_angle(0.0, [1.0]) == pytest.approx(90.0)
        assert svo_angle(1.0, [math.sqrt(3.0)]) == pytest.approx(60.0)

    def test_angle_uses_mean_of_others(self):
        assert svo_angle(1.0, [0.0, 2.0]) == 45.0
        assert svo_angle(1.0, [1.0, math.sqrt(3.0) * 2 - 1.0]) == pytest.approx(60.0)

    def test_equal_values_are_neutral(self):
        """Equal normalized rewards sit exactly on the 45 degree target."""
        value = 0.1 + 0.2
        theta = svo_angle(value, [value, value, value])

        assert svo_penalty(theta, 45.0, 1.0) == 0.0

    def test_penalty(self):
        assert svo_penalty(60.0, 45.0, 0.004) == pytest.approx(0.06)
        assert svo_shape(0.5, 30.0, 45.0, 0.02) == pytest.approx(0.2)

    def test_negative_weight(self):
        with pytest.raises(ConfigurationError):
            svo_penalty(0.0, 45.0, -0.1)


class TestWeights:
    """Test the social drive modifier."""

    def test_phi_scales_weights(self):
        config = ShapingConfig(method="fair_local_ia", alpha=0.05, beta=0.1, phi={"low_reward": 12.0})
        agent = AgentSpec.for_type("a", AgentType.LOW_REWARD)

        weights = effective_weights(config, agent)

        assert weights.alpha == pytest.approx(0.6)
        assert weights.beta == pytest.approx(1.2)

    def test_svo_weight(self):
        config = ShapingConfig(method="svo", w=0.004, phi={"standard": 7.5})

        weights = effective_weights(config, AgentSpec.for_type("a", AgentType.STANDARD))

        assert weights.w == pytest.approx(0.03)

    def test_agent_phi_fallback(self):
        config = ShapingConfig(method="ia", alpha=1.0)
        agent = AgentSpec.for_type("a", AgentType.STANDARD, phi=2.0)

        assert effective_weights(config, agent).alpha == pytest.approx(2.0)

    def test_penalty_is_linear_in_phi(self):
        """Doubling phi doubles the penalty."""
        agents = [AgentSpec.for_type(a, AgentType.STANDARD) for a in ("a", "b", "c")]
        values = {"a": 0.2, "b": 0.9, "c": 0.5}
        rewards = {"a": 1.0, "b": 0.0, "c": 0.0}
        for method in ("ia", "svo"):
            base = ShapingConfig(method=method, alpha=0.3, beta=0.1, w=0.01, phi={"standard": 1.0})
            doubled = base.model_copy(update={"phi": {"standard": 2.0}})

            one = shape_rewards(base, agents, rewards, values).penalty
            two = shape_rewards(doubled, agents, rewards, values).penalty

            for agent_id in values:
                assert two[agent_id] == pytest.approx(2 * one[agent_id])


class TestShapeRewards:
    """Test shaping over a whole population."""

    agents = [AgentSpec.for_type(a, AgentType.STANDARD) for a in ("a", "b")]

    def test_passthrough(self):
        result = shape_rewards(ShapingConfig(), self.agents, {"a": 1.0, "b": -2.0}, {"a": 0.0, "b": 0.0})

        assert result.shaped == {"a": 1.0, "b": -2.0}
        assert result.penalty == {"a": 0.0, "b": 0.0}

    def test_global_ia(self):
        """The agent ahead pays guilt, the agent behind pays envy."""
        config = ShapingConfig(method="ia", alpha=1.0, beta=0.5)

        result = shape_rewards(config, self.agents, {"a": 1.0, "b": 0.0}, {"a": 1.0, "b": 0.0})

        assert result.shaped["a"] == pytest.approx(0.5)
        assert result.shaped["b"] == pytest.approx(-1.0)

    def test_local_needs_tables(self):
        config = ShapingConfig.preset(Environment.COINS, ShapingMethod.FAIR_LOCAL_IA)

        with pytest.raises(EstimateError):
            shape_rewards(config, self.agents, {"a": 0.0, "b": 0.0}, {"a": 0.5, "b": 0.5})

    @pytest.mark.parametrize("method", ["ia", "svo"])
    def test_full_visibility_matches_global(self, method):
        """With everyone visible, local estimates equal the true normalized values."""
        agents = [AgentSpec.for_type(a, AgentType.STANDARD) for a in ("a", "b", "c")]
        ids = [agent.agent_id for agent in agents]
        values = {"a": 0.1, "b": 0.7, "c": 1.0}
        rewards = {"a": 0.0, "b": 1.0, "c": 1.0}
        tables = propagate(
            init_tables(ids), {i: [j for j in ids if j != i] for i in ids}, values, t=1
        )
        local = ShapingConfig(method=method, alpha=0.2, beta=0.3, w=0.01, normalized=True, local=True)
        global_ = local.model_copy(update={"local": False})

        with_tables = shape_rewards(local, agents, rewards, values, tables)
        without = shape_rewards(global_, agents, rewards, values)

        assert with_tables.shaped == without.shaped

    def test_audit(self, tmp_path):
        config = ShapingConfig(method="ia", alpha=1.0, beta=0.5)
        rewards = {"a": 1.0, "b": 0.0}
        audit = ShapingAudit()

        audit.record(3, rewards, shape_rewards(config, self.agents, rewards, rewards))
        path = audit.write(tmp_path / "audit.csv")

        lines = path.read_text().splitlines()
        assert lines[0] == "t,agent,extrinsic,penalty,shaped"
        assert lines[1] == "3,a,1.0,0.5,0.5"


class TestShapingConfig:
    """Test config validation and presets."""

    def test_fair_local_defaults(self):
        config = ShapingConfig(method="fair_local_svo")

        assert config.normalized and config.local

    def test_fair_local_requires_local(self):
        with pytest.raises(ValidationError, match="local=true"):
            ShapingConfig(method="fair_local_ia", local=False)

    @pytest.mark.parametrize("method", ["ia", "svo"])
    def test_local_requires_normalized(self, method):
        """Propagated estimates are normalized, so raw comparisons cannot use them."""
        with pytest.raises(ValidationError, match="local=true requires normalized=true"):
            ShapingConfig(method=method, local=True)

        assert ShapingConfig(method=method, local=True, normalized=True).local

    def test_unknown_phi_type(self):
        with pytest.raises(ValidationError, match="unknown agent type"):
            ShapingConfig(method="ia", phi={"alien": 1.0})

    def test_lambda_alias(self):
        assert ShapingConfig(**{"lambda": 0.5}).lambda_ == 0.5

    def test_presets(self):
        harvest = ShapingConfig.preset(Environment.HARVEST, ShapingMethod.FAIR_LOCAL_IA)
        coins = ShapingConfig.preset(Environment.COINS, ShapingMethod.SVO)

        assert (harvest.alpha, harvest.beta) == (3.0, 0.05)
        assert harvest.phi["wide_zap"] == 6.0
        assert coins.w == 0.004
        assert coins.theta_svo_deg == 45.0
        assert coins.phi == {}


class TestProperties:
    """Randomized checks of smoothing, neutrality and local estimates."""

    @pytest.mark.parametrize("gamma, lam", [(1.0, 0.5), (0.99, 0.9), (1.0, 0.99)])
    def test_smoothing_matches_discounted_sum(self, gamma, lam):
        """e at every step is the discounted sum of every reward so far."""
        rng = np.random.default_rng(17)
        streams = rng.uniform(-2.0, 2.0, size=(1000, 200))
        lags = np.subtract.outer(np.arange(200), np.arange(200))
        weights = np.where(lags >= 0, (gamma * lam) ** np.maximum(lags, 0), 0.0)
        expected = streams @ weights.T

        for stream, oracle in zip(streams, expected):
            tracker = SmoothedTracker()
            smoothed = []
            for r in stream:
                tracker = update_smoothed(tracker, float(r), gamma, lam)
                smoothed.append(tracker.e)

            np.testing.assert_allclose(smoothed, oracle, rtol=0.0, atol=1e-9)
            assert tracker.e_min == pytest.approx(oracle.min(), abs=1e-9)
            assert tracker.e_max == pytest.approx(oracle.max(), abs=1e-9)

    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_equal_values_leave_rewards_unchanged(self, n):
        """IA and 45 degree SVO return the extrinsic reward when nobody differs."""
        rng = np.random.default_rng(n)
        agents = [AgentSpec.for_type(f"a{i}", AgentType.STANDARD) for i in range(n)]
        for _ in range(100):
            value = float(rng.uniform(0.0, 1.0))
            values = {agent.agent_id: value for agent in agents}
            rewards = {agent.agent_id: float(rng.normal(0.0, 2.0)) for agent in agents}
            phi = {"standard": float(rng.uniform(0.0, 10.0))}
            configs = [
                ShapingConfig(
                    method="ia",
                    alpha=float(rng.uniform(0.0, 5.0)),
                    beta=float(rng.uniform(0.0, 5.0)),
                    phi=phi,
                ),
                ShapingConfig(method="svo", w=float(rng.uniform(0.0, 1.0)), phi=phi),
            ]

            for config in configs:
                assert shape_rewards(config, agents, rewards, values).shaped == rewards

    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_zero_weights_leave_rewards_unchanged(self, n):
        rng = np.random.default_rng(100 + n)
        agents = [AgentSpec.for_type(f"a{i}", AgentType.STANDARD) for i in range(n)]
        for _ in range(100):
            values = {agent.agent_id: float(rng.uniform(0.0, 1.0)) for agent in agents}
            rewards = {agent.agent_id: float(rng.normal(0.0, 2.0)) for agent in agents}

            for method in ("ia", "svo"):
                config = ShapingConfig(method=method)
                assert shape_rewards(config, agents, rewards, values).shaped == rewards

    def test_full_visibility_local_equals_global(self):
        """When everyone sees everyone, estimates are fresh and exact."""
        rng = np.random.default_rng(23)
        agents = [AgentSpec.for_type(f"a{i}", AgentType.STANDARD) for i in range(10)]
        ids = [agent.agent_id for agent in agents]
        everyone = {i: [j for j in ids if j != i] for i in ids}

        for trace in range(50):
            family = "ia" if trace % 2 == 0 else "svo"
            weights = dict(
                alpha=float(rng.uniform(0.0, 5.0)),
                beta=float(rng.uniform(0.0, 5.0)),
                w=float(rng.uniform(0.0, 0.1)),
                phi={"standard": float(rng.uniform(0.5, 10.0))},
            )
            local = ShapingConfig(method=f"fair_local_{family}", **weights)
            global_ = ShapingConfig(method=family, normalized=True, **weights)
            trackers = {i: SmoothedTracker() for i in ids}
            tables = init_tables(ids)

            for t in range(1, 21):
                rewards = {i: float(rng.choice([-2.0, 0.0, 1.0])) for i in ids}
                trackers = {i: update_smoothed(trackers[i], rewards[i], 0.99, 0.9) for i in ids}
                values = {i: trackers[i].e_hat for i in ids}
                tables = propagate(tables, everyone, values, t)

                for table in tables.values():
                    assert all(table.estimate(j) == values[j] for j in table.subjects)
                    assert all(table.age(j, t) == 0 for j in table.subjects)
                with_tables = shape_rewards(local, agents, rewards, values, tables)
                without = shape_rewards(global_, agents, rewards, values)
                assert with_tables.shaped == without.shaped

import numpy as np
import pytest

from seqsel.agent.evaluate import evaluate
from seqsel.agent.policy import (
    GreedyQPolicy,
    UniformRandomPolicy,
    epsilon_at,
    greedy_action,
    select_action,
)
from seqsel.agent.replay import ReplayBuffer, Transition
from seqsel.agent.selection_log import SelectionLog
from seqsel.agent.targets import double_q_targets, soft_update
from seqsel.agent.train_config import build_train_config, default_decay_rate
from seqsel.agent.trainer import train
from seqsel.data.models import SynthSpec
from seqsel.data.preprocessing import split, zscore_apply, zscore_fit
from seqsel.data.synth import synth_generate
from seqsel.env.mdp import EpisodeState, reset, step
from seqsel.errors import ContractError
from seqsel.qnet.network import forward
from seqsel.qnet.params import init_params


def _transition(n, action, done, reward=0.0, fill=0.0):
    state = np.full(2 * n, fill)
    return Transition(state, action, reward, np.zeros(2 * n), done)


def _small_cfg(n, **overrides):
    base = dict(
        episodes=60,
        warmup_transitions=16,
        batch_size=8,
        hidden_units=8,
        eval_interval=20,
    )
    base.update(overrides)
    return build_train_config(n, overrides=base)


class TestTrainConfig:
    def test_defaults(self):
        cfg = build_train_config(16)
        assert cfg.episodes == 10000
        assert cfg.feature_cost == 1e-4
        assert cfg.gamma == 0.99 and cfg.tau == 0.01
        assert cfg.max_steps == 16
        assert cfg.eps_decay_rate == pytest.approx((0.70 - 0.03) / (0.8 * 10000))

    def test_profile_and_alias(self):
        cfg = build_train_config(4, profile="smoke", overrides={"lambda": 0.01})
        assert cfg.episodes == 200
        assert cfg.feature_cost == 0.01

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            build_train_config(4, overrides={"learning_rat": 0.1})

    def test_eps_bounds_checked(self):
        with pytest.raises(ValueError):
            build_train_config(4, overrides={"eps_min": 0.9, "eps_start": 0.5})

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            build_train_config(4, profile="nope")

    def test_max_steps_zero_accepted(self):
        assert build_train_config(4, overrides={"max_steps": 0}).max_steps == 0
        with pytest.raises(ValueError):
            build_train_config(4, overrides={"max_steps": -1})

    def test_cost_profiles(self):
        assert build_train_config(16, profile="desk_cost").feature_cost == 0.01
        xor = build_train_config(16, profile="desk_xor_cost")
        assert (xor.episodes, xor.feature_cost) == (40000, 0.01)


class TestEpsilon:
    def test_schedule(self):
        cfg = build_train_config(4, overrides={"eps_decay_rate": 1e-4})
        assert epsilon_at(0, cfg) == 0.70
        assert epsilon_at(1000, cfg) == pytest.approx(0.60)
        assert epsilon_at(10 ** 9, cfg) == 0.03

    def test_default_rate_hits_floor_at_eighty_percent(self):
        cfg = build_train_config(4, overrides={"episodes": 1000})
        assert epsilon_at(800, cfg) == pytest.approx(0.03)
        assert epsilon_at(799, cfg) > 0.03
        assert default_decay_rate(0.7, 0.03, 0) == 0.0


class TestSelectAction:
    def test_greedy_is_masked_argmax(self, rng):
        params = init_params(5, 2, hidden=8, seed=1)
        state = step(reset(rng.normal(size=5)), 2, 0, 1e-4, 2).next_state
        q = forward(params, state.network_input())[0]
        q[2] -= 1e6
        assert select_action(params, state, 0.0, rng) == int(np.argmax(q))

    def test_full_exploration_stays_valid(self, rng):
        params = init_params(4, 2, hidden=8)
        state = reset(rng.normal(size=4))
        state = step(state, 0, 0, 1e-4, 2).next_state
        state = step(state, 3, 0, 1e-4, 2).next_state
        for _ in range(500):
            assert select_action(params, state, 1.0, rng) not in (0, 3)

    def test_all_revealed_forces_classification(self, rng):
        params = init_params(3, 2, hidden=8, seed=4)
        state = EpisodeState(x=rng.normal(size=3), mask=np.ones(3))
        assert select_action(params, state, 0.0, rng) >= 3

    def test_step_cap_forces_classification(self, rng):
        params = init_params(6, 2, hidden=8, seed=4)
        state = step(reset(rng.normal(size=6), max_steps=1), 0, 0, 1e-4, 2).next_state
        assert greedy_action(params, state) >= 6

    def test_epsilon_range(self, rng):
        with pytest.raises(ValueError):
            select_action(init_params(2, 2, hidden=4), reset(np.zeros(2)), 1.5, rng)


class TestReplayBuffer:
    def test_keeps_last_capacity_transitions(self):
        buf = ReplayBuffer(state_dim=4, capacity=5)
        for i in range(5 + 3):
            buf.add(_transition(2, action=0, done=False, reward=float(i)))
        assert len(buf) == 5
        assert buf.inserted == 8
        assert [t.reward for t in buf.transitions()] == [3.0, 4.0, 5.0, 6.0, 7.0]

    def test_done_flag_must_match_action_kind(self):
        buf = ReplayBuffer(state_dim=4, capacity=5)
        with pytest.raises(ContractError):
            buf.add(_transition(2, action=0, done=True))
        with pytest.raises(ContractError):
            buf.add(_transition(2, action=3, done=False))

    def test_uniform_sampling(self, rng):
        buf = ReplayBuffer(state_dim=2, capacity=10)
        for i in range(4):
            buf.add(_transition(1, action=0, done=False, reward=float(i)))
        batch = buf.sample(4000, rng)
        counts = np.bincount(batch["rewards"].astype(int), minlength=4)
        assert counts.sum() == 4000
        assert np.all(np.abs(counts / 4000 - 0.25) < 0.04)

    def test_empty_sample(self, rng):
        with pytest.raises(ContractError):
            ReplayBuffer(2, 3).sample(1, rng)


class TestDoubleQTargets:
    def _batch(self, rng, n, k, size, dones):
        mask = (rng.random((size, n)) < 0.5).astype(float)
        next_states = np.concatenate([rng.normal(size=(size, n)) * mask, mask], axis=1)
        next_states[dones] = 0.0
        return {
            "rewards": rng.normal(size=size),
            "dones": np.asarray(dones),
            "next_states": next_states,
        }

    def test_terminal_targets_equal_reward(self, rng):
        batch = {"rewards": np.array([0.0, -1.0]), "dones": np.array([True, True]), "next_states": np.zeros((2, 6))}
        a = double_q_targets(batch, init_params(3, 2, hidden=8, seed=1), init_params(3, 2, hidden=8, seed=2), 0.99)
        b = double_q_targets(batch, init_params(3, 2, hidden=8, seed=3), init_params(3, 2, hidden=8, seed=4), 0.99)
        np.testing.assert_array_equal(a, [0.0, -1.0])
        np.testing.assert_array_equal(b, [0.0, -1.0])

    def test_bootstrap_uses_online_argmax_and_raw_target_value(self, rng):
        n, k = 4, 2
        online = init_params(n, k, hidden=8, seed=1, dtype=np.float64)
        target = init_params(n, k, hidden=8, seed=2, dtype=np.float64)
        dones = [False, True, False, False, False]
        batch = self._batch(rng, n, k, 5, dones)
        y = double_q_targets(batch, online, target, gamma=0.99)

        for i, done in enumerate(dones):
            if done:
                assert y[i] == batch["rewards"][i]
                continue
            s = batch["next_states"][i]
            q_online = forward(online, s)[0]
            q_online[:n] -= s[n:] * 1e6
            a_star = int(np.argmax(q_online))
            expected = batch["rewards"][i] + 0.99 * forward(target, s)[0][a_star]
            assert y[i] == pytest.approx(expected, abs=1e-12)

    def test_target_params_do_not_change_argmax(self, rng):
        n, k = 4, 3
        online = init_params(n, k, hidden=8, seed=1, dtype=np.float64)
        batch = self._batch(rng, n, k, 6, [False] * 6)
        t1 = init_params(n, k, hidden=8, seed=5, dtype=np.float64)
        t2 = init_params(n, k, hidden=8, seed=6, dtype=np.float64)
        y1 = double_q_targets(batch, online, t1, 1.0)
        y2 = double_q_targets(batch, online, t2, 1.0)
        s = batch["next_states"]
        q = forward(online, s)
        q[:, :n] -= s[:, n:] * 1e6
        a_star = np.argmax(q, axis=1)
        rows = np.arange(6)
        np.testing.assert_allclose(y1 - batch["rewards"], forward(t1, s)[rows, a_star], atol=1e-12)
        np.testing.assert_allclose(y2 - batch["rewards"], forward(t2, s)[rows, a_star], atol=1e-12)

    def test_arithmetic_example(self):
        # constant Q: zero every weight, set the output bias
        online = init_params(2, 2, arch="ddqn", hidden=4, dtype=np.float64)
        tensors = {name: np.zeros_like(t) for name, t in online.items()}
        tensors["bo"] = np.array([0.0, 0.0, 0.5, 0.1])
        net = online.with_tensors(tensors)
        batch = {"rewards": np.array([-0.0001]), "dones": np.array([False]), "next_states": np.zeros((1, 4))}
        y = double_q_targets(batch, net, net, gamma=0.99)
        assert y[0] == pytest.approx(0.4949, abs=1e-12)


class TestSoftUpdate:
    def test_convex_combination(self):
        online = init_params(3, 2, hidden=8, seed=1, dtype=np.float64)
        target = init_params(3, 2, hidden=8, seed=2, dtype=np.float64)
        new = soft_update(target, online, 0.01)
        for name, theta in new.items():
            expected = 0.01 * online.tensors[name] + 0.99 * target.tensors[name]
            assert np.max(np.abs(theta - expected)) < 1e-7

    def test_endpoints(self):
        online = init_params(3, 2, hidden=8, seed=1)
        target = init_params(3, 2, hidden=8, seed=2)
        for name, theta in soft_update(target, online, 1.0).items():
            np.testing.assert_array_equal(theta, online.tensors[name])
        for name, theta in soft_update(target, online, 0.0).items():
            np.testing.assert_array_equal(theta, target.tensors[name])

    def test_scalar_example(self):
        online = init_params(1, 1, hidden=1, dtype=np.float64)
        target = online.with_tensors({name: np.ones_like(t) for name, t in online.items()})
        online = online.with_tensors({name: np.full_like(t, 2.0) for name, t in online.items()})
        new = soft_update(target, online, 0.01)
        np.testing.assert_allclose(new.tensors["w1"], 1.01, atol=1e-15)

    def test_architecture_mismatch(self):
        with pytest.raises(ContractError):
            soft_update(init_params(3, 2, hidden=8), init_params(3, 2, arch="ddqn", hidden=8), 0.5)


class TestEvaluate:
    def test_random_net_never_reselects(self, rng):
        n, k = 10, 3
        spec = SynthSpec(n_features=n, n_classes=3, informative_indices=[0, 1], rule="XOR_SIGN", n_samples=1200)
        ds = synth_generate(spec, seed=3)
        total_steps = 0
        for seed in range(4):
            params = init_params(n, k, hidden=16, seed=seed)
            # favour feature actions so episodes run until masking forces a prediction
            params.tensors["ba"][:n] += 3.0
            log, preds = evaluate(params, ds, max_steps=n)
            total_steps += int(log.lengths().sum()) + len(log)
            assert np.all((preds >= 0) & (preds < k))
            assert np.all(log.lengths() <= n)
            for episode in log:
                assert len(set(episode.features)) == episode.length
        assert total_steps >= 10 ** 4

    def test_lock_step_matches_single_rollouts(self, sign_dataset, rng):
        params = init_params(sign_dataset.n_features, 2, hidden=8, seed=3, dtype=np.float64)
        subset = sign_dataset.subset(range(20))
        log, preds = evaluate(params, subset, max_steps=4)
        for row, episode in enumerate(log):
            state = reset(subset.features[row], max_steps=4)
            revealed = []
            while True:
                action = greedy_action(params, state)
                if action >= subset.n_features:
                    break
                revealed.append(action)
                state = step(state, action, 0, 0.0, 2).next_state
            assert list(episode.features) == revealed
            assert preds[row] == action - subset.n_features

    def test_uniform_random_policy(self, sign_dataset):
        log, preds = evaluate(
            init_params(sign_dataset.n_features, 2, hidden=4),
            sign_dataset,
            policy=UniformRandomPolicy(2, seed=0),
        )
        assert len(log) == sign_dataset.n_rows
        assert log.lengths().max() <= sign_dataset.n_features

    def test_dimension_mismatch(self, sign_dataset):
        with pytest.raises(ContractError):
            evaluate(init_params(3, 2, hidden=4), sign_dataset)

    def test_greedy_policy_object(self, sign_dataset):
        params = init_params(sign_dataset.n_features, 2, hidden=4)
        a = evaluate(params, sign_dataset)[1]
        b = evaluate(params, sign_dataset, policy=GreedyQPolicy(params))[1]
        np.testing.assert_array_equal(a, b)


class TestSelectionLog:
    def test_jsonl_round_trip(self, tmp_path):
        log = SelectionLog()
        log.append(1, 0, [3, 1])
        log.append(0, 0, [])
        path = log.write_jsonl(tmp_path / "log.jsonl")
        back = SelectionLog.read_jsonl(path)
        assert [e.features for e in back] == [(3, 1), ()]
        np.testing.assert_array_equal(back.lengths(), [2, 0])

    def test_duplicate_feature_rejected(self):
        with pytest.raises(ContractError):
            SelectionLog().append(0, 0, [1, 1])

    def test_long_frame_steps(self):
        log = SelectionLog()
        log.append(0, 1, [4, 2, 7])
        frame = log.to_frame()
        assert frame["step"].tolist() == [1, 2, 3]
        assert frame["feature"].tolist() == [4, 2, 7]


class TestTrain:
    def test_zero_episodes(self, sign_dataset):
        result = train(sign_dataset, _small_cfg(sign_dataset.n_features, episodes=0))
        assert len(result.log) == 0
        fresh = init_params(sign_dataset.n_features, 2, hidden=8, seed=0)
        for name, t in result.params.items():
            np.testing.assert_array_equal(t, fresh.tensors[name])

    def test_deterministic_for_seed(self, sign_dataset):
        cfg = _small_cfg(sign_dataset.n_features)
        a = train(sign_dataset, cfg)
        b = train(sign_dataset, cfg)
        assert a.updates > 0
        for name, t in a.params.items():
            assert t.tobytes() == b.params.tensors[name].tobytes()
        assert [e.to_record() for e in a.log] == [e.to_record() for e in b.log]
        assert a.trace.equals(b.trace)

    def test_trace_records(self, sign_dataset):
        train_ds, val_ds = split(sign_dataset, 0.25, seed=0)
        result = train(train_ds, _small_cfg(sign_dataset.n_features), validation=val_ds)
        assert result.trace["episode"].tolist() == [20, 40, 60]
        assert set(result.trace["source"]) == {"validation"}
        assert result.trace["accuracy"].between(0, 1).all()
        assert len(result.log) == 60

    def test_episode_lengths_bounded(self, sign_dataset):
        result = train(sign_dataset, _small_cfg(sign_dataset.n_features, episodes=10))
        assert all(e.length <= sign_dataset.n_features for e in result.log)


def _oracle_task(rule, informative, episodes, profile):
    spec = SynthSpec(n_features=16, n_classes=2, informative_indices=informative, rule=rule, n_samples=2000)
    raw = synth_generate(spec, seed=0)
    train_raw, test_raw = split(raw, 0.2, seed=0)
    stats = zscore_fit(train_raw)
    cfg = build_train_config(16, profile=profile)
    assert cfg.episodes == episodes
    result = train(zscore_apply(train_raw, stats), cfg)
    test = zscore_apply(test_raw, stats)
    log, preds = evaluate(result.params, test, cfg.max_steps)
    return float(np.mean(preds == test.labels)), log.lengths()


@pytest.mark.slow
class TestLearningOracles:
    # at the default cost of 1e-4 reveal and classify values are not separable after training
    def test_sign_task(self):
        accuracy, lengths = _oracle_task("SIGN", [5], 20000, "desk")
        assert accuracy >= 0.95
        assert lengths.mean() < 16
        assert np.unique(lengths).size >= 2

    def test_xor_sign_task(self):
        accuracy, lengths = _oracle_task("XOR_SIGN", [3, 11], 40000, "desk_xor")
        assert accuracy >= 0.90
        assert lengths.mean() < 16

    def test_sign_task_with_feature_cost_stops_early(self):
        accuracy, lengths = _oracle_task("SIGN", [5], 20000, "desk_cost")
        assert accuracy >= 0.95
        assert lengths.mean() <= 6

    def test_xor_sign_task_with_feature_cost_adapts_episode_length(self):
        accuracy, lengths = _oracle_task("XOR_SIGN", [3, 11], 40000, "desk_xor_cost")
        assert accuracy >= 0.90
        assert lengths.mean() <= 8
        assert np.unique(lengths).size >= 2

import numpy as np
import pytest

from seqsel.errors import CheckpointError, ContractError
from seqsel.qnet.checkpoint import load_checkpoint, load_manifest, save_checkpoint
from seqsel.qnet.network import (
    _forward,
    central_difference,
    finite_difference_grad,
    forward,
    prelu,
    td_loss,
    td_loss_and_grads,
    value_and_advantage,
)
from seqsel.qnet.optim import (
    ADAM_EPS,
    adam_step,
    clip_global_norm,
    global_norm,
    init_opt_state,
    lr_at,
)
from seqsel.qnet.params import init_params, param_shapes


def _random_batch(rng, n, k, batch):
    mask = (rng.random((batch, n)) < 0.5).astype(float)
    x = rng.normal(size=(batch, n)) * mask
    states = np.concatenate([x, mask], axis=1)
    actions = rng.integers(0, n + k, size=batch)
    targets = rng.normal(size=batch)
    return states, actions, targets


def _relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


class TestParams:
    def test_shapes_follow_arch(self):
        d3qn = param_shapes("d3qn", 4, 2, 8)
        ddqn = param_shapes("ddqn", 4, 2, 8)
        assert d3qn["w1"] == (8, 8)
        assert d3qn["wv"] == (1, 8) and d3qn["wa"] == (6, 8)
        assert ddqn["wo"] == (6, 8) and "wv" not in ddqn

    def test_init_is_deterministic(self):
        a = init_params(5, 2, seed=3, hidden=16)
        b = init_params(5, 2, seed=3, hidden=16)
        for name, tensor in a.items():
            np.testing.assert_array_equal(tensor, b.tensors[name])

    def test_init_ranges(self):
        params = init_params(5, 2, seed=0, hidden=32)
        bound = np.sqrt(6.0 / 10)
        assert np.abs(params.tensors["w1"]).max() <= bound
        np.testing.assert_array_equal(params.tensors["b2"], 0.0)
        np.testing.assert_array_equal(params.tensors["p3"], 0.25)
        assert params.dtype == np.float32

    def test_bad_dims(self):
        with pytest.raises(ContractError):
            init_params(0, 2)


class TestForward:
    def test_output_width(self, rng):
        params = init_params(6, 3, hidden=16)
        states, _, _ = _random_batch(rng, 6, 3, 5)
        assert forward(params, states).shape == (5, 9)
        assert forward(params, states[0]).shape == (1, 9)

    def test_dueling_identity(self, rng):
        params = init_params(8, 3, hidden=32, seed=5)
        states, _, _ = _random_batch(rng, 8, 3, 1000)
        q = forward(params, states)
        value, _ = value_and_advantage(params, states)
        assert np.max(np.abs(q.mean(axis=1) - value)) < 1e-5

    def test_prelu_scales_negative_side(self):
        np.testing.assert_allclose(prelu(np.array([-2.0, 0.0, 3.0]), np.float64(0.25)), [-0.5, 0.0, 3.0])

    def test_dueling_head_centres_advantage(self):
        # V = 1, A = [2, 4] gives Q = [0, 2] for any state
        params = init_params(1, 1, hidden=4, dtype=np.float64)
        params.tensors["wv"][:] = 0.0
        params.tensors["bv"][:] = 1.0
        params.tensors["wa"][:] = 0.0
        params.tensors["ba"][:] = [2.0, 4.0]
        np.testing.assert_allclose(forward(params, np.array([0.7, 1.0])), [[0.0, 2.0]])

    def test_row_independent_of_batch(self, rng):
        params = init_params(7, 3, hidden=32, seed=9)
        states, _, _ = _random_batch(rng, 7, 3, 64)
        batched = forward(params, states)
        for row in (0, 17, 63):
            np.testing.assert_allclose(forward(params, states[row])[0], batched[row], rtol=0, atol=1e-6)

    def test_width_mismatch(self):
        params = init_params(3, 2, hidden=8)
        with pytest.raises(ContractError):
            forward(params, np.zeros((2, 5)))

    def test_value_stream_needs_dueling_head(self):
        with pytest.raises(ContractError):
            value_and_advantage(init_params(3, 2, arch="ddqn", hidden=8), np.zeros(6))


class TestGradients:
    @pytest.mark.parametrize("case", range(24))
    def test_matches_central_differences(self, case):
        rng = np.random.default_rng(100 + case)
        n = int(rng.integers(1, 9))
        k = int(rng.integers(2, 4))
        batch = int(rng.integers(1, 5))
        arch = "d3qn" if case % 2 == 0 else "ddqn"
        params = init_params(n, k, arch=arch, seed=case, hidden=6, dtype=np.float64)
        # move slopes off 0.25 so their gradients are exercised
        params.tensors["p2"][:] = rng.uniform(0.05, 0.5, size=6)
        for name, tensor in params.items():
            if name.startswith("b"):
                tensor[:] = rng.normal(scale=0.5, size=tensor.shape)
        # keep every pre-activation clear of the PReLU kink
        while True:
            states, actions, targets = _random_batch(rng, n, k, batch)
            if min(np.abs(z).min() for z in _forward(params, states).pre_acts) > 1e-2:
                break

        _, analytic = td_loss_and_grads(params, states, actions, targets)
        numeric = finite_difference_grad(params, states, actions, targets, h=1e-4)
        for name in params.tensors:
            assert _relative_error(analytic[name], numeric[name]) < 1e-4, name

    def test_loss_matches_td_loss(self, rng):
        params = init_params(4, 2, hidden=8, dtype=np.float64)
        states, actions, targets = _random_batch(rng, 4, 2, 3)
        loss, _ = td_loss_and_grads(params, states, actions, targets)
        q = forward(params, states)
        expected = np.mean((q[np.arange(3), actions] - targets) ** 2)
        assert loss == pytest.approx(expected, rel=1e-12)
        assert td_loss(params, states, actions, targets) == pytest.approx(expected, rel=1e-12)

    def test_central_difference_of_quadratic(self):
        grad = central_difference(lambda t: float(np.sum(t ** 2)), np.array([1.0, -2.0]), 1e-4)
        np.testing.assert_allclose(grad, [2.0, -4.0], rtol=1e-8)

    def test_batch_action_mismatch(self, rng):
        params = init_params(3, 2, hidden=8)
        states, _, _ = _random_batch(rng, 3, 2, 2)
        with pytest.raises(ContractError):
            td_loss_and_grads(params, states, [0], [0.0, 1.0])


class TestOptimizer:
    def test_lr_schedule(self):
        assert lr_at(0) == 1e-3
        assert lr_at(2999) == 1e-3
        assert lr_at(3000) == pytest.approx(7e-4, rel=1e-12)
        assert lr_at(9000) == pytest.approx(1e-3 * 0.7 ** 3, rel=1e-12)
        assert lr_at(10 ** 9) == 3e-8

    def test_clip_global_norm(self):
        grads = {"a": np.array([3.0, 4.0]), "b": np.array([0.0])}
        clipped = clip_global_norm(grads, 1.0)
        assert global_norm(clipped) == pytest.approx(1.0)
        np.testing.assert_allclose(clipped["a"], [0.6, 0.8])
        untouched = clip_global_norm(grads, 10.0)
        np.testing.assert_array_equal(untouched["a"], grads["a"])

    def test_clip_is_idempotent(self, rng):
        grads = {"a": rng.normal(size=(4, 3)) * 10, "b": rng.normal(size=5)}
        once = clip_global_norm(grads, 2.0)
        twice = clip_global_norm(once, 2.0)
        for name in grads:
            np.testing.assert_allclose(twice[name], once[name], rtol=1e-12)

    def test_weight_decay_is_coupled_into_gradient(self):
        # theta = 1000 with zero gradient and decay 1e-6 behaves as gradient 1e-3
        params = init_params(2, 2, hidden=4, dtype=np.float64)
        for tensor in params.tensors.values():
            tensor[:] = 1000.0
        opt = init_opt_state(params, lr=1e-3)
        zeros = {name: np.zeros_like(t) for name, t in params.items()}
        new, new_opt = adam_step(params, zeros, opt, weight_decay=1e-6)
        np.testing.assert_allclose(new_opt.m["w1"], 0.1 * 1e-3, rtol=1e-12)
        np.testing.assert_allclose(new_opt.v["w1"], 0.001 * 1e-6, rtol=1e-12)
        np.testing.assert_allclose(1000.0 - new.tensors["w1"], 1e-3 * 1e-3 / (1e-3 + ADAM_EPS), rtol=1e-9)

    def test_zero_gradient_without_decay_is_a_no_op(self):
        params = init_params(3, 2, hidden=8, seed=4)
        opt = init_opt_state(params, lr=1e-3)
        zeros = {name: np.zeros_like(t) for name, t in params.items()}
        new, _ = adam_step(params, zeros, opt, weight_decay=0.0)
        for name, tensor in params.items():
            np.testing.assert_array_equal(new.tensors[name], tensor)

    def test_first_adam_step_moves_by_lr(self):
        params = init_params(2, 2, hidden=4, dtype=np.float64)
        opt = init_opt_state(params, lr=1e-3)
        grads = {name: np.full_like(t, 0.5) for name, t in params.items()}
        new, new_opt = adam_step(params, grads, opt, weight_decay=0.0)
        delta = params.tensors["w1"] - new.tensors["w1"]
        np.testing.assert_allclose(delta, 1e-3 * 0.5 / (0.5 + ADAM_EPS), rtol=1e-9)
        assert new_opt.t == 1 and opt.t == 0

    def test_adam_descends_loss(self, rng):
        params = init_params(3, 2, hidden=8, dtype=np.float64, seed=2)
        states, actions, targets = _random_batch(rng, 3, 2, 8)
        opt = init_opt_state(params, lr=1e-2)
        start = td_loss(params, states, actions, targets)
        for _ in range(50):
            _, grads = td_loss_and_grads(params, states, actions, targets)
            params, opt = adam_step(params, grads, opt)
        assert td_loss(params, states, actions, targets) < start


class TestCheckpoint:
    @pytest.mark.parametrize("arch", ["d3qn", "ddqn"])
    def test_round_trip_is_bit_exact(self, tmp_path, rng, arch):
        params = init_params(5, 3, arch=arch, hidden=12, seed=9)
        opt = init_opt_state(params)
        opt.m["w1"][:] = 0.125
        save_checkpoint(tmp_path / "ckpt", params, opt, epoch=42)
        loaded, loaded_opt, manifest = load_checkpoint(tmp_path / "ckpt")

        states, _, _ = _random_batch(rng, 5, 3, 16)
        np.testing.assert_array_equal(forward(params, states), forward(loaded, states))
        np.testing.assert_array_equal(loaded_opt.m["w1"], 0.125)
        assert manifest["epoch"] == 42
        assert manifest["arch"] == arch
        assert [t["name"] for t in manifest["tensors"]] == list(param_shapes(arch, 5, 3, 12))

    def test_ddqn_manifest_records_flat_head(self, tmp_path):
        save_checkpoint(tmp_path / "c", init_params(4, 2, arch="ddqn", hidden=8))
        shapes = {t["name"]: t["shape"] for t in load_manifest(tmp_path / "c")["tensors"]}
        assert shapes["wo"] == [6, 8]
        assert "wv" not in shapes

    def test_params_bin_is_little_endian_float32(self, tmp_path):
        params = init_params(3, 2, hidden=4)
        save_checkpoint(tmp_path / "c", params)
        blob = (tmp_path / "c" / "params.bin").read_bytes()
        assert len(blob) == 4 * params.n_parameters()
        first = np.frombuffer(blob, dtype="<f4", count=params.tensors["w1"].size)
        np.testing.assert_array_equal(first, params.tensors["w1"].ravel())

    def test_truncated_blob(self, tmp_path):
        save_checkpoint(tmp_path / "c", init_params(3, 2, hidden=4))
        path = tmp_path / "c" / "params.bin"
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "c")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nothing")

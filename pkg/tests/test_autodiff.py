import math

import numpy as np
import pytest

from helpers import random_network
from test_tensor import random_nested
from tninfer.algebra import REAL, TROPICAL
from tninfer.autodiff import backward_real, backward_tropical, forward
from tninfer.errors import InconsistentEvidenceError, ShapeError
from tninfer.order import greedy_order, tree_from_nested
from tninfer.tasks import augment, condition
from tninfer.tensor import LabeledTensor, OpCounter, TensorNetwork, contract_network, unity_tensor


def as_tropical(net):
    with np.errstate(divide="ignore"):
        return net.with_tensors(LabeledTensor(t.vars, np.log(t.value()), TROPICAL) for t in net.tensors)


def with_unity(net, algebra=REAL):
    aug, picked = augment(net, algebra, [(v,) for v in net.variables])
    return aug, dict(zip(net.variables, picked))


class TestForward:
    def test_n1_evidence(self, n1):
        sub = condition(n1, {1: 1})
        root, tape = forward(sub, greedy_order(sub))
        assert root.scalar().to_float() == pytest.approx(0.48, abs=1e-15)
        assert len(tape.branches) == 1

    def test_single_leaf(self):
        t = LabeledTensor((0,), np.array([0.25, 0.5]))
        net = TensorNetwork({0: 2}, [t], (0,))
        root, tape = forward(net, greedy_order(net))
        assert root is t
        assert tape.branches == []

    def test_tropical_n1(self, n1):
        trop = as_tropical(n1)
        root, _ = forward(trop, greedy_order(trop))
        assert float(root.data) == pytest.approx(math.log(0.42), abs=1e-15)
        assert float(root.data) == pytest.approx(-0.867501, abs=1e-6)

    def test_matches_contract_network(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            net, _ = augment(random_network(rng), REAL)
            tree = greedy_order(net)
            root, _ = forward(net, tree)
            assert root.scalar() == contract_network(net, tree).scalar()

    def test_uncovered_variable_rejected(self):
        net = TensorNetwork({0: 2, 1: 2}, [unity_tensor((0,), (2,)), unity_tensor((0,), (2,))], ())
        with pytest.raises(ShapeError, match="unity"):
            forward(net, greedy_order(net))


class TestBackwardReal:
    def test_unity_leaf_gives_joint_slice(self, n1):
        aug, unity = with_unity(condition(n1, {1: 1}))
        _, tape = forward(aug, greedy_order(aug))
        grads = backward_real(tape)
        np.testing.assert_allclose(grads[unity[0]].value(), [0.18, 0.30], rtol=1e-15)

    def test_two_scalars(self):
        a = LabeledTensor((), np.array(3.0))
        b = LabeledTensor((), np.array(0.75))
        net = TensorNetwork({}, [a, b], ())
        _, tape = forward(net, greedy_order(net))
        grads = backward_real(tape)
        assert grads[0].scalar().to_float() == 0.75
        assert grads[1].scalar().to_float() == 3.0

    def test_scopes_match_leaves(self):
        rng = np.random.default_rng(2)
        net, _ = augment(random_network(rng, max_factors=8), REAL)
        _, tape = forward(net, greedy_order(net))
        for k, g in backward_real(tape).items():
            assert g.vars == net.tensors[k].vars

    @pytest.mark.parametrize("seed", range(8))
    def test_euler_identity(self, seed):
        # p is linear in each leaf, so <leaf, dp/dleaf> = p
        rng = np.random.default_rng(seed)
        net, _ = augment(random_network(rng), REAL)
        root, tape = forward(net, greedy_order(net))
        p = root.scalar().to_float()
        for k, g in backward_real(tape).items():
            inner = float(np.sum(g.value() * net.tensors[k].value()))
            assert inner == pytest.approx(p, rel=1e-12)

    def test_non_scalar_root_rejected(self):
        t = LabeledTensor((0,), np.ones(2))
        net = TensorNetwork({0: 2}, [t, t], (0,))
        _, tape = forward(net, greedy_order(net))
        with pytest.raises(ShapeError, match="scalar"):
            backward_real(tape)

    def test_tropical_tape_rejected(self, n1):
        trop = as_tropical(n1)
        _, tape = forward(trop, greedy_order(trop))
        with pytest.raises(ShapeError):
            backward_real(tape)


def finite_difference_errors(net, probes, rng, eps=1e-5):
    tree = greedy_order(net)
    _, tape = forward(net, tree)
    grads = backward_real(tape)
    worst = 0.0
    for _ in range(probes):
        k = int(rng.integers(len(net.tensors)))
        t = net.tensors[k]
        if t.size == 0:
            continue
        flat = int(rng.integers(t.size))

        def root_at(delta):
            data = t.value().reshape(-1).copy()
            data[flat] += delta
            tensors = list(net.tensors)
            tensors[k] = LabeledTensor(t.vars, data.reshape(t.dims))
            return contract_network(net.with_tensors(tensors), tree).scalar().to_float()

        fd = (root_at(eps) - root_at(-eps)) / (2 * eps)
        g = float(grads[k].value().reshape(-1)[flat])
        worst = max(worst, abs(fd - g) / abs(g))
    return worst


class TestFiniteDifferences:
    @pytest.mark.parametrize("seed", range(5))
    def test_hundred_probes(self, seed):
        rng = np.random.default_rng(100 + seed)
        net, _ = with_unity(random_network(rng, max_vars=6))
        assert finite_difference_errors(net, 100, rng) < 1e-6


class TestOpCounts:
    @pytest.mark.parametrize("seed", range(10))
    def test_backward_within_twice_forward(self, seed):
        rng = np.random.default_rng(seed)
        net, _ = with_unity(random_network(rng))
        tree = tree_from_nested(net, random_nested(rng, range(len(net.tensors))))
        fwd, bwd = OpCounter(), OpCounter()
        _, tape = forward(net, tree, fwd)
        backward_real(tape, bwd)
        assert fwd.ops > 0
        assert bwd.ops <= 2 * fwd.ops
        assert fwd.ops + bwd.ops <= 3 * fwd.ops
        assert bwd.calls == 2 * fwd.calls


class TestBackwardTropical:
    def decode(self, net, evidence=None):
        aug, unity = with_unity(as_tropical(condition(net, evidence or {})), TROPICAL)
        _, tape = forward(aug, greedy_order(aug))
        res = backward_tropical(tape)
        return {v: int(np.flatnonzero(res.masks[k].data)[0]) for v, k in unity.items()}, res

    def test_n1_masks(self, n1):
        picked, res = self.decode(n1)
        assert picked == {0: 0, 1: 0}
        assert res.assignment == {0: 0, 1: 0}

    def test_n1_with_evidence(self, n1):
        picked, _ = self.decode(n1, {1: 1})
        assert picked == {0: 1}

    def test_tie_keeps_first(self):
        t = LabeledTensor((0,), np.array([0.5, 0.5]))
        net = TensorNetwork({0: 2}, [t], ())
        picked, res = self.decode(net)
        assert picked == {0: 0}
        for mask in res.masks.values():
            assert mask.data.sum() == 1

    def test_two_dimensional_tie(self):
        t = LabeledTensor((0, 1), np.full((2, 3), 0.25))
        net = TensorNetwork({0: 2, 1: 3}, [t], ())
        picked, _ = self.decode(net)
        assert picked == {0: 0, 1: 0}

    @pytest.mark.parametrize("seed", range(10))
    def test_masks_one_hot_and_consistent(self, seed):
        rng = np.random.default_rng(seed)
        net = random_network(rng)
        _, res = self.decode(net)
        aug, _ = with_unity(as_tropical(net), TROPICAL)
        for k, mask in res.masks.items():
            assert mask.data.dtype == np.bool_
            assert mask.data.sum() == 1
            hot = np.unravel_index(int(np.flatnonzero(mask.data)[0]), mask.dims)
            assert dict(zip(mask.vars, map(int, hot))) == {v: res.assignment[v] for v in mask.vars}

    def test_zero_probability_root(self):
        t = LabeledTensor((0,), np.array([0.0, 0.0]))
        net = TensorNetwork({0: 2}, [t], ())
        with pytest.raises(InconsistentEvidenceError, match="no satisfying configuration"):
            self.decode(net)

    def test_real_tape_rejected(self, n1):
        aug, _ = augment(n1, REAL)
        _, tape = forward(aug, greedy_order(aug))
        with pytest.raises(ShapeError):
            backward_tropical(tape)

"""Random networks and brute-force oracles for the test suite.

The oracles build the full joint table by fancy indexing every factor over
``np.indices`` of the whole state space, so they share no code with the
pairwise contraction kernels they check.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from tninfer.tensor import LabeledTensor, TensorNetwork

N1_TEXT = "BAYES 2 2 2 2 1 0 2 0 1 2 0.6 0.4 4 0.7 0.3 0.25 0.75"
N1_JOINT = {(0, 0): 0.42, (0, 1): 0.18, (1, 0): 0.10, (1, 1): 0.30}


def random_network(rng: np.random.Generator, max_vars=10, max_card=3, max_factors=8,
                   zero_prob=0.0, min_vars=1) -> TensorNetwork:
    n = int(rng.integers(min_vars, max_vars + 1))
    cards = {v: int(rng.integers(2, max_card + 1)) for v in range(n)}
    k = int(rng.integers(1, max_factors + 1))
    tensors = []
    for _ in range(k):
        size = int(rng.integers(1, min(3, n) + 1))
        scope = tuple(int(v) for v in rng.choice(n, size=size, replace=False))
        shape = tuple(cards[v] for v in scope)
        table = rng.uniform(0.05, 1.0, size=shape)
        if zero_prob:
            table[rng.random(shape) < zero_prob] = 0.0
        tensors.append(LabeledTensor(scope, table))
    return TensorNetwork(cards, tensors, ())


def random_evidence(rng: np.random.Generator, net: TensorNetwork, max_k=2) -> dict[int, int]:
    k = int(rng.integers(0, min(max_k, len(net.cards)) + 1))
    chosen = rng.choice(sorted(net.cards), size=k, replace=False)
    return {int(v): int(rng.integers(0, net.cards[int(v)])) for v in chosen}


def full_joint(net: TensorNetwork, log: bool = False) -> tuple[tuple[int, ...], np.ndarray]:
    """Unnormalised joint over all variables (ascending ids), real or log."""
    variables = net.variables
    shape = tuple(net.cards[v] for v in variables)
    idx = np.indices(shape) if shape else np.zeros((0,), dtype=int)
    out = np.zeros(shape) if log else np.ones(shape)
    for t in net.tensors:
        data = np.ldexp(np.asarray(t.data, dtype=float), t.scale)
        picked = data[tuple(idx[variables.index(v)] for v in t.vars)]
        if log:
            with np.errstate(divide="ignore"):
                out = out + np.log(picked)
        else:
            out = out * picked
    return variables, out


def conditioned_joint(net, evidence, log=False):
    variables, joint = full_joint(net, log)
    index = tuple(evidence.get(v, slice(None)) for v in variables)
    rest = tuple(v for v in variables if v not in evidence)
    return rest, joint[index]


def oracle_pr(net, evidence) -> float:
    _, j = conditioned_joint(net, evidence)
    return float(j.sum())


def oracle_marginal(net, evidence, qvars) -> np.ndarray:
    rest, j = conditioned_joint(net, evidence)
    keep = [rest.index(v) for v in qvars]
    other = tuple(i for i in range(len(rest)) if i not in keep)
    m = j.sum(axis=other) if other else j
    # axes of m follow ascending position; reorder to qvars order
    order = sorted(keep)
    m = np.transpose(m, [order.index(i) for i in keep])
    return m / m.sum()


def oracle_mpe(net, evidence) -> float:
    _, j = conditioned_joint(net, evidence, log=True)
    return float(j.max())


def oracle_mmap(net, evidence, query) -> float:
    rest, j = conditioned_joint(net, evidence)
    other = tuple(i for i, v in enumerate(rest) if v not in query)
    m = j.sum(axis=other) if other else j
    with np.errstate(divide="ignore"):
        return float(np.log(m.max()))


def log_joint(net, assignment) -> float:
    """log of the product of factor entries at a full assignment (simple sum)."""
    total = 0.0
    for t in net.tensors:
        x = float(t.data[tuple(assignment[v] for v in t.vars)]) * 2.0 ** t.scale
        total += math.log(x) if x > 0 else -math.inf
    return total


def brute_contract(net: TensorNetwork, tropical: bool = False) -> np.ndarray:
    """Evaluate the contraction definition by enumerating every joint state."""
    variables = net.variables
    out_axes = [variables.index(v) for v in net.output]
    out_shape = tuple(net.cards[v] for v in net.output)
    result = np.full(out_shape, -np.inf if tropical else 0.0)
    for state in itertools.product(*(range(net.cards[v]) for v in variables)):
        acc = 0.0 if tropical else 1.0
        for t in net.tensors:
            x = float(t.data[tuple(state[variables.index(v)] for v in t.vars)])
            if tropical:
                acc += x
            else:
                acc *= x * 2.0 ** t.scale
        key = tuple(state[i] for i in out_axes)
        result[key] = max(result[key], acc) if tropical else result[key] + acc
    return result

"""Inference task drivers built on contraction, autodiff and ordering.

All drivers take a real-valued :class:`~tninfer.tensor.TensorNetwork` as
produced by :func:`tninfer.uai.build_network` plus an evidence mapping
``{var: value}``. Evidence variables are sliced away first and never appear
in any output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import LN_2, REAL, TROPICAL, Algebra, RealScaled
from .autodiff import MaskResult, Tape, backward_real, backward_tropical, forward
from .errors import CapacityError, InconsistentEvidenceError, ShapeError
from .order import Branch, Tree, complexity_report, exhaustive_order, greedy_order
from .tensor import (
    LabeledTensor,
    TensorNetwork,
    check_assignment,
    contract_network,
    contract_pair,
    slice_tensor,
    unity_tensor,
)

RNG_NAME = "PCG64"


@dataclass
class MarginalTable:
    """``tables[i]`` holds p(sets[i] | e), axes ordered as ``sets[i]``."""

    sets: list[tuple[int, ...]]
    tables: list[np.ndarray]
    pr: RealScaled

    def __getitem__(self, var_set) -> np.ndarray:
        if isinstance(var_set, int):
            var_set = (var_set,)
        return self.tables[self.sets.index(tuple(var_set))]


@dataclass
class MpeSolution:
    assignment: dict[int, int]
    log_prob: float
    trace: "TropicalTrace | None" = field(default=None, repr=False, compare=False)


@dataclass
class TropicalTrace:
    """What a tropical solve ran on, kept for inspection and checks."""

    net: TensorNetwork
    tree: Tree
    tape: Tape
    masks: MaskResult
    unity: dict[int, int]  # variable -> tensor index of its unity leaf


@dataclass
class SampleBatch:
    variables: tuple[int, ...]
    samples: np.ndarray  # shape (n, len(variables))
    seed: int | None
    rng: str = RNG_NAME

    def as_dicts(self) -> list[dict[int, int]]:
        return [dict(zip(self.variables, map(int, row))) for row in self.samples]


# -- shared plumbing ---------------------------------------------------------


def condition(net: TensorNetwork, evidence: Mapping[int, int] | None) -> TensorNetwork:
    """Slice every tensor by the evidence and drop evidence variables."""
    evidence = dict(evidence or {})
    check_assignment(net.cards, evidence)
    cards = {v: c for v, c in net.cards.items() if v not in evidence}
    tensors = [slice_tensor(t, evidence) for t in net.tensors]
    return TensorNetwork(cards, tensors, ())


def _in_algebra(t: LabeledTensor, algebra: Algebra) -> LabeledTensor:
    if t.algebra is algebra:
        return t.normalized()
    if algebra is TROPICAL:
        with np.errstate(divide="ignore"):
            data = np.log(np.asarray(t.data)) + t.scale * LN_2
        return LabeledTensor(t.vars, data, TROPICAL)
    raise ShapeError(f"cannot convert {t.algebra.name} tensor to {algebra.name}")


def augment(
    net: TensorNetwork,
    algebra: Algebra,
    unity_sets: Sequence[Sequence[int]] = (),
) -> tuple[TensorNetwork, list[int]]:
    """Convert tensors to ``algebra`` and append unity tensors.

    One unity tensor is appended per entry of ``unity_sets`` (their indices
    are returned), then one per variable no tensor references, then scalar
    ones until there are at least two tensors, so that every variable is
    eliminated at some branch of the tree.
    """
    tensors = [_in_algebra(t, algebra) for t in net.tensors]
    picked = []
    for vs in unity_sets:
        picked.append(len(tensors))
        tensors.append(unity_tensor(vs, [net.cards[v] for v in vs], algebra))
    covered = {v for t in tensors for v in t.vars}
    for v in sorted(set(net.cards) - covered):
        tensors.append(unity_tensor((v,), (net.cards[v],), algebra))
    while len(tensors) < 2:
        tensors.append(unity_tensor((), (), algebra))
    return TensorNetwork(net.cards, tensors, net.output), picked


def plan(net: TensorNetwork, order: str = "greedy", space_cap: float | None = None) -> Tree:
    if order == "greedy":
        tree = greedy_order(net)
    elif order == "exhaustive":
        tree = exhaustive_order(net)
    else:
        raise ValueError(f"unknown order strategy {order!r}")
    if space_cap is not None:
        report = complexity_report(net, tree)
        if report.space > space_cap:
            raise CapacityError.over_cap(report.space, space_cap)
    return tree


# -- PR ----------------------------------------------------------------------


def compute_pr(
    net: TensorNetwork,
    evidence: Mapping[int, int] | None = None,
    *,
    order: str = "greedy",
    space_cap: float | None = None,
) -> RealScaled:
    """Probability of evidence, p(e)."""
    aug, _ = augment(condition(net, evidence), REAL)
    tree = plan(aug, order, space_cap)
    return contract_network(aug, tree).scalar()


# -- MAR ---------------------------------------------------------------------


def compute_mar(
    net: TensorNetwork,
    evidence: Mapping[int, int] | None = None,
    queries: Iterable[Sequence[int]] | None = None,
    *,
    order: str = "greedy",
    space_cap: float | None = None,
) -> MarginalTable:
    """Conditional marginals from one forward and one backward pass.

    A unity tensor is added per query set; its adjoint is p(Q_i, e), and
    dividing by the root p(e) gives p(Q_i | e). Queries default to every
    non-evidence variable on its own.
    """
    evidence = dict(evidence or {})
    sub = condition(net, evidence)
    if queries is None:
        sets = [(v,) for v in sub.variables]
    else:
        sets = [tuple(int(v) for v in q) for q in queries]
    for q in sets:
        if not q or len(set(q)) != len(q):
            raise ShapeError(f"query set {list(q)} must be non-empty without repeats")
        for v in q:
            if v in evidence:
                raise ShapeError(f"query variable {v} is also evidence")
            if v not in sub.cards:
                raise ShapeError(f"query variable {v} is not in the model")

    aug, unity = augment(sub, REAL, sets)
    tree = plan(aug, order, space_cap)
    root, tape = forward(aug, tree)
    if float(root.data) == 0.0:
        raise InconsistentEvidenceError("evidence has zero probability")
    grads = backward_real(tape)
    tables = []
    for k in unity:
        g = grads[k]
        tables.append(np.ldexp(np.asarray(g.data), g.scale - root.scale) / float(root.data))
    return MarginalTable(sets, tables, root.scalar())


# -- MPE / MMAP --------------------------------------------------------------


def _solve_tropical(
    net: TensorNetwork, order: str, space_cap: float | None
) -> MpeSolution:
    """Most likely configuration of a network already in log space."""
    variables = net.variables
    aug, picked = augment(net, TROPICAL, [(v,) for v in variables])
    unity = dict(zip(variables, picked))
    tree = plan(aug, order, space_cap)
    root, tape = forward(aug, tree)
    value = float(root.data)
    if value == -math.inf:
        raise InconsistentEvidenceError("zero-probability model under evidence")
    masks = backward_tropical(tape)
    assignment = {}
    for v, k in unity.items():
        mask = np.asarray(masks.masks[k].data)
        assignment[v] = int(np.flatnonzero(mask)[0])
    trace = TropicalTrace(aug, tree, tape, masks, unity)
    return MpeSolution(assignment, value, trace)


def compute_mpe(
    net: TensorNetwork,
    evidence: Mapping[int, int] | None = None,
    *,
    order: str = "greedy",
    space_cap: float | None = None,
) -> MpeSolution:
    """Most probable assignment of all non-evidence variables, with its natural log probability."""
    sub = condition(net, evidence)
    return _solve_tropical(sub, order, space_cap)


def mmap_partition(net: TensorNetwork, marginalized: Iterable[int]) -> list[list[int]]:
    """Group tensor indices so each marginalized variable lives in one group.

    Marginalized variables are visited in ascending order; each unvisited one
    seeds a group with every tensor touching it, and the group absorbs tensors
    sharing any marginalized variable until closed. Remaining tensors form
    singleton groups.
    """
    marg = set(marginalized)
    holders: dict[int, list[int]] = {}
    for k, t in enumerate(net.tensors):
        for v in t.vars:
            holders.setdefault(v, []).append(k)
    owner: dict[int, int] = {}
    groups: list[list[int]] = []
    for v in sorted(marg):
        if v not in holders or owner.get(holders[v][0]) is not None:
            continue
        gid = len(groups)
        members: list[int] = []
        pending = [v]
        done = {v}
        while pending:
            u = pending.pop()
            for k in holders.get(u, []):
                if k in owner:
                    continue
                owner[k] = gid
                members.append(k)
                for w in net.tensors[k].vars:
                    if w in marg and w not in done:
                        done.add(w)
                        pending.append(w)
        groups.append(sorted(members))
    for k in range(len(net.tensors)):
        if k not in owner:
            owner[k] = len(groups)
            groups.append([k])
    return groups


def compute_mmap(
    net: TensorNetwork,
    evidence: Mapping[int, int] | None = None,
    query: Iterable[int] = (),
    *,
    order: str = "greedy",
    space_cap: float | None = None,
) -> MpeSolution:
    """Most likely assignment of ``query`` after summing out the other non-evidence variables.

    The returned ``log_prob`` is ``log Σ_m p(q*, m, e)``.
    """
    evidence = dict(evidence or {})
    query = sorted(set(int(v) for v in query))
    if not query:
        raise ShapeError("empty query set; use compute_mpe for a full assignment")
    for v in query:
        if v in evidence:
            raise ShapeError(f"query variable {v} is also evidence")
        if v not in net.cards:
            raise ShapeError(f"query variable {v} is not in the model")
    sub, _ = augment(condition(net, evidence), REAL)
    qset = set(query)
    marginalized = [v for v in sub.variables if v not in qset]

    reduced = []
    for group in mmap_partition(sub, marginalized):
        tensors = [sub.tensors[k] for k in group]
        scope = {v for t in tensors for v in t.vars}
        out = tuple(sorted(scope & qset))
        piece = TensorNetwork({v: sub.cards[v] for v in scope}, tensors, out)
        if len(tensors) == 1:
            tree = greedy_order(piece)
        else:
            tree = plan(piece, order if len(tensors) <= 10 else "greedy", space_cap)
        reduced.append(contract_network(piece, tree))
    if any(float(np.max(t.data)) == 0.0 for t in reduced):
        raise InconsistentEvidenceError("evidence has zero probability")

    qnet = TensorNetwork({v: sub.cards[v] for v in query}, reduced, ())
    return _solve_tropical(qnet, order, space_cap)


# -- sampling ----------------------------------------------------------------


def draw_samples(
    net: TensorNetwork,
    evidence: Mapping[int, int] | None = None,
    n: int = 1,
    seed: int | None = None,
    *,
    order: str = "greedy",
    space_cap: float | None = None,
) -> SampleBatch:
    """Unbiased samples of the non-evidence variables given evidence.

    After a cached forward pass the tree is walked from the root down. At a
    branch ``C_Z = con({A_X, B_Y}, Z)`` the variables ``M = (X ∪ Y) \\ Z`` are
    drawn from ``con({A, B}, Z ∪ M)`` at the already sampled ``Z``, normalised,
    by inverse CDF. All ``n`` samples advance through the tree together, one
    uniform draw per sample per branch.
    """
    if n < 1:
        raise ValueError("number of samples must be at least 1")
    aug, _ = augment(condition(net, evidence), REAL)
    tree = plan(aug, order, space_cap)
    root, tape = forward(aug, tree)
    if float(root.data) == 0.0:
        raise InconsistentEvidenceError("evidence has zero probability")

    rng = np.random.Generator(np.random.PCG64(seed))
    drawn: dict[int, np.ndarray] = {}
    for node in reversed(tape.nodes):
        if not isinstance(node, Branch):
            continue
        a = tape.output(node.left)
        b = tape.output(node.right)
        z = list(node.vars)
        m = sorted((set(a.vars) | set(b.vars)) - set(z))
        if not m:
            continue
        joint = contract_pair(a, b, z + m)
        zdims = joint.dims[: len(z)]
        mdims = joint.dims[len(z):]
        table = np.asarray(joint.data).reshape(math.prod(zdims), math.prod(mdims))
        cdf = np.cumsum(table, axis=1)
        if z:
            rows = np.ravel_multi_index(tuple(drawn[v] for v in z), zdims)
        else:
            rows = np.zeros(n, dtype=np.intp)
        u = rng.random(n)
        picked = np.empty(n, dtype=np.intp)
        uniq, inverse = np.unique(rows, return_inverse=True)
        for i, r in enumerate(uniq):
            sel = inverse == i
            total = cdf[r, -1]
            assert total > 0.0, "sampled a zero-probability configuration"
            idx = np.searchsorted(cdf[r], u[sel] * total, side="right")
            picked[sel] = np.minimum(idx, cdf.shape[1] - 1)
        for v, vals in zip(m, np.unravel_index(picked, mdims)):
            assert v not in drawn, f"variable {v} sampled twice"
            drawn[v] = vals.astype(np.int64)

    variables = aug.variables
    missing = [v for v in variables if v not in drawn]
    assert not missing, f"variables {missing} were never sampled"
    samples = np.stack([drawn[v] for v in variables], axis=1) if variables else np.zeros((n, 0), np.int64)
    return SampleBatch(tuple(variables), samples, seed)

"""Labeled dense tensors and pairwise contraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import REAL, Algebra, RealScaled, normalize_buffer
from .errors import ShapeError


@dataclass(frozen=True, eq=False)
class LabeledTensor:
    """Dense array whose axes are named by variable ids.

    The first variable in ``vars`` is the slowest-varying axis. For the real
    algebra the represented value is ``data * 2**scale``.
    """

    vars: tuple[int, ...]
    data: np.ndarray
    algebra: Algebra = REAL
    scale: int = 0

    def __post_init__(self):
        vars_ = tuple(int(v) for v in self.vars)
        object.__setattr__(self, "vars", vars_)
        data = np.asarray(self.data)
        if data.dtype != np.bool_:
            data = np.asarray(data, dtype=np.float64)
        if data.ndim != len(vars_):
            raise ShapeError(
                f"tensor rank {data.ndim} does not match scope {list(vars_)}"
            )
        if len(set(vars_)) != len(vars_):
            raise ShapeError(f"duplicate variable in scope {list(vars_)}")
        if data.flags.writeable:
            data = data.view()
            data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def card(self, var: int) -> int:
        return self.data.shape[self.vars.index(var)]

    def value(self) -> np.ndarray:
        """Entries as plain floats, folding the scale in."""
        if self.scale:
            return np.ldexp(self.data, self.scale)
        return np.array(self.data)

    def scalar(self) -> RealScaled:
        if self.vars:
            raise ShapeError("tensor is not a scalar")
        return RealScaled(float(self.data), self.scale).normalize()

    def normalized(self) -> "LabeledTensor":
        if not self.algebra.scaled:
            return self
        data, e = normalize_buffer(self.data)
        return LabeledTensor(self.vars, data, self.algebra, self.scale + e)

    def permuted(self, order: Sequence[int]) -> "LabeledTensor":
        order = tuple(order)
        if order == self.vars:
            return self
        if sorted(order) != sorted(self.vars):
            raise ShapeError(f"cannot permute {list(self.vars)} to {list(order)}")
        axes = [self.vars.index(v) for v in order]
        return LabeledTensor(order, np.transpose(self.data, axes), self.algebra, self.scale)

    def __repr__(self) -> str:
        return f"LabeledTensor(vars={self.vars}, dims={self.dims}, algebra={self.algebra.name}, scale={self.scale})"


@dataclass(frozen=True)
class TensorNetwork:
    """Variables with their cardinalities, input tensors, and output labels."""

    cards: Mapping[int, int]
    tensors: tuple[LabeledTensor, ...]
    output: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cards", {int(v): int(c) for v, c in self.cards.items()})
        object.__setattr__(self, "tensors", tuple(self.tensors))
        object.__setattr__(self, "output", tuple(int(v) for v in self.output))
        for k, t in enumerate(self.tensors):
            for v, d in zip(t.vars, t.dims):
                if v not in self.cards:
                    raise ShapeError(f"tensor {k} uses unknown variable {v}")
                if self.cards[v] != d:
                    raise ShapeError(
                        f"tensor {k}: variable {v} has dimension {d}, expected {self.cards[v]}"
                    )
        for v in self.output:
            if v not in self.cards:
                raise ShapeError(f"output variable {v} is not in the network")

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(sorted(self.cards))

    def covered(self) -> set[int]:
        out: set[int] = set()
        for t in self.tensors:
            out.update(t.vars)
        return out

    def with_output(self, output: Iterable[int]) -> "TensorNetwork":
        return TensorNetwork(self.cards, self.tensors, tuple(output))

    def with_tensors(self, tensors: Iterable[LabeledTensor]) -> "TensorNetwork":
        return TensorNetwork(self.cards, tuple(tensors), self.output)


def check_assignment(cards: Mapping[int, int], assignment: Mapping[int, int]) -> None:
    for v, x in assignment.items():
        if v not in cards:
            raise ShapeError(f"variable {v} is not in the model")
        if not 0 <= x < cards[v]:
            raise ShapeError(
                f"value {x} out of range for variable {v} (cardinality {cards[v]})"
            )


def slice_tensor(t: LabeledTensor, assignment: Mapping[int, int]) -> LabeledTensor:
    """Fix the assigned variables of ``t``, dropping their axes."""
    if not any(v in assignment for v in t.vars):
        return t
    index = []
    keep = []
    for v, d in zip(t.vars, t.dims):
        if v in assignment:
            x = assignment[v]
            if not 0 <= x < d:
                raise ShapeError(f"value {x} out of range for variable {v} (cardinality {d})")
            index.append(int(x))
        else:
            index.append(slice(None))
            keep.append(v)
    return LabeledTensor(tuple(keep), t.data[tuple(index)], t.algebra, t.scale)


def unity_tensor(vars: Sequence[int], dims: Sequence[int], algebra: Algebra = REAL) -> LabeledTensor:
    """All entries equal to the algebra's multiplicative identity."""
    if any(d <= 0 for d in dims):
        raise ShapeError(f"dimensions must be positive, got {list(dims)}")
    return LabeledTensor(tuple(vars), np.full(tuple(dims), algebra.one), algebra)


class OpCounter:
    """Tally of elementwise ⊙ operations performed by contraction kernels.

    Each pairwise contraction is charged the product of the dimensions of
    every variable it touches, which is the operation count of the
    batch × rows × inner × cols matrix kernel.
    """

    def __init__(self):
        self.ops = 0
        self.calls = 0

    def charge(self, n: int) -> None:
        self.ops += n
        self.calls += 1


def contract_pair(
    a: LabeledTensor,
    b: LabeledTensor,
    out_vars: Sequence[int],
    counter: OpCounter | None = None,
) -> LabeledTensor:
    """Contract two tensors, keeping ``out_vars`` in the given order."""
    if a.algebra is not b.algebra:
        raise ShapeError(f"algebra mismatch: {a.algebra.name} vs {b.algebra.name}")
    alg = a.algebra
    out_vars = tuple(int(v) for v in out_vars)
    if len(set(out_vars)) != len(out_vars):
        raise ShapeError(f"duplicate output variable in {list(out_vars)}")
    card: dict[int, int] = dict(zip(a.vars, a.dims))
    for v, d in zip(b.vars, b.dims):
        if card.setdefault(v, d) != d:
            raise ShapeError(
                f"variable {v} has dimension {card[v]} in one tensor and {d} in the other"
            )
    missing = [v for v in out_vars if v not in card]
    if missing:
        raise ShapeError(f"output variables {missing} appear in neither input")

    in_b = set(b.vars)
    in_a = set(a.vars)
    keep = set(out_vars)
    batch = [v for v in a.vars if v in in_b and v in keep]
    a_keep = [v for v in a.vars if v not in in_b and v in keep]
    b_keep = [v for v in b.vars if v not in in_a and v in keep]
    inner = [v for v in a.vars if v in in_b and v not in keep]
    a_sum = [a.vars.index(v) for v in a.vars if v not in in_b and v not in keep]
    b_sum = [b.vars.index(v) for v in b.vars if v not in in_a and v not in keep]

    if counter is not None:
        counter.charge(math.prod(card.values()))

    # summing variables private to one operand first is valid in any semiring
    a_vars = [v for v in a.vars if v in in_b or v in keep]
    b_vars = [v for v in b.vars if v in in_a or v in keep]
    ad = alg.reduce(np.asarray(a.data), a_sum)
    bd = alg.reduce(np.asarray(b.data), b_sum)

    nb = math.prod(card[v] for v in batch)
    nm = math.prod(card[v] for v in a_keep)
    nn = math.prod(card[v] for v in b_keep)
    nk = math.prod(card[v] for v in inner)
    ad = np.transpose(ad, [a_vars.index(v) for v in batch + a_keep + inner]).reshape(nb, nm, nk)
    bd = np.transpose(bd, [b_vars.index(v) for v in batch + inner + b_keep]).reshape(nb, nk, nn)

    cd = alg.matmul(ad, bd)
    natural = batch + a_keep + b_keep
    cd = cd.reshape([card[v] for v in natural])
    cd = np.transpose(cd, [natural.index(v) for v in out_vars])
    out = LabeledTensor(out_vars, np.array(cd, order="C"), alg, a.scale + b.scale)
    return out.normalized()


def contract_network(net: TensorNetwork, tree, counter: OpCounter | None = None) -> LabeledTensor:
    """Contract ``net`` along a binary contraction tree.

    Variables of the network that no tensor references are handled as in the
    definition of contraction: summed-out ones contribute a factor equal to
    their cardinality (real) and output ones are broadcast.
    """
    from .order import Branch, postorder, validate_tree

    if not net.tensors:
        return finalize(LabeledTensor((), np.array(1.0)), net)
    validate_tree(net, tree)
    cache: dict[int, LabeledTensor] = {}
    for node in postorder(tree):
        if isinstance(node, Branch):
            left = cache.pop(id(node.left))
            right = cache.pop(id(node.right))
            cache[id(node)] = contract_pair(left, right, node.vars, counter)
        else:
            cache[id(node)] = net.tensors[node.index]
    return finalize(cache[id(tree)], net)


def finalize(result: LabeledTensor, net: TensorNetwork) -> LabeledTensor:
    """Bring a tree result onto the network output labels."""
    covered = net.covered()
    extra = [
        v for v in net.variables
        if v not in result.vars and (v in net.output or v not in covered)
    ]
    if set(result.vars) == set(net.output) and not extra:
        return result.permuted(net.output)
    unity = unity_tensor(extra, [net.cards[v] for v in extra], result.algebra)
    return contract_pair(result, unity, net.output)

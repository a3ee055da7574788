"""Contraction trees: construction, validation and cost accounting."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import CapacityError, ShapeError
from .tensor import TensorNetwork


@dataclass(frozen=True, eq=False)
class Leaf:
    index: int
    vars: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Branch:
    left: "Tree"
    right: "Tree"
    vars: tuple[int, ...]


Tree = Union[Leaf, Branch]


@dataclass(frozen=True)
class ComplexityReport:
    space: float
    time: float
    rw: float

    def __str__(self) -> str:
        return f"space={round(self.space, 4)} time={round(self.time, 4)} rw={round(self.rw, 4)}"


def postorder(tree: Tree) -> Iterator[Tree]:
    """Children before parents, left before right. Iterative, so deep trees are fine."""
    stack: list[tuple[Tree, bool]] = [(tree, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Leaf) or expanded:
            yield node
        else:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))


def leaves(tree: Tree) -> list[int]:
    return [n.index for n in postorder(tree) if isinstance(n, Leaf)]


def _var_masks(net: TensorNetwork) -> dict[int, int]:
    masks: dict[int, int] = {}
    for k, t in enumerate(net.tensors):
        for v in t.vars:
            masks[v] = masks.get(v, 0) | (1 << k)
    return masks


def _out_vars(subset: int, masks: dict[int, int], output: set[int]) -> tuple[int, ...]:
    return tuple(
        sorted(v for v, m in masks.items() if m & subset and (v in output or m & ~subset))
    )


def validate_tree(net: TensorNetwork, tree: Tree) -> None:
    """Raise :class:`ShapeError` unless ``tree`` is a valid contraction tree for ``net``."""
    idx = leaves(tree)
    if sorted(idx) != list(range(len(net.tensors))):
        raise ShapeError("tree leaves are not a permutation of the network tensors")
    masks = _var_masks(net)
    output = set(net.output)
    subsets: dict[int, int] = {}
    for node in postorder(tree):
        if isinstance(node, Leaf):
            if node.vars != net.tensors[node.index].vars:
                raise ShapeError(f"leaf {node.index} scope does not match its tensor")
            subsets[id(node)] = 1 << node.index
            continue
        s = subsets[id(node.left)] | subsets[id(node.right)]
        subsets[id(node)] = s
        expect = _out_vars(s, masks, output)
        if tuple(sorted(node.vars)) != expect:
            raise ShapeError(
                f"branch keeps {list(node.vars)} but should keep {list(expect)}"
            )
    if isinstance(tree, Branch) and set(tree.vars) != output & set(masks):
        raise ShapeError("root scope does not match the network output")


def tree_from_nested(net: TensorNetwork, nested) -> Tree:
    """Build a tree from nested pairs of tensor indices, e.g. ``((0, 1), 2)``."""
    masks = _var_masks(net)
    output = set(net.output)

    def build(x) -> tuple[Tree, int]:
        if isinstance(x, int):
            return Leaf(x, net.tensors[x].vars), 1 << x
        left, right = x
        lt, ls = build(left)
        rt, rs = build(right)
        s = ls | rs
        return Branch(lt, rt, _out_vars(s, masks, output)), s

    tree, _ = build(nested)
    validate_tree(net, tree)
    return tree


def greedy_order(net: TensorNetwork) -> Tree:
    """Pairwise greedy contraction order.

    Repeatedly contracts the pair of tensors minimising
    ``size(result) - size(left) - size(right)``; ties go to the pair with the
    smallest node indices. Only pairs sharing a variable are considered until
    none remain, after which disconnected pieces are joined smallest first.
    """
    if not net.tensors:
        raise ShapeError("cannot order an empty network")
    cards = net.cards
    output = set(net.output)
    nodes: dict[int, tuple[Tree, frozenset[int], int]] = {}
    holders: dict[int, set[int]] = {}
    for k, t in enumerate(net.tensors):
        nodes[k] = (Leaf(k, t.vars), frozenset(t.vars), t.size)
        for v in t.vars:
            holders.setdefault(v, set()).add(k)

    def merged_vars(i: int, j: int) -> frozenset[int]:
        vi, vj = nodes[i][1], nodes[j][1]
        keep = set()
        for v in vi | vj:
            if v in output or len(holders[v]) > (v in vi) + (v in vj):
                keep.add(v)
        return frozenset(keep)

    def cost(i: int, j: int) -> int:
        size = math.prod(cards[v] for v in merged_vars(i, j))
        return size - nodes[i][2] - nodes[j][2]

    heap: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int]] = set()

    def push_neighbours(i: int) -> None:
        for v in nodes[i][1]:
            for j in holders[v]:
                if j == i:
                    continue
                key = (min(i, j), max(i, j))
                if key not in seen:
                    seen.add(key)
                    heapq.heappush(heap, (cost(*key), *key))

    for k in range(len(net.tensors)):
        push_neighbours(k)

    next_id = len(net.tensors)

    def merge(i: int, j: int) -> int:
        nonlocal next_id
        keep = merged_vars(i, j)
        ti, vi, _ = nodes.pop(i)
        tj, vj, _ = nodes.pop(j)
        k = next_id
        next_id += 1
        for v in vi | vj:
            holders[v].discard(i)
            holders[v].discard(j)
            if v in keep:
                holders[v].add(k)
        nodes[k] = (
            Branch(ti, tj, tuple(sorted(keep))),
            keep,
            math.prod(cards[v] for v in keep),
        )
        return k

    while heap:
        _, i, j = heapq.heappop(heap)
        if i not in nodes or j not in nodes:
            continue
        k = merge(i, j)
        push_neighbours(k)

    rest = [(nodes[k][2], k) for k in nodes]
    heapq.heapify(rest)
    while len(rest) > 1:
        _, i = heapq.heappop(rest)
        _, j = heapq.heappop(rest)
        k = merge(min(i, j), max(i, j))
        heapq.heappush(rest, (nodes[k][2], k))
    return nodes[rest[0][1]][0]


def exhaustive_order(net: TensorNetwork, max_tensors: int = 10) -> Tree:
    """Optimal tree under (space, then time), by dynamic programming over subsets.

    A Pareto front of (largest tensor, total operations) is kept for every
    subset, since the lexicographic optimum of a union need not be built from
    lexicographic optima of its parts.
    """
    K = len(net.tensors)
    if K == 0:
        raise ShapeError("cannot order an empty network")
    if K > max_tensors:
        raise CapacityError(
            f"exhaustive search over {K} tensors exceeds the limit of {max_tensors}; "
            "use the greedy order instead"
        )
    cards = net.cards
    masks = _var_masks(net)
    output = set(net.output)
    full = (1 << K) - 1

    out: dict[int, tuple[int, ...]] = {}
    size: dict[int, int] = {}
    for s in range(1, full + 1):
        if s & (s - 1) == 0:
            k = s.bit_length() - 1
            out[s] = net.tensors[k].vars
        else:
            out[s] = _out_vars(s, masks, output)
        size[s] = math.prod(cards[v] for v in out[s])

    # front[s]: list of (space, time, left, i_left, i_right)
    front: dict[int, list[tuple[int, int, int, int, int]]] = {}
    for s in sorted(range(1, full + 1), key=lambda x: bin(x).count("1")):
        if s & (s - 1) == 0:
            front[s] = [(size[s], 0, 0, 0, 0)]
            continue
        low = s & -s
        cands = []
        sub = (s - 1) & s
        while sub:
            if sub & low:
                rest = s ^ sub
                union = set(out[sub]) | set(out[rest])
                ops = math.prod(cards[v] for v in union)
                for il, (sl, tl, *_) in enumerate(front[sub]):
                    for ir, (sr, tr, *_) in enumerate(front[rest]):
                        cands.append((max(sl, sr, size[s]), tl + tr + ops, sub, il, ir))
            sub = (sub - 1) & s
        cands.sort(key=lambda c: (c[0], c[1]))
        pareto = []
        best_time = None
        for c in cands:
            if best_time is None or c[1] < best_time:
                pareto.append(c)
                best_time = c[1]
        front[s] = pareto

    def build(s: int, i: int) -> Tree:
        if s & (s - 1) == 0:
            k = s.bit_length() - 1
            return Leaf(k, net.tensors[k].vars)
        _, _, left, il, ir = front[s][i]
        return Branch(build(left, il), build(s ^ left, ir), out[s])

    return build(full, 0)


def complexity_report(net: TensorNetwork, tree: Tree) -> ComplexityReport:
    """Space, time and read-write cost of ``tree`` without materialising tensors.

    Space counts every tensor the tree touches, inputs included. Time counts
    one operation per joint configuration of the variables involved in each
    pairwise contraction. A tree with no contraction reports its single
    tensor's size for all three measures.
    """
    cards = net.cards
    biggest = 1
    ops = 0
    rw = 0
    sizes: dict[int, int] = {}
    for node in postorder(tree):
        n = math.prod(cards[v] for v in node.vars)
        sizes[id(node)] = n
        biggest = max(biggest, n)
        if isinstance(node, Branch):
            union = set(node.left.vars) | set(node.right.vars)
            ops += math.prod(cards[v] for v in union)
            rw += sizes[id(node.left)] + sizes[id(node.right)] + n
    space = math.log2(biggest)
    if ops == 0:
        return ComplexityReport(space, space, space)
    return ComplexityReport(space, math.log2(ops), math.log2(rw))

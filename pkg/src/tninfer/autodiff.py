"""Reverse-mode differentiation through a contraction tree.

``forward`` contracts a network and keeps every intermediate tensor on a
:class:`Tape`. ``backward_real`` pushes real adjoints down the tree with the
pairwise rule ``Abar = con({Cbar, B}, V_a)``, ``Bbar = con({A, Cbar}, V_b)``.
``backward_tropical`` pushes Boolean masks instead: an entry of a child is
marked when, combined with the sibling, it reproduces a marked entry of the
parent. Masks are thinned to a single entry at every branch so the decoded
configuration is globally consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import REAL, TROPICAL
from .errors import InconsistentEvidenceError, ShapeError
from .order import Branch, Leaf, Tree, postorder, validate_tree
from .tensor import LabeledTensor, OpCounter, TensorNetwork, contract_pair, slice_tensor


@dataclass
class Tape:
    net: TensorNetwork
    tree: Tree
    nodes: list[Tree]
    outputs: dict[int, LabeledTensor] = field(repr=False)

    @property
    def root(self) -> LabeledTensor:
        return self.outputs[id(self.tree)]

    def output(self, node: Tree) -> LabeledTensor:
        return self.outputs[id(node)]

    @property
    def branches(self) -> list[Branch]:
        return [n for n in self.nodes if isinstance(n, Branch)]


def forward(net: TensorNetwork, tree: Tree, counter: OpCounter | None = None) -> tuple[LabeledTensor, Tape]:
    validate_tree(net, tree)
    uncovered = set(net.cards) - net.covered()
    if uncovered or set(tree.vars) != set(net.output):
        raise ShapeError(
            "every variable must be referenced by a tensor and the tree must end on the "
            "network output; pad the network with unity tensors first"
        )
    nodes = list(postorder(tree))
    outputs: dict[int, LabeledTensor] = {}
    for node in nodes:
        if isinstance(node, Leaf):
            outputs[id(node)] = net.tensors[node.index]
        else:
            outputs[id(node)] = contract_pair(
                outputs[id(node.left)], outputs[id(node.right)], node.vars, counter
            )
    tape = Tape(net, tree, nodes, outputs)
    root = tape.root.permuted(net.output)
    return root, tape


def _adjoint(x: LabeledTensor, y: LabeledTensor, target: LabeledTensor, counter) -> LabeledTensor:
    present = set(x.vars) | set(y.vars)
    keep = [v for v in target.vars if v in present]
    g = contract_pair(x, y, keep, counter)
    if len(keep) == len(target.vars):
        return g
    # variables private to the target were summed out going forward: broadcast back
    shape = [d if v in present else 1 for v, d in zip(target.vars, target.dims)]
    data = np.broadcast_to(g.data.reshape(shape), target.dims)
    return LabeledTensor(target.vars, np.array(data, order="C"), g.algebra, g.scale)


def backward_real(tape: Tape, counter: OpCounter | None = None) -> dict[int, LabeledTensor]:
    """Adjoint of the scalar root with respect to every leaf tensor.

    Returns ``{tensor index: adjoint}``; each adjoint has its leaf's scope.
    """
    root = tape.root
    if root.vars:
        raise ShapeError("backward pass needs a scalar root")
    if root.algebra is not REAL:
        raise ShapeError("backward_real needs a real-valued tape")
    adj: dict[int, LabeledTensor] = {id(tape.tree): LabeledTensor((), np.array(1.0))}
    result: dict[int, LabeledTensor] = {}
    for node in reversed(tape.nodes):
        cbar = adj.pop(id(node))
        if isinstance(node, Leaf):
            result[node.index] = cbar
            continue
        a = tape.output(node.left)
        b = tape.output(node.right)
        adj[id(node.left)] = _adjoint(cbar, b, a, counter)
        adj[id(node.right)] = _adjoint(a, cbar, b, counter)
    return result


@dataclass
class MaskResult:
    """Leaf masks from a tropical backward pass.

    ``masks`` maps tensor index to a one-hot Boolean tensor over the leaf's
    scope; ``assignment`` is the configuration of every variable that the
    masks select.
    """

    masks: dict[int, LabeledTensor]
    assignment: dict[int, int]


def _one_hot(t: LabeledTensor, assignment: dict[int, int]) -> LabeledTensor:
    mask = np.zeros(t.dims, dtype=bool)
    mask[tuple(assignment[v] for v in t.vars)] = True
    return LabeledTensor(t.vars, mask, TROPICAL)


def backward_tropical(tape: Tape, counter: OpCounter | None = None) -> MaskResult:
    """Boolean-mask back-propagation for max-plus contraction trees.

    For a branch ``C = tcon({A, B}, V_c)`` with one-hot parent mask at ``c``,
    a child entry is marked when ``A[a] ⊙ B[b] == C[c]`` for a joint
    configuration consistent with ``c``. This is the inverse-free form of
    ``Abar = δ(A, tcon({C^-1 ⊙ Cbar, B}, V_a)^-1)``: it recomputes the forward
    sum rather than subtracting, so the equality test is exact in floating
    point. Among all marked joint configurations the first in row-major order
    (variables ascending) is kept, and both children receive the matching
    one-hot mask.
    """
    root = tape.root
    if root.vars:
        raise ShapeError("backward pass needs a scalar root")
    if root.algebra is not TROPICAL:
        raise ShapeError("backward_tropical needs a tropical tape")
    if float(root.data) == -math.inf:
        raise InconsistentEvidenceError("no satisfying configuration: root value is -inf")

    chosen: dict[int, int] = {}
    masks: dict[int, LabeledTensor] = {}
    for node in reversed(tape.nodes):
        if isinstance(node, Leaf):
            masks[node.index] = _one_hot(tape.output(node), chosen)
            continue
        a = tape.output(node.left)
        b = tape.output(node.right)
        c = tape.output(node)
        at_c = {v: chosen[v] for v in c.vars}
        target = float(c.data[tuple(at_c[v] for v in c.vars)])
        a_c = slice_tensor(a, at_c)
        b_c = slice_tensor(b, at_c)
        free = sorted(set(a_c.vars) | set(b_c.vars))
        dims = {v: d for t in (a_c, b_c) for v, d in zip(t.vars, t.dims)}
        if counter is not None:
            counter.charge(math.prod(dims[v] for v in free))
        joint = _spread(a_c, free, dims) + _spread(b_c, free, dims)
        hit = np.flatnonzero(joint.reshape(-1) == target)
        if hit.size == 0:
            raise AssertionError("tropical backward found no entry reproducing the parent")
        picked = np.unravel_index(int(hit[0]), tuple(dims[v] for v in free))
        chosen.update({v: int(x) for v, x in zip(free, picked)})
    return MaskResult(masks, chosen)


def _spread(t: LabeledTensor, order: list[int], dims: dict[int, int]) -> np.ndarray:
    """View ``t.data`` broadcast over the variables in ``order``."""
    if not order:
        return np.asarray(t.data)
    perm = sorted(range(len(t.vars)), key=lambda i: order.index(t.vars[i]))
    data = np.transpose(t.data, perm)
    shape = [dims[v] if v in t.vars else 1 for v in order]
    return data.reshape(shape)

"""Reading and writing UAI-format models, evidence, queries and results.

The model grammar is token based; spaces, tabs and newlines are
interchangeable::

    MARKOV|BAYES
    <num_vars>
    <card_0> ... <card_{n-1}>
    <num_factors>
    <scope_size> <var> ...        (one per factor)
    <num_entries> <value> ...     (one per factor, row-major, first var slowest)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ParseError
from .tensor import LabeledTensor, TensorNetwork

Text = Union[str, bytes]


@dataclass(frozen=True)
class Factor:
    scope: tuple[int, ...]
    table: tuple[float, ...]


@dataclass(frozen=True)
class ModelSpec:
    network_kind: str
    cardinalities: tuple[int, ...]
    factors: tuple[Factor, ...]

    @property
    def num_vars(self) -> int:
        return len(self.cardinalities)


class _Tokens:
    def __init__(self, text: Text):
        if isinstance(text, bytes):
            text = text.decode("ascii", errors="replace")
        self.items = text.split()
        self.pos = 0

    def next(self, what: str) -> str:
        if self.pos >= len(self.items):
            raise ParseError(f"truncated input: expected {what}", self.pos)
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def int(self, what: str, lo: int = 0, hi: int | None = None) -> int:
        tok = self.next(what)
        try:
            x = int(tok)
        except ValueError:
            raise ParseError(f"non-numeric token {tok!r} for {what}", self.pos - 1) from None
        if x < lo or (hi is not None and x >= hi):
            bound = f"[{lo}, {hi})" if hi is not None else f">= {lo}"
            raise ParseError(f"{what} {x} out of range {bound}", self.pos - 1)
        return x

    def real(self, what: str) -> float:
        tok = self.next(what)
        try:
            x = float(tok)
        except ValueError:
            raise ParseError(f"non-numeric token {tok!r} for {what}", self.pos - 1) from None
        if math.isnan(x) or math.isinf(x):
            raise ParseError(f"non-finite {what} {tok!r}", self.pos - 1)
        if x < 0:
            raise ParseError(f"negative {what} {x}", self.pos - 1)
        return x

    def finish(self) -> None:
        if self.pos != len(self.items):
            raise ParseError("trailing tokens after end of input", self.pos)


def parse_model(text: Text) -> ModelSpec:
    tok = _Tokens(text)
    kind = tok.next("header")
    if kind.upper() not in ("MARKOV", "BAYES"):
        raise ParseError(f"unknown header {kind!r}", 0)
    kind = kind.upper()
    n = tok.int("variable count")
    cards = tuple(tok.int("cardinality", lo=1) for _ in range(n))
    m = tok.int("factor count")
    scopes = []
    for _ in range(m):
        start = tok.pos
        k = tok.int("scope size")
        scope = tuple(tok.int("variable id", hi=n) for _ in range(k))
        if len(set(scope)) != len(scope):
            raise ParseError(f"repeated variable in scope {list(scope)}", start)
        scopes.append(scope)
    factors = []
    for scope in scopes:
        start = tok.pos
        count = tok.int("table entry count")
        expect = math.prod(cards[v] for v in scope)
        if count != expect:
            raise ParseError(
                f"count mismatch: table has {count} entries, scope needs {expect}", start
            )
        factors.append(Factor(scope, tuple(tok.real("table entry") for _ in range(count))))
    tok.finish()
    return ModelSpec(kind, cards, tuple(factors))


def serialize_model(m: ModelSpec) -> str:
    lines = [m.network_kind, str(m.num_vars), " ".join(map(str, m.cardinalities)), str(len(m.factors))]
    lines += [" ".join(map(str, (len(f.scope), *f.scope))) for f in m.factors]
    for f in m.factors:
        lines.append("")
        lines.append(str(len(f.table)))
        lines.append(" ".join(repr(float(x)) for x in f.table))
    return "\n".join(lines) + "\n"


def parse_evidence(text: Text, cardinalities: Sequence[int]) -> dict[int, int]:
    """``<k> <var> <value> ...`` into a ``{var: value}`` mapping."""
    tok = _Tokens(text)
    k = tok.int("evidence count")
    evidence: dict[int, int] = {}
    for _ in range(k):
        start = tok.pos
        v = tok.int("variable id")
        if v >= len(cardinalities):
            raise ParseError(f"variable out of range: {v}", start)
        if v in evidence:
            raise ParseError(f"duplicate evidence variable {v}", start)
        evidence[v] = tok.int("evidence value", hi=cardinalities[v])
    tok.finish()
    return evidence


def parse_query(text: Text, num_vars: int) -> frozenset[int]:
    tok = _Tokens(text)
    k = tok.int("query count")
    query: set[int] = set()
    for _ in range(k):
        start = tok.pos
        v = tok.int("variable id")
        if v >= num_vars:
            raise ParseError(f"variable out of range: {v}", start)
        if v in query:
            raise ParseError(f"duplicate query variable {v}", start)
        query.add(v)
    tok.finish()
    return frozenset(query)


def build_network(m: ModelSpec) -> TensorNetwork:
    """One real-valued tensor per factor, scope order preserved, empty output."""
    cards = dict(enumerate(m.cardinalities))
    tensors = []
    for f in m.factors:
        shape = tuple(m.cardinalities[v] for v in f.scope)
        tensors.append(LabeledTensor(f.scope, np.array(f.table, dtype=np.float64).reshape(shape)))
    return TensorNetwork(cards, tuple(tensors), ())


def _fmt(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def write_result(task: str, payload) -> str:
    """Render a task result as result-file text.

    ``payload`` by task:

    * ``PR``: a :class:`~tninfer.algebra.RealScaled` or float log10 value
    * ``MAR``: a :class:`~tninfer.tasks.MarginalTable`
    * ``MPE`` / ``MMAP``: a ``{var: value}`` mapping (or an object with ``assignment``)
    * ``SAMPLE``: a :class:`~tninfer.tasks.SampleBatch`
    """
    task = task.upper()
    if task == "PR":
        from .algebra import RealScaled, to_log10

        value = to_log10(payload) if isinstance(payload, RealScaled) else float(payload)
        return f"PR\n{_fmt(value)}\n"
    if task == "MAR":
        parts = [str(len(payload.tables))]
        for table in payload.tables:
            flat = np.asarray(table).reshape(-1)
            parts.append(str(flat.size))
            parts.extend(_fmt(float(p)) for p in flat)
        return "MAR\n" + " ".join(parts) + "\n"
    if task in ("MPE", "MMAP"):
        assignment: Mapping[int, int] = getattr(payload, "assignment", payload)
        values = [str(assignment[v]) for v in sorted(assignment)]
        return f"{task}\n" + " ".join([str(len(values)), *values]) + "\n"
    if task == "SAMPLE":
        rows: Iterable = payload.samples
        return "".join(" ".join(str(int(x)) for x in row) + "\n" for row in rows)
    raise ValueError(f"unknown task {task!r}")

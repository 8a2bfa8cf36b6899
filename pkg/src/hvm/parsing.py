"""Prefix-trie parsing graph and greedy deepest-match parsing.

Chunks are arranged in a trie keyed by their term sequences: every parent
node's terms are a strict prefix of each child's, so retrieval descends from
the alphabet-level roots and only inspects children of nodes that already
match the upcoming sequence. Search steps count one comparison per node
tested; a flat dictionary scan is provided as the no-index baseline, which
must inspect every entry and therefore always costs ``|C|`` comparisons.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import (
    CompletenessError,
    DuplicateChunkError,
    InvalidDistributionError,
    InvalidReferenceError,
)
from .model import Inventory, Var, ground_unit, max_surface_length


class Binding(NamedTuple):
    """One resolved variable occurrence: the denotee chosen while matching."""

    var_id: int
    chunk_id: int
    nested: tuple = ()


class ParsedUnit(NamedTuple):
    chunk_id: int
    start: int
    length: int
    bindings: tuple = ()


class Identification(NamedTuple):
    chunk_id: int
    bindings: tuple
    length: int
    steps: int


@dataclass
class ParseOutcome:
    """A complete tiling of a sequence plus search-step bookkeeping."""

    units: list[ParsedUnit]
    steps_total: int
    steps_per_parse: list[int]

    def chunk_ids(self) -> list[int]:
        return [u.chunk_id for u in self.units]

    def mean_steps(self) -> float:
        return self.steps_total / len(self.units) if self.units else 0.0

    def to_records(self) -> list[dict]:
        def enc(bindings):
            return [
                {"var": b.var_id, "chunk": b.chunk_id, "nested": enc(b.nested)}
                for b in bindings
            ]

        return [
            {"chunk": u.chunk_id, "start": u.start, "len": u.length, "bindings": enc(u.bindings)}
            for u in self.units
        ]


@dataclass
class Node:
    chunk_id: int
    parent: int | None
    children: list[int] = field(default_factory=list)
    # Terms beyond the parent label; matched incrementally during descent.
    ext: tuple = ()
    ext_atoms: list | None = None


class ParsingGraph:
    """Prefix trie over the inventory's chunks."""

    def __init__(self):
        self.nodes: dict[int, Node] = {}
        self.roots: list[int] = []
        self._labels: dict[tuple, int] = {}
        self._labels_inv: dict[int, tuple] = {}

    @classmethod
    def from_inventory(cls, inventory: Inventory) -> "ParsingGraph":
        graph = cls()
        for cid in sorted(inventory.chunks):
            graph.insert(inventory.chunks[cid])
        return graph

    def _set_ext(self, chunk_id: int) -> None:
        node = self.nodes[chunk_id]
        terms = self._labels_inv[chunk_id]
        parent_len = 0 if node.parent is None else len(self._labels_inv[node.parent])
        ext = terms[parent_len:]
        node.ext = ext
        node.ext_atoms = None if any(isinstance(t, Var) for t in ext) else list(ext)

    def insert(self, chunk) -> None:
        """Attach a chunk under the deepest node whose label is a strict prefix.

        Existing nodes whose labels extend the new chunk are re-parented
        beneath it, keeping the trie invariants intact.
        """
        terms = chunk.terms
        if chunk.id in self.nodes or terms in self._labels:
            raise DuplicateChunkError(f"chunk {terms!r} already present in the parsing graph")
        parent: int | None = None
        layer = self.roots
        while True:
            nxt = None
            for cid in layer:
                label = self._labels_inv[cid]
                if len(label) < len(terms) and terms[: len(label)] == label:
                    nxt = cid
                    break
            if nxt is None:
                break
            parent = nxt
            layer = self.nodes[nxt].children
        node = Node(chunk.id, parent)
        self.nodes[chunk.id] = node
        self._labels[terms] = chunk.id
        self._labels_inv[chunk.id] = terms
        # Re-parent any siblings that the new label strictly prefixes.
        moved = [
            cid
            for cid in layer
            if len(self._labels_inv[cid]) > len(terms)
            and self._labels_inv[cid][: len(terms)] == terms
        ]
        for cid in moved:
            layer.remove(cid)
            self.nodes[cid].parent = chunk.id
            node.children.append(cid)
        layer.append(chunk.id)
        self._set_ext(chunk.id)
        for cid in moved:
            self._set_ext(cid)

    def label(self, chunk_id: int) -> tuple:
        return self._labels_inv[chunk_id]

    def path_to_root(self, chunk_id: int) -> list[int]:
        """Node ids from the root down to the given chunk, inclusive."""
        path = []
        cur: int | None = chunk_id
        while cur is not None:
            path.append(cur)
            cur = self.nodes[cur].parent
        path.reverse()
        return path

    def check_invariants(self, inventory: Inventory) -> None:
        """Raise if any trie invariant is violated (used by tests/fuzzing)."""
        seen: set[int] = set()
        for rid in self.roots:
            stack = [rid]
            while stack:
                nid = stack.pop()
                if nid in seen:
                    raise InvalidReferenceError(f"node {nid} reachable from two parents")
                seen.add(nid)
                label = self._labels_inv[nid]
                kids = self.nodes[nid].children
                for kid in kids:
                    klabel = self._labels_inv[kid]
                    if not (len(klabel) > len(label) and klabel[: len(label)] == label):
                        raise InvalidReferenceError(
                            f"parent {label!r} is not a strict prefix of child {klabel!r}"
                        )
                for a in range(len(kids)):
                    for b in range(a + 1, len(kids)):
                        la, lb = self._labels_inv[kids[a]], self._labels_inv[kids[b]]
                        short = min(len(la), len(lb))
                        if la[:short] == lb[:short]:
                            raise InvalidReferenceError(
                                f"siblings {la!r} and {lb!r} do not diverge past the shared prefix"
                            )
                stack.extend(kids)
        if seen != set(inventory.chunks):
            raise InvalidReferenceError("parsing graph does not cover the chunk dictionary")


# -- matching ----------------------------------------------------------------


def _denotee_order(inventory: Inventory, var_id: int, cache: dict) -> list[int]:
    # Longest grounding first (maximal munch), then usage, then insertion;
    # shorter denotees must not shadow extensions they prefix.
    order = cache.get(var_id)
    if order is None:
        var = inventory.variables[var_id]
        pos = {d: k for k, d in enumerate(var.denotees)}
        order = sorted(
            var.denotees,
            key=lambda d: (
                -max_surface_length(inventory, d),
                -var.denote_counts.get(d, 0.0),
                pos[d],
            ),
        )
        cache[var_id] = order
    return order


def match_terms(inventory: Inventory, terms, seq, pos: int, cache: dict | None = None):
    """Left-to-right match of a term sequence against ``seq[pos:]``.

    Variable slots try their denotees longest-grounding-first; if a later
    term of the same term list then fails, the match backtracks to the next
    denotee. Each denotee contributes only its first successful grounding.
    Returns ``(consumed_atoms, bindings)`` or ``None``.
    """
    if cache is None:
        cache = {}
    n = len(seq)
    k = len(terms)

    def rec(ti: int, p: int):
        if ti == k:
            return p, ()
        t = terms[ti]
        if isinstance(t, Var):
            for den_id in _denotee_order(inventory, t.id, cache):
                den = inventory.chunks[den_id]
                if den.concrete_atoms is not None:
                    q = p + len(den.concrete_atoms)
                    if q > n or seq[p:q] != den.concrete_atoms:
                        continue
                    sub_len, sub_binds = q - p, ()
                else:
                    sub = match_terms(inventory, den.terms, seq, p, cache)
                    if sub is None:
                        continue
                    sub_len, sub_binds = sub
                rest = rec(ti + 1, p + sub_len)
                if rest is not None:
                    return rest[0], (Binding(t.id, den_id, sub_binds),) + rest[1]
            return None
        if p < n and seq[p] == t:
            return rec(ti + 1, p + 1)
        return None

    hit = rec(0, pos)
    if hit is None:
        return None
    return hit[0] - pos, hit[1]


def identify_next_chunk(
    graph: ParsingGraph,
    inventory: Inventory,
    seq,
    pos: int,
    cache: dict | None = None,
) -> Identification:
    """Retrieve the deepest chunk consistent with the upcoming sequence.

    All roots are compared, then all children of every consistent node,
    descending until no child matches; steps counts one comparison per node
    tested. Among consistent nodes the one grounding the most atoms wins,
    ties going to the first found in insertion order.
    """
    if cache is None:
        cache = {}
    steps = 0
    best: tuple[int, int, tuple] | None = None  # (length, chunk_id, bindings)
    nodes = graph.nodes
    n = len(seq)

    def test(node: Node, start: int):
        if node.ext_atoms is not None:
            q = start + len(node.ext_atoms)
            if q <= n and seq[start:q] == node.ext_atoms:
                return q - start, ()
            return None
        return match_terms(inventory, node.ext, seq, start, cache)

    def visit(nid: int, length: int, bindings: tuple) -> None:
        nonlocal steps, best
        if best is None or length > best[0]:
            best = (length, nid, bindings)
        kids = nodes[nid].children
        steps += len(kids)
        for kid in kids:
            m = test(nodes[kid], pos + length)
            if m is not None:
                visit(kid, length + m[0], bindings + m[1])

    for rid in graph.roots:
        steps += 1
        m = test(nodes[rid], pos)
        if m is not None:
            visit(rid, m[0], m[1])

    if best is None:
        raise CompletenessError(
            f"no chunk consistent with the sequence at position {pos} "
            f"(symbol {seq[pos]!r}); the inventory is incomplete"
        )
    length, cid, bindings = best
    return Identification(cid, bindings, length, steps)


def parse_sequence(graph: ParsingGraph, inventory: Inventory, seq) -> ParseOutcome:
    """Tile the whole sequence; the end of one parse starts the next."""
    seq = list(seq)
    units: list[ParsedUnit] = []
    per_parse: list[int] = []
    cache: dict = {}
    pos = 0
    total = 0
    while pos < len(seq):
        found = identify_next_chunk(graph, inventory, seq, pos, cache)
        units.append(ParsedUnit(found.chunk_id, pos, found.length, found.bindings))
        per_parse.append(found.steps)
        total += found.steps
        pos += found.length
    return ParseOutcome(units, total, per_parse)


def verify_parse_partition(inventory: Inventory, seq, outcome: ParseOutcome) -> None:
    """Grounding every parsed chunk must reproduce the input exactly."""
    rebuilt: list[int] = []
    cursor = 0
    for u in outcome.units:
        if u.start != cursor:
            raise InvalidReferenceError(f"parse offsets do not tile: gap/overlap at {u.start}")
        atoms = ground_unit(inventory, u.chunk_id, u.bindings)
        if len(atoms) != u.length:
            raise InvalidReferenceError(
                f"binding for chunk {u.chunk_id} grounds to {len(atoms)} atoms, recorded {u.length}"
            )
        rebuilt.extend(atoms)
        cursor += u.length
    if rebuilt != list(seq):
        raise InvalidReferenceError("grounded parse does not reproduce the input sequence")


# -- flat-dictionary baseline -------------------------------------------------


def scan_order(inventory: Inventory) -> list[int]:
    """Chunk ids in descending maximal surface length, ties by id."""
    return sorted(
        inventory.chunks, key=lambda cid: (-max_surface_length(inventory, cid), cid)
    )


def linear_scan_identify(
    inventory: Inventory,
    seq,
    pos: int,
    order: list[int] | None = None,
    cache: dict | None = None,
) -> Identification:
    """Find the biggest consistent chunk by scanning the whole dictionary.

    Without an index every entry must be inspected to know the maximum, so
    the step count is always ``|C|``; the descending-length order only makes
    the returned chunk deterministic.
    """
    if order is None:
        order = scan_order(inventory)
    if cache is None:
        cache = {}
    hit: tuple[int, int, tuple] | None = None
    for cid in order:
        m = match_terms(inventory, inventory.chunks[cid].terms, seq, pos, cache)
        if m is not None:
            hit = (cid, m[0], m[1])
            break
    if hit is None:
        raise CompletenessError(
            f"no chunk consistent with the sequence at position {pos} "
            f"(symbol {seq[pos]!r}); the inventory is incomplete"
        )
    return Identification(hit[0], hit[2], hit[1], len(order))


def linear_scan_parse(inventory: Inventory, seq) -> ParseOutcome:
    seq = list(seq)
    order = scan_order(inventory)
    cache: dict = {}
    units: list[ParsedUnit] = []
    per_parse: list[int] = []
    total = 0
    pos = 0
    while pos < len(seq):
        found = linear_scan_identify(inventory, seq, pos, order, cache)
        units.append(ParsedUnit(found.chunk_id, pos, found.length, found.bindings))
        per_parse.append(found.steps)
        total += found.steps
        pos += found.length
    return ParseOutcome(units, total, per_parse)


# -- expected search steps -----------------------------------------------------


def node_pss(graph: ParsingGraph, chunk_id: int) -> int:
    """Comparisons charged to retrieve one chunk: the branching factor of
    every level on its root path (roots count as the first level)."""
    if chunk_id not in graph.nodes:
        raise InvalidReferenceError(f"chunk {chunk_id} is not in the parsing graph")
    pss = len(graph.roots)
    for nid in graph.path_to_root(chunk_id):
        parent = graph.nodes[nid].parent
        if parent is not None:
            pss += len(graph.nodes[parent].children)
    return pss


def expected_pss(graph: ParsingGraph, probs: dict[int, float]) -> float:
    """Expectation of per-parse comparisons under a chunk distribution."""
    total = sum(probs.values())
    if abs(total - 1.0) > 1e-9:
        raise InvalidDistributionError(f"probabilities sum to {total}, not 1")
    return sum(p * node_pss(graph, cid) for cid, p in probs.items())

"""Core value types: chunks, variables, count tables, and the inventory.

Atoms are nonnegative integers. A chunk is a nonempty tuple of terms, each
term either an atom or a ``Var`` reference. A variable denotes a set of
interchangeable chunks together with per-denotee usage counts. The inventory
(the learner's belief set) owns all of these plus the marginal/transition
count tables, and is a plain value: it can be deep-copied and shipped
between threads freely.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

from .errors import (
    CycleError,
    DegenerateDistributionError,
    DuplicateChunkError,
    InvalidReferenceError,
    SchemaVersionError,
)

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Var:
    """A variable slot inside a chunk's term list."""

    id: int


# A term is either an atom value (int) or a Var reference.
Term = "int | Var"


class Chunk:
    """An ordered, nonempty sequence of terms with a dense integer id.

    ``parents`` records the (left, right) chunks a composite was concatenated
    from; it backs structure-aware smoothing and is absent for hand-built
    chunks and atoms.
    """

    __slots__ = ("id", "terms", "concrete_atoms", "parents")

    def __init__(self, chunk_id: int, terms: tuple, parents: tuple | None = None):
        terms = tuple(terms)
        if not terms:
            raise ValueError("a chunk needs at least one term")
        if len(terms) == 1 and isinstance(terms[0], Var):
            raise ValueError("a bare variable is not a chunk")
        self.id = chunk_id
        self.terms = terms
        self.parents = parents
        # Fast path for matching: concrete chunks compare as flat atom lists.
        if any(isinstance(t, Var) for t in terms):
            self.concrete_atoms = None
        else:
            self.concrete_atoms = list(terms)

    @property
    def is_concrete(self) -> bool:
        return self.concrete_atoms is not None

    def variable_ids(self) -> list[int]:
        return [t.id for t in self.terms if isinstance(t, Var)]

    def __repr__(self) -> str:
        return f"Chunk({self.id}, {self.terms!r})"


@dataclass
class Variable:
    """An abstract entity denoting a set of interchangeable chunks."""

    id: int
    denotees: list[int]
    denote_counts: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        self.denotees = list(self.denotees)
        if len(self.denotees) < 2:
            raise ValueError("a variable must denote at least two chunks")
        for d in self.denotees:
            self.denote_counts.setdefault(d, 0.0)

    def total_count(self) -> float:
        return sum(self.denote_counts.values())

    def add_count(self, denotee: int, weight: float = 1.0) -> None:
        if denotee not in self.denote_counts:
            raise InvalidReferenceError(f"chunk {denotee} is not denoted by variable {self.id}")
        self.denote_counts[denotee] += weight


class CountTables:
    """Marginal (M) and transition (T) counts over chunk/variable ids.

    Counts are real valued because memory decay multiplies every entry by
    theta; they never go negative.
    """

    __slots__ = ("M", "T")

    def __init__(self):
        self.M: dict[int, float] = {}
        self.T: dict[int, dict[int, float]] = {}

    def m(self, i: int) -> float:
        return self.M.get(i, 0.0)

    def t(self, i: int, j: int) -> float:
        row = self.T.get(i)
        return row.get(j, 0.0) if row else 0.0

    def add_m(self, i: int, weight: float = 1.0) -> None:
        self.M[i] = self.M.get(i, 0.0) + weight

    def add_t(self, i: int, j: int, weight: float = 1.0) -> None:
        row = self.T.setdefault(i, {})
        row[j] = row.get(j, 0.0) + weight

    def row(self, i: int) -> dict[int, float]:
        return self.T.get(i, {})

    def row_sum(self, i: int) -> float:
        return sum(self.T.get(i, {}).values())

    def total_t(self) -> float:
        return sum(v for row in self.T.values() for v in row.values())

    def decay(self, theta: float) -> None:
        if theta == 1.0:
            return
        for i in self.M:
            self.M[i] *= theta
        for row in self.T.values():
            for j in row:
                row[j] *= theta

    def drop_ids(self, ids) -> None:
        ids = set(ids)
        for i in ids:
            self.M.pop(i, None)
            self.T.pop(i, None)
        for row in self.T.values():
            for i in ids:
                row.pop(i, None)

    def remap_ids(self, id_map: dict[int, int]) -> None:
        """Fold counts of remapped ids into their replacements."""
        if not id_map:
            return
        new_m: dict[int, float] = {}
        for i, v in self.M.items():
            k = id_map.get(i, i)
            new_m[k] = new_m.get(k, 0.0) + v
        self.M = new_m
        new_t: dict[int, dict[int, float]] = {}
        for i, row in self.T.items():
            ki = id_map.get(i, i)
            dest = new_t.setdefault(ki, {})
            for j, v in row.items():
                kj = id_map.get(j, j)
                dest[kj] = dest.get(kj, 0.0) + v
        self.T = new_t

    def copy(self) -> "CountTables":
        out = CountTables()
        out.M = dict(self.M)
        out.T = {i: dict(row) for i, row in self.T.items()}
        return out


class Inventory:
    """Belief set: atoms, chunks ``C``, variables ``V``, and count tables.

    Completeness (every atom present as a single-term chunk) is established
    by ``from_atoms``/``add_atom`` and preserved by all learning operations,
    so any sequence over the known alphabet can be parsed.
    """

    def __init__(self):
        self.atoms: list[int] = []
        self.chunks: dict[int, Chunk] = {}
        self.variables: dict[int, Variable] = {}
        self.counts = CountTables()
        self._atom_ids: dict[int, int] = {}  # atom value -> chunk id
        self._by_terms: dict[tuple, int] = {}
        self._denotee_index: dict[int, set[int]] = {}  # chunk id -> variable ids
        self._next_id = 0

    @classmethod
    def from_atoms(cls, atoms) -> "Inventory":
        inv = cls()
        for a in atoms:
            inv.add_atom(a)
        return inv

    # -- construction -----------------------------------------------------

    def _take_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    def add_atom(self, value: int) -> Chunk:
        if value < 0:
            raise ValueError("atoms are nonnegative integers")
        if value in self._atom_ids:
            return self.chunks[self._atom_ids[value]]
        chunk = self.add_chunk((value,))
        self.atoms.append(value)
        self._atom_ids[value] = chunk.id
        return chunk

    def add_chunk(self, terms, parents: tuple | None = None) -> Chunk:
        terms = tuple(terms)
        for t in terms:
            if isinstance(t, Var) and t.id not in self.variables:
                raise InvalidReferenceError(f"unknown variable id {t.id}")
        if terms in self._by_terms:
            raise DuplicateChunkError(f"chunk with terms {terms!r} already exists")
        chunk = Chunk(self._take_id(), terms, parents)
        self.chunks[chunk.id] = chunk
        self._by_terms[terms] = chunk.id
        return chunk

    def add_variable(self, denotees, denote_counts: dict[int, float] | None = None) -> Variable:
        for d in denotees:
            if d not in self.chunks:
                raise InvalidReferenceError(f"unknown chunk id {d}")
        var = Variable(self._take_id(), list(denotees), dict(denote_counts or {}))
        self.variables[var.id] = var
        for d in var.denotees:
            self._denotee_index.setdefault(d, set()).add(var.id)
        try:
            self.check_acyclic()
        except CycleError:
            self._unregister_variable(var.id)
            raise
        return var

    def _unregister_variable(self, var_id: int) -> None:
        var = self.variables.pop(var_id)
        for d in var.denotees:
            members = self._denotee_index.get(d)
            if members:
                members.discard(var_id)
                if not members:
                    del self._denotee_index[d]

    def concat(self, left_id: int, right_id: int, middle_id: int | None = None) -> Chunk:
        """Concatenate two chunks, optionally around a variable slot."""
        if left_id not in self.chunks or right_id not in self.chunks:
            raise InvalidReferenceError(f"unknown chunk id in ({left_id}, {right_id})")
        middle: tuple = ()
        if middle_id is not None:
            if middle_id not in self.variables:
                raise InvalidReferenceError(f"unknown variable id {middle_id}")
            middle = (Var(middle_id),)
        terms = self.chunks[left_id].terms + middle + self.chunks[right_id].terms
        return self.add_chunk(terms, parents=(left_id, right_id))

    # -- lookups -----------------------------------------------------------

    def find_chunk(self, terms) -> int | None:
        return self._by_terms.get(tuple(terms))

    def atom_chunk_id(self, value: int) -> int:
        try:
            return self._atom_ids[value]
        except KeyError:
            raise InvalidReferenceError(f"atom {value} is not in the alphabet") from None

    def atom_chunk_ids(self) -> list[int]:
        return list(self._atom_ids.values())

    def has_atom(self, value: int) -> bool:
        return value in self._atom_ids

    def is_atom_chunk(self, chunk_id: int) -> bool:
        chunk = self.chunks.get(chunk_id)
        return (
            chunk is not None
            and len(chunk.terms) == 1
            and not isinstance(chunk.terms[0], Var)
            and self._atom_ids.get(chunk.terms[0]) == chunk_id
        )

    def concrete_chunk_ids(self) -> list[int]:
        return list(self.chunks.keys())

    def variables_containing(self, chunk_id: int):
        """Variables whose denotee set includes the given chunk."""
        return self._denotee_index.get(chunk_id, ())

    # -- maintenance -------------------------------------------------------

    def remove_ids(self, ids) -> None:
        ids = set(ids)
        for i in ids:
            if i in self.chunks:
                if self.is_atom_chunk(i):
                    raise ValueError("atoms are never removed (completeness)")
                chunk = self.chunks.pop(i)
                del self._by_terms[chunk.terms]
                self._denotee_index.pop(i, None)
            elif i in self.variables:
                self._unregister_variable(i)
        self.counts.drop_ids(ids)

    def rebuild_term_index(self) -> None:
        self._by_terms = {c.terms: cid for cid, c in self.chunks.items()}
        self._denotee_index = {}
        for var in self.variables.values():
            for d in var.denotees:
                self._denotee_index.setdefault(d, set()).add(var.id)

    def check_acyclic(self) -> None:
        """Verify variable -> denotee chunk -> embedded variable resolution terminates."""
        WHITE, GRAY, BLACK = 0, 1, 2
        state: dict[int, int] = {}

        def visit_var(vid: int) -> None:
            s = state.get(vid, WHITE)
            if s == GRAY:
                raise CycleError(f"variable {vid} participates in a resolution cycle")
            if s == BLACK:
                return
            state[vid] = GRAY
            var = self.variables.get(vid)
            if var is None:
                raise InvalidReferenceError(f"unknown variable id {vid}")
            for d in var.denotees:
                chunk = self.chunks.get(d)
                if chunk is None:
                    raise InvalidReferenceError(f"variable {vid} denotes unknown chunk {d}")
                for inner in chunk.variable_ids():
                    visit_var(inner)
            state[vid] = BLACK

        for vid in self.variables:
            visit_var(vid)

    def clone(self) -> "Inventory":
        return copy.deepcopy(self)

    def signature(self):
        """Structural fingerprint used for convergence detection.

        Ids are unstable across prune/merge cycles, so chunks and variables
        are canonicalized by structure: a variable becomes the frozen set of
        its denotees' canonical term tuples.
        """
        memo: dict[int, frozenset] = {}

        def canon_var(vid: int, trail: frozenset) -> frozenset:
            if vid in memo:
                return memo[vid]
            if vid in trail:
                raise CycleError(f"variable {vid} participates in a resolution cycle")
            trail = trail | {vid}
            var = self.variables[vid]
            out = frozenset(canon_terms(self.chunks[d].terms, trail) for d in var.denotees)
            memo[vid] = out
            return out

        def canon_terms(terms: tuple, trail: frozenset) -> tuple:
            return tuple(
                ("v", canon_var(t.id, trail)) if isinstance(t, Var) else t for t in terms
            )

        chunk_sig = frozenset(canon_terms(c.terms, frozenset()) for c in self.chunks.values())
        var_sig = frozenset(canon_var(vid, frozenset()) for vid in self.variables)
        return (chunk_sig, var_sig)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        def encode_term(t):
            return {"var": t.id} if isinstance(t, Var) else t

        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "atoms": list(self.atoms),
            "chunks": [
                {
                    "id": c.id,
                    "terms": [encode_term(t) for t in c.terms],
                    **({"parents": list(c.parents)} if c.parents else {}),
                }
                for c in self.chunks.values()
            ],
            "variables": [
                {
                    "id": v.id,
                    "denotees": list(v.denotees),
                    "denote_counts": {str(k): val for k, val in v.denote_counts.items()},
                }
                for v in self.variables.values()
            ],
            "counts": {
                "M": {str(k): v for k, v in self.counts.M.items()},
                "T": [[i, j, v] for i, row in self.counts.T.items() for j, v in row.items()],
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Inventory":
        version = data.get("schema_version")
        if version != MODEL_SCHEMA_VERSION:
            raise SchemaVersionError(
                f"unsupported model schema version {version!r} (expected {MODEL_SCHEMA_VERSION})"
            )
        inv = cls()
        # Variables are registered first (with empty shells) so chunk terms
        # can reference them regardless of serialization order.
        for vd in data["variables"]:
            shell = Variable.__new__(Variable)
            shell.id = vd["id"]
            shell.denotees = list(vd["denotees"])
            shell.denote_counts = {int(k): float(v) for k, v in vd["denote_counts"].items()}
            inv.variables[shell.id] = shell
        for cd in data["chunks"]:
            terms = tuple(Var(t["var"]) if isinstance(t, dict) else int(t) for t in cd["terms"])
            parents = tuple(cd["parents"]) if "parents" in cd else None
            chunk = Chunk(cd["id"], terms, parents)
            for t in terms:
                if isinstance(t, Var) and t.id not in inv.variables:
                    raise InvalidReferenceError(f"unknown variable id {t.id}")
            if terms in inv._by_terms:
                raise DuplicateChunkError(f"chunk with terms {terms!r} already exists")
            inv.chunks[chunk.id] = chunk
            inv._by_terms[terms] = chunk.id
        for a in data["atoms"]:
            a = int(a)
            cid = inv.find_chunk((a,))
            if cid is None:
                raise InvalidReferenceError(f"atom {a} has no single-term chunk")
            inv.atoms.append(a)
            inv._atom_ids[a] = cid
        for var in inv.variables.values():
            for d in var.denotees:
                if d not in inv.chunks:
                    raise InvalidReferenceError(f"variable {var.id} denotes unknown chunk {d}")
                inv._denotee_index.setdefault(d, set()).add(var.id)
        inv.counts.M = {int(k): float(v) for k, v in data["counts"]["M"].items()}
        for i, j, v in data["counts"]["T"]:
            inv.counts.add_t(int(i), int(j), float(v))
        used = set(inv.chunks) | set(inv.variables)
        inv._next_id = max(used) + 1 if used else 0
        inv.check_acyclic()
        return inv


# -- module-level operations ------------------------------------------------


def chunk_surface_lengths(inventory: Inventory, chunk_id: int) -> set[int]:
    """Every total atomic length the chunk can ground to.

    Variables are expanded over all their denotees; a resolution cycle is an
    invariant violation and raises ``CycleError``.
    """
    chunk_memo: dict[int, frozenset] = {}

    def lengths_of_chunk(cid: int, trail: frozenset) -> frozenset:
        if cid in chunk_memo:
            return chunk_memo[cid]
        if cid in trail:
            raise CycleError(f"chunk {cid} participates in a resolution cycle")
        chunk = inventory.chunks.get(cid)
        if chunk is None:
            raise InvalidReferenceError(f"unknown chunk id {cid}")
        totals = {0}
        for t in chunk.terms:
            if isinstance(t, Var):
                var = inventory.variables.get(t.id)
                if var is None:
                    raise InvalidReferenceError(f"unknown variable id {t.id}")
                opts: set[int] = set()
                for d in var.denotees:
                    opts |= lengths_of_chunk(d, trail | {cid})
                totals = {a + b for a in totals for b in opts}
            else:
                totals = {a + 1 for a in totals}
        out = frozenset(totals)
        chunk_memo[cid] = out
        return out

    return set(lengths_of_chunk(chunk_id, frozenset()))


def max_surface_length(inventory: Inventory, chunk_id: int) -> int:
    return max(chunk_surface_lengths(inventory, chunk_id))


def normalize_marginals(counts: CountTables, ids) -> dict[int, float]:
    """Occurrence probabilities from marginal counts over the given id set."""
    ids = list(ids)
    total = sum(counts.m(i) for i in ids)
    if total <= 0.0:
        raise DegenerateDistributionError("all marginal counts are zero")
    return {i: counts.m(i) / total for i in ids}


def ground_terms(inventory: Inventory, terms, bindings) -> list[int]:
    """Expand a term sequence to atoms using recorded variable bindings.

    ``bindings`` is an ordered tuple aligned with the sequence's variable
    occurrences; each entry carries nested bindings for its denotee.
    """
    out: list[int] = []
    idx = 0
    for t in terms:
        if isinstance(t, Var):
            if idx >= len(bindings):
                raise InvalidReferenceError("missing binding for variable occurrence")
            b = bindings[idx]
            idx += 1
            if b.var_id != t.id:
                raise InvalidReferenceError(
                    f"binding order mismatch: expected variable {t.id}, got {b.var_id}"
                )
            out.extend(ground_terms(inventory, inventory.chunks[b.chunk_id].terms, b.nested))
        else:
            out.append(t)
    if idx != len(bindings):
        raise InvalidReferenceError("unused bindings left over")
    return out


def ground_unit(inventory: Inventory, chunk_id: int, bindings=()) -> list[int]:
    return ground_terms(inventory, inventory.chunks[chunk_id].terms, bindings)

"""Generative model for sequences with nested abstract hierarchies.

An inventory of objects and categories grows over ``depth`` iterations: each
iteration flips a fair coin and either concatenates 2-5 existing entries into
a new object (resampling while an endpoint is a category) or groups 2-5
existing objects into a new category. Occurrence probabilities are then drawn
from flat Dirichlet distributions and observational sequences are sampled
object by object, with embedded categories resolved recursively. Categories
are latent: only atoms ever appear in the emitted sequence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COMBO_SIZES = (2, 3, 4, 5)
_MAX_ENDPOINT_RESAMPLES = 10_000


@dataclass(frozen=True)
class GenConfig:
    alphabet_size: int = 10
    depth: int = 30
    seq_length: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.alphabet_size < 1:
            raise ValueError("alphabet_size must be >= 1")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.seq_length < 1:
            raise ValueError("seq_length must be >= 1")
        # With a single atom the endpoint rule cannot always be satisfied.
        if self.depth >= 1 and self.alphabet_size < 2:
            raise ValueError("expansion needs an alphabet of at least 2 atoms")


def split_rngs(seed: int, n: int = 2) -> list[np.random.Generator]:
    """Independent child generators so the expand and sample phases are
    separately reproducible."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def sample_flat_dirichlet(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform distribution over the k-simplex: normalized unit exponentials."""
    if k < 1:
        raise ValueError("need at least one category")
    draws = rng.exponential(1.0, size=k)
    return draws / draws.sum()


class GenInventory:
    """The ground-truth objects and categories plus their probabilities."""

    def __init__(self, atoms: list[int]):
        self.atoms = list(atoms)
        self.components: dict[int, tuple[int, ...]] = {}  # object id -> part ids
        self.atom_of: dict[int, int] = {}  # atomic object id -> emitted symbol
        self.categories: dict[int, tuple[int, ...]] = {}  # category id -> object ids
        self.object_probs: dict[int, float] = {}
        self.category_probs: dict[int, dict[int, float]] = {}
        self._next_id = 0
        for a in self.atoms:
            oid = self._take_id()
            self.components[oid] = ()
            self.atom_of[oid] = a

    def _take_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    @property
    def object_ids(self) -> list[int]:
        return list(self.components.keys())

    def is_category(self, entry_id: int) -> bool:
        return entry_id in self.categories

    def add_object(self, parts) -> int:
        oid = self._take_id()
        self.components[oid] = tuple(parts)
        return oid

    def add_category(self, members) -> int:
        cid = self._take_id()
        self.categories[cid] = tuple(members)
        return cid

    def ground(self, object_id: int, rng: np.random.Generator) -> list[int]:
        """Expand an object to atoms, sampling a denoted object for every
        embedded category until none remain."""
        if object_id in self.atom_of:
            return [self.atom_of[object_id]]
        out: list[int] = []
        for part in self.components[object_id]:
            if self.is_category(part):
                members = self.categories[part]
                probs = self.category_probs[part]
                weights = [probs[m] for m in members]
                chosen = members[rng.choice(len(members), p=weights)]
                out.extend(self.ground(chosen, rng))
            else:
                out.extend(self.ground(part, rng))
        return out

    def to_dict(self) -> dict:
        return {
            "atoms": list(self.atoms),
            "objects": [
                {
                    "id": oid,
                    "components": list(parts),
                    **({"atom": self.atom_of[oid]} if oid in self.atom_of else {}),
                }
                for oid, parts in self.components.items()
            ],
            "categories": [
                {"id": cid, "members": list(members)}
                for cid, members in self.categories.items()
            ],
            "object_probs": {str(k): v for k, v in self.object_probs.items()},
            "category_probs": {
                str(k): {str(m): p for m, p in probs.items()}
                for k, probs in self.category_probs.items()
            },
        }


def expand_inventory(config: GenConfig, rng: np.random.Generator) -> GenInventory:
    """Grow the inventory for ``depth`` iterations, then assign probabilities."""
    inv = GenInventory(list(range(config.alphabet_size)))
    for _ in range(config.depth):
        if rng.random() > 0.5:
            _create_object(inv, rng)
        else:
            _create_category(inv, rng)
    obj_ids = inv.object_ids
    probs = sample_flat_dirichlet(len(obj_ids), rng)
    inv.object_probs = {oid: float(p) for oid, p in zip(obj_ids, probs)}
    for cid, members in inv.categories.items():
        probs = sample_flat_dirichlet(len(members), rng)
        inv.category_probs[cid] = {m: float(p) for m, p in zip(members, probs)}
    return inv


def _combo_size(rng: np.random.Generator, pool_size: int) -> int:
    n = int(rng.choice(COMBO_SIZES))
    return min(n, pool_size)


def _create_object(inv: GenInventory, rng: np.random.Generator) -> int:
    pool = inv.object_ids + list(inv.categories.keys())
    n = _combo_size(rng, len(pool))
    for _ in range(_MAX_ENDPOINT_RESAMPLES):
        picks = [pool[i] for i in rng.choice(len(pool), size=n, replace=False)]
        if not inv.is_category(picks[0]) and not inv.is_category(picks[-1]):
            return inv.add_object(picks)
    raise RuntimeError("could not satisfy the endpoint rule; inventory is category-saturated")


def _create_category(inv: GenInventory, rng: np.random.Generator) -> int:
    pool = inv.object_ids
    if len(pool) < 2:
        # Degenerate inventory: fall back to object creation.
        return _create_object(inv, rng)
    n = _combo_size(rng, len(pool))
    picks = [pool[i] for i in rng.choice(len(pool), size=n, replace=False)]
    return inv.add_category(picks)


def sample_sequence(
    inv: GenInventory, length: int, rng: np.random.Generator
) -> tuple[list[int], list[int]]:
    """Draw top-level objects until the atomic length is reached.

    The final object's overflow atoms are trimmed so the emitted sequence has
    exactly the requested length; the trimmed object stays in the ground-truth
    parse only if at least half of its atoms survive.
    """
    obj_ids = inv.object_ids
    weights = [inv.object_probs[oid] for oid in obj_ids]
    seq: list[int] = []
    w_gt: list[int] = []
    while len(seq) < length:
        oid = obj_ids[rng.choice(len(obj_ids), p=weights)]
        atoms = inv.ground(oid, rng)
        remaining = length - len(seq)
        if len(atoms) <= remaining:
            seq.extend(atoms)
            w_gt.append(oid)
        else:
            seq.extend(atoms[:remaining])
            if 2 * remaining >= len(atoms):
                w_gt.append(oid)
    return seq, w_gt


def generate(config: GenConfig) -> tuple[GenInventory, list[int], list[int]]:
    """Convenience wrapper: expand then sample, on split RNG streams."""
    rng_expand, rng_sample = split_rngs(config.seed)
    inv = expand_inventory(config, rng_expand)
    seq, w_gt = sample_sequence(inv, config.seq_length, rng_sample)
    return inv, seq, w_gt

"""Evaluation measures over a trained model and a parse.

All log quantities are natural-log (nats); per-denotee probabilities come
from normalized denote counts with a smoothing floor for never-bound
denotees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .model import Inventory
from .parsing import ParseOutcome, ParsingGraph, expected_pss


@dataclass
class MetricReport:
    compression_ratio: float
    coding_efficiency: float
    explanatory_volume: float
    nll: float
    rc_v: float
    rc_g: float
    entropy: float
    mean_pss: float
    epss: float

    def to_row(self) -> dict:
        return asdict(self)


def compression_ratio(w_len: int, s_len: int) -> float:
    """Parsed length over original length; below one once chunks form."""
    if s_len <= 0:
        raise ValueError("sequence length must be positive")
    return w_len / s_len


def coding_efficiency(n_entries: int, s_len: int) -> float:
    """Dictionary entries per original sequence symbol."""
    if s_len <= 0:
        raise ValueError("sequence length must be positive")
    return n_entries / s_len


def explanatory_volume(w_len: int, s_len: int) -> float:
    if w_len <= 0:
        raise ValueError("parsed length must be positive")
    return s_len / w_len


def dictionary_entries(inventory: Inventory) -> int:
    """Learned entries: non-atomic chunks plus variables."""
    non_atomic = sum(1 for cid in inventory.chunks if not inventory.is_atom_chunk(cid))
    return non_atomic + len(inventory.variables)


def _denotee_probs(var, smoothing_eps: float) -> dict[int, float]:
    total = var.total_count()
    if total <= 0.0:
        return {d: 1.0 / len(var.denotees) for d in var.denotees}
    return {d: max(var.denote_counts.get(d, 0.0) / total, smoothing_eps) for d in var.denotees}


def representation_complexity(inventory: Inventory, smoothing_eps: float = 1e-6) -> dict:
    """rc_v sums -log P(u|v) over every variable's denotees; rc_g adds the
    marginal code length of every chunk and variable on top."""
    rc_v = 0.0
    for var in inventory.variables.values():
        for p in _denotee_probs(var, smoothing_eps).values():
            rc_v -= math.log(p)
    ids = list(inventory.chunks) + list(inventory.variables)
    total = sum(inventory.counts.m(i) for i in ids)
    rc_g = rc_v
    for i in ids:
        p = inventory.counts.m(i) / total if total > 0.0 else 1.0 / len(ids)
        rc_g -= math.log(max(p, smoothing_eps))
    return {"rc_v": rc_v, "rc_g": rc_g}


def representation_entropy(inventory: Inventory, smoothing_eps: float = 1e-6) -> float:
    """Uncertainty carried by variables embedded in chunks (one level):
    sum_c P(c) * sum_{v in c} H(denotees of v)."""
    ids = inventory.concrete_chunk_ids()
    total = sum(inventory.counts.m(i) for i in ids)
    if total <= 0.0:
        return 0.0
    out = 0.0
    for cid in ids:
        m = inventory.counts.m(cid)
        if m <= 0.0:
            continue
        var_ids = set(inventory.chunks[cid].variable_ids())
        if not var_ids:
            continue
        h = 0.0
        for vid in var_ids:
            for p in _denotee_probs(inventory.variables[vid], smoothing_eps).values():
                h -= p * math.log(p)
        out += (m / total) * h
    return out


def build_report(
    inventory: Inventory,
    graph: ParsingGraph,
    parse: ParseOutcome,
    s_len: int,
    smoothing_eps: float = 1e-6,
) -> MetricReport:
    from .learner import nll_independent  # local import: learner depends on this module

    w = len(parse.units)
    rc = representation_complexity(inventory, smoothing_eps)
    freq: dict[int, float] = {}
    for u in parse.units:
        freq[u.chunk_id] = freq.get(u.chunk_id, 0.0) + 1.0
    probs = {cid: n / w for cid, n in freq.items()}
    return MetricReport(
        compression_ratio=compression_ratio(w, s_len),
        coding_efficiency=coding_efficiency(dictionary_entries(inventory), s_len),
        explanatory_volume=explanatory_volume(w, s_len),
        nll=nll_independent(parse, inventory, smoothing_eps),
        rc_v=rc["rc_v"],
        rc_g=rc["rc_g"],
        entropy=representation_entropy(inventory, smoothing_eps),
        mean_pss=parse.mean_steps(),
        epss=expected_pss(graph, probs),
    )

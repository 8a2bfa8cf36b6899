"""The learning loop: decayed count updates, significance-tested chunk
proposal, variable discovery by adjacency intersection, merging, and pruning.

Batch mode re-parses the whole sequence each iteration with the dictionary
updated from the previous one; online mode consumes bounded trials, scoring
each trial under the model trained on everything before it. HCM is the same
learner with variable discovery switched off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from scipy import stats

from . import metrics as _metrics
from .errors import CycleError
from .model import CountTables, Inventory, Var, normalize_marginals
from .parsing import ParseOutcome, ParsingGraph, parse_sequence

MODE_HVM = "hvm"
MODE_HCM = "hcm"


@dataclass
class LearnerConfig:
    theta: float = 1.0
    alpha: float = 0.05
    t_min: int = 2
    t_max: int = 10
    freq_t: float = 6.0
    mode: str = MODE_HVM
    max_iterations: int = 40
    smoothing_eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must be in (0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if not 2 <= self.t_min <= self.t_max:
            raise ValueError("need 2 <= t_min <= t_max")
        if self.mode not in (MODE_HVM, MODE_HCM):
            raise ValueError(f"mode must be {MODE_HVM!r} or {MODE_HCM!r}")
        if self.smoothing_eps <= 0.0:
            raise ValueError("smoothing_eps must be positive")


# -- count updates -------------------------------------------------------------


def apply_decay(counts: CountTables, theta: float) -> CountTables:
    """Multiply every marginal and transition entry by theta."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    counts.decay(theta)
    return counts


def _record_bindings(inventory: Inventory, bindings) -> None:
    for b in bindings:
        inventory.variables[b.var_id].add_count(b.chunk_id)
        if b.nested:
            _record_bindings(inventory, b.nested)


def update_counts(inventory: Inventory, parse: ParseOutcome) -> CountTables:
    """Apply one parse's increments: M for each parsed chunk and for the
    variables whose denotee set contains it, T for consecutive chunk pairs,
    and denotee counts for every bound variable occurrence."""
    counts = inventory.counts
    prev = None
    for unit in parse.units:
        cid = unit.chunk_id
        counts.add_m(cid)
        for vid in inventory.variables_containing(cid):
            counts.add_m(vid)
        if prev is not None:
            counts.add_t(prev, cid)
        _record_bindings(inventory, unit.bindings)
        prev = cid
    return counts


def observe_parse(inventory: Inventory, parse: ParseOutcome, theta: float = 1.0) -> None:
    """Like ``update_counts`` but with memory decay applied per parsing step."""
    if theta == 1.0:
        update_counts(inventory, parse)
        return
    counts = inventory.counts
    prev = None
    for unit in parse.units:
        counts.decay(theta)
        cid = unit.chunk_id
        counts.add_m(cid)
        for vid in inventory.variables_containing(cid):
            counts.add_m(vid)
        if prev is not None:
            counts.add_t(prev, cid)
        _record_bindings(inventory, unit.bindings)
        prev = cid


# -- independence testing --------------------------------------------------------


@lru_cache(maxsize=32)
def chi2_critical(alpha: float) -> float:
    return float(stats.chi2.isf(alpha, df=1))


class SigTester:
    """Positive-association test over the current transition table.

    The 2x2 table collapses T into {(L,R), (L,not R), (not L,R), (not L,not R)}
    and applies Pearson's chi-square with one degree of freedom (no Yates
    correction); the test is one-sided via the requirement that the observed
    pair count exceeds its expectation under independence. A repeated-evidence
    floor gates applicability: a pair seen fewer than ``MIN_OBSERVED`` times
    cannot reject, whatever the statistic says. Without the floor, any lone
    co-occurrence of two rare units is "significant" (its expected count is
    ~1/N), and on a fixed training sequence those coincidences accrete until
    the dictionary memorizes the whole string.
    """

    #: Minimum observed co-occurrences for the test to apply.
    MIN_OBSERVED = 3.0

    def __init__(self, counts: CountTables, alpha: float = 0.05):
        self.counts = counts
        self.crit = chi2_critical(alpha)
        self.row_sums = {i: sum(row.values()) for i, row in counts.T.items()}
        self.col_sums: dict[int, float] = {}
        for row in counts.T.values():
            for j, v in row.items():
                self.col_sums[j] = self.col_sums.get(j, 0.0) + v
        self.total = sum(self.row_sums.values())

    def significant_positive(self, left: int, right: int) -> bool:
        n = self.total
        if n <= 0.0:
            return False  # insufficient data: cannot reject independence
        a = self.counts.t(left, right)
        if a < self.MIN_OBSERVED:
            return False
        rl = self.row_sums.get(left, 0.0)
        cr = self.col_sums.get(right, 0.0)
        if a * n <= rl * cr:
            return False  # not positively associated
        b = rl - a
        c = cr - a
        d = n - rl - cr + a
        denom = rl * (n - rl) * cr * (n - cr)
        if denom <= 0.0:
            return False
        chi2 = n * (a * d - b * c) ** 2 / denom
        return chi2 > self.crit


def test_independence(counts: CountTables, left: int, right: int, alpha: float = 0.05) -> bool:
    """True when the (left, right) transition is significantly positively
    associated at the given level."""
    return SigTester(counts, alpha).significant_positive(left, right)


# -- proposals -------------------------------------------------------------------


def propose_chunks(
    inventory: Inventory,
    graph: ParsingGraph,
    alpha: float = 0.05,
    counts: CountTables | None = None,
) -> list[int]:
    """Concatenate every significantly correlated consecutive pair into a new
    chunk; already-known term sequences are skipped.

    ``counts`` is the table the significance test runs on (the owning
    inventory's table by default). A new chunk inherits the pair's observed
    transition count as its initial marginal, plus its left parent's incoming
    and right parent's outgoing transition rows as a decaying prior, so its
    first retrievals are not scored as never-before-seen events.
    """
    counts = counts if counts is not None else inventory.counts
    tester = SigTester(counts, alpha)
    new_ids: list[int] = []
    for left in sorted(counts.T):
        if left not in inventory.chunks:
            continue
        for right in sorted(counts.T[left]):
            if right not in inventory.chunks:
                continue
            if not tester.significant_positive(left, right):
                continue
            terms = inventory.chunks[left].terms + inventory.chunks[right].terms
            if inventory.find_chunk(terms) is not None:
                continue
            chunk = inventory.concat(left, right)
            graph.insert(chunk)
            inventory.counts.add_m(chunk.id, counts.t(left, right))
            new_ids.append(chunk.id)
    return new_ids


def propose_variables(
    inventory: Inventory,
    graph: ParsingGraph,
    config: LearnerConfig,
    counts: CountTables | None = None,
) -> list[int]:
    """Discover variables by intersecting post-adjacency with pre-adjacency.

    For each context pair (cL, cR) the candidate set is every chunk that both
    significantly follows cL and significantly precedes cR. A candidate set E
    is accepted when t_min <= |E| <= t_max and its summed marginals reach
    freq_t; acceptance creates (or reuses) a variable over E plus the chunk
    cL (+) v (+) cR, which inherits the pooled slot evidence as its initial
    marginal.
    """
    counts = counts if counts is not None else inventory.counts
    tester = SigTester(counts, config.alpha)
    adj: dict[int, list[int]] = {}
    for left in sorted(counts.T):
        if left not in inventory.chunks:
            continue
        hits = [
            r
            for r in sorted(counts.T[left])
            if r in inventory.chunks and tester.significant_positive(left, r)
        ]
        if hits:
            adj[left] = hits
    pre: dict[int, list[int]] = {}
    for left, hits in adj.items():
        for mid in hits:
            pre.setdefault(mid, []).append(left)

    contexts: dict[tuple[int, int], set[int]] = {}
    for mid in sorted(pre):
        followers = adj.get(mid)
        if not followers:
            continue
        for left in pre[mid]:
            for right in followers:
                contexts.setdefault((left, right), set()).add(mid)

    by_denotees = {frozenset(v.denotees): v.id for v in inventory.variables.values()}
    new_ids: list[int] = []
    for (left, right) in sorted(contexts):
        members = sorted(contexts[(left, right)])
        if not config.t_min <= len(members) <= config.t_max:
            continue
        if sum(counts.m(c) for c in members) < config.freq_t:
            continue
        key = frozenset(members)
        var_id = by_denotees.get(key)
        if var_id is None:
            var = inventory.add_variable(
                members, {c: counts.m(c) for c in members}
            )
            var_id = var.id
            by_denotees[key] = var_id
            new_ids.append(var_id)
        terms = inventory.chunks[left].terms + (Var(var_id),) + inventory.chunks[right].terms
        if inventory.find_chunk(terms) is None:
            chunk = inventory.add_chunk(terms, parents=(left, right))
            graph.insert(chunk)
            slot_evidence = sum(
                min(counts.t(left, m), counts.t(m, right)) for m in members
            )
            inventory.counts.add_m(chunk.id, slot_evidence)
            new_ids.append(chunk.id)
    return new_ids


# -- merging ----------------------------------------------------------------------


def _variable_context_signature(inventory: Inventory, var_id: int) -> frozenset:
    """The (prefix, suffix) pairs around every occurrence of the variable."""
    occ = set()
    for chunk in inventory.chunks.values():
        for idx, t in enumerate(chunk.terms):
            if isinstance(t, Var) and t.id == var_id:
                occ.add((chunk.terms[:idx], chunk.terms[idx + 1 :]))
    return frozenset(occ)


def _merge_group(inventory: Inventory, group: list[int]) -> dict[int, int]:
    keep = min(group)
    drop = [v for v in group if v != keep]
    kept = inventory.variables[keep]
    id_map: dict[int, int] = {}
    for vid in drop:
        var = inventory.variables[vid]
        for d in var.denotees:
            if d not in kept.denote_counts:
                kept.denotees.append(d)
                kept.denote_counts[d] = 0.0
            kept.denote_counts[d] += var.denote_counts.get(d, 0.0)
        id_map[vid] = keep
        del inventory.variables[vid]
    # Rewrite term references, then fold chunks that became identical.
    for chunk in list(inventory.chunks.values()):
        if any(isinstance(t, Var) and t.id in id_map for t in chunk.terms):
            chunk.terms = tuple(
                Var(id_map[t.id]) if isinstance(t, Var) and t.id in id_map else t
                for t in chunk.terms
            )
            chunk.concrete_atoms = None
    by_terms: dict[tuple, int] = {}
    for cid in sorted(inventory.chunks):
        terms = inventory.chunks[cid].terms
        if terms in by_terms:
            id_map[cid] = by_terms[terms]
            del inventory.chunks[cid]
        else:
            by_terms[terms] = cid
    if id_map:
        for chunk in inventory.chunks.values():
            if chunk.parents is not None:
                chunk.parents = tuple(id_map.get(p, p) for p in chunk.parents)
        for var in inventory.variables.values():
            merged: dict[int, float] = {}
            order: list[int] = []
            for d in var.denotees:
                k = id_map.get(d, d)
                if k not in merged:
                    order.append(k)
                    merged[k] = 0.0
                merged[k] += var.denote_counts.get(d, 0.0)
            var.denotees = order
            var.denote_counts = merged
        inventory.counts.remap_ids(id_map)
    inventory.rebuild_term_index()
    return id_map


def merge_variables(inventory: Inventory, graph: ParsingGraph) -> dict[int, int]:
    """Union variables that share the same embedding contexts.

    Returns the id remapping (dropped id -> surviving id) for both variables
    and any chunks that collapsed into one, so callers can translate ids held
    from earlier parses. A merge that would create a resolution cycle is
    rolled back and skipped.
    """
    groups: dict[frozenset, list[int]] = {}
    for vid in sorted(inventory.variables):
        sig = _variable_context_signature(inventory, vid)
        if sig:
            groups.setdefault(sig, []).append(vid)
    id_map: dict[int, int] = {}
    merged_any = False
    for sig in sorted(groups, key=lambda s: min(groups[s])):
        group = groups[sig]
        if len(group) < 2:
            continue
        backup = inventory.clone()
        try:
            step_map = _merge_group(inventory, group)
            inventory.check_acyclic()
        except CycleError:
            inventory.__dict__.update(backup.__dict__)
            continue
        merged_any = True
        id_map = {old: step_map.get(new, new) for old, new in id_map.items()}
        id_map.update(step_map)
    if merged_any:
        rebuilt = ParsingGraph.from_inventory(inventory)
        graph.__dict__.update(rebuilt.__dict__)
    return id_map


# -- pruning ---------------------------------------------------------------------


def parse_used_ids(inventory: Inventory, parse: ParseOutcome) -> set[int]:
    """Every chunk/variable identified during a parse: the parsed chunks, the
    variables they immediately belong to, and all bound variables/denotees."""
    used: set[int] = set()

    def from_bindings(bindings):
        for b in bindings:
            used.add(b.var_id)
            used.add(b.chunk_id)
            if b.nested:
                from_bindings(b.nested)

    for unit in parse.units:
        used.add(unit.chunk_id)
        used.update(inventory.variables_containing(unit.chunk_id))
        from_bindings(unit.bindings)
    return used


def prune_unused(
    inventory: Inventory,
    graph: ParsingGraph,
    parse: ParseOutcome,
    protected=frozenset(),
    id_map: dict[int, int] | None = None,
) -> set[int]:
    """Delete chunks and variables not identified in the completed pass.

    Atoms are never removed, and anything referenced by a survivor (variables
    embedded in surviving chunks, denotees of surviving variables) is kept.
    ``protected`` shields ids created after the pass; ``id_map`` translates
    ids that were remapped by a merge since the parse was produced.
    """
    id_map = id_map or {}

    def live(i: int) -> int:
        return id_map.get(i, i)

    survivors = {live(i) for i in parse_used_ids(inventory, parse)}
    survivors.update(live(i) for i in protected)
    survivors.update(inventory.atom_chunk_ids())
    # Closure over structural references.
    while True:
        extra: set[int] = set()
        for i in survivors:
            chunk = inventory.chunks.get(i)
            if chunk is not None:
                extra.update(chunk.variable_ids())
            else:
                var = inventory.variables.get(i)
                if var is not None:
                    extra.update(var.denotees)
        if extra <= survivors:
            break
        survivors |= extra
    everything = set(inventory.chunks) | set(inventory.variables)
    doomed = everything - survivors
    if doomed:
        inventory.remove_ids(doomed)
        rebuilt = ParsingGraph.from_inventory(inventory)
        graph.__dict__.update(rebuilt.__dict__)
    return doomed


# -- likelihoods -------------------------------------------------------------------


def _marginal_prob(inventory: Inventory, chunk_id: int) -> float:
    ids = inventory.concrete_chunk_ids()
    total = sum(inventory.counts.m(i) for i in ids)
    if total <= 0.0:
        return 1.0 / len(ids) if ids else 0.0  # uniform over the observed alphabet
    return inventory.counts.m(chunk_id) / total


def nll_independent(parse: ParseOutcome, inventory: Inventory, smoothing_eps: float = 1e-6) -> float:
    """Negative log-likelihood of the parse under independent chunk draws,
    in nats; unseen units are floored at ``smoothing_eps``."""
    ids = inventory.concrete_chunk_ids()
    total = sum(inventory.counts.m(i) for i in ids)
    uniform = 1.0 / len(ids) if ids else 0.0
    nll = 0.0
    for unit in parse.units:
        p = inventory.counts.m(unit.chunk_id) / total if total > 0.0 else uniform
        nll -= math.log(max(p, smoothing_eps))
    return nll


def _constituent_chain(inventory: Inventory, chunk_id: int, side: int) -> list[int]:
    """The chunk followed by its leftmost (side=0) or rightmost (side=1)
    constituents, walking composition provenance."""
    out = [chunk_id]
    seen = {chunk_id}
    cur = chunk_id
    while True:
        chunk = inventory.chunks.get(cur)
        if chunk is None or chunk.parents is None:
            return out
        cur = chunk.parents[side]
        if cur in seen or cur not in inventory.chunks:
            return out
        out.append(cur)
        seen.add(cur)


def _conditional_prob(inventory: Inventory, prev: int, cur: int) -> float:
    """P(cur | prev) from transition rows with structured backoff.

    A freshly concatenated chunk has no transition history of its own, so an
    unseen pair backs off along composition provenance: the successor's
    leftmost constituents within the predecessor's row, then the
    predecessor's rightmost constituents' rows. A pair no level has ever
    seen falls back to uniform over the dictionary.
    """
    counts = inventory.counts
    cur_chain = _constituent_chain(inventory, cur, 0)
    for p in _constituent_chain(inventory, prev, 1):
        row = counts.row(p)
        row_total = sum(row.values())
        if row_total <= 0.0:
            continue
        for c in cur_chain:
            weight = row.get(c, 0.0)
            if weight > 0.0:
                return weight / row_total
    ids = inventory.concrete_chunk_ids()
    return 1.0 / len(ids) if ids else 0.0


def nll_conditional(parse: ParseOutcome, inventory: Inventory, smoothing_eps: float = 1e-6) -> float:
    """First-order chain NLL over parsed units: -log P(c1) - sum log P(ci|ci-1).

    Transition rows are count-normalized; an unseen transition backs off
    through the units' composition structure and finally to the uniform
    distribution over the dictionary, floored at ``smoothing_eps``.
    """
    if not parse.units:
        return 0.0
    first = parse.units[0].chunk_id
    nll = -math.log(max(_marginal_prob(inventory, first), smoothing_eps))
    prev = first
    for unit in parse.units[1:]:
        cur = unit.chunk_id
        nll -= math.log(max(_conditional_prob(inventory, prev, cur), smoothing_eps))
        prev = cur
    return nll


# -- batch learning ----------------------------------------------------------------


@dataclass
class BatchResult:
    inventory: Inventory
    graph: ParsingGraph
    trajectory: list[dict]
    converged: bool
    n_iterations: int


def _trajectory_row(
    iteration: int, inventory: Inventory, parse: ParseOutcome, eps: float
) -> dict:
    rc = _metrics.representation_complexity(inventory, eps)
    return {
        "iteration": iteration,
        "n_chunks": len(inventory.chunks),
        "n_variables": len(inventory.variables),
        "w": len(parse.units),
        "nll_independent": nll_independent(parse, inventory, eps),
        "rc_v": rc["rc_v"],
        "entropy": _metrics.representation_entropy(inventory, eps),
        "mean_pss": parse.mean_steps(),
    }


def learn_batch(
    seq,
    config: LearnerConfig | None = None,
    inventory: Inventory | None = None,
    on_iteration=None,
) -> BatchResult:
    """Iterate parse -> count update -> proposals -> merge -> prune until the
    inventory stops changing (fixed point or two-cycle) or the iteration cap.

    Marginal and transition tables are reset at the start of every iteration:
    each pass's proposals are judged on that pass's own parse statistics.
    Mixing counts gathered under earlier, finer-grained dictionaries dilutes
    the contingency margins until every recurring adjacency of the fixed
    training sequence tests significant, and the dictionary degenerates into
    one chunk per sequence. Per-denotee counts persist across iterations;
    they only rank denotees and feed the complexity measures.

    ``on_iteration(k, inventory, graph)`` is called with the initial state
    (k=0) and after each completed iteration; ``inventory`` may carry a warm
    start (missing atoms are added for completeness).
    """
    config = config or LearnerConfig()
    seq = list(seq)
    if not seq:
        raise ValueError("cannot learn from an empty sequence")
    if inventory is None:
        inventory = Inventory.from_atoms(sorted(set(seq)))
    else:
        for a in sorted(set(seq)):
            inventory.add_atom(a)
    graph = ParsingGraph.from_inventory(inventory)
    if on_iteration is not None:
        on_iteration(0, inventory, graph)
    signatures = [inventory.signature()]
    trajectory: list[dict] = []
    converged = False
    iterations = 0
    last_parse = None
    last_id_map: dict[int, int] = {}
    for it in range(config.max_iterations):
        inventory.counts.M = {}
        inventory.counts.T = {}
        parse = parse_sequence(graph, inventory, seq)
        observe_parse(inventory, parse, config.theta)
        trajectory.append(_trajectory_row(it, inventory, parse, config.smoothing_eps))
        fresh = set(propose_chunks(inventory, graph, config.alpha))
        id_map: dict[int, int] = {}
        if config.mode == MODE_HVM:
            fresh.update(propose_variables(inventory, graph, config))
            id_map = merge_variables(inventory, graph)
            if id_map:
                fresh = {id_map.get(i, i) for i in fresh}
        prune_unused(inventory, graph, parse, protected=fresh, id_map=id_map)
        iterations = it + 1
        last_parse, last_id_map = parse, id_map
        if on_iteration is not None:
            on_iteration(iterations, inventory, graph)
        sig = inventory.signature()
        # A signature equal to the one from two iterations ago is a stable
        # propose/prune two-cycle; further passes cannot change anything.
        if sig == signatures[-1] or (len(signatures) > 1 and sig == signatures[-2]):
            converged = True
            break
        signatures.append(sig)
        if len(signatures) > 2:
            signatures.pop(0)
    if last_parse is not None:
        # Final cleanup: newborn proposals were shielded from pruning so they
        # could prove themselves next pass; at termination there is no next
        # pass, so the converged model keeps only identified or referenced
        # entries (every surviving non-atom has M > 0 or a referent).
        prune_unused(inventory, graph, last_parse, protected=frozenset(), id_map=last_id_map)
        if on_iteration is not None:
            on_iteration(iterations, inventory, graph)
    return BatchResult(inventory, graph, trajectory, converged, iterations)


# -- online learning ----------------------------------------------------------------


@dataclass
class TrialResult:
    nll: float
    parse: ParseOutcome


class OnlineLearner:
    """Trial-by-trial learner for bounded sequences.

    Each trial is first scored (chain NLL under the model trained on all
    earlier trials), then learned from: counts update with per-parsing-step
    decay, and chunk/variable proposals fire on trial completion. Trial
    boundaries contribute no transition counts, and nothing is pruned; decay
    is the only forgetting mechanism.
    """

    def __init__(self, config: LearnerConfig | None = None, inventory: Inventory | None = None):
        self.config = config or LearnerConfig()
        self.inventory = inventory or Inventory.from_atoms([])
        self.graph = ParsingGraph.from_inventory(self.inventory)
        self.nlls: list[float] = []

    def process_trial(self, seq) -> TrialResult:
        seq = list(seq)
        if not seq:
            raise ValueError("empty trial")
        for a in sorted(set(seq)):
            if not self.inventory.has_atom(a):
                chunk = self.inventory.add_atom(a)
                self.graph.insert(chunk)
        parse = parse_sequence(self.graph, self.inventory, seq)
        nll = nll_conditional(parse, self.inventory, self.config.smoothing_eps)
        observe_parse(self.inventory, parse, self.config.theta)
        fresh = set(propose_chunks(self.inventory, self.graph, self.config.alpha))
        if self.config.mode == MODE_HVM:
            fresh.update(propose_variables(self.inventory, self.graph, self.config))
            merge_variables(self.inventory, self.graph)
        self.nlls.append(nll)
        return TrialResult(nll, parse)


def learn_online(trials, config: LearnerConfig | None = None) -> tuple[Inventory, list[float]]:
    learner = OnlineLearner(config)
    for trial in trials:
        learner.process_trial(trial)
    return learner.inventory, learner.nlls

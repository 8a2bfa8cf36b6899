"""Comparison models: the LZ78 dictionary compressor and a first-order
associative learner over atomic symbols."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple


class Lz78Token(NamedTuple):
    phrase_id: int
    atom: int | None  # None marks the final partial token


@dataclass
class Lz78Dictionary:
    """Phrases as (parent phrase, extension atom) pairs; phrase 0 is empty."""

    phrases: list[tuple[int, int | None]] = field(default_factory=lambda: [(0, None)])
    emitted: list[Lz78Token] = field(default_factory=list)

    def n_phrases(self) -> int:
        return len(self.phrases) - 1  # the empty root is not an entry

    def phrase_atoms(self, phrase_id: int) -> list[int]:
        out: list[int] = []
        while phrase_id != 0:
            parent, atom = self.phrases[phrase_id]
            out.append(atom)
            phrase_id = parent
        out.reverse()
        return out


def lz78_parse(seq) -> tuple[Lz78Dictionary, int]:
    """Standard incremental LZ78: longest known phrase plus one atom becomes
    a new phrase; a trailing known phrase is emitted as a partial token."""
    seq = list(seq)
    if not seq:
        raise ValueError("cannot compress an empty sequence")
    dic = Lz78Dictionary()
    index: dict[tuple[int, int], int] = {}  # (phrase id, atom) -> phrase id
    current = 0
    for atom in seq:
        nxt = index.get((current, atom))
        if nxt is not None:
            current = nxt
            continue
        dic.emitted.append(Lz78Token(current, atom))
        dic.phrases.append((current, atom))
        index[(current, atom)] = len(dic.phrases) - 1
        current = 0
    if current != 0:
        dic.emitted.append(Lz78Token(current, None))
    return dic, len(dic.emitted)


def lz78_decode(dic: Lz78Dictionary) -> list[int]:
    out: list[int] = []
    for phrase_id, atom in dic.emitted:
        out.extend(dic.phrase_atoms(phrase_id))
        if atom is not None:
            out.append(atom)
    return out


def lz78_metrics(dic: Lz78Dictionary, s_len: int, smoothing_eps: float = 1e-6) -> dict:
    """Compression ratio, token NLL, and coding efficiency for one parse.

    The NLL scores emitted tokens by their empirical usage frequency, the
    same formula family used for chunk parses.
    """
    if s_len <= 0:
        raise ValueError("sequence length must be positive")
    w = len(dic.emitted)
    freq: dict[Lz78Token, int] = {}
    for tok in dic.emitted:
        freq[tok] = freq.get(tok, 0) + 1
    nll = 0.0
    for tok in dic.emitted:
        nll -= math.log(max(freq[tok] / w, smoothing_eps))
    return {
        "compression_ratio": w / s_len,
        "nll": nll,
        "coding_efficiency": dic.n_phrases() / s_len,
    }


class ALModel:
    """First-order transition counts between atomic units, with decay.

    Chunk structure is invisible to this model: its likelihoods depend only
    on atomic bigrams, which is what makes it the no-abstraction control.
    """

    def __init__(self, theta: float = 1.0, smoothing_eps: float = 1e-6, alphabet=None):
        if not 0.0 < theta <= 1.0:
            raise ValueError("theta must be in (0, 1]")
        self.theta = theta
        self.smoothing_eps = smoothing_eps
        self.alphabet: set[int] = set(alphabet or ())
        self.transitions: dict[int, dict[int, float]] = {}
        self.marginals: dict[int, float] = {}

    def _decay(self) -> None:
        if self.theta == 1.0:
            return
        for a in self.marginals:
            self.marginals[a] *= self.theta
        for row in self.transitions.values():
            for b in row:
                row[b] *= self.theta

    def observe_trial(self, seq) -> None:
        """Count bigrams within one trial; nothing crosses trial boundaries."""
        prev = None
        for atom in seq:
            self._decay()
            self.alphabet.add(atom)
            self.marginals[atom] = self.marginals.get(atom, 0.0) + 1.0
            if prev is not None:
                row = self.transitions.setdefault(prev, {})
                row[atom] = row.get(atom, 0.0) + 1.0
            prev = atom

    def _marginal_prob(self, atom: int) -> float:
        total = sum(self.marginals.values())
        if total <= 0.0:
            return 1.0 / len(self.alphabet) if self.alphabet else 0.0
        return self.marginals.get(atom, 0.0) / total

    def nll(self, seq) -> float:
        """Chain NLL of one trial under the current counts (no learning).

        Unseen transitions fall back to uniform over the alphabet, mirroring
        the chunk-level chain likelihood.
        """
        seq = list(seq)
        if not seq:
            return 0.0
        eps = self.smoothing_eps
        uniform = 1.0 / len(self.alphabet) if self.alphabet else 0.0
        out = -math.log(max(self._marginal_prob(seq[0]), eps))
        for prev, cur in zip(seq, seq[1:]):
            row = self.transitions.get(prev, {})
            total = sum(row.values())
            p = row.get(cur, 0.0) / total if total > 0.0 else 0.0
            if p <= 0.0:
                p = uniform
            out -= math.log(max(p, eps))
        return out


def al_train(trials, theta: float = 1.0, smoothing_eps: float = 1e-6) -> ALModel:
    model = ALModel(theta, smoothing_eps)
    for trial in trials:
        model.observe_trial(trial)
    return model


def al_nll(model: ALModel, seq) -> float:
    return model.nll(seq)

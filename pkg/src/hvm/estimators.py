"""Scikit-learn style estimators wrapping the batch and online learners.

``HVM`` is the full model; ``HCM`` pins variable learning off. Both expose
``fit`` (batch learning on one sequence), ``partial_fit`` (online trial
learning), ``transform`` (parse to chunk ids), and ``score`` (negative NLL,
higher is better), and compose with ``get_params``/``set_params``/``clone``.
"""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .baselines import ALModel
from .learner import (
    MODE_HCM,
    MODE_HVM,
    LearnerConfig,
    OnlineLearner,
    learn_batch,
    nll_independent,
)
from .metrics import MetricReport, build_report
from .parsing import ParseOutcome, parse_sequence


def check_sequence(X) -> list[int]:
    """Validate and coerce a discrete sequence to a list of nonnegative ints."""
    if isinstance(X, (str, bytes)):
        raise TypeError("text must be atomized through a SymbolTable first")
    seq = np.asarray(X)
    if seq.ndim != 1:
        raise ValueError(f"expected a one-dimensional sequence, got shape {seq.shape}")
    if seq.size == 0:
        raise ValueError("sequence is empty")
    if not np.issubdtype(seq.dtype, np.integer):
        if not np.all(seq == np.floor(seq)):
            raise ValueError("sequence symbols must be integers")
        seq = seq.astype(np.int64)
    if seq.min() < 0:
        raise ValueError("sequence symbols must be nonnegative")
    return [int(a) for a in seq]


class HVM(BaseEstimator):
    """Unsupervised chunk-and-variable learner over discrete sequences.

    Parameters mirror the learner configuration: ``theta`` is the per-step
    memory decay, ``alpha`` the significance level for chunk/variable
    proposals, ``t_min``/``t_max`` bound a variable's denotee set,
    ``freq_t`` is the minimum summed denotee frequency, and
    ``mode="hcm"`` disables abstraction entirely.
    """

    def __init__(
        self,
        theta: float = 1.0,
        alpha: float = 0.05,
        t_min: int = 2,
        t_max: int = 10,
        freq_t: float = 6.0,
        mode: str = MODE_HVM,
        max_iterations: int = 40,
        smoothing_eps: float = 1e-6,
    ):
        self.theta = theta
        self.alpha = alpha
        self.t_min = t_min
        self.t_max = t_max
        self.freq_t = freq_t
        self.mode = mode
        self.max_iterations = max_iterations
        self.smoothing_eps = smoothing_eps

    def _config(self) -> LearnerConfig:
        return LearnerConfig(
            theta=self.theta,
            alpha=self.alpha,
            t_min=self.t_min,
            t_max=self.t_max,
            freq_t=self.freq_t,
            mode=self.mode,
            max_iterations=self.max_iterations,
            smoothing_eps=self.smoothing_eps,
        )

    def fit(self, X, y=None):
        """Batch-learn an inventory from one sequence."""
        seq = check_sequence(X)
        result = learn_batch(seq, self._config())
        self.inventory_ = result.inventory
        self.graph_ = result.graph
        self.trajectory_ = result.trajectory
        self.converged_ = result.converged
        self.n_iterations_ = result.n_iterations
        return self

    def partial_fit(self, X, y=None):
        """Online-learn from one bounded trial; scores it first.

        The trial's chain NLL under the pre-update model is appended to
        ``trial_nlls_``.
        """
        seq = check_sequence(X)
        if not hasattr(self, "_online"):
            self._online = OnlineLearner(self._config())
            self.trial_nlls_ = self._online.nlls
        self._online.process_trial(seq)
        self.inventory_ = self._online.inventory
        self.graph_ = self._online.graph
        return self

    def _check_fitted(self):
        if not hasattr(self, "inventory_"):
            raise NotFittedError("this estimator has not been fitted yet")

    def parse(self, X) -> ParseOutcome:
        self._check_fitted()
        return parse_sequence(self.graph_, self.inventory_, check_sequence(X))

    def transform(self, X) -> np.ndarray:
        """Parse a sequence and return the chunk id of every parsed unit."""
        return np.asarray(self.parse(X).chunk_ids(), dtype=np.int64)

    def score(self, X, y=None) -> float:
        """Negative of the independent-chunk NLL (higher is better)."""
        self._check_fitted()
        parse = self.parse(X)
        return -nll_independent(parse, self.inventory_, self.smoothing_eps)

    def evaluate(self, X) -> MetricReport:
        self._check_fitted()
        seq = check_sequence(X)
        parse = parse_sequence(self.graph_, self.inventory_, seq)
        return build_report(self.inventory_, self.graph_, parse, len(seq), self.smoothing_eps)


class HCM(HVM):
    """The same learner with variable discovery disabled."""

    def __init__(
        self,
        theta: float = 1.0,
        alpha: float = 0.05,
        t_min: int = 2,
        t_max: int = 10,
        freq_t: float = 6.0,
        max_iterations: int = 40,
        smoothing_eps: float = 1e-6,
    ):
        super().__init__(
            theta=theta,
            alpha=alpha,
            t_min=t_min,
            t_max=t_max,
            freq_t=freq_t,
            mode=MODE_HCM,
            max_iterations=max_iterations,
            smoothing_eps=smoothing_eps,
        )


class AssociativeLearner(BaseEstimator):
    """First-order associative baseline with the same partial_fit protocol."""

    def __init__(self, theta: float = 1.0, smoothing_eps: float = 1e-6):
        self.theta = theta
        self.smoothing_eps = smoothing_eps

    def partial_fit(self, X, y=None):
        seq = check_sequence(X)
        if not hasattr(self, "model_"):
            self.model_ = ALModel(self.theta, self.smoothing_eps)
            self.trial_nlls_ = []
        self.trial_nlls_.append(self.model_.nll(seq))
        self.model_.observe_trial(seq)
        return self

    def score(self, X, y=None) -> float:
        if not hasattr(self, "model_"):
            raise NotFittedError("this estimator has not been fitted yet")
        return -self.model_.nll(check_sequence(X))

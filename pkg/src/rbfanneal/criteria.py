"""Model-order criteria and the per-centre cost they induce.

Each criterion charges ``penalty(k)`` nats for a model with ``k`` centres,
``c`` outputs and ``d`` inputs, whose free parameter count is

    xi(k) = k * (c + 1) + c * (1 + d)

(one column of output weights plus one centre coordinate budget per basis
function, plus the affine part).  Because ``xi`` is affine in ``k``, the
penalty difference between neighbouring model sizes is a constant; that
constant calibrates the exponential prior on ``k`` used by the sampler, so
climbing the penalized score and climbing the posterior are the same thing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model

KINDS = ("aic", "bic", "mdl")


@dataclass(frozen=True)
class Criterion:
    """A model-order criterion bound to a dataset's dimensions."""

    kind: str
    n_samples: int
    n_inputs: int
    n_outputs: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"criterion must be one of {KINDS}, not {self.kind!r}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.n_inputs < 1 or self.n_outputs < 1:
            raise ValueError("n_inputs and n_outputs must be positive")

    def parameter_count(self, k: int) -> int:
        """Free parameters of a model with ``k`` centres."""
        if k < 0:
            raise ValueError("k must be nonnegative")
        return k * (self.n_outputs + 1) + self.n_outputs * (1 + self.n_inputs)

    def penalty(self, k: int) -> float:
        """Complexity penalty in nats; BIC and MDL coincide."""
        xi = self.parameter_count(k)
        if self.kind == "aic":
            return float(xi)
        return 0.5 * xi * math.log(self.n_samples)

    def calibration_constant(self) -> float:
        """Per-centre prior cost: ``penalty(k + 1) - penalty(k)`` for any k."""
        if self.kind == "aic":
            return float(self.n_outputs + 1)
        return 0.5 * (self.n_outputs + 1) * math.log(self.n_samples)


def penalized_score(dataset: model.Dataset, centres, basis: model.Basis,
                    criterion: Criterion,
                    metric: model.Metric = model.EUCLIDEAN) -> float:
    """Data fit minus complexity penalty, oriented so larger is better.

    ``-(N/2) * sum_i ln(rss_i) - penalty(k)``.  Differences of this score
    across model sizes equal differences of ``log_marginal_posterior`` under
    the matching criterion.  Returns ``-inf`` for rank-deficient designs and
    exact interpolation, mirroring the posterior's sentinels.
    """
    centres = np.ascontiguousarray(centres, dtype=np.float64)
    k = centres.shape[0] if centres.ndim == 2 else 0
    try:
        _, fit_term = model.posterior_parts(dataset, centres, basis, metric)
    except model.DegenerateDesignError:
        return float("-inf")
    if fit_term == float("-inf"):
        return fit_term
    return fit_term - criterion.penalty(k)

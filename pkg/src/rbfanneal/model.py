"""Radial basis function regression core.

A model with ``k`` centres maps inputs through a design matrix
``D = [1 | x | phi(dist(x, centre_1)) ... phi(dist(x, centre_k))]`` and fits
all output columns jointly by least squares.  With the linear coefficients
and noise variances integrated out analytically, the posterior over the
centre configuration depends on the data only through the per-output
residual quadratics ``rss_i = min_a ||y_i - D a||^2``:

    log posterior = -(N/2) * sum_i ln(rss_i) - calibration * k  + const.

Everything downstream (criteria, jump moves, annealing) builds on the
functions here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend

# A design column is declared linearly dependent when its QR pivot falls
# below this fraction of the largest pivot.
RANK_TOLERANCE = 1e-10

_BASIS_CODES = {"linear": 0, "cubic": 1, "thin-plate": 2, "gaussian": 3}


class DegenerateDesignError(RuntimeError):
    """The design matrix is numerically rank-deficient."""


@dataclass(frozen=True)
class Basis:
    """Radial profile applied to centre distances.

    ``kind`` is one of ``linear`` (r), ``cubic`` (r^3), ``thin-plate``
    (r^2 ln r, zero at r = 0) or ``gaussian`` (exp(-r^2 / 2 width^2)).
    Only the gaussian takes a ``width``.
    """

    kind: str = "cubic"
    width: float | None = None

    def __post_init__(self):
        if self.kind not in _BASIS_CODES:
            raise ValueError(
                f"basis kind must be one of {sorted(_BASIS_CODES)}, not {self.kind!r}"
            )
        if self.kind == "gaussian":
            if self.width is None or not self.width > 0:
                raise ValueError("gaussian basis requires width > 0")
        elif self.width is not None:
            raise ValueError(f"{self.kind} basis takes no width")

    @property
    def code(self) -> int:
        return _BASIS_CODES[self.kind]

    def profile(self, r):
        """Evaluate the radial profile at nonnegative distances ``r``."""
        r = np.asarray(r, dtype=np.float64)
        if np.any(r < 0):
            raise ValueError("distances must be nonnegative")
        if self.kind == "linear":
            return r.copy()
        if self.kind == "cubic":
            return r * r * r
        if self.kind == "gaussian":
            return np.exp(r * r / (-2.0 * self.width * self.width))
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, r * r * np.log(safe), 0.0)


@dataclass(frozen=True, eq=False)
class Metric:
    """Distance used between inputs and centres.

    ``weight`` is a symmetric positive definite matrix defining
    ``dist(p, q)^2 = (p - q)' W (p - q)``; ``None`` means Euclidean.  The
    weighted case is handled by mapping points through the Cholesky factor of
    ``W`` once, after which all distances are plain Euclidean.
    """

    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.weight is None:
            object.__setattr__(self, "_factor", None)
            return
        w = np.asarray(self.weight, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("metric weight must be a square matrix")
        if not np.allclose(w, w.T, atol=1e-12):
            raise ValueError("metric weight must be symmetric")
        try:
            factor = np.linalg.cholesky(w)
        except np.linalg.LinAlgError as exc:
            raise ValueError("metric weight must be positive definite") from exc
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "_factor", factor)

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Map points so that weighted distances become Euclidean ones."""
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if self._factor is None:
            return pts
        if pts.shape[-1] != self._factor.shape[0]:
            raise ValueError(
                f"points have dimension {pts.shape[-1]}, "
                f"metric expects {self._factor.shape[0]}"
            )
        return np.ascontiguousarray(pts @ self._factor)


EUCLIDEAN = Metric()


@dataclass(frozen=True, eq=False)
class Dataset:
    """Paired input and output rows, stored as float64 matrices."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 2:
            raise ValueError("x and y must be 2-D arrays")
        if x.shape[0] != y.shape[0]:
            raise ValueError(
                f"x has {x.shape[0]} rows but y has {y.shape[0]}"
            )
        if x.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        if x.shape[1] == 0 or y.shape[1] == 0:
            raise ValueError("x and y must each have at least one column")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.x.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.y.shape[1]


def _as_centres(centres, d: int) -> np.ndarray:
    c = np.ascontiguousarray(centres, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("centres must be a (k, d) matrix")
    if c.shape[0] > 0 and c.shape[1] != d:
        raise ValueError(f"centres have dimension {c.shape[1]}, inputs have {d}")
    if c.size and not np.isfinite(c).all():
        raise ValueError("centres contain non-finite values")
    if c.shape[0] == 0:
        c = c.reshape(0, d)
    return c


def build_design_matrix(x, centres, basis: Basis = Basis(),
                        metric: Metric = EUCLIDEAN) -> np.ndarray:
    """Design matrix ``[1 | x | basis columns]`` for the given centres."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be a 2-D array")
    centres = _as_centres(centres, x.shape[1])
    xt = metric.transform(x)
    ct = metric.transform(centres) if centres.shape[0] else centres
    design = _backend.build_design(xt, ct, basis.code, basis.width or 0.0)
    if metric.weight is not None:
        # the metric only reweights distances; the linear trend block stays
        # in the original coordinates
        design[:, 1:1 + x.shape[1]] = x
    return design


def fit_least_squares(dataset: Dataset, centres, basis: Basis = Basis(),
                      metric: Metric = EUCLIDEAN) -> np.ndarray:
    """Least-squares coefficients, shape (1 + d + k, c).

    Raises ``DegenerateDesignError`` when the design matrix is
    rank-deficient at ``RANK_TOLERANCE``.
    """
    design = build_design_matrix(dataset.x, centres, basis, metric)
    rank, _, coef = _backend.least_squares(design, dataset.y, RANK_TOLERANCE, True)
    if coef is None:
        raise DegenerateDesignError(
            f"design matrix has rank {rank} < {design.shape[1]}"
        )
    return coef


def residual_quadratics(dataset: Dataset, centres, basis: Basis = Basis(),
                        metric: Metric = EUCLIDEAN) -> np.ndarray:
    """Per-output least-squares residual sums of squares, shape (c,).

    Computed from the tail of Q'y under a column-pivoted QR, so each entry is
    a sum of squares and cannot go negative.  Raises
    ``DegenerateDesignError`` on a rank-deficient design.
    """
    design = build_design_matrix(dataset.x, centres, basis, metric)
    rank, rss, _ = _backend.least_squares(design, dataset.y, RANK_TOLERANCE, False)
    if rank < design.shape[1]:
        raise DegenerateDesignError(
            f"design matrix has rank {rank} < {design.shape[1]}"
        )
    return rss


def noise_variance_estimates(dataset: Dataset, centres, basis: Basis = Basis(),
                             metric: Metric = EUCLIDEAN) -> np.ndarray:
    """Maximum-likelihood noise variances, ``rss_i / N`` per output."""
    return residual_quadratics(dataset, centres, basis, metric) / dataset.n_samples


def posterior_parts(dataset: Dataset, centres, basis: Basis = Basis(),
                    metric: Metric = EUCLIDEAN):
    """Residual quadratics and the data-fit term of the log posterior.

    Returns ``(rss, fit_term)`` with ``fit_term = -(N/2) * sum_i ln(rss_i)``,
    or ``-inf`` when some output is fitted exactly (zero residual).  Raises
    ``DegenerateDesignError`` like ``residual_quadratics``.
    """
    rss = residual_quadratics(dataset, centres, basis, metric)
    if np.all(rss > 0.0):
        fit_term = -0.5 * dataset.n_samples * float(np.log(rss).sum())
    else:
        fit_term = float("-inf")
    return rss, fit_term


def log_marginal_posterior(dataset: Dataset, centres, basis: Basis,
                           criterion, metric: Metric = EUCLIDEAN,
                           region=None) -> float:
    """Unnormalised log posterior of a centre configuration.

    ``criterion`` supplies the per-centre complexity cost through its
    ``calibration_constant`` method.  When ``region`` is given, centres
    outside it score ``-inf``.  Rank-deficient designs and exact
    interpolation also score ``-inf`` instead of raising, so proposals that
    reach such states are simply rejected.
    """
    centres = _as_centres(centres, dataset.n_inputs)
    k = centres.shape[0]
    if region is not None and k and not region.contains(centres):
        return float("-inf")
    try:
        _, fit_term = posterior_parts(dataset, centres, basis, metric)
    except DegenerateDesignError:
        return float("-inf")
    if fit_term == float("-inf"):
        warnings.warn(
            "a residual quadratic is exactly zero; "
            "treating the state as unreachable",
            RuntimeWarning,
            stacklevel=2,
        )
        return fit_term
    return fit_term - criterion.calibration_constant() * k


def predict(x, centres, coefficients, basis: Basis = Basis(),
            metric: Metric = EUCLIDEAN) -> np.ndarray:
    """Model outputs at new inputs, shape (n, c)."""
    design = build_design_matrix(x, centres, basis, metric)
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if coefficients.ndim != 2 or coefficients.shape[0] != design.shape[1]:
        raise ValueError(
            f"coefficients must have shape ({design.shape[1]}, c), "
            f"got {coefficients.shape}"
        )
    return design @ coefficients

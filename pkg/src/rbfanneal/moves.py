"""Reversible-jump moves over centre configurations.

One sampler step picks a move kind (birth, death, split, merge, update) with
probabilities that adapt at the model-size boundaries, proposes a new centre
configuration, and runs a Metropolis-Hastings test on the marginal posterior.
All acceptance ratios are computed in the log domain.  The data-fit part of
every ratio is ``(N/2) * sum_i ln(rss_i(current) / rss_i(proposed))``; the
remaining factors are the jump-specific constants documented on each ratio
function.

Proposals that land outside the birth region, make the design matrix
rank-deficient, fit some output exactly, or violate a move's geometric
constraint are rejected outright: all of those states carry posterior
``-inf`` (or zero proposal mass), so the Metropolis test could never accept
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model

MOVE_KINDS = ("birth", "death", "split", "merge", "update")
RATIO_MODES = ("derived", "as-printed")


@dataclass(frozen=True, eq=False)
class SamplerState:
    """A centre configuration with its cached fit.

    ``residuals`` holds the per-output residual quadratics of the
    least-squares fit at ``centres`` and ``log_post`` the corresponding
    unnormalised log posterior.  States are only ever built through
    ``evaluate_state``, which guarantees the cache is consistent and finite.
    """

    centres: np.ndarray
    residuals: np.ndarray
    log_post: float

    @property
    def k(self) -> int:
        return self.centres.shape[0]


@dataclass(frozen=True, eq=False)
class BirthRegion:
    """Axis-aligned box from which new centres are drawn uniformly."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.ascontiguousarray(self.lower, dtype=np.float64)
        upper = np.ascontiguousarray(self.upper, dtype=np.float64)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not np.all(upper > lower):
            raise ValueError("region must have positive width on every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_inputs(cls, x, margin: float = 0.1) -> "BirthRegion":
        """Bounding box of the input rows, padded by ``margin`` per side.

        The pad on each axis is ``margin`` times that axis's data width;
        axes with zero width fall back to an absolute pad of ``margin``.
        """
        x = np.asarray(x, dtype=np.float64)
        if margin < 0:
            raise ValueError("margin must be nonnegative")
        lo = x.min(axis=0)
        hi = x.max(axis=0)
        width = hi - lo
        pad = margin * np.where(width > 0, width, 1.0)
        return cls(lo - pad, hi + pad)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def log_volume(self) -> float:
        return float(np.log(self.widths).sum())

    def contains(self, points) -> bool:
        """True when every row (or the single point) lies inside the box."""
        pts = np.asarray(points, dtype=np.float64)
        return bool(np.all(pts >= self.lower) and np.all(pts <= self.upper))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One uniform draw from the box."""
        return rng.uniform(self.lower, self.upper)


@dataclass(frozen=True)
class MoveProbabilities:
    """Base move mix, adjusted and renormalised at the k boundaries."""

    birth: float = 0.2
    death: float = 0.2
    split: float = 0.2
    merge: float = 0.2
    update: float = 0.2

    def __post_init__(self):
        probs = (self.birth, self.death, self.split, self.merge, self.update)
        if any(p < 0 for p in probs):
            raise ValueError("move probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"move probabilities must sum to 1, got {sum(probs)}")

    def at(self, k: int, k_max: int) -> tuple[float, float, float, float, float]:
        """Effective (birth, death, split, merge, update) mix at size ``k``.

        Death, split and merge are switched off at ``k = 0``, merge also at
        ``k = 1``, and birth and split at ``k >= k_max``; whatever remains is
        rescaled to sum to one.
        """
        b, d, s, m, u = (self.birth, self.death, self.split,
                         self.merge, self.update)
        if k == 0:
            d = s = m = 0.0
        if k == 1:
            m = 0.0
        if k >= k_max:
            b = s = 0.0
        total = b + d + s + m + u
        if total <= 0.0:
            raise ValueError(f"no move has positive probability at k={k}")
        return (b / total, d / total, s / total, m / total, u / total)


@dataclass(frozen=True)
class MoveOutcome:
    """Result of one sampler step.

    ``proposed`` is the post-step state: the new configuration when the
    inner Metropolis test accepted, otherwise the input state unchanged.
    ``log_ratio`` is the log acceptance ratio before capping at zero
    (``-inf`` for auto-rejected proposals).
    """

    kind: str
    proposed: SamplerState
    log_ratio: float
    accepted: bool


@dataclass(frozen=True, eq=False)
class SamplerContext:
    """Everything a move needs to know besides the current state."""

    dataset: model.Dataset
    basis: model.Basis
    metric: model.Metric
    criterion: object
    region: BirthRegion
    k_max: int
    zeta: float
    ratio_mode: str
    probabilities: MoveProbabilities
    rw_scale: np.ndarray
    global_prob: float
    calibration: float = field(init=False)
    log_volume: float = field(init=False)

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")
        if self.ratio_mode not in RATIO_MODES:
            raise ValueError(
                f"ratio_mode must be one of {RATIO_MODES}, not {self.ratio_mode!r}"
            )
        if not 0.0 <= self.global_prob <= 1.0:
            raise ValueError("global_prob must lie in [0, 1]")
        rw = np.ascontiguousarray(self.rw_scale, dtype=np.float64)
        if rw.shape != (self.dataset.n_inputs,) or not np.all(rw > 0):
            raise ValueError("rw_scale must be a positive vector of length d")
        object.__setattr__(self, "rw_scale", rw)
        object.__setattr__(self, "calibration",
                           self.criterion.calibration_constant())
        object.__setattr__(self, "log_volume", self.region.log_volume)


def make_context(dataset: model.Dataset, basis: model.Basis,
                 criterion, metric: model.Metric = model.EUCLIDEAN, *,
                 region: BirthRegion | None = None,
                 k_max: int = 50,
                 zeta: float | None = None,
                 birth_margin: float = 0.1,
                 ratio_mode: str = "derived",
                 probabilities: MoveProbabilities | None = None,
                 rw_step_frac: float = 0.1,
                 global_prob: float = 0.1) -> SamplerContext:
    """Assemble a ``SamplerContext`` with the documented defaults.

    ``zeta`` (the split/merge interaction radius) defaults to 5% of the
    birth region's largest side; the random-walk step is ``rw_step_frac``
    of each side.
    """
    if region is None:
        region = BirthRegion.from_inputs(dataset.x, birth_margin)
    widths = region.widths
    if zeta is None:
        zeta = 0.05 * float(widths.max())
    if not rw_step_frac > 0:
        raise ValueError("rw_step_frac must be positive")
    probs = probabilities if probabilities is not None else MoveProbabilities()
    return SamplerContext(
        dataset=dataset, basis=basis, metric=metric, criterion=criterion,
        region=region, k_max=k_max, zeta=float(zeta), ratio_mode=ratio_mode,
        probabilities=probs, rw_scale=rw_step_frac * widths,
        global_prob=global_prob,
    )


def evaluate_state(centres, ctx: SamplerContext) -> SamplerState | None:
    """Build the cached state for a centre configuration.

    Returns ``None`` when the configuration is unusable: a centre outside
    the region, more than ``k_max`` centres, a rank-deficient design, or an
    exactly-fitted output.
    """
    centres = np.ascontiguousarray(centres, dtype=np.float64)
    k = centres.shape[0]
    if k > ctx.k_max:
        return None
    if k and not ctx.region.contains(centres):
        return None
    try:
        rss, fit_term = model.posterior_parts(ctx.dataset, centres,
                                              ctx.basis, ctx.metric)
    except model.DegenerateDesignError:
        return None
    if fit_term == float("-inf"):
        return None
    return SamplerState(centres, rss, fit_term - ctx.calibration * k)


def initial_state(ctx: SamplerContext, k_init: int,
                  rng: np.random.Generator) -> SamplerState:
    """Starting configuration: ``k_init`` centres on distinct training inputs.

    Redraws on the rare degenerate draw (duplicate input rows, say); raises
    ``DegenerateDesignError`` if no valid configuration is found, which for
    ``k_init = 0`` means the bare affine design is itself degenerate.
    """
    if not 0 <= k_init <= ctx.k_max:
        raise ValueError(f"k_init must lie in [0, {ctx.k_max}]")
    n = ctx.dataset.n_samples
    d = ctx.dataset.n_inputs
    if k_init > n:
        raise ValueError("k_init exceeds the number of training samples")
    for _ in range(100):
        if k_init == 0:
            centres = np.empty((0, d))
        else:
            rows = rng.choice(n, size=k_init, replace=False)
            centres = ctx.dataset.x[np.sort(rows)].copy()
        state = evaluate_state(centres, ctx)
        if state is not None:
            return state
        if k_init == 0:
            break
    raise model.DegenerateDesignError(
        "could not build a valid initial state; is the dataset degenerate?"
    )


# ---------------------------------------------------------------------------
# log acceptance ratios
# ---------------------------------------------------------------------------

def _sum_log_residuals(state: SamplerState) -> float:
    return float(np.log(state.residuals).sum())


def _fit_gap(current: SamplerState, proposed: SamplerState,
             ctx: SamplerContext) -> float:
    """(N/2) * sum_i ln(rss_i(current) / rss_i(proposed))."""
    return 0.5 * ctx.dataset.n_samples * (
        _sum_log_residuals(current) - _sum_log_residuals(proposed)
    )


def birth_log_ratio(current: SamplerState, proposed: SamplerState,
                    ctx: SamplerContext) -> float:
    """Log acceptance ratio for adding one uniformly drawn centre.

    Fit gap plus ``ln(volume) - calibration - ln(k + 1)``: the region volume
    enters because the proposal density of the new centre is 1/volume, the
    calibration constant prices the extra centre, and ``k + 1`` (the
    proposed size) counts the ways the reverse death move can pick it.
    """
    return (_fit_gap(current, proposed, ctx)
            + ctx.log_volume - ctx.calibration - math.log(proposed.k))


def death_log_ratio(current: SamplerState, proposed: SamplerState,
                    ctx: SamplerContext) -> float:
    """Log acceptance ratio for deleting one centre; inverse of the birth."""
    return (_fit_gap(current, proposed, ctx)
            + math.log(current.k) + ctx.calibration - ctx.log_volume)


def _log_pair_scale(ctx: SamplerContext) -> float:
    """d * ln(scale) term shared by the split and merge ratios.

    In ``derived`` mode the scale is ``2 * zeta``: merging maps the pair
    midpoint back and the split offset is uniform on a box of side
    ``2 * zeta`` around it, whose change of variables contributes ``2^d``.
    ``as-printed`` mode keeps the conventional published constant ``zeta^d``
    that omits that Jacobian factor.
    """
    scale = ctx.zeta if ctx.ratio_mode == "as-printed" else 2.0 * ctx.zeta
    return ctx.dataset.n_inputs * math.log(scale)


def split_log_ratio(current: SamplerState, proposed: SamplerState,
                    ctx: SamplerContext) -> float:
    """Log acceptance ratio for splitting one centre into a nearby pair."""
    return (_fit_gap(current, proposed, ctx)
            + math.log(current.k) - ctx.calibration - math.log(proposed.k)
            + _log_pair_scale(ctx))


def merge_log_ratio(current: SamplerState, proposed: SamplerState,
                    ctx: SamplerContext) -> float:
    """Log acceptance ratio for merging two close centres; inverse of split."""
    return (_fit_gap(current, proposed, ctx)
            + math.log(current.k) + ctx.calibration - math.log(proposed.k)
            - _log_pair_scale(ctx))


# ---------------------------------------------------------------------------
# proposals
# ---------------------------------------------------------------------------

def _reject(kind: str, state: SamplerState) -> MoveOutcome:
    return MoveOutcome(kind, state, float("-inf"), False)


def _metropolis(kind: str, state: SamplerState, proposed: SamplerState,
                log_ratio: float, rng: np.random.Generator) -> MoveOutcome:
    u = rng.uniform()
    accepted = log_ratio >= 0.0 or (u > 0.0 and math.log(u) <= log_ratio)
    return MoveOutcome(kind, proposed if accepted else state,
                       log_ratio, accepted)


def propose_birth(state: SamplerState, ctx: SamplerContext,
                  rng: np.random.Generator) -> MoveOutcome:
    """Append a centre drawn uniformly from the birth region."""
    location = ctx.region.sample(rng)
    centres = np.vstack([state.centres, location[None, :]])
    proposed = evaluate_state(centres, ctx)
    if proposed is None:
        return _reject("birth", state)
    return _metropolis("birth", state, proposed,
                       birth_log_ratio(state, proposed, ctx), rng)


def propose_death(state: SamplerState, ctx: SamplerContext,
                  rng: np.random.Generator) -> MoveOutcome:
    """Delete a uniformly chosen centre.  Requires ``k >= 1``."""
    j = int(rng.integers(state.k))
    centres = np.delete(state.centres, j, axis=0)
    proposed = evaluate_state(centres, ctx)
    if proposed is None:
        return _reject("death", state)
    return _metropolis("death", state, proposed,
                       death_log_ratio(state, proposed, ctx), rng)


def propose_split(state: SamplerState, ctx: SamplerContext,
                  rng: np.random.Generator) -> MoveOutcome:
    """Replace one centre by a symmetric pair ``centre -+ u * zeta``.

    ``u`` is uniform on ``[0, 1]^d``.  The move is rejected unless the pair
    separation is below ``2 * zeta`` (so the reverse merge could recreate
    it) and below the distance from the split centre to every other centre.
    The surviving centres keep their order; the pair goes to the end.
    Requires ``k >= 1``.
    """
    j = int(rng.integers(state.k))
    centre = state.centres[j]
    offset = rng.uniform(0.0, 1.0, size=centre.shape[0]) * ctx.zeta
    separation = 2.0 * float(np.linalg.norm(offset))
    if separation >= 2.0 * ctx.zeta:
        return _reject("split", state)
    others = np.delete(state.centres, j, axis=0)
    if others.shape[0]:
        nearest = float(np.linalg.norm(others - centre, axis=1).min())
        if separation >= nearest:
            return _reject("split", state)
    centres = np.vstack([others, (centre - offset)[None, :],
                         (centre + offset)[None, :]])
    proposed = evaluate_state(centres, ctx)
    if proposed is None:
        return _reject("split", state)
    return _metropolis("split", state, proposed,
                       split_log_ratio(state, proposed, ctx), rng)


def propose_merge(state: SamplerState, ctx: SamplerContext,
                  rng: np.random.Generator) -> MoveOutcome:
    """Replace a chosen centre and its nearest neighbour by their midpoint.

    Rejected when the pair is at least ``2 * zeta`` apart, matching the
    split move's reach.  Ties for the nearest neighbour go to the lowest
    index.  The merged centre goes to the end.  Requires ``k >= 2``.
    """
    j = int(rng.integers(state.k))
    gaps = np.linalg.norm(state.centres - state.centres[j], axis=1)
    gaps[j] = np.inf
    partner = int(np.argmin(gaps))
    if gaps[partner] >= 2.0 * ctx.zeta:
        return _reject("merge", state)
    midpoint = 0.5 * (state.centres[j] + state.centres[partner])
    keep = np.delete(state.centres, [j, partner], axis=0)
    centres = np.vstack([keep, midpoint[None, :]])
    proposed = evaluate_state(centres, ctx)
    if proposed is None:
        return _reject("merge", state)
    return _metropolis("merge", state, proposed,
                       merge_log_ratio(state, proposed, ctx), rng)


def propose_update(state: SamplerState, ctx: SamplerContext,
                   rng: np.random.Generator) -> MoveOutcome:
    """Perturb one centre in place, leaving the model size alone.

    With probability ``1 - global_prob`` the centre takes a Gaussian step of
    scale ``rw_scale``; otherwise it is redrawn uniformly from the region.
    Both branches are symmetric proposals, so the acceptance ratio is the
    posterior ratio at fixed ``k``, i.e. the fit gap.  At ``k = 0`` there is
    nothing to move and the step counts as accepted.
    """
    if state.k == 0:
        return MoveOutcome("update", state, 0.0, True)
    j = int(rng.integers(state.k))
    if rng.uniform() < ctx.global_prob:
        candidate = ctx.region.sample(rng)
    else:
        candidate = state.centres[j] + rng.standard_normal(
            state.centres.shape[1]) * ctx.rw_scale
    centres = state.centres.copy()
    centres[j] = candidate
    proposed = evaluate_state(centres, ctx)
    if proposed is None:
        return _reject("update", state)
    return _metropolis("update", state, proposed,
                       _fit_gap(state, proposed, ctx), rng)


_PROPOSERS = {
    "birth": propose_birth,
    "death": propose_death,
    "split": propose_split,
    "merge": propose_merge,
    "update": propose_update,
}


def _choose_move(u: float, probs: tuple[float, float, float, float, float]) -> str:
    """Map a uniform draw to a move kind via cumulative thresholds."""
    b, d, s, m, _ = probs
    if u < b:
        return "birth"
    if u < b + d:
        return "death"
    if u < b + d + s:
        return "split"
    if u < b + d + s + m:
        return "merge"
    return "update"


def rjmcmc_step(state: SamplerState, ctx: SamplerContext,
                rng: np.random.Generator) -> MoveOutcome:
    """One step of the reversible-jump kernel.

    Draws the move kind from the size-adjusted mix, then delegates to the
    move's proposal.  The returned outcome carries the post-step state, so
    chaining calls is a Markov chain on centre configurations whose invariant
    law is the marginal posterior.
    """
    probs = ctx.probabilities.at(state.k, ctx.k_max)
    kind = _choose_move(rng.uniform(), probs)
    return _PROPOSERS[kind](state, ctx, rng)

"""Simulated annealing driven by the reversible-jump kernel.

Each iteration runs one kernel step at the cold target, then applies an
outer Metropolis test at the current temperature ``T``:

    accept z* over z with probability min{1, exp((1/T - 1) * (lp* - lp))}

where ``lp`` is the log marginal posterior.  Because the kernel itself
leaves the posterior invariant, this outer test is all that is needed to
make the chain target the posterior raised to the power ``1/T``; as ``T``
drops, mass concentrates on the maximum-posterior configurations.  At
``T = 1`` the test always accepts and the procedure reduces to plain
posterior sampling.  The best state seen so far is tracked separately, so
the returned configuration never depends on where the chain happens to end.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import model
from .criteria import Criterion
from .data import mean_squared_error
from .moves import (MoveProbabilities, SamplerContext, SamplerState,
                    initial_state, make_context, rjmcmc_step)

SCHEDULE_KINDS = ("geometric", "logarithmic")


@dataclass(frozen=True)
class CoolingSchedule:
    """Deterministic temperature ladder, clipped below at ``floor``.

    ``geometric``:   T(i) = max(t0 * gamma^i, floor)
    ``logarithmic``: T(i) = max(t0 / ln(i + e), floor)
    """

    kind: str = "geometric"
    t0: float = 1.0
    gamma: float = 0.99
    floor: float = 0.01

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(
                f"schedule must be one of {SCHEDULE_KINDS}, not {self.kind!r}"
            )
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not 0 < self.floor <= self.t0:
            raise ValueError("floor must satisfy 0 < floor <= t0")
        if self.kind == "geometric" and not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")

    @classmethod
    def geometric_reaching_floor(cls, t0: float = 1.0, floor: float = 0.01,
                                 iterations: int = 500,
                                 fraction: float = 0.8) -> "CoolingSchedule":
        """Geometric schedule whose floor is hit ``fraction`` into the run."""
        if not 0 < fraction <= 1:
            raise ValueError("fraction must lie in (0, 1]")
        steps = max(1, math.ceil(fraction * max(iterations, 1)))
        gamma = (floor / t0) ** (1.0 / steps)
        return cls("geometric", t0, gamma, floor)

    def temperature(self, i: int) -> float:
        """Temperature after ``i`` completed iterations (``i = 0`` gives t0)."""
        if i < 0:
            raise ValueError("iteration index must be nonnegative")
        if self.kind == "geometric":
            return max(self.t0 * self.gamma ** i, self.floor)
        return max(self.t0 / math.log(i + math.e), self.floor)


def annealed_accept(candidate_lp: float, current_lp: float,
                    temperature: float, rng: np.random.Generator) -> bool:
    """Outer Metropolis test at the given temperature.

    Accepts with probability ``min{1, exp((1/T - 1) * gap)}``.  A uniform
    draw is consumed on every call so the random stream advances the same
    way whether or not the decision is a foregone conclusion.
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    if not math.isfinite(candidate_lp):
        rng.uniform()
        return False
    log_r = (1.0 / temperature - 1.0) * (candidate_lp - current_lp)
    u = rng.uniform()
    return log_r >= 0.0 or (u > 0.0 and math.log(u) <= log_r)


@dataclass(frozen=True)
class TraceRecord:
    """Per-iteration diagnostics of an annealing run."""

    iteration: int
    temperature: float
    k: int
    log_post: float
    move: str
    inner_accepted: bool
    outer_accepted: bool
    train_mse: float
    test_mse: float | None


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of one annealing run (or the best of several chains)."""

    map_state: SamplerState
    coefficients: np.ndarray
    trace: list[TraceRecord]
    seed: int
    train_mse: float
    test_mse: float | None


@dataclass(frozen=True)
class AnnealSettings:
    """Everything configurable about a fit, with the documented defaults."""

    iterations: int = 500
    criterion: str = "mdl"
    basis: model.Basis = field(default_factory=model.Basis)
    metric: model.Metric = model.EUCLIDEAN
    schedule: CoolingSchedule | None = None
    k_init: int = 1
    k_max: int = 50
    zeta: float | None = None
    birth_margin: float = 0.1
    ratio_mode: str = "derived"
    probabilities: MoveProbabilities = field(default_factory=MoveProbabilities)
    rw_step_frac: float = 0.1
    global_prob: float = 0.1
    track_test_mse: bool = True
    chains: int = 1

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.chains < 1:
            raise ValueError("chains must be at least 1")

    def resolved_schedule(self) -> CoolingSchedule:
        if self.schedule is not None:
            return self.schedule
        return CoolingSchedule.geometric_reaching_floor(
            iterations=self.iterations)


def _context_for(train: model.Dataset, settings: AnnealSettings) -> SamplerContext:
    criterion = Criterion(settings.criterion, train.n_samples,
                          train.n_inputs, train.n_outputs)
    return make_context(
        train, settings.basis, criterion, settings.metric,
        k_max=settings.k_max, zeta=settings.zeta,
        birth_margin=settings.birth_margin, ratio_mode=settings.ratio_mode,
        probabilities=settings.probabilities,
        rw_step_frac=settings.rw_step_frac, global_prob=settings.global_prob,
    )


def _errors_at(state: SamplerState, ctx: SamplerContext,
               test: model.Dataset | None, want_test: bool):
    """Training MSE from the cached residuals; test MSE by refitting."""
    n = ctx.dataset.n_samples
    c = ctx.dataset.n_outputs
    train_mse = float(state.residuals.sum()) / (n * c)
    test_mse = None
    if want_test and test is not None:
        coef = model.fit_least_squares(ctx.dataset, state.centres,
                                       ctx.basis, ctx.metric)
        pred = model.predict(test.x, state.centres, coef, ctx.basis, ctx.metric)
        test_mse = mean_squared_error(pred, test.y)
    return train_mse, test_mse


def run_annealing(train: model.Dataset, settings: AnnealSettings, seed: int,
                  test: model.Dataset | None = None) -> FitResult:
    """Anneal one chain and return its maximum-posterior configuration.

    All randomness flows from ``seed`` through a single generator, so a
    repeated call reproduces the run exactly.  Iteration ``i`` (1-based in
    the trace) runs at ``schedule.temperature(i - 1)``; with
    ``iterations = 0`` the initial state is returned as the maximum.
    """
    rng = np.random.default_rng(seed)
    ctx = _context_for(train, settings)
    schedule = settings.resolved_schedule()

    state = initial_state(ctx, settings.k_init, rng)
    best = state
    trace: list[TraceRecord] = []
    for i in range(1, settings.iterations + 1):
        temp = schedule.temperature(i - 1)
        outcome = rjmcmc_step(state, ctx, rng)
        outer = annealed_accept(outcome.proposed.log_post, state.log_post,
                                temp, rng)
        if outer:
            state = outcome.proposed
        if state.log_post > best.log_post:
            best = state
        train_mse, test_mse = _errors_at(state, ctx, test,
                                         settings.track_test_mse)
        trace.append(TraceRecord(
            iteration=i, temperature=float(temp), k=state.k,
            log_post=float(state.log_post), move=outcome.kind,
            inner_accepted=outcome.accepted, outer_accepted=outer,
            train_mse=train_mse, test_mse=test_mse,
        ))

    coefficients = model.fit_least_squares(train, best.centres,
                                           settings.basis, settings.metric)
    train_mse, _ = _errors_at(best, ctx, None, False)
    test_mse = None
    if test is not None:
        pred = model.predict(test.x, best.centres, coefficients,
                             settings.basis, settings.metric)
        test_mse = mean_squared_error(pred, test.y)
    return FitResult(map_state=best, coefficients=coefficients, trace=trace,
                     seed=seed, train_mse=train_mse, test_mse=test_mse)


def run_multi_start(train: model.Dataset, settings: AnnealSettings, seed: int,
                    test: model.Dataset | None = None) -> list[FitResult]:
    """Run ``settings.chains`` independent chains seeded ``seed + s``.

    Chains are independent given their seeds, so results do not depend on
    thread scheduling.  Use ``best_result`` to pick the winner.
    """
    seeds = [seed + s for s in range(settings.chains)]
    if settings.chains == 1:
        return [run_annealing(train, settings, seeds[0], test)]
    with ThreadPoolExecutor(max_workers=settings.chains) as pool:
        return list(pool.map(
            lambda s: run_annealing(train, settings, s, test), seeds))


def best_result(results: list[FitResult]) -> FitResult:
    """The chain with the highest posterior; ties keep the earliest chain."""
    if not results:
        raise ValueError("no results to choose from")
    best = results[0]
    for candidate in results[1:]:
        if candidate.map_state.log_post > best.map_state.log_post:
            best = candidate
    return best


# ---------------------------------------------------------------------------
# trace serialisation
# ---------------------------------------------------------------------------

_TRACE_FIELDS = ("iteration", "temperature", "k", "log_post", "move",
                 "inner_accepted", "outer_accepted", "train_mse", "test_mse")


def _record_dict(record: TraceRecord) -> dict:
    return {name: getattr(record, name) for name in _TRACE_FIELDS}


def write_trace_jsonl(path, trace: list[TraceRecord]) -> None:
    """One JSON object per iteration, fields in trace-column order."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in trace:
            fh.write(json.dumps(_record_dict(record)) + "\n")


def write_trace_csv(path, trace: list[TraceRecord]) -> None:
    """CSV with one row per iteration.

    Booleans are written as ``true``/``false`` and a missing test MSE as an
    empty field; floats use ``repr`` so reruns are byte-identical.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRACE_FIELDS)
        for record in trace:
            row = []
            for name in _TRACE_FIELDS:
                value = getattr(record, name)
                if isinstance(value, bool):
                    row.append("true" if value else "false")
                elif value is None:
                    row.append("")
                elif isinstance(value, float):
                    row.append(repr(value))
                else:
                    row.append(value)
            writer.writerow(row)

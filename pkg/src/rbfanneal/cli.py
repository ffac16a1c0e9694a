"""Command-line interface: ``generate``, ``fit`` and ``evaluate``.

Fit options can come from flags, from a flat ``key=value`` config file
(``#`` comments allowed), or from built-in defaults, in that order of
precedence.  The effective configuration is echoed into the result JSON so a
saved result pins down the run that produced it.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import data
from ._backend import backend_name
from .annealing import (AnnealSettings, CoolingSchedule, FitResult,
                        best_result, run_multi_start, write_trace_csv,
                        write_trace_jsonl)
from .model import Basis, DegenerateDesignError, Metric, EUCLIDEAN, predict
from .moves import MoveProbabilities


class ConfigError(Exception):
    """Bad flag, config-file entry, or option combination."""


# ---------------------------------------------------------------------------
# option conversion
# ---------------------------------------------------------------------------

def _int_at_least(least: int) -> Callable[[str], int]:
    def convert(s: str) -> int:
        v = int(s)
        if v < least:
            raise ValueError(f"must be an integer >= {least}")
        return v
    return convert


def _float_positive(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise ValueError("must be a positive number")
    return v


def _float_at_least(least: float) -> Callable[[str], float]:
    def convert(s: str) -> float:
        v = float(s)
        if v < least:
            raise ValueError(f"must be a number >= {least}")
        return v
    return convert


def _float_unit(s: str) -> float:
    v = float(s)
    if not 0.0 <= v <= 1.0:
        raise ValueError("must lie in [0, 1]")
    return v


def _gamma(s: str) -> float:
    v = float(s)
    if not 0.0 < v <= 1.0:
        raise ValueError("must lie in (0, 1]")
    return v


def _choice_of(*names: str) -> Callable[[str], str]:
    def convert(s: str) -> str:
        if s not in names:
            raise ValueError(f"must be one of {', '.join(names)}")
        return s
    return convert


def _bool(s: str) -> bool:
    table = {"true": True, "1": True, "yes": True,
             "false": False, "0": False, "no": False}
    try:
        return table[s.strip().lower()]
    except KeyError:
        raise ValueError("must be true or false") from None


def _move_probs(s: str) -> MoveProbabilities:
    parts = s.split(",")
    if len(parts) != 5:
        raise ValueError("must be five comma-separated probabilities "
                         "(birth,death,split,merge,update)")
    return MoveProbabilities(*[float(p) for p in parts])


@dataclass(frozen=True)
class _Opt:
    key: str
    convert: Callable[[str], object] | None
    default: object
    help: str


_FIT_OPTIONS = (
    _Opt("criterion", _choice_of("aic", "bic", "mdl"), "mdl",
         "model-order criterion"),
    _Opt("iterations", _int_at_least(0), 500, "annealing iterations"),
    _Opt("seed", _int_at_least(0), 0, "random seed (chain s uses seed+s)"),
    _Opt("basis", _choice_of("linear", "cubic", "thin-plate", "gaussian"),
         "cubic", "radial basis profile"),
    _Opt("basis-width", _float_positive, None, "gaussian basis width"),
    _Opt("split", _int_at_least(1), None,
         "train on the first SPLIT rows, test on the rest"),
    _Opt("split-policy", _choice_of("first", "shuffled"), "first",
         "how to pick training rows"),
    _Opt("split-seed", _int_at_least(0), 0, "seed for the shuffled policy"),
    _Opt("chains", _int_at_least(1), 1, "independent annealing chains"),
    _Opt("kmax", _int_at_least(1), 50, "largest allowed number of centres"),
    _Opt("zeta", _float_positive, None,
         "split/merge interaction radius (default: 5% of the widest side)"),
    _Opt("birth-margin", _float_at_least(0.0), 0.1,
         "relative padding of the birth region around the inputs"),
    _Opt("ratio-mode", _choice_of("derived", "as-printed"), "derived",
         "split/merge ratio constant convention"),
    _Opt("move-probs", _move_probs,
         MoveProbabilities(), "birth,death,split,merge,update mix"),
    _Opt("rw-step-frac", _float_positive, 0.1,
         "random-walk step as a fraction of each region side"),
    _Opt("global-prop-prob", _float_unit, 0.1,
         "chance an update redraws the centre uniformly"),
    _Opt("schedule", _choice_of("geometric", "logarithmic"), "geometric",
         "cooling schedule kind"),
    _Opt("t0", _float_positive, 1.0, "initial temperature"),
    _Opt("gamma", _gamma, None,
         "geometric decay rate (default: reach the floor at 80% of the run)"),
    _Opt("floor", _float_positive, 0.01, "temperature floor"),
    _Opt("k-init", _int_at_least(0), 1, "number of initial centres"),
    _Opt("test-mse", _bool, True, "track test MSE along the trace"),
    _Opt("metric-weight", None, None,
         "CSV file with a positive definite distance weight matrix"),
)


def _dest(key: str) -> str:
    return key.replace("-", "_")


def _read_config_file(path) -> dict[str, str]:
    known = {opt.key for opt in _FIT_OPTIONS}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    entries: dict[str, str] = {}
    for ln, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}: line {ln}: expected key=value")
        if key not in known:
            raise ConfigError(f"{path}: line {ln}: unknown option {key!r}")
        entries[key] = value
    return entries


def _effective_options(args, file_entries: dict[str, str]) -> dict:
    """Merge flag, config-file and default values for every fit option."""
    effective = {}
    for opt in _FIT_OPTIONS:
        raw = getattr(args, _dest(opt.key))
        if raw is None:
            raw = file_entries.get(opt.key)
        if raw is None:
            effective[opt.key] = opt.default
            continue
        if opt.convert is None:
            effective[opt.key] = raw
            continue
        try:
            effective[opt.key] = opt.convert(raw)
        except ValueError as exc:
            raise ConfigError(f"{opt.key}: {exc} (got {raw!r})") from None
    return effective


def _config_echo(effective: dict) -> dict:
    echo = {}
    for key, value in effective.items():
        if isinstance(value, MoveProbabilities):
            value = [value.birth, value.death, value.split,
                     value.merge, value.update]
        echo[key] = value
    return echo


def _resolve_schedule(eff: dict) -> CoolingSchedule:
    try:
        if eff["schedule"] == "logarithmic":
            return CoolingSchedule("logarithmic", t0=eff["t0"],
                                   floor=eff["floor"])
        if eff["gamma"] is None:
            return CoolingSchedule.geometric_reaching_floor(
                t0=eff["t0"], floor=eff["floor"], iterations=eff["iterations"])
        return CoolingSchedule("geometric", t0=eff["t0"], gamma=eff["gamma"],
                               floor=eff["floor"])
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None


def _resolve_basis(eff: dict) -> Basis:
    try:
        return Basis(eff["basis"], eff["basis-width"])
    except ValueError as exc:
        raise ConfigError(f"basis: {exc}") from None


def _resolve_metric(eff: dict) -> Metric:
    path = eff["metric-weight"]
    if path is None:
        return EUCLIDEAN
    try:
        weight = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise data.DataFormatError(f"{path}: {exc}") from None
    try:
        return Metric(weight)
    except ValueError as exc:
        raise ConfigError(f"metric-weight: {exc}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    if args.n < 1:
        raise ConfigError("n: must be a positive integer")
    if args.sigma < 0:
        raise ConfigError("sigma: must be nonnegative")
    if args.seed < 0:
        raise ConfigError("seed: must be nonnegative")
    dataset = data.generate_robot_arm(args.n, args.sigma, args.seed)
    data.save_csv(args.out, dataset)
    print(f"wrote {dataset.n_samples} samples to {args.out}")
    return 0


def _write_traces(base_path: str, results: list[FitResult]) -> None:
    writer = write_trace_csv if base_path.endswith(".csv") else write_trace_jsonl
    if len(results) == 1:
        writer(base_path, results[0].trace)
        return
    for s, res in enumerate(results):
        writer(f"{base_path}.chain{s}", res.trace)


def _cmd_fit(args) -> int:
    file_entries = _read_config_file(args.config) if args.config else {}
    eff = _effective_options(args, file_entries)

    dataset = data.load_csv(args.data)
    if eff["split"] is not None:
        try:
            train, test = data.split_dataset(dataset, eff["split"],
                                             eff["split-policy"],
                                             eff["split-seed"])
        except ValueError as exc:
            raise ConfigError(f"split: {exc}") from None
    else:
        train, test = dataset, None

    basis = _resolve_basis(eff)
    metric = _resolve_metric(eff)
    schedule = _resolve_schedule(eff)
    try:
        settings = AnnealSettings(
            iterations=eff["iterations"], criterion=eff["criterion"],
            basis=basis, metric=metric, schedule=schedule,
            k_init=eff["k-init"], k_max=eff["kmax"], zeta=eff["zeta"],
            birth_margin=eff["birth-margin"], ratio_mode=eff["ratio-mode"],
            probabilities=eff["move-probs"],
            rw_step_frac=eff["rw-step-frac"],
            global_prob=eff["global-prop-prob"],
            track_test_mse=eff["test-mse"], chains=eff["chains"],
        )
        if settings.k_init > settings.k_max:
            raise ValueError("k-init cannot exceed kmax")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    results = run_multi_start(train, settings, eff["seed"], test)
    best = best_result(results)
    best_chain = next(i for i, r in enumerate(results) if r is best)

    if args.trace:
        _write_traces(args.trace, results)

    payload = {
        "k_map": best.map_state.k,
        "log_post": best.map_state.log_post,
        "centres": best.map_state.centres.tolist(),
        "coefficients": best.coefficients.tolist(),
        "train_mse": best.train_mse,
        "test_mse": best.test_mse,
        "seed": eff["seed"],
        "chains": settings.chains,
        "best_chain": best_chain,
        "n_train": train.n_samples,
        "n_test": test.n_samples if test is not None else 0,
        "n_inputs": train.n_inputs,
        "n_outputs": train.n_outputs,
        "basis": {"kind": basis.kind, "width": basis.width},
        "criterion": eff["criterion"],
        "metric_weight": (metric.weight.tolist()
                          if metric.weight is not None else None),
        "backend": backend_name(),
        "config": _config_echo(eff),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    line = (f"k_map={best.map_state.k} "
            f"log_post={best.map_state.log_post!r} "
            f"train_mse={best.train_mse!r}")
    if best.test_mse is not None:
        line += f" test_mse={best.test_mse!r}"
    print(line)
    return 0


def _cmd_evaluate(args) -> int:
    try:
        with open(args.result, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise data.DataFormatError(f"{args.result}: not valid JSON: {exc}") from None
    try:
        d = int(payload["n_inputs"])
        c = int(payload["n_outputs"])
        centres = np.asarray(payload["centres"], dtype=np.float64).reshape(-1, d)
        coefficients = np.asarray(payload["coefficients"], dtype=np.float64)
        basis = Basis(payload["basis"]["kind"], payload["basis"]["width"])
        weight = payload.get("metric_weight")
        metric = Metric(np.asarray(weight)) if weight is not None else EUCLIDEAN
    except (KeyError, TypeError, ValueError) as exc:
        raise data.DataFormatError(
            f"{args.result}: not a fit result file ({exc})") from None

    dataset = data.load_csv(args.data, n_inputs=d, n_outputs=c)
    if args.split is not None:
        try:
            train, test = data.split_dataset(dataset, args.split,
                                             args.split_policy,
                                             args.split_seed)
        except ValueError as exc:
            raise ConfigError(f"split: {exc}") from None
        for name, part in (("train_mse", train), ("test_mse", test)):
            pred = predict(part.x, centres, coefficients, basis, metric)
            print(f"{name}={data.mean_squared_error(pred, part.y)!r}")
    else:
        pred = predict(dataset.x, centres, coefficients, basis, metric)
        print(f"mse={data.mean_squared_error(pred, dataset.y)!r}")
    return 0


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rbfanneal",
        description="Fit radial basis function networks whose size and "
                    "centre placement are chosen by annealed model search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic robot-arm CSV")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument("--n", type=int, required=True, help="number of samples")
    gen.add_argument("--sigma", type=float, default=0.05,
                     help="output noise standard deviation")
    gen.add_argument("--seed", type=int, default=0, help="random seed")
    gen.set_defaults(func=_cmd_generate)

    fit = sub.add_parser("fit", help="fit a model to a CSV dataset")
    fit.add_argument("--data", required=True, help="input CSV path")
    fit.add_argument("--out", required=True, help="result JSON path")
    fit.add_argument("--trace", default=None,
                     help="per-iteration trace path (.csv for CSV, "
                          "anything else for JSON lines)")
    fit.add_argument("--config", default=None,
                     help="key=value config file (flags win over it)")
    for opt in _FIT_OPTIONS:
        if opt.key == "test-mse":
            fit.add_argument("--no-test-mse", dest=_dest(opt.key),
                             action="store_const", const="false",
                             default=None, help="skip per-iteration test MSE")
        else:
            fit.add_argument(f"--{opt.key}", dest=_dest(opt.key),
                             default=None, metavar="V", help=opt.help)
    fit.set_defaults(func=_cmd_fit)

    ev = sub.add_parser("evaluate", help="score a saved fit on a dataset")
    ev.add_argument("--result", required=True, help="fit result JSON path")
    ev.add_argument("--data", required=True, help="input CSV path")
    ev.add_argument("--split", type=int, default=None,
                    help="report train/test MSE under this split")
    ev.add_argument("--split-policy", choices=("first", "shuffled"),
                    default="first")
    ev.add_argument("--split-seed", type=int, default=0)
    ev.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except data.DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (DegenerateDesignError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

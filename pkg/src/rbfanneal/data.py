"""Dataset generation, CSV round-tripping, splitting, and error metrics."""

from __future__ import annotations

import numpy as np

from .model import Dataset

# Two-joint planar arm benchmark: link lengths and the sampling box for the
# joint angles.  The first angle is drawn uniformly from the union of the
# two mirror-image intervals, the second from its single interval.
ARM_LONG = 2.0
ARM_SHORT = 1.3
ANGLE1_LOW, ANGLE1_HIGH = 0.453, 1.932
ANGLE2_LOW, ANGLE2_HIGH = 0.534, 3.142


class DataFormatError(ValueError):
    """A data file does not match the expected CSV layout."""


def robot_arm_surface(x) -> np.ndarray:
    """Noise-free end-effector position for joint angles ``x`` (n, 2)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != 2:
        raise ValueError("robot arm inputs must have shape (n, 2)")
    x1 = x[:, 0]
    reach = x1 + x[:, 1]
    y1 = ARM_LONG * np.cos(x1) + ARM_SHORT * np.cos(reach)
    y2 = ARM_LONG * np.sin(x1) + ARM_SHORT * np.sin(reach)
    return np.column_stack([y1, y2])


def generate_robot_arm(n: int, sigma: float = 0.05, seed: int = 0) -> Dataset:
    """Synthetic robot-arm regression data with Gaussian output noise.

    The first joint angle is ``s * m`` with ``s`` a fair sign and ``m``
    uniform on [ANGLE1_LOW, ANGLE1_HIGH]; the second is uniform on
    [ANGLE2_LOW, ANGLE2_HIGH].  Draw order (sign block, magnitude block,
    second angle block, noise block) is fixed so a seed pins the dataset.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    magnitude = rng.uniform(ANGLE1_LOW, ANGLE1_HIGH, n)
    x2 = rng.uniform(ANGLE2_LOW, ANGLE2_HIGH, n)
    x = np.column_stack([sign * magnitude, x2])
    y = robot_arm_surface(x) + rng.normal(0.0, sigma, (n, 2))
    return Dataset(x, y)


def _header(d: int, c: int) -> list[str]:
    return [f"x{i}" for i in range(1, d + 1)] + [f"y{i}" for i in range(1, c + 1)]


def save_csv(path, dataset: Dataset) -> None:
    """Write a dataset as CSV with header ``x1..xd,y1..yc``.

    Values are printed with 17 significant digits, enough to reload the
    exact float64 values.
    """
    d, c = dataset.n_inputs, dataset.n_outputs
    rows = np.hstack([dataset.x, dataset.y])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_header(d, c)) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_csv(path, n_inputs: int | None = None,
             n_outputs: int | None = None) -> Dataset:
    """Read a dataset written by ``save_csv``.

    The input/output split is inferred from the ``x1..xd,y1..yc`` header and
    checked against ``n_inputs``/``n_outputs`` when those are given.  Raises
    ``DataFormatError`` with a 1-based line number on any malformed content.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataFormatError(f"{path}: file is empty")

    names = [t.strip() for t in lines[0].split(",")]
    d = sum(1 for t in names if t.startswith("x"))
    c = len(names) - d
    if d < 1 or c < 1 or names != _header(d, c):
        raise DataFormatError(
            f"{path}: line 1: header must read x1..xd,y1..yc, got {lines[0]!r}"
        )
    if n_inputs is not None and d != n_inputs:
        raise DataFormatError(f"{path}: expected {n_inputs} inputs, file has {d}")
    if n_outputs is not None and c != n_outputs:
        raise DataFormatError(f"{path}: expected {n_outputs} outputs, file has {c}")

    values = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != d + c:
            raise DataFormatError(
                f"{path}: line {ln}: expected {d + c} fields, got {len(parts)}"
            )
        try:
            row = [float(p) for p in parts]
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {ln}: {exc}") from None
        if not all(np.isfinite(row)):
            raise DataFormatError(f"{path}: line {ln}: non-finite value")
        values.append(row)
    if not values:
        raise DataFormatError(f"{path}: no data rows")
    arr = np.asarray(values, dtype=np.float64)
    return Dataset(arr[:, :d], arr[:, d:])


def split_dataset(dataset: Dataset, n_train: int, policy: str = "first",
                  seed: int | None = None) -> tuple[Dataset, Dataset]:
    """Partition into train and test sets of ``n_train`` and ``n - n_train``.

    ``first`` keeps file order; ``shuffled`` permutes rows with the given
    seed first.  Both halves must end up non-empty.
    """
    n = dataset.n_samples
    if not 0 < n_train < n:
        raise ValueError(f"n_train must lie strictly between 0 and {n}")
    if policy == "first":
        order = np.arange(n)
    elif policy == "shuffled":
        order = np.random.default_rng(seed).permutation(n)
    else:
        raise ValueError(f"split policy must be 'first' or 'shuffled', not {policy!r}")
    head, tail = order[:n_train], order[n_train:]
    return (Dataset(dataset.x[head], dataset.y[head]),
            Dataset(dataset.x[tail], dataset.y[tail]))


def mean_squared_error(predictions, targets) -> float:
    """Grand-mean squared error over all entries of the output matrix."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ValueError(
            f"shape mismatch: {predictions.shape} vs {targets.shape}"
        )
    diff = predictions - targets
    return float(np.mean(diff * diff))

"""Pure-Python implementation of the numerical kernels.

These two functions are the per-iteration hot path of the sampler.  A
compiled twin lives in ``_fastkernels.pyx``; ``_backend`` picks whichever is
available at import time.  Both implementations follow the same LAPACK
sequence (``dgeqp3`` -> ``dormqr`` -> ``dtrtrs``) so that rank decisions and
residuals agree between them to rounding error.
"""

import numpy as np
from scipy.linalg import lapack as _lapack

# Basis profile codes shared with the compiled kernels.
LINEAR, CUBIC, THIN_PLATE, GAUSSIAN = 0, 1, 2, 3


def build_design(x, centres, kind, width):
    """Assemble the regression design matrix ``[1 | x | phi(||x - centre||)]``.

    Parameters
    ----------
    x : ndarray, shape (n, d)
        Input rows, already transformed to the metric's coordinates.
    centres : ndarray, shape (k, d)
        Basis centre rows in the same coordinates. ``k`` may be zero.
    kind : int
        One of the basis profile codes above.
    width : float
        Gaussian length scale; ignored by the other profiles.

    Returns
    -------
    ndarray, shape (n, 1 + d + k)
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    centres = np.ascontiguousarray(centres, dtype=np.float64)
    n, d = x.shape
    k = centres.shape[0]
    out = np.empty((n, 1 + d + k), dtype=np.float64)
    out[:, 0] = 1.0
    out[:, 1 : 1 + d] = x
    if k == 0:
        return out

    diff = x[:, None, :] - centres[None, :, :]
    sq = np.einsum("tjd,tjd->tj", diff, diff)
    block = out[:, 1 + d :]
    if kind == GAUSSIAN:
        np.exp(sq / (-2.0 * width * width), out=block)
    elif kind == THIN_PLATE:
        # r^2 * ln(r) written as 0.5 * r^2 * ln(r^2), zero at the centre
        safe = np.where(sq > 0.0, sq, 1.0)
        block[:] = np.where(sq > 0.0, 0.5 * sq * np.log(safe), 0.0)
    elif kind == CUBIC:
        r = np.sqrt(sq)
        block[:] = r * r * r
    elif kind == LINEAR:
        np.sqrt(sq, out=block)
    else:
        raise ValueError(f"unknown basis code {kind}")
    return out


def least_squares(design, targets, rank_tol, want_coef):
    """Column-pivoted QR least squares with per-column residual quadratics.

    Returns ``(rank, rss, coef)`` where ``rss[i]`` is the exact sum of squared
    residuals for target column ``i`` (the tail-norm of Q'y, never negative by
    construction) and ``coef`` is the (m, c) coefficient matrix, or ``None``
    when ``want_coef`` is false or the design is rank-deficient.

    A column counts toward the rank while its pivot magnitude stays at or
    above ``rank_tol`` times the largest pivot.
    """
    # owned Fortran-order copies: LAPACK works in place on these, and a
    # caller's (n, 1) array would otherwise alias straight through
    a = np.array(design, dtype=np.float64, order="F", copy=True)
    y = np.array(targets, dtype=np.float64, order="F", copy=True)
    n, m = a.shape
    nrhs = y.shape[1]

    qr, jpvt, tau, _, info = _lapack.dgeqp3(a, lwork=3 * (m + 1), overwrite_a=1)
    if info != 0:
        raise RuntimeError(f"dgeqp3 failed with info={info}")

    top = abs(qr[0, 0])
    rank = 0
    for j in range(min(n, m)):
        if abs(qr[j, j]) >= rank_tol * top and qr[j, j] != 0.0:
            rank += 1
        else:
            break

    qty, _, info = _lapack.dormqr("L", "T", qr, tau, y, max(1, nrhs), overwrite_c=1)
    if info != 0:
        raise RuntimeError(f"dormqr failed with info={info}")

    if n > m:
        tail = qty[m:, :]
        rss = np.einsum("ti,ti->i", tail, tail)
    else:
        rss = np.zeros(nrhs, dtype=np.float64)

    coef = None
    if want_coef and rank == m:
        z, info = _lapack.dtrtrs(qr, qty[:m, :])
        if info != 0:
            raise RuntimeError(f"dtrtrs failed with info={info}")
        coef = np.empty((m, nrhs), dtype=np.float64)
        coef[jpvt - 1, :] = z
    return rank, rss, coef

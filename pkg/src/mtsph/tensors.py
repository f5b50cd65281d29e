"""Small fixed-dimension tensor helpers.

All routines operate on arrays of shape (..., d, d) with d in {2, 3},
so a single (d, d) matrix and a per-particle batch (n, d, d) go through
the same code path.  Determinants and inverses are written out
explicitly; for these tiny matrices that is considerably faster than
``np.linalg`` on large batches.
"""

from __future__ import annotations

import numpy as np

from .errors import ElementInversionError


def identity(d: int, like: np.ndarray | None = None) -> np.ndarray:
    """d x d identity, broadcast against `like` if given."""
    eye = np.eye(d)
    if like is None:
        return eye
    return np.broadcast_to(eye, like.shape).copy()


def det(t: np.ndarray) -> np.ndarray:
    """Determinant of (..., d, d) arrays, d in {1, 2, 3}."""
    d = t.shape[-1]
    if d == 1:
        return t[..., 0, 0].copy()
    if d == 2:
        return t[..., 0, 0] * t[..., 1, 1] - t[..., 0, 1] * t[..., 1, 0]
    if d == 3:
        return (
            t[..., 0, 0] * (t[..., 1, 1] * t[..., 2, 2] - t[..., 1, 2] * t[..., 2, 1])
            - t[..., 0, 1] * (t[..., 1, 0] * t[..., 2, 2] - t[..., 1, 2] * t[..., 2, 0])
            + t[..., 0, 2] * (t[..., 1, 0] * t[..., 2, 1] - t[..., 1, 1] * t[..., 2, 0])
        )
    raise ValueError(f"unsupported dimension {d}")


def inv(t: np.ndarray, determinant: np.ndarray | None = None) -> np.ndarray:
    """Inverse of (..., d, d) arrays via the adjugate formula."""
    d = t.shape[-1]
    j = det(t) if determinant is None else determinant
    out = np.empty_like(t)
    if d == 1:
        out[..., 0, 0] = 1.0
    elif d == 2:
        out[..., 0, 0] = t[..., 1, 1]
        out[..., 0, 1] = -t[..., 0, 1]
        out[..., 1, 0] = -t[..., 1, 0]
        out[..., 1, 1] = t[..., 0, 0]
    elif d == 3:
        out[..., 0, 0] = t[..., 1, 1] * t[..., 2, 2] - t[..., 1, 2] * t[..., 2, 1]
        out[..., 0, 1] = t[..., 0, 2] * t[..., 2, 1] - t[..., 0, 1] * t[..., 2, 2]
        out[..., 0, 2] = t[..., 0, 1] * t[..., 1, 2] - t[..., 0, 2] * t[..., 1, 1]
        out[..., 1, 0] = t[..., 1, 2] * t[..., 2, 0] - t[..., 1, 0] * t[..., 2, 2]
        out[..., 1, 1] = t[..., 0, 0] * t[..., 2, 2] - t[..., 0, 2] * t[..., 2, 0]
        out[..., 1, 2] = t[..., 0, 2] * t[..., 1, 0] - t[..., 0, 0] * t[..., 1, 2]
        out[..., 2, 0] = t[..., 1, 0] * t[..., 2, 1] - t[..., 1, 1] * t[..., 2, 0]
        out[..., 2, 1] = t[..., 0, 1] * t[..., 2, 0] - t[..., 0, 0] * t[..., 2, 1]
        out[..., 2, 2] = t[..., 0, 0] * t[..., 1, 1] - t[..., 0, 1] * t[..., 1, 0]
    else:
        raise ValueError(f"unsupported dimension {d}")
    return out / j[..., None, None]


def transpose(t: np.ndarray) -> np.ndarray:
    return np.swapaxes(t, -1, -2)


def sym(t: np.ndarray) -> np.ndarray:
    """Symmetric part."""
    return 0.5 * (t + transpose(t))


def trace(t: np.ndarray) -> np.ndarray:
    return np.trace(t, axis1=-2, axis2=-1)


def dev(t: np.ndarray) -> np.ndarray:
    """Trace-free part: t - tr(t)/d * I."""
    d = t.shape[-1]
    out = t.copy()
    shift = trace(t) / d
    for k in range(d):
        out[..., k, k] -= shift
    return out


def bar(t: np.ndarray) -> np.ndarray:
    """Volume-preserving scaling det(t)^(-1/d) * t; requires det(t) > 0.

    The exponent is -1/3 in three dimensions and -1/2 in two, so that
    det(bar(t)) = 1 in either case.
    """
    d = t.shape[-1]
    j = det(t)
    bad = np.flatnonzero(np.atleast_1d(j) <= 0.0)
    if bad.size:
        raise ElementInversionError(bad)
    return t * (j ** (-1.0 / d))[..., None, None]


def frobenius_norm(t: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(t * t, axis=(-1, -2)))


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Outer product of (..., d) vectors -> (..., d, d)."""
    return a[..., :, None] * b[..., None, :]


def von_mises_log_strain(def_grad: np.ndarray) -> np.ndarray:
    """Equivalent strain sqrt(2/3)*||dev(log strain)|| from F.

    The logarithmic strain is 0.5*log(F F^T), evaluated through the
    eigendecomposition of the (symmetric) left Cauchy-Green tensor.
    """
    b = def_grad @ transpose(def_grad)
    evals, _ = np.linalg.eigh(b)
    log_principal = 0.5 * np.log(evals)
    mean = np.mean(log_principal, axis=-1, keepdims=True)
    devp = log_principal - mean
    return np.sqrt(2.0 / 3.0 * np.sum(devp * devp, axis=-1))

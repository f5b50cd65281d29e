"""Smoothing kernels (isotropic and anisotropic Wendland C2).

The kernel has compact support of radius 2h.  With q = r/h:

    w(q) = (1 - q/2)^4 (1 + 2q)   for 0 <= q <= 2, else 0

normalized so the kernel integrates to one in 1, 2 or 3 dimensions.

Anisotropy is a diagonal linear map into an isotropic unit space: each
axis k carries its own smoothing length h_k = ratio_k * h, a separation
vector is scaled to u = (r_0/h_0, ..., r_{d-1}/h_{d-1}), the kernel is
evaluated at |u| and the gradient is mapped back through the same
diagonal scaling.  Ratios of one recover the isotropic kernel.

`kernel_gradient(r_vec)` is the derivative of W with respect to the
separation vector r_vec (pointing from the particle to its neighbor),
i.e. (dW/dr) e with e = r_vec/|r_vec|.  Since dW/dr <= 0 the stored
gradient points back toward the particle; the correction matrices are
built from the same vectors, so all corrected operators are independent
of this orientation choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Normalization of (1 - q/2)^4 (1 + 2q) over support q <= 2, per dimension.
_SIGMA = {1: 3.0 / 4.0, 2: 7.0 / (4.0 * np.pi), 3: 21.0 / (16.0 * np.pi)}

SUPPORT_FACTOR = 2.0  # support radius in units of h


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, base smoothing length and per-axis anisotropy."""

    h: float
    dim: int
    anisotropy: tuple[float, ...] = ()
    family: str = "wendland_c2"

    def __post_init__(self):
        if self.family != "wendland_c2":
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.h > 0.0:
            raise ValueError("smoothing length must be positive")
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        ratios = self.anisotropy or (1.0,) * self.dim
        if len(ratios) != self.dim:
            raise ValueError("anisotropy must give one ratio per axis")
        if any(r < 1.0 for r in ratios):
            raise ValueError("anisotropy ratios must be >= 1")
        object.__setattr__(self, "anisotropy", tuple(float(r) for r in ratios))

    @property
    def h_axes(self) -> np.ndarray:
        return self.h * np.asarray(self.anisotropy)

    @property
    def cutoff_radius(self) -> float:
        """Support radius along a unit-ratio axis."""
        return SUPPORT_FACTOR * self.h

    @property
    def cutoff_axes(self) -> np.ndarray:
        return SUPPORT_FACTOR * self.h_axes

    @property
    def is_isotropic(self) -> bool:
        return all(r == 1.0 for r in self.anisotropy)

    @property
    def _prefactor(self) -> float:
        return _SIGMA[self.dim] / float(np.prod(self.h_axes))


def _w(q):
    q = np.asarray(q)
    inside = q < SUPPORT_FACTOR
    t = np.where(inside, 1.0 - 0.5 * q, 0.0)
    return np.where(inside, t ** 4 * (1.0 + 2.0 * q), 0.0)


def _dw(q):
    # d/dq of (1 - q/2)^4 (1 + 2q) = -5 q (1 - q/2)^3
    q = np.asarray(q)
    inside = q < SUPPORT_FACTOR
    t = np.where(inside, 1.0 - 0.5 * q, 0.0)
    return np.where(inside, -5.0 * q * t ** 3, 0.0)


def kernel_value(r, spec: KernelSpec):
    """W(r) for scalar separation r >= 0 (unit-ratio axis direction)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("separation must be non-negative")
    return spec._prefactor * _w(r / spec.h)


def kernel_value_vec(r_vec, spec: KernelSpec):
    """W evaluated at a (..., d) separation vector (anisotropy-aware)."""
    u = np.asarray(r_vec, dtype=float) / spec.h_axes
    q = np.sqrt(np.sum(u * u, axis=-1))
    return spec._prefactor * _w(q)


def kernel_gradient(r_vec, spec: KernelSpec):
    """dW/d(r_vec) for (..., d) separation vectors; zero at r_vec = 0."""
    r_vec = np.asarray(r_vec, dtype=float)
    h_axes = spec.h_axes
    u = r_vec / h_axes
    q = np.sqrt(np.sum(u * u, axis=-1))
    safe_q = np.where(q > 0.0, q, 1.0)
    mag = spec._prefactor * _dw(q) / safe_q
    return np.where(q[..., None] > 0.0, mag[..., None] * (u / h_axes), 0.0)

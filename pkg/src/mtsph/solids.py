"""Total-Lagrangian solid dynamics.

Deformation-gradient rate, density update, Neo-Hookean Kirchhoff
stress, Piola transform and the discrete stress-divergence
acceleration.  All fields are structure-of-arrays: positions and
velocities (n, d), tensors (n, d, d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel, tensors
from .errors import ElementInversionError
from .neighbors import Neighborhood

_REL_TOL = 1e-10


@dataclass(frozen=True)
class ElasticModel:
    """Isotropic elastic constants plus reference density.

    The moduli satisfy E = 2 mu (1 + nu) = 3 K (1 - 2 nu); construct
    through `from_shear_bulk` or `from_youngs_poisson` to keep them
    consistent.  The artificial sound speed is sqrt(K / rho0).
    """

    shear_modulus: float
    bulk_modulus: float
    youngs_modulus: float
    poisson_ratio: float
    density0: float

    def __post_init__(self):
        mu, k = self.shear_modulus, self.bulk_modulus
        e, nu = self.youngs_modulus, self.poisson_ratio
        if min(mu, k, e, self.density0) <= 0.0:
            raise ValueError("moduli and density must be positive")
        if abs(e - 2.0 * mu * (1.0 + nu)) > _REL_TOL * e:
            raise ValueError("E = 2 mu (1 + nu) violated")
        if abs(e - 3.0 * k * (1.0 - 2.0 * nu)) > _REL_TOL * e:
            raise ValueError("E = 3 K (1 - 2 nu) violated")

    @classmethod
    def from_shear_bulk(cls, shear_modulus: float, bulk_modulus: float,
                        density0: float) -> "ElasticModel":
        mu, k = float(shear_modulus), float(bulk_modulus)
        nu = (3.0 * k - 2.0 * mu) / (2.0 * (3.0 * k + mu))
        e = 2.0 * mu * (1.0 + nu)
        return cls(mu, k, e, nu, float(density0))

    @classmethod
    def from_youngs_poisson(cls, youngs_modulus: float, poisson_ratio: float,
                            density0: float) -> "ElasticModel":
        e, nu = float(youngs_modulus), float(poisson_ratio)
        mu = e / (2.0 * (1.0 + nu))
        k = e / (3.0 * (1.0 - 2.0 * nu))
        return cls(mu, k, e, nu, float(density0))

    @property
    def sound_speed(self) -> float:
        return float(np.sqrt(self.bulk_modulus / self.density0))

    @property
    def lame_lambda(self) -> float:
        return self.bulk_modulus - 2.0 * self.shear_modulus / 3.0


@dataclass
class SolidState:
    """Per-particle solid kinematics (single source of truth)."""

    ref_pos: np.ndarray          # (n, d) reference positions
    pos: np.ndarray              # (n, d) current positions
    vel: np.ndarray              # (n, d)
    def_grad: np.ndarray         # (n, d, d)
    density0: np.ndarray         # (n,)
    volume0: np.ndarray          # (n,)
    constrained: np.ndarray      # (n,) bool, velocity prescribed externally

    def __post_init__(self):
        self.mass = self.density0 * self.volume0

    @property
    def n(self) -> int:
        return len(self.volume0)

    @property
    def dim(self) -> int:
        return self.ref_pos.shape[1]

    @property
    def movable(self) -> np.ndarray:
        return ~self.constrained

    @classmethod
    def at_rest(cls, ref_pos, density0, volume0, constrained=None):
        ref_pos = np.ascontiguousarray(ref_pos, dtype=float)
        n, d = ref_pos.shape
        density0 = np.broadcast_to(np.asarray(density0, dtype=float), (n,)).copy()
        volume0 = np.ascontiguousarray(volume0, dtype=float)
        if constrained is None:
            constrained = np.zeros(n, dtype=bool)
        return cls(
            ref_pos=ref_pos,
            pos=ref_pos.copy(),
            vel=np.zeros((n, d)),
            def_grad=tensors.identity(d, like=np.empty((n, d, d))),
            density0=density0,
            volume0=volume0,
            constrained=np.ascontiguousarray(constrained, dtype=bool),
        )


def deformation_rate(vel: np.ndarray, nbh: Neighborhood,
                     correction: np.ndarray) -> np.ndarray:
    """dF/dt = (sum_b V0_b (v_b - v_a) (x) grad W_ab) . B_a.

    Exact (to round-off) for affine velocity fields thanks to the
    gradient correction.
    """
    n, d = vel.shape
    raw = np.empty((n, d, d))
    _accel.velocity_gradient_gather(
        np.ascontiguousarray(vel), nbh.indptr, nbh.idx, nbh.grad0,
        nbh.volume0, raw)
    return raw @ correction


def update_density(state: SolidState) -> np.ndarray:
    """Current density rho = rho0 / det(F); rejects inverted elements."""
    j = tensors.det(state.def_grad)
    bad = np.flatnonzero(j <= 0.0)
    if bad.size:
        raise ElementInversionError(bad)
    return state.density0 / j


def unimodular(def_grad: np.ndarray, j: np.ndarray) -> np.ndarray:
    """det-normalized F, exponent -1/d (d = 2 or 3)."""
    d = def_grad.shape[-1]
    return def_grad * (j ** (-1.0 / d))[..., None, None]


def kirchhoff_stress(def_grad: np.ndarray, model: ElasticModel) -> np.ndarray:
    """Neo-Hookean Kirchhoff stress K/2 (J^2 - 1) I + mu dev(unimodular b)."""
    j = tensors.det(def_grad)
    bad = np.flatnonzero(np.atleast_1d(j) <= 0.0)
    if bad.size:
        raise ElementInversionError(bad)
    fbar = unimodular(def_grad, j)
    bbar = fbar @ tensors.transpose(fbar)
    tau = model.shear_modulus * tensors.dev(bbar)
    vol = 0.5 * model.bulk_modulus * (j * j - 1.0)
    d = def_grad.shape[-1]
    for k in range(d):
        tau[..., k, k] += vol
    return tau


def first_pk(tau: np.ndarray, def_grad: np.ndarray) -> np.ndarray:
    """First Piola-Kirchhoff stress P = tau F^-T."""
    finv = tensors.inv(def_grad)
    return tau @ tensors.transpose(finv)


def stress_divergence_acceleration(
    state: SolidState, pk1: np.ndarray, nbh: Neighborhood,
    correction: np.ndarray) -> np.ndarray:
    """dv_a/dt = (1/rho0_a) sum_b V0_b (P_a B_a + P_b B_b) . grad W_ab.

    The momentum equation is referred to the initial configuration, so
    the reference density divides; this keeps the pair forces exactly
    antisymmetric and total momentum conserved.
    """
    corrected = np.ascontiguousarray(pk1 @ correction)
    out = np.empty_like(state.vel)
    _accel.pair_tensor_divergence(
        corrected, nbh.indptr, nbh.idx, nbh.grad0, nbh.volume0, out)
    out /= state.density0[:, None]
    return out


def solid_time_step(model: ElasticModel, state: SolidState, h: float,
                    accel: np.ndarray | None = None,
                    cfl: float = 0.6) -> float:
    """Stable explicit step 0.6 min(h/(c + |v|max), sqrt(h/|a|max)).

    The acceleration branch is skipped while accelerations are zero
    (startup).
    """
    vmax = float(np.sqrt(np.max(np.sum(state.vel * state.vel, axis=1), initial=0.0)))
    dt = h / (model.sound_speed + vmax)
    if accel is not None:
        amax = float(np.sqrt(np.max(np.sum(accel * accel, axis=1), initial=0.0)))
        if amax > 0.0:
            dt = min(dt, np.sqrt(h / amax))
    return cfl * dt

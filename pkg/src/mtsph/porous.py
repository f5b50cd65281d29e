"""Partially saturated porous-solid mixture.

Fluid mass diffusion down the saturation gradient, linear fluid
pressure, mixture (effective) stress and the total-momentum balance
with solid/fluid velocity recovery.

Flux and mass updates are two-phase: all fluxes are computed from a
frozen saturation snapshot, then all masses are advanced, so results do
not depend on particle ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel, tensors
from .errors import ElementInversionError
from .neighbors import Neighborhood
from .solids import ElasticModel

DRY_FRACTION = 1e-12  # below this fraction of rho_l0 a particle is dry


@dataclass(frozen=True)
class MembraneModel:
    """Porous-membrane material: elasticity, transport and pressure law."""

    density0: float            # dry solid mass per total volume
    diffusivity: float         # m^2/s
    pressure_coeff: float      # Pa per unit saturation
    youngs_modulus: float
    poisson_ratio: float
    porosity: float            # void fraction, 0 < a < 1
    fluid_density0: float      # intrinsic fluid density
    initial_saturation: float  # reference saturation for the pressure law

    def __post_init__(self):
        if min(self.density0, self.diffusivity, self.pressure_coeff,
               self.youngs_modulus, self.fluid_density0) <= 0.0:
            raise ValueError("material constants must be positive")
        if not 0.0 < self.porosity < 1.0:
            raise ValueError("porosity must lie in (0, 1)")
        if not 0.0 <= self.initial_saturation <= self.porosity:
            raise ValueError("initial saturation must lie in [0, porosity]")

    @property
    def elastic(self) -> ElasticModel:
        return ElasticModel.from_youngs_poisson(
            self.youngs_modulus, self.poisson_ratio, self.density0)

    @property
    def shear_modulus(self) -> float:
        return self.elastic.shear_modulus

    @property
    def bulk_modulus(self) -> float:
        return self.elastic.bulk_modulus

    @property
    def lame_lambda(self) -> float:
        return self.bulk_modulus - 2.0 * self.shear_modulus / 3.0

    @property
    def sound_speed(self) -> float:
        return float(np.sqrt(self.bulk_modulus / self.density0))


@dataclass
class PorousState:
    """Per-particle mixture state; particles track the solid skeleton."""

    ref_pos: np.ndarray       # (n, d)
    pos: np.ndarray           # (n, d)
    def_grad: np.ndarray      # (n, d, d)
    momentum: np.ndarray      # (n, d) mixture momentum density rho v
    vel_solid: np.ndarray     # (n, d)
    vel_fluid: np.ndarray     # (n, d)
    fluid_mass: np.ndarray    # (n,)
    flux: np.ndarray          # (n, d) density-weighted relative fluid velocity
    saturation: np.ndarray    # (n,)
    pressure: np.ndarray      # (n,)
    volume0: np.ndarray       # (n,)
    constrained: np.ndarray   # (n,) bool

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
    def at_rest(cls, ref_pos, volume0, constrained=None):
        ref_pos = np.ascontiguousarray(ref_pos, dtype=float)
        n, d = ref_pos.shape
        if constrained is None:
            constrained = np.zeros(n, dtype=bool)
        return cls(
            ref_pos=ref_pos,
            pos=ref_pos.copy(),
            def_grad=tensors.identity(d, like=np.empty((n, d, d))),
            momentum=np.zeros((n, d)),
            vel_solid=np.zeros((n, d)),
            vel_fluid=np.zeros((n, d)),
            fluid_mass=np.zeros(n),
            flux=np.zeros((n, d)),
            saturation=np.zeros(n),
            pressure=np.zeros(n),
            volume0=np.ascontiguousarray(volume0, dtype=float),
            constrained=np.ascontiguousarray(constrained, dtype=bool),
        )


def mixture_densities(state: PorousState, model: MembraneModel):
    """(rho_solid, rho_fluid, J, current volume) from the current state."""
    j = tensors.det(state.def_grad)
    bad = np.flatnonzero(j <= 0.0)
    if bad.size:
        raise ElementInversionError(bad)
    vol = state.volume0 * j
    rho_s = model.density0 / j
    rho_l = state.fluid_mass / vol
    return rho_s, rho_l, j, vol


def _gradient_map(state: PorousState, correction: np.ndarray,
                  j: np.ndarray) -> np.ndarray:
    """Per-particle map taking stored kernel gradients to consistent
    current-configuration gradients: F^-1 . B^T . grad W."""
    finv = tensors.inv(state.def_grad, determinant=j)
    return np.ascontiguousarray(finv @ tensors.transpose(correction))


def update_fluid_mass(state: PorousState, nbh: Neighborhood, dt: float,
                      model: MembraneModel, correction: np.ndarray):
    """Advance fluid mass by the antisymmetric flux divergence.

    dm_a/dt = -V_a sum_b V_b (q_a + q_b) . G_ab,
    G_ab = ((F_a^-1 B_a^T + F_b^-1 B_b^T)/2) grad W_ab = -G_ba

    The pair-antisymmetric form conserves the total fluid mass to
    round-off regardless of boundary truncation, which a difference
    form cannot do, and is first-order consistent with -V div q in the
    interior.  Masses are clamped to the physical range
    [0, porosity * rho_l0 * V]; the number of clamped particles is
    returned alongside the new masses (clamping is never silent).
    """
    _, _, j, vol = mixture_densities(state, model)
    amap = _gradient_map(state, correction, j)
    rate = np.empty(state.n)
    _accel.conservative_mass_rate(
        np.ascontiguousarray(state.flux), amap, nbh.pair_i, nbh.pair_j,
        nbh.pair_grad, np.ascontiguousarray(vol), rate)
    mass = state.fluid_mass + dt * rate
    cap = model.porosity * model.fluid_density0 * vol
    clamped = int(np.count_nonzero((mass < 0.0) | (mass > cap)))
    mass = np.clip(mass, 0.0, cap)
    return mass, clamped


def update_saturation_and_flux(state: PorousState, nbh: Neighborhood,
                               model: MembraneModel, correction: np.ndarray):
    """Saturation from fluid mass, then Fick flux down its gradient.

    sat_a = (m_a / V_a) / rho_l0
    q_a = -K rho_l_a grad(sat)|_a,
    grad(sat)|_a = sum_b V_b (sat_b - sat_a) (F_a^-1 B_a^T grad W_ab)
    """
    _, rho_l, j, vol = mixture_densities(state, model)
    sat = rho_l / model.fluid_density0
    amap = _gradient_map(state, correction, j)
    coeff = np.ascontiguousarray(model.diffusivity * rho_l)
    q = np.empty_like(state.flux)
    # the kernel computes coeff sum V_b (sat_a - sat_b) g = -coeff grad(sat)
    _accel.scalar_difference_flux(
        np.ascontiguousarray(sat), coeff, amap, nbh.indptr, nbh.idx,
        np.ascontiguousarray(vol), nbh.grad0, q)
    return sat, q


def fluid_pressure(saturation, model: MembraneModel):
    """Linear pore-pressure law p = C (sat - sat0)."""
    return model.pressure_coeff * (
        np.asarray(saturation, dtype=float) - model.initial_saturation)


def mixture_stress(def_grad: np.ndarray, pressure, model: MembraneModel):
    """Cauchy stress of the mixture: elastic part minus pore pressure.

    The solid part is linear in the Eulerian-Almansi strain
    e = (I - F^-T F^-1)/2:  sigma = 2 mu e + lambda tr(e) I - p I.
    """
    d = def_grad.shape[-1]
    j = tensors.det(def_grad)
    bad = np.flatnonzero(np.atleast_1d(j) <= 0.0)
    if bad.size:
        raise ElementInversionError(bad)
    finv = tensors.inv(def_grad, determinant=j)
    e = -0.5 * (tensors.transpose(finv) @ finv)
    for k in range(d):
        e[..., k, k] += 0.5
    sigma = 2.0 * model.shear_modulus * e
    diag = model.lame_lambda * tensors.trace(e) - np.asarray(pressure, dtype=float)
    for k in range(d):
        sigma[..., k, k] += diag
    return sigma


def momentum_stress_rate(state: PorousState, sigma: np.ndarray,
                         nbh: Neighborhood, correction: np.ndarray,
                         j: np.ndarray | None = None,
                         finv: np.ndarray | None = None) -> np.ndarray:
    """Stress part of the momentum balance.

    sum_b V0_b (Pm_a B_a + Pm_b B_b) . grad W_ab,  Pm = J sigma F^-T

    With zero flux and small strain this reduces exactly to the solid
    stress-divergence form.
    """
    if j is None:
        j = tensors.det(state.def_grad)
    if finv is None:
        finv = tensors.inv(state.def_grad, determinant=j)
    pm = (j[:, None, None] * sigma) @ tensors.transpose(finv)
    corrected = np.ascontiguousarray(pm @ correction)
    out = np.empty_like(state.momentum)
    _accel.pair_tensor_divergence(
        corrected, nbh.indptr, nbh.idx, nbh.grad0, nbh.volume0, out)
    return out


def momentum_flux_rate(state: PorousState, nbh: Neighborhood,
                       correction: np.ndarray) -> np.ndarray:
    """Advected-momentum part of the momentum balance.

    -sum_b V_b ((vq)_a + (vq)_b) . (F_a^-1 B_a^T grad W_ab),
    vq = v_fluid (x) q, approximating -div(v_fluid (x) q).
    """
    j = tensors.det(state.def_grad)
    finv = tensors.inv(state.def_grad, determinant=j)
    out = np.zeros_like(state.momentum)
    vq = tensors.outer(state.vel_fluid, state.flux)
    if np.any(vq):
        amap = np.ascontiguousarray(-(finv @ tensors.transpose(correction)))
        vol = np.ascontiguousarray(state.volume0 * j)
        _accel.pair_tensor_divergence_mapped(
            np.ascontiguousarray(vq), amap, nbh.indptr, nbh.idx, nbh.grad0,
            vol, out)
    return out


def momentum_rate(state: PorousState, sigma: np.ndarray, nbh: Neighborhood,
                  correction: np.ndarray) -> np.ndarray:
    """Full mixture momentum balance (stress plus advected flux part)."""
    return (momentum_stress_rate(state, sigma, nbh, correction)
            + momentum_flux_rate(state, nbh, correction))


def split_velocities(state: PorousState, model: MembraneModel):
    """Recover solid and fluid velocities from the mixture momentum.

    v_s = (M - q) / (rho_s + rho_l) and v_l = v_s + q / rho_l, which
    closes rho_l v_l + rho_s v_s = M exactly.  Dry particles carry the
    solid velocity and zero flux.
    """
    rho_s, rho_l, _, _ = mixture_densities(state, model)
    rho = rho_s + rho_l
    if np.any(rho <= 0.0):
        raise ValueError("non-positive mixture density")
    dry = rho_l < DRY_FRACTION * model.fluid_density0
    flux = np.where(dry[:, None], 0.0, state.flux)
    v_s = (state.momentum - flux) / rho[:, None]
    safe_rho_l = np.where(dry, 1.0, rho_l)
    v_l = np.where(dry[:, None], v_s, v_s + flux / safe_rho_l[:, None])
    return v_s, v_l

"""Finite-strain J2 plasticity with nonlinear isotropic hardening.

Multiplicative elastic/plastic split with the inverse plastic right
Cauchy-Green tensor as history variable, radial return mapping driven
by a safeguarded Newton solve of the scalar consistency equation.

The return map works on the det-normalized (unimodular) deformation
gradient; the stored plastic tensor is renormalized to unit determinant
after every plastic update, which keeps the plastic flow exactly
volume-preserving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensors
from .errors import ElementInversionError, ReturnMapError
from .solids import ElasticModel, unimodular

_SQ23 = np.sqrt(2.0 / 3.0)


@dataclass(frozen=True)
class HardeningModel:
    """Flow stress k(a) = s0 + (sinf - s0)(1 - exp(-delta a)) + H a."""

    initial_flow_stress: float        # s0
    saturation_flow_stress: float     # sinf
    saturation_exponent: float        # delta
    linear_coefficient: float         # H

    def __post_init__(self):
        if not self.initial_flow_stress > 0.0:
            raise ValueError("initial flow stress must be positive")
        if self.saturation_flow_stress < self.initial_flow_stress:
            raise ValueError("saturation flow stress must be >= initial")
        if not self.saturation_exponent > 0.0:
            raise ValueError("saturation exponent must be positive")
        if self.linear_coefficient < 0.0:
            raise ValueError("linear hardening coefficient must be >= 0")


@dataclass
class PlasticState:
    """Per-particle plastic history."""

    cp_inv: np.ndarray   # (n, d, d) inverse plastic right Cauchy-Green
    alpha: np.ndarray    # (n,) equivalent plastic strain

    @classmethod
    def initial(cls, n: int, dim: int) -> "PlasticState":
        return cls(
            cp_inv=tensors.identity(dim, like=np.empty((n, dim, dim))),
            alpha=np.zeros(n),
        )

    def copy(self) -> "PlasticState":
        return PlasticState(self.cp_inv.copy(), self.alpha.copy())


def hardening_k(alpha, model: HardeningModel):
    """Isotropic hardening flow stress at equivalent plastic strain alpha."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0.0):
        raise ValueError("equivalent plastic strain must be >= 0")
    s0 = model.initial_flow_stress
    sinf = model.saturation_flow_stress
    return (s0 + (sinf - s0) * (1.0 - np.exp(-model.saturation_exponent * alpha))
            + model.linear_coefficient * alpha)


def hardening_k_prime(alpha, model: HardeningModel):
    """dk/dalpha, used by the Newton solve."""
    alpha = np.asarray(alpha, dtype=float)
    s0 = model.initial_flow_stress
    sinf = model.saturation_flow_stress
    delta = model.saturation_exponent
    return (sinf - s0) * delta * np.exp(-delta * alpha) + model.linear_coefficient


def yield_function(s_norm, alpha, model: HardeningModel):
    """f = ||dev tau|| - sqrt(2/3) k(alpha); f <= 0 is elastic."""
    return np.asarray(s_norm, dtype=float) - _SQ23 * hardening_k(alpha, model)


def _solve_consistency(s_norm, alpha, mu_eff, hard: HardeningModel,
                       tol: float, max_iter: int):
    """Root of g(x) = s_norm - 2 mu_eff x - sqrt(2/3) k(alpha + sqrt(2/3) x).

    g is strictly decreasing with g(0) > 0 and g(s_norm / 2 mu_eff) < 0,
    so a unique root exists; Newton iterates are safeguarded by
    bisection on that bracket.
    """
    x = np.zeros_like(s_norm)
    lo = np.zeros_like(s_norm)
    hi = s_norm / (2.0 * mu_eff)
    g = np.full_like(s_norm, np.inf)
    for _ in range(max_iter):
        a_trial = alpha + _SQ23 * x
        g = s_norm - 2.0 * mu_eff * x - _SQ23 * hardening_k(a_trial, hard)
        active = np.abs(g) > tol
        if not np.any(active):
            break
        lo = np.where(active & (g > 0.0), x, lo)
        hi = np.where(active & (g < 0.0), x, hi)
        gp = -2.0 * mu_eff - (2.0 / 3.0) * hardening_k_prime(a_trial, hard)
        newton = x - g / gp
        inside = (newton > lo) & (newton < hi)
        x = np.where(active, np.where(inside, newton, 0.5 * (lo + hi)), x)
    a_trial = alpha + _SQ23 * x
    g = s_norm - 2.0 * mu_eff * x - _SQ23 * hardening_k(a_trial, hard)
    return x, g


def return_map(
    def_grad: np.ndarray,
    plastic: PlasticState,
    elastic: ElasticModel,
    hardening: HardeningModel,
    tol: float | None = None,
    max_iter: int = 50,
):
    """Predictor/corrector stress update for one batch of particles.

    Returns (tau, pk1, new_state, info) where info carries the plastic
    mask and consistency increments.  The trial elastic state comes
    from the stored inverse plastic tensor; if it satisfies the yield
    condition it is accepted unchanged, otherwise the deviatoric stress
    is returned radially to the hardened yield surface.
    """
    if tol is None:
        tol = 1e-8 * hardening.initial_flow_stress
    mu = elastic.shear_modulus
    d = def_grad.shape[-1]

    j = tensors.det(def_grad)
    bad = np.flatnonzero(j <= 0.0)
    if bad.size:
        raise ElementInversionError(bad)
    fbar = unimodular(def_grad, j)
    be_pre = tensors.sym(fbar @ plastic.cp_inv @ tensors.transpose(fbar))
    tr_pre = tensors.trace(be_pre)
    s = mu * tensors.dev(be_pre)
    s_norm = tensors.frobenius_norm(s)
    f_pre = yield_function(s_norm, plastic.alpha, hardening)
    flow = f_pre > 0.0

    new_state = plastic
    dgamma_full = np.zeros(len(s_norm))
    if np.any(flow):
        mu_eff = (tr_pre[flow] / d) * mu
        dgamma, resid = _solve_consistency(
            s_norm[flow], plastic.alpha[flow], mu_eff,
            hardening, tol, max_iter)
        failed = np.abs(resid) > tol
        if np.any(failed):
            ids = np.flatnonzero(flow)[failed]
            raise ReturnMapError(ids, resid[failed])
        dgamma = np.maximum(dgamma, 0.0)
        dgamma_full[flow] = dgamma

        scale = 1.0 - 2.0 * mu_eff * dgamma / s_norm[flow]
        s_flow = s[flow] * scale[:, None, None]
        s = s.copy()
        s[flow] = s_flow

        alpha_new = plastic.alpha.copy()
        alpha_new[flow] = plastic.alpha[flow] + _SQ23 * dgamma

        be_new = s_flow / mu
        for k in range(d):
            be_new[:, k, k] += tr_pre[flow] / d
        fbar_inv = tensors.inv(fbar[flow])
        cp_flow = fbar_inv @ be_new @ tensors.transpose(fbar_inv)
        cp_flow = tensors.bar(tensors.sym(cp_flow))
        cp_new = plastic.cp_inv.copy()
        cp_new[flow] = cp_flow
        new_state = PlasticState(cp_new, alpha_new)

    tau = s
    vol = 0.5 * elastic.bulk_modulus * (j * j - 1.0)
    for k in range(d):
        tau[..., k, k] += vol
    pk1 = tau @ tensors.transpose(tensors.inv(def_grad, determinant=j))
    info = {"plastic": flow, "dgamma": dgamma_full, "trial_norm": s_norm}
    return tau, pk1, new_state, info

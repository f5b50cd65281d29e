"""Compiled particle-loop kernels.

All hot per-step loops live here: CSR gathers over neighbor lists and
the sequential pairwise damping sweep.  Every kernel is deterministic
(fixed iteration order, no threading) so repeated runs reproduce
byte-identical results.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def velocity_gradient_gather(src, indptr, idx, grad, vol, out):
    """out[a] = sum_b vol[b] * (src[b] - src[a]) (x) grad_ab."""
    n = indptr.shape[0] - 1
    d = src.shape[1]
    for a in range(n):
        for c1 in range(d):
            for c2 in range(d):
                out[a, c1, c2] = 0.0
        for k in range(indptr[a], indptr[a + 1]):
            b = idx[k]
            vb = vol[b]
            for c1 in range(d):
                dv = vb * (src[b, c1] - src[a, c1])
                for c2 in range(d):
                    out[a, c1, c2] += dv * grad[k, c2]


@njit(cache=True)
def pair_tensor_divergence(tens, indptr, idx, grad, vol, out):
    """out[a] = sum_b vol[b] * (tens[a] + tens[b]) . grad_ab."""
    n = indptr.shape[0] - 1
    d = out.shape[1]
    for a in range(n):
        for c1 in range(d):
            out[a, c1] = 0.0
        for k in range(indptr[a], indptr[a + 1]):
            b = idx[k]
            vb = vol[b]
            for c1 in range(d):
                s = 0.0
                for c2 in range(d):
                    s += (tens[a, c1, c2] + tens[b, c1, c2]) * grad[k, c2]
                out[a, c1] += vb * s


@njit(cache=True)
def pair_tensor_divergence_mapped(tens, amap, indptr, idx, grad, vol, out):
    """Like pair_tensor_divergence but with grad mapped by amap[a].

    out[a] += sum_b vol[b] * (tens[a] + tens[b]) . (amap[a] @ grad_ab)
    """
    n = indptr.shape[0] - 1
    d = out.shape[1]
    g = np.empty(d)
    for a in range(n):
        for k in range(indptr[a], indptr[a + 1]):
            b = idx[k]
            vb = vol[b]
            for c1 in range(d):
                g[c1] = 0.0
                for c2 in range(d):
                    g[c1] += amap[a, c1, c2] * grad[k, c2]
            for c1 in range(d):
                s = 0.0
                for c2 in range(d):
                    s += (tens[a, c1, c2] + tens[b, c1, c2]) * g[c2]
                out[a, c1] += vb * s


@njit(cache=True)
def scalar_difference_flux(sat, coeff, amap, indptr, idx, vol, grad, out):
    """out[a] = coeff[a] * sum_b vol[b] * (sat[a] - sat[b]) (amap[a] @ grad_ab)."""
    n = indptr.shape[0] - 1
    d = out.shape[1]
    g = np.empty(d)
    for a in range(n):
        for c1 in range(d):
            out[a, c1] = 0.0
        for k in range(indptr[a], indptr[a + 1]):
            b = idx[k]
            w = vol[b] * (sat[a] - sat[b])
            for c1 in range(d):
                g[c1] = 0.0
                for c2 in range(d):
                    g[c1] += amap[a, c1, c2] * grad[k, c2]
                out[a, c1] += w * g[c1]
        for c1 in range(d):
            out[a, c1] *= coeff[a]


@njit(cache=True, inline="always")
def _damp_single(vel, a, b, cka, ckb):
    d = vel.shape[1]
    denom = 1.0 + cka + ckb
    for m in range(d):
        u = (vel[a, m] - vel[b, m]) / denom
        vel[a, m] -= cka * u
        vel[b, m] += ckb * u


@njit(cache=True)
def _damp_group(vel, pair_i, pair_j, pair_damp, inv_mass_i, inv_mass_j,
                half, lo, hi, local, amat, rhs):
    """Exact backward-Euler solve of one group of pairs, order-free.

    Groups collect pairs with equal mirror-invariant sort keys (mirror
    images of each other); solving them simultaneously keeps the sweep
    symmetric.  The linear system (I + C) v' = v with the inverse-mass
    weighted pair-coupling matrix C is strictly diagonally dominant, so
    plain Gaussian elimination is stable.
    """
    d = vel.shape[1]
    nb = 0
    for k in range(lo, hi):
        for p in (pair_i[k], pair_j[k]):
            found = False
            for t in range(nb):
                if local[t] == p:
                    found = True
                    break
            if not found:
                local[nb] = p
                nb += 1
    for r in range(nb):
        for c in range(nb):
            amat[r, c] = 1.0 if r == c else 0.0
        for m in range(d):
            rhs[r, m] = vel[local[r], m]
    for k in range(lo, hi):
        c = half * pair_damp[k]
        ia = 0
        ib = 0
        for t in range(nb):
            if local[t] == pair_i[k]:
                ia = t
            if local[t] == pair_j[k]:
                ib = t
        cka = c * inv_mass_i[k]
        ckb = c * inv_mass_j[k]
        amat[ia, ia] += cka
        amat[ia, ib] -= cka
        amat[ib, ib] += ckb
        amat[ib, ia] -= ckb
    # forward elimination + back substitution (no pivoting needed)
    for col in range(nb - 1):
        piv = amat[col, col]
        for r in range(col + 1, nb):
            f = amat[r, col] / piv
            if f != 0.0:
                for c in range(col, nb):
                    amat[r, c] -= f * amat[col, c]
                for m in range(d):
                    rhs[r, m] -= f * rhs[col, m]
    for r in range(nb - 1, -1, -1):
        for m in range(d):
            s = rhs[r, m]
            for c in range(r + 1, nb):
                s -= amat[r, c] * rhs[c, m]
            rhs[r, m] = s / amat[r, r]
    for t in range(nb):
        for m in range(d):
            vel[local[t], m] = rhs[t, m]


@njit(cache=True)
def damping_sweep(vel, pair_i, pair_j, pair_damp, inv_mass_i, inv_mass_j,
                  group_ptr, eta, dt):
    """Sequential pairwise implicit viscous damping, in place.

    inv_mass_* carry 1/m per pair side, zero for constrained particles
    (whose velocity then never changes).  Single pairs solve the
    backward-Euler two-body exchange in closed form; groups of pairs
    with equal sort keys (mirror images) are solved simultaneously.
    Free pairs conserve their momentum exactly and never gain kinetic
    energy.  One sweep visits every group twice, forward then reverse
    order at half the step each, which symmetrizes the Gauss-Seidel
    ordering.
    """
    half = 0.5 * dt * eta
    ngroups = group_ptr.shape[0] - 1
    local = np.empty(128, dtype=np.int64)
    amat = np.empty((128, 128))
    rhs = np.empty((128, vel.shape[1]))
    for g in range(ngroups):
        lo, hi = group_ptr[g], group_ptr[g + 1]
        if hi - lo == 1:
            c = half * pair_damp[lo]
            _damp_single(vel, pair_i[lo], pair_j[lo],
                         c * inv_mass_i[lo], c * inv_mass_j[lo])
        else:
            _damp_group(vel, pair_i, pair_j, pair_damp, inv_mass_i,
                        inv_mass_j, half, lo, hi, local, amat, rhs)
    for g in range(ngroups - 1, -1, -1):
        lo, hi = group_ptr[g], group_ptr[g + 1]
        if hi - lo == 1:
            c = half * pair_damp[lo]
            _damp_single(vel, pair_i[lo], pair_j[lo],
                         c * inv_mass_i[lo], c * inv_mass_j[lo])
        else:
            _damp_group(vel, pair_i, pair_j, pair_damp, inv_mass_i,
                        inv_mass_j, half, lo, hi, local, amat, rhs)


@njit(cache=True)
def conservative_mass_rate(flux, amap, pair_i, pair_j, pair_grad, vol, out):
    """Antisymmetric flux-divergence rate: exact global conservation.

    dm_i/dt = -V_i sum_j V_j (q_i + q_j) . G_ij,
    G_ij = (amap_i + amap_j)/2 . grad W_ij = -G_ji

    Both sides of every pair are accumulated together, so the total
    fluid mass change is zero to round-off.
    """
    n = out.shape[0]
    d = flux.shape[1]
    for a in range(n):
        out[a] = 0.0
    g = np.empty(d)
    for k in range(pair_i.shape[0]):
        i, j = pair_i[k], pair_j[k]
        for r in range(d):
            s = 0.0
            for c in range(d):
                s += 0.5 * (amap[i, r, c] + amap[j, r, c]) * pair_grad[k, c]
            g[r] = s
        acc = 0.0
        for r in range(d):
            acc += (flux[i, r] + flux[j, r]) * g[r]
        w = vol[i] * vol[j] * acc
        out[i] -= w
        out[j] += w


@njit(cache=True)
def porous_stress_rhs(def_grad, pressure, corr, indptr, idx, grad0, vol0,
                      mu, lam, tbuf, out_j, out_rate):
    """Fused mixture-stress momentum RHS.

    Per particle: J, F^-1, Almansi strain, mixture Cauchy stress,
    nominal stress Pm = J sigma F^-T, corrected tensor T = Pm B; then
    the pair sum out[a] = sum_b V0_b (T_a + T_b) . grad W_ab.
    Numerically equivalent to composing mixture_stress and
    momentum_stress_rate (checked by tests).  Non-positive J is flagged
    through out_j and the affected rows are zeroed.
    """
    n = def_grad.shape[0]
    d = def_grad.shape[1]
    finv = np.empty((d, d))
    e = np.empty((d, d))
    sig = np.empty((d, d))
    pm = np.empty((d, d))
    for a in range(n):
        if d == 2:
            j = (def_grad[a, 0, 0] * def_grad[a, 1, 1]
                 - def_grad[a, 0, 1] * def_grad[a, 1, 0])
        else:
            j = (def_grad[a, 0, 0] * (def_grad[a, 1, 1] * def_grad[a, 2, 2]
                                      - def_grad[a, 1, 2] * def_grad[a, 2, 1])
                 - def_grad[a, 0, 1] * (def_grad[a, 1, 0] * def_grad[a, 2, 2]
                                        - def_grad[a, 1, 2] * def_grad[a, 2, 0])
                 + def_grad[a, 0, 2] * (def_grad[a, 1, 0] * def_grad[a, 2, 1]
                                        - def_grad[a, 1, 1] * def_grad[a, 2, 0]))
        out_j[a] = j
        if j <= 0.0:
            for r in range(d):
                for c in range(d):
                    tbuf[a, r, c] = 0.0
            continue
        if d == 2:
            finv[0, 0] = def_grad[a, 1, 1] / j
            finv[0, 1] = -def_grad[a, 0, 1] / j
            finv[1, 0] = -def_grad[a, 1, 0] / j
            finv[1, 1] = def_grad[a, 0, 0] / j
        else:
            finv[0, 0] = (def_grad[a, 1, 1] * def_grad[a, 2, 2]
                          - def_grad[a, 1, 2] * def_grad[a, 2, 1]) / j
            finv[0, 1] = (def_grad[a, 0, 2] * def_grad[a, 2, 1]
                          - def_grad[a, 0, 1] * def_grad[a, 2, 2]) / j
            finv[0, 2] = (def_grad[a, 0, 1] * def_grad[a, 1, 2]
                          - def_grad[a, 0, 2] * def_grad[a, 1, 1]) / j
            finv[1, 0] = (def_grad[a, 1, 2] * def_grad[a, 2, 0]
                          - def_grad[a, 1, 0] * def_grad[a, 2, 2]) / j
            finv[1, 1] = (def_grad[a, 0, 0] * def_grad[a, 2, 2]
                          - def_grad[a, 0, 2] * def_grad[a, 2, 0]) / j
            finv[1, 2] = (def_grad[a, 0, 2] * def_grad[a, 1, 0]
                          - def_grad[a, 0, 0] * def_grad[a, 1, 2]) / j
            finv[2, 0] = (def_grad[a, 1, 0] * def_grad[a, 2, 1]
                          - def_grad[a, 1, 1] * def_grad[a, 2, 0]) / j
            finv[2, 1] = (def_grad[a, 0, 1] * def_grad[a, 2, 0]
                          - def_grad[a, 0, 0] * def_grad[a, 2, 1]) / j
            finv[2, 2] = (def_grad[a, 0, 0] * def_grad[a, 1, 1]
                          - def_grad[a, 0, 1] * def_grad[a, 1, 0]) / j
        tre = 0.0
        for r in range(d):
            for c in range(d):
                s = 0.0
                for k in range(d):
                    s += finv[k, r] * finv[k, c]
                e[r, c] = -0.5 * s
            e[r, r] += 0.5
            tre += e[r, r]
        dia = lam * tre - pressure[a]
        for r in range(d):
            for c in range(d):
                sig[r, c] = 2.0 * mu * e[r, c]
            sig[r, r] += dia
        for r in range(d):
            for c in range(d):
                s = 0.0
                for k in range(d):
                    s += sig[r, k] * finv[c, k]
                pm[r, c] = j * s
        for r in range(d):
            for c in range(d):
                s = 0.0
                for k in range(d):
                    s += pm[r, k] * corr[a, k, c]
                tbuf[a, r, c] = s

    for a in range(n):
        for c1 in range(d):
            out_rate[a, c1] = 0.0
        for kk in range(indptr[a], indptr[a + 1]):
            b = idx[kk]
            vb = vol0[b]
            for c1 in range(d):
                s = 0.0
                for c2 in range(d):
                    s += (tbuf[a, c1, c2] + tbuf[b, c1, c2]) * grad0[kk, c2]
                out_rate[a, c1] += vb * s

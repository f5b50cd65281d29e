"""Fixed reference-configuration neighborhoods and gradient correction.

Neighbor lists are built once from the initial particle positions and
never rebuilt.  Adjacency is stored in CSR form (both directions of
every pair) for the per-particle sums, plus a deterministic unique pair
list used by the sequential damping sweeps.

The per-particle correction matrix is the inverse of the kernel moment
matrix

    M_a = sum_b V_b (X_b - X_a) (x) grad_a W_ab

and restores exact gradients of affine fields on arbitrary
(non-degenerate) particle clouds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import tensors
from .errors import GeometryError, SingularMomentMatrixError
from .kernels import SUPPORT_FACTOR, KernelSpec, kernel_gradient


@dataclass
class Neighborhood:
    """Immutable reference-configuration adjacency with kernel data."""

    spec: KernelSpec
    volume0: np.ndarray       # (n,) reference volumes
    indptr: np.ndarray        # (n+1,) CSR row pointers
    idx: np.ndarray           # (nnz,) neighbor ids
    r0: np.ndarray            # (nnz,) reference separations |X_b - X_a|
    e0: np.ndarray            # (nnz, d) unit vectors to neighbors
    grad0: np.ndarray         # (nnz, d) reference kernel gradients
    pair_i: np.ndarray        # (npairs,) unique pairs, i < j, sorted
    pair_j: np.ndarray
    pair_damp: np.ndarray     # (npairs,) geometric damping coefficients
    pair_grad: np.ndarray     # (npairs, d) kernel gradient of edge i -> j
    pair_group: np.ndarray    # (ngroups+1,) runs of pairs with equal
                              # mirror-invariant sort keys

    @property
    def n(self) -> int:
        return len(self.volume0)

    @property
    def dim(self) -> int:
        return self.e0.shape[1]

    def counts(self) -> np.ndarray:
        return np.diff(self.indptr)


def build_neighborhoods(
    ref_positions: np.ndarray, volumes: np.ndarray, spec: KernelSpec
) -> Neighborhood:
    """Build the fixed neighbor structure from reference positions.

    Pairs whose scaled separation reaches the kernel support contribute
    nothing and are not stored.  Coincident particles are rejected.
    """
    x = np.ascontiguousarray(ref_positions, dtype=float)
    v = np.ascontiguousarray(volumes, dtype=float)
    n, dim = x.shape
    if dim != spec.dim:
        raise GeometryError(f"positions are {dim}D but kernel is {spec.dim}D")
    if not np.all(np.isfinite(x)):
        raise GeometryError("non-finite reference positions")
    if v.shape != (n,) or np.any(v <= 0.0):
        raise GeometryError("volumes must be positive, one per particle")

    # Search in the scaled space where the support is the sphere |u| < 2.
    u = x / spec.h_axes
    tree = cKDTree(u)
    pairs = tree.query_pairs(SUPPORT_FACTOR, output_type="ndarray")
    if pairs.size:
        du = u[pairs[:, 1]] - u[pairs[:, 0]]
        qdist = np.sqrt(np.sum(du * du, axis=1))
        zero = qdist == 0.0
        if np.any(zero):
            bad = pairs[zero][0]
            raise GeometryError(
                f"duplicate particle positions (ids {bad[0]} and {bad[1]})"
            )
        pairs = pairs[qdist < SUPPORT_FACTOR]
    if not pairs.size:
        pairs = pairs.reshape(0, 2)

    pi = pairs[:, 0].astype(np.int64)
    pj = pairs[:, 1].astype(np.int64)
    if pi.size:
        # Deterministic pair order keyed on |midpoint - domain center|:
        # on mirror-symmetric lattices mirror-image pairs then carry equal
        # keys and land in the same "group"; the damping sweep solves each
        # group simultaneously, so the sweep commutes with the mirrors and
        # scenario symmetry survives the sequential updates.
        center = 0.5 * (x.min(axis=0) + x.max(axis=0))
        cmid = 0.5 * (x[pi] + x[pj]) - center
        abskeys = np.abs(cmid)
        keys = [pj, pi]
        keys.extend(cmid[:, k] for k in range(dim - 1, -1, -1))
        keys.extend(abskeys[:, k] for k in range(dim - 1, -1, -1))
        order = np.lexsort(tuple(keys))
        pi, pj = pi[order], pj[order]
        abskeys = abskeys[order]
        boundary = np.any(abskeys[1:] != abskeys[:-1], axis=1)
        starts = np.concatenate([[0], np.flatnonzero(boundary) + 1,
                                 [len(pi)]]).astype(np.int64)
        pi, pj, pair_group = _split_key_runs(pi, pj, starts)
        sizes = np.diff(pair_group)
        if sizes.max(initial=0) > 64:
            raise GeometryError(
                "degenerate lattice: more than 64 interacting pairs share "
                "a damping group key")
    else:
        pair_group = np.zeros(1, dtype=np.int64)

    # Directed CSR: every pair appears once per side.
    src = np.concatenate([pi, pj])
    dst = np.concatenate([pj, pi])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])

    rel = x[dst] - x[src]
    r0 = np.sqrt(np.sum(rel * rel, axis=1))
    e0 = rel / r0[:, None] if rel.size else rel
    grad0 = kernel_gradient(rel, spec) if rel.size else rel.copy()

    # Pairwise damping geometry: -(e . grad)/r >= 0 since dW/dr <= 0.
    if pi.size:
        rel_p = x[pj] - x[pi]
        r_p = np.sqrt(np.sum(rel_p * rel_p, axis=1))
        e_p = rel_p / r_p[:, None]
        pair_grad = kernel_gradient(rel_p, spec)
        radial = -np.sum(e_p * pair_grad, axis=1)
        pair_damp = 2.0 * v[pi] * v[pj] * radial / r_p
    else:
        pair_grad = np.zeros((0, dim))
        pair_damp = np.zeros(0)

    return Neighborhood(
        spec=spec,
        volume0=v,
        indptr=indptr,
        idx=dst,
        r0=r0,
        e0=e0,
        grad0=grad0,
        pair_i=pi,
        pair_j=pj,
        pair_damp=pair_damp,
        pair_grad=np.ascontiguousarray(pair_grad),
        pair_group=pair_group,
    )


def _split_key_runs(pi, pj, starts):
    """Split runs of equal-key pairs into shared-particle components.

    Only pairs that actually interact (transitively share a particle)
    need a simultaneous damping solve; mirror-image twins that touch no
    common particle become separate singleton groups.  Component order
    within a run follows first appearance, which keeps the sequence
    deterministic and mirror-consistent.
    """
    npairs = len(pi)
    final = np.empty(npairs, dtype=np.int64)
    group_starts = [0]
    pos = 0
    for r in range(len(starts) - 1):
        lo, hi = starts[r], starts[r + 1]
        if hi - lo == 1:
            final[pos] = lo
            pos += 1
            group_starts.append(pos)
            continue
        root = {}

        def find(p):
            while root[p] != p:
                root[p] = root[root[p]]
                p = root[p]
            return p

        comp_of = np.empty(hi - lo, dtype=np.int64)
        for k in range(lo, hi):
            a, b = pi[k], pj[k]
            root.setdefault(a, a)
            root.setdefault(b, b)
            ra, rb = find(a), find(b)
            if ra != rb:
                root[max(ra, rb)] = min(ra, rb)
        for k in range(lo, hi):
            comp_of[k - lo] = find(pi[k])
        seen = {}
        members: list[list[int]] = []
        for k in range(lo, hi):
            c = comp_of[k - lo]
            if c not in seen:
                seen[c] = len(members)
                members.append([])
            members[seen[c]].append(k)
        for grp in members:
            for k in grp:
                final[pos] = k
                pos += 1
            group_starts.append(pos)
    return (pi[final], pj[final],
            np.asarray(group_starts, dtype=np.int64))


def moment_matrices(nbh: Neighborhood) -> np.ndarray:
    """Kernel moment matrix M_a = sum_b V_b (X_b - X_a) (x) grad W."""
    n, d = nbh.n, nbh.dim
    m = np.zeros((n, d, d))
    if nbh.idx.size:
        rel = nbh.r0[:, None] * nbh.e0
        contrib = nbh.volume0[nbh.idx, None, None] * tensors.outer(rel, nbh.grad0)
        owner = np.repeat(np.arange(n), nbh.counts())
        np.add.at(m, owner, contrib)
    return m


def compute_correction_matrices(nbh: Neighborhood) -> np.ndarray:
    """Per-particle inverse moment matrices (first-order consistency).

    Computed once from the reference configuration.  Raises
    SingularMomentMatrixError naming the offending particles when a
    moment matrix is not invertible (e.g. all neighbors collinear).
    """
    m = moment_matrices(nbh)
    d = nbh.dim
    dets = tensors.det(m)
    scale = tensors.frobenius_norm(m) ** d + np.finfo(float).tiny
    bad = np.flatnonzero(np.abs(dets) <= 1e-12 * scale)
    if bad.size:
        raise SingularMomentMatrixError(bad, dets[bad])
    return tensors.inv(m, determinant=dets)

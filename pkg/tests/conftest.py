"""Shared helpers: jittered lattices and small neighborhood fixtures."""

import numpy as np
import pytest

from mtsph.kernels import KernelSpec
from mtsph.neighbors import build_neighborhoods, compute_correction_matrices


def jittered_lattice(n_side, dim, dp=1.0, jitter=0.1, seed=0):
    """Uniform lattice with +-jitter*dp random perturbation."""
    rng = np.random.default_rng(seed)
    axes = [np.arange(n_side) * dp] * dim
    grid = np.meshgrid(*axes, indexing="ij")
    pos = np.column_stack([g.ravel() for g in grid]).astype(float)
    pos += jitter * dp * rng.uniform(-1.0, 1.0, size=pos.shape)
    vol = np.full(len(pos), dp ** dim)
    return pos, vol


def lattice_neighborhood(n_side, dim, dp=1.0, jitter=0.1, seed=0, h_factor=1.35):
    pos, vol = jittered_lattice(n_side, dim, dp, jitter, seed)
    spec = KernelSpec(h=h_factor * dp, dim=dim)
    nbh = build_neighborhoods(pos, vol, spec)
    corr = compute_correction_matrices(nbh)
    return pos, vol, nbh, corr


@pytest.fixture(scope="session")
def lattice2d():
    return lattice_neighborhood(12, 2, seed=3)


@pytest.fixture(scope="session")
def lattice3d():
    return lattice_neighborhood(7, 3, seed=4)

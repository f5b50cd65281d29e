"""Damping sweeps, time-step criteria, kinetic-energy control loop."""

import numpy as np
import pytest

from mtsph import stepping
from mtsph.config import resolve
from mtsph.kernels import KernelSpec
from mtsph.neighbors import build_neighborhoods
from mtsph.scenarios import build
from mtsph.stepping import (SteppingPolicy, apply_damping_sweep,
                            diffusion_time_step, kinetic_energy,
                            run_outer_inner)

from conftest import lattice_neighborhood

RNG = np.random.default_rng(51)


class TestDiffusionTimeStep:
    def test_unit_plugin(self):
        assert diffusion_time_step(1.0, 0.5) == pytest.approx(1.0)

    def test_halving_h_quarters(self):
        assert diffusion_time_step(0.5, 2.0) == pytest.approx(
            0.25 * diffusion_time_step(1.0, 2.0))

    def test_membrane_value(self):
        # D = 1.0e-10 m^2/s, h = 2.03e-5 m -> 2.06 s
        assert diffusion_time_step(2.03e-5, 1.0e-10) == pytest.approx(2.06, abs=0.01)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            diffusion_time_step(0.0, 1.0)


def _free_cloud(n_side=6, seed=3):
    pos, vol, nbh, _ = lattice_neighborhood(n_side, 2, dp=0.01, jitter=0.05,
                                            seed=seed)
    mass = 2.0 * vol
    movable = np.ones(len(vol), dtype=bool)
    return nbh, mass, movable


class TestDampingSweep:
    def test_uniform_velocity_unchanged(self):
        nbh, mass, movable = _free_cloud()
        vel = np.tile([0.7, -0.2], (len(mass), 1))
        out = apply_damping_sweep(vel.copy(), mass, movable, nbh, 1e3, 1e-4)
        np.testing.assert_allclose(out, vel, rtol=1e-15)

    def test_pair_momentum_conserved(self):
        # every pair update conserves the pair momentum; with an isolated
        # pair the whole sweep must conserve it to round-off
        dp = 0.01
        spec = KernelSpec(h=1.35 * dp, dim=2)
        pos = np.array([[0.0, 0.0], [dp, 0.0]])
        nbh = build_neighborhoods(pos, np.full(2, dp * dp), spec)
        mass = np.array([3.0, 5.0])
        vel = np.array([[1.0, -2.0], [0.5, 4.0]])
        p0 = mass @ vel
        out = apply_damping_sweep(vel.copy(), mass, np.ones(2, bool), nbh,
                                  1e4, 1e-3)
        p1 = mass @ out
        assert np.max(np.abs(p1 - p0)) <= 1e-14 * np.max(np.abs(p0))

    def test_two_body_closed_form(self):
        # one sweep = two implicit half-step updates of the single pair
        dp = 0.01
        spec = KernelSpec(h=1.35 * dp, dim=2)
        pos = np.array([[0.0, 0.0], [dp, 0.0]])
        mass = np.array([3.0, 5.0])
        nbh = build_neighborhoods(pos, np.full(2, dp * dp), spec)
        eta, dt = 2.5e3, 1e-3
        vel = np.array([[1.0, -2.0], [0.5, 4.0]])
        u0 = vel[0] - vel[1]
        kappa = eta * nbh.pair_damp[0] * 0.5 * dt * (1 / mass[0] + 1 / mass[1])
        u_expect = u0 / (1.0 + kappa) ** 2
        p = mass @ vel
        v0_expect = (p + mass[1] * u_expect) / mass.sum()
        v1_expect = (p - mass[0] * u_expect) / mass.sum()
        out = apply_damping_sweep(vel.copy(), mass, np.ones(2, bool), nbh, eta, dt)
        np.testing.assert_allclose(out[0], v0_expect, rtol=1e-10)
        np.testing.assert_allclose(out[1], v1_expect, rtol=1e-10)

    def test_energy_never_increases(self):
        nbh, mass, movable = _free_cloud(seed=8)
        vel = RNG.normal(size=(len(mass), 2))
        energy = 0.5 * np.sum(mass[:, None] * vel * vel)
        for _ in range(200):
            vel = apply_damping_sweep(vel, mass, movable, nbh, 5e2, 1e-3)
            e_new = 0.5 * np.sum(mass[:, None] * vel * vel)
            assert e_new <= energy * (1.0 + 1e-14)
            energy = e_new

    def test_total_momentum_neutral(self):
        nbh, mass, movable = _free_cloud(seed=9)
        vel = RNG.normal(size=(len(mass), 2))
        p0 = np.sum(mass[:, None] * vel, axis=0)
        for _ in range(50):
            vel = apply_damping_sweep(vel, mass, movable, nbh, 1e3, 1e-3)
        p1 = np.sum(mass[:, None] * vel, axis=0)
        scale = np.sum(mass * np.linalg.norm(vel, axis=1)) + np.max(np.abs(p0))
        assert np.max(np.abs(p1 - p0)) <= 1e-12 * scale

    def test_constrained_particles_fixed(self):
        nbh, mass, movable = _free_cloud(seed=10)
        movable[::3] = False
        vel = RNG.normal(size=(len(mass), 2))
        frozen = vel[~movable].copy()
        out = apply_damping_sweep(vel, mass, movable, nbh, 1e3, 1e-3)
        np.testing.assert_array_equal(out[~movable], frozen)


class TestKineticEnergy:
    def test_zero_velocities_converged(self):
        rep = kinetic_energy(np.zeros((5, 2)), np.ones(5), np.ones(5, bool),
                             criterion=1e-3, reference=1.0)
        assert rep.value == 0.0 and rep.converged

    def test_total_mode_value(self):
        vel = np.array([[2.0, 0.0], [0.0, 1.0]])
        mass = np.array([1.0, 4.0])
        rep = kinetic_energy(vel, mass, np.ones(2, bool), 1.0, 10.0)
        assert rep.value == pytest.approx(0.5 * (4.0 + 4.0))
        assert rep.ratio == pytest.approx(0.4)

    def test_density_mode(self):
        vel = np.array([[1.0, 0.0], [1.0, 0.0]])
        mass = np.array([2.0, 2.0])
        volume = np.array([0.5, 1.5])
        rep = kinetic_energy(vel, mass, np.ones(2, bool), 1.0, 1.0,
                             mode="density", volume=volume)
        assert rep.value == pytest.approx((0.5 * 2 + 0.5 * 2) / 2.0)

    def test_constrained_excluded(self):
        vel = np.array([[100.0, 0.0], [0.0, 1.0]])
        mass = np.ones(2)
        movable = np.array([False, True])
        rep = kinetic_energy(vel, mass, movable, 1.0, 1.0)
        assert rep.value == pytest.approx(0.5)


class TestOuterInner:
    def _desk_problem(self, **over):
        base = {"scenario": "necking_2d", "length": 8e-3, "width": 2e-3,
                "dp": 0.5e-3, "stretch_per_end": 4e-6, "n_outer": 4,
                "ramp_steps": 3, "eta": 1e4, "energy_pct": 0.005,
                "energy_ref": 1e-4}
        base.update(over)
        return build(resolve(base).params)

    def test_zero_load_exits_at_min_inner(self):
        problem, policy = self._desk_problem(stretch_per_end=1e-30, min_inner=2)
        problem.end_disp_per_outer = 0.0  # no loading at all
        obs, counters = run_outer_inner(problem, policy)
        assert counters.n_outer == 4
        assert np.all(obs.n_inner == 2)
        assert np.all(obs.ek_ratio <= policy.energy_criterion / policy.energy_reference)

    def test_damping_counter_equals_inner(self):
        problem, policy = self._desk_problem()
        obs, counters = run_outer_inner(problem, policy)
        assert counters.n_damping == counters.n_inner
        np.testing.assert_array_equal(obs.ns_cum, obs.nd_cum)
        assert counters.n_inner == int(obs.ns_cum[-1])

    def test_cap_hit_recorded_not_silent(self):
        problem, policy = self._desk_problem(max_inner=4, ramp_steps=3)
        obs, counters = run_outer_inner(problem, policy)
        assert len(counters.cap_hits) > 0
        assert counters.warnings

    def test_converged_loops_satisfy_criterion(self):
        problem, policy = self._desk_problem(n_outer=6)
        obs, counters = run_outer_inner(problem, policy)
        assert not counters.cap_hits
        assert np.all(obs.ek_ratio
                      <= policy.energy_criterion / policy.energy_reference + 1e-15)

    def test_timestamps_strictly_increasing(self):
        problem, policy = self._desk_problem()
        obs, _ = run_outer_inner(problem, policy)
        assert np.all(np.diff(obs.time) > 0)


class TestPolicy:
    def test_inner_cap_default(self):
        pol = SteppingPolicy(dt_outer=1.0, n_outer=1, eta=0.0,
                             energy_criterion=1.0, energy_reference=1.0)
        assert pol.inner_cap(1e-3) == 10 * 1000

    def test_invalid_mode_rejected(self):
        with pytest.raises(ValueError):
            SteppingPolicy(dt_outer=1.0, n_outer=1, eta=0.0,
                           energy_criterion=1.0, energy_reference=1.0,
                           energy_mode="bogus")

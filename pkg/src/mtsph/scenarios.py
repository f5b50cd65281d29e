"""Benchmark scenario builders and their observables.

Four cases: plane tensile necking (2D), cylindrical tensile necking
(3D), and a water droplet diffusing into a clamped porous membrane in
2D (thin beam) and 3D (thin film).  Builders produce a problem object
that the outer/inner loop drives; every geometric and material number
is a configuration default, never a constant.

Lattices are generated mirror-symmetric in floating point (offsets
computed symmetrically about the center), so the mirror symmetry of
every scenario is preserved to round-off by the dynamics.
"""

from __future__ import annotations

import numpy as np

from . import _accel, plasticity, porous, solids, stepping, tensors
from .errors import ConfigError, ElementInversionError
from .kernels import KernelSpec
from .neighbors import Neighborhood, build_neighborhoods, compute_correction_matrices
from .plasticity import HardeningModel, PlasticState, return_map
from .porous import MembraneModel, PorousState
from .solids import ElasticModel, SolidState


def _centered_offsets(count: int, spacing: float) -> np.ndarray:
    """Lattice offsets symmetric about zero, exact under mirroring."""
    return (np.arange(count) - 0.5 * (count - 1)) * spacing


def _taper_scale(xoff: np.ndarray, depth: float, half_width: float) -> np.ndarray:
    """Smooth transverse reduction: `depth` at center, 0 beyond half_width."""
    if depth <= 0.0:
        return np.ones_like(xoff)
    inside = np.abs(xoff) < half_width
    red = np.where(inside, 0.5 * depth * (1.0 + np.cos(np.pi * xoff / half_width)), 0.0)
    return 1.0 - red


class NeckingProblem:
    """Displacement-controlled tensile bar with elastoplastic response.

    The loading increment of each outer step is applied as a short
    velocity ramp of the constrained end layers over the first
    `ramp_steps` inner steps, which keeps the deformation-gradient rate
    consistent with the boundary motion.
    """

    def __init__(self, state: SolidState, plastic: PlasticState | None,
                 elastic: ElasticModel, hardening: HardeningModel | None,
                 nbh: Neighborhood, correction: np.ndarray,
                 left: np.ndarray, right: np.ndarray,
                 end_disp_per_outer: float, ramp_steps: int,
                 mid_mask: np.ndarray, cross_section: float):
        self.state = state
        self.plastic = plastic
        self.elastic = elastic
        self.hardening = hardening
        self.nbh = nbh
        self.correction = correction
        self.left = left
        self.right = right
        self.end_disp_per_outer = float(end_disp_per_outer)
        self.ramp_steps = max(int(ramp_steps), 1)
        self.mid_mask = mid_mask
        self.cross_section = float(cross_section)
        self.h_min = float(np.min(nbh.spec.h_axes))
        self.axis = 0
        self._ramp_left = 0
        self._accel = np.zeros_like(state.vel)
        self._radius0 = self._mid_radius()
        self._ek_pre_damp = 0.0
        self._inv_masses = stepping.damping_inverse_masses(
            state.mass, state.movable, nbh)

    # -- helpers -----------------------------------------------------------

    def _mid_radius(self) -> float:
        trans = self.state.pos[self.mid_mask, 1:]
        return float(np.max(np.sqrt(np.sum(trans * trans, axis=1))))

    def velocities(self) -> np.ndarray:
        return self.state.vel

    @property
    def ramp_active(self) -> bool:
        return self._ramp_left > 0

    # -- outer/inner protocol ---------------------------------------------

    def advance_slow(self, step: int, dt_outer: float, t: float) -> int:
        if self.end_disp_per_outer != 0.0:
            self._ramp_left = self.ramp_steps
        return 0

    def stable_time_step(self, cfl: float) -> float:
        return solids.solid_time_step(self.elastic, self.state, self.h_min,
                                      accel=self._accel[self.state.movable],
                                      cfl=cfl)

    def _apply_boundary_velocity(self, dt: float) -> None:
        vel = self.state.vel
        if self._ramp_left > 0:
            vbc = self.end_disp_per_outer / self.ramp_steps / dt
            vel[self.left] = 0.0
            vel[self.right] = 0.0
            vel[self.left, self.axis] = -vbc
            vel[self.right, self.axis] = vbc
        else:
            vel[self.state.constrained] = 0.0

    def relax_step(self, dt: float, eta: float) -> None:
        state = self.state
        movable = state.movable
        state.vel[movable] += 0.5 * dt * self._accel[movable]
        self._apply_boundary_velocity(dt)

        state.pos += dt * state.vel
        state.def_grad += dt * solids.deformation_rate(
            state.vel, self.nbh, self.correction)
        if self._ramp_left > 0:
            self._ramp_left -= 1

        if self.plastic is not None:
            tau, pk1, self.plastic, _ = return_map(
                state.def_grad, self.plastic, self.elastic, self.hardening)
        else:
            tau = solids.kirchhoff_stress(state.def_grad, self.elastic)
            pk1 = solids.first_pk(tau, state.def_grad)
        self._accel = solids.stress_divergence_acceleration(
            state, pk1, self.nbh, self.correction)

        state.vel[movable] += 0.5 * dt * self._accel[movable]
        # convergence is judged on the undamped response: measure the
        # kinetic energy after the stress kick, before the damping sweep
        v2 = np.sum(state.vel * state.vel, axis=1)
        self._ek_pre_damp = 0.5 * float(np.sum(state.mass[movable] * v2[movable]))
        stepping.apply_damping_sweep(
            state.vel, state.mass, movable, self.nbh, eta, dt,
            inv_masses=self._inv_masses)

    def energy_report(self, policy: stepping.SteppingPolicy) -> stepping.EnergyReport:
        value = self._ek_pre_damp
        return stepping.EnergyReport(
            value=value,
            reference=policy.energy_reference,
            criterion=policy.energy_criterion,
            converged=bool(value <= policy.energy_criterion),
        )

    def measure(self, t: float) -> dict:
        state = self.state
        fx = -float(np.sum(state.mass[self.right]
                           * self._accel[self.right, self.axis]))
        sample = {
            "reaction_force": fx,
            "neck_disp": self._radius0 - self._mid_radius(),
        }
        if self.plastic is not None:
            sample["max_alpha"] = float(np.max(self.plastic.alpha))
            # the mid-span section is fully plastic once its smallest
            # equivalent plastic strain is positive (macroscopic yield)
            sample["mid_alpha_min"] = float(np.min(self.plastic.alpha[self.mid_mask]))
        else:
            sample["max_alpha"] = 0.0
            sample["mid_alpha_min"] = 0.0
        return sample


class PorousProblem:
    """Clamped porous membrane wetted by a droplet; diffusion-driven swelling.

    One outer step performs a single explicit diffusion update (flux,
    fluid mass, saturation, pressure), applies the contact constraint
    or evaporation sink, and freezes the fluid fields for the inner
    solid relaxation, which evolves the mixture momentum.
    """

    def __init__(self, state: PorousState, model: MembraneModel,
                 nbh: Neighborhood, correction: np.ndarray,
                 contact_mask: np.ndarray, contact_time: float,
                 evaporation_rate: float,
                 column_id: np.ndarray, column_x: np.ndarray,
                 center_column: int, deflection_axis: int):
        self.state = state
        self.model = model
        self.nbh = nbh
        self.correction = correction
        self.contact_mask = contact_mask
        self.contact_time = float(contact_time)
        self.evaporation_rate = float(evaporation_rate)
        self.column_id = column_id
        self.column_x = column_x
        self.n_columns = len(column_x)
        self.center_column = int(center_column)
        self.deflection_axis = int(deflection_axis)
        self.h_min = float(np.min(nbh.spec.h_axes))
        self._rate = np.zeros_like(state.momentum)
        self._flux_rate = np.zeros_like(state.momentum)
        self._rho_l = np.zeros(state.n)
        self._j = np.ones(state.n)
        self._tbuf = np.zeros_like(state.def_grad)
        self._ek_pre_damp = 0.0
        self._vol_movable = float(np.sum(state.volume0[state.movable]))
        self._refresh_mixture_mass()

    def _refresh_mixture_mass(self) -> None:
        self._mixture_mass = (self.model.density0 * self.state.volume0
                              + self.state.fluid_mass)
        self._inv_masses = stepping.damping_inverse_masses(
            self._mixture_mass, self.state.movable, self.nbh)

    ramp_active = False

    def velocities(self) -> np.ndarray:
        return self.state.vel_solid

    def _refresh_velocities(self) -> None:
        v_s, v_l = porous.split_velocities(self.state, self.model)
        v_s[self.state.constrained] = 0.0
        v_l[self.state.constrained] = 0.0
        self.state.vel_solid = v_s
        self.state.vel_fluid = v_l

    def advance_slow(self, step: int, dt_outer: float, t: float) -> int:
        state, model = self.state, self.model
        v_solid = state.vel_solid.copy()

        sat, flux = porous.update_saturation_and_flux(state, self.nbh, model, self.correction)
        state.saturation = sat
        state.flux = flux
        mass, clamped = porous.update_fluid_mass(state, self.nbh, dt_outer, model, self.correction)

        _, _, j, vol = porous.mixture_densities(state, model)
        if t <= self.contact_time * (1.0 + 1e-12):
            mass[self.contact_mask] = (model.porosity * model.fluid_density0
                                       * vol[self.contact_mask])
        elif self.evaporation_rate > 0.0:
            mass = mass * np.exp(-self.evaporation_rate * dt_outer)
        state.fluid_mass = mass

        # Refresh the fluid fields the inner loop will see as frozen; the
        # solid velocity is continuous across the diffusion update, so the
        # mixture momentum is rebuilt around it.
        sat, flux = porous.update_saturation_and_flux(state, self.nbh, model, self.correction)
        state.saturation = sat
        state.flux = flux
        state.pressure = porous.fluid_pressure(sat, model)
        self._refresh_mixture_mass()
        self._rho_l = sat * model.fluid_density0
        self._j = j
        rho = model.density0 / j + self._rho_l
        state.momentum = rho[:, None] * v_solid + state.flux
        state.momentum[state.constrained] = state.flux[state.constrained]
        self._refresh_velocities()
        self._flux_rate = porous.momentum_flux_rate(state, self.nbh,
                                                    self.correction)
        return clamped

    def stable_time_step(self, cfl: float) -> float:
        state = self.state
        v2 = np.sum(state.vel_solid * state.vel_solid, axis=1)
        vmax = float(np.sqrt(np.max(v2, initial=0.0)))
        dt = self.h_min / (self.model.sound_speed + vmax)
        rho = self._mixture_mass / state.volume0
        a2 = np.sum(self._rate * self._rate, axis=1) / (rho * rho)
        amax = float(np.sqrt(np.max(a2[state.movable], initial=0.0)))
        if amax > 0.0:
            dt = min(dt, float(np.sqrt(self.h_min / amax)))
        return cfl * dt

    def _solid_velocity(self, rho: np.ndarray) -> np.ndarray:
        v = (self.state.momentum - self.state.flux) / rho[:, None]
        v[self.state.constrained] = 0.0
        return v

    def relax_step(self, dt: float, eta: float) -> None:
        # Fluid fields (mass, saturation, pressure, flux) are frozen within
        # the inner loop; only the solid motion and its stress relax.
        state, model = self.state, self.model
        movable = state.movable
        constrained = state.constrained

        state.momentum += 0.5 * dt * self._rate
        state.momentum[constrained] = state.flux[constrained]
        rho = model.density0 / self._j + self._rho_l
        v_s = self._solid_velocity(rho)

        state.pos += dt * v_s
        state.def_grad += dt * solids.deformation_rate(
            v_s, self.nbh, self.correction)

        nbh = self.nbh
        j = self._j
        rate = self._rate
        _accel.porous_stress_rhs(
            state.def_grad, state.pressure, self.correction,
            nbh.indptr, nbh.idx, nbh.grad0, nbh.volume0,
            model.shear_modulus, model.lame_lambda,
            self._tbuf, j, rate)
        if np.min(j) <= 0.0:
            raise ElementInversionError(np.flatnonzero(j <= 0.0))
        rate += self._flux_rate
        state.momentum += 0.5 * dt * rate
        state.momentum[constrained] = state.flux[constrained]

        rho = model.density0 / j + self._rho_l
        v_s = self._solid_velocity(rho)
        v2 = np.sum(v_s * v_s, axis=1)
        ek = 0.5 * float(np.sum(self._mixture_mass[movable] * v2[movable]))
        self._ek_pre_damp = ek / self._vol_movable

        stepping.apply_damping_sweep(
            v_s, self._mixture_mass, movable, self.nbh, eta, dt,
            inv_masses=self._inv_masses)
        state.vel_solid = v_s
        state.momentum = rho[:, None] * v_s + state.flux
        state.momentum[constrained] = state.flux[constrained]


    def energy_report(self, policy: stepping.SteppingPolicy) -> stepping.EnergyReport:
        value = self._ek_pre_damp
        return stepping.EnergyReport(
            value=value,
            reference=policy.energy_reference,
            criterion=policy.energy_criterion,
            converged=bool(value <= policy.energy_criterion),
        )

    def deflection_profile(self) -> np.ndarray:
        disp = self.state.pos[:, self.deflection_axis] - self.state.ref_pos[:, self.deflection_axis]
        sums = np.bincount(self.column_id, weights=disp, minlength=self.n_columns)
        counts = np.bincount(self.column_id, minlength=self.n_columns)
        return sums / counts

    def measure(self, t: float) -> dict:
        self._refresh_velocities()
        profile = self.deflection_profile()
        return {
            "amplitude": float(profile[self.center_column]),
            "fluid_mass_total": float(np.sum(self.state.fluid_mass)),
            "contact_mass_total": float(
                np.sum(self.state.fluid_mass[self.contact_mask])),
            "max_saturation": float(np.max(self.state.saturation)),
            "profile": profile,
        }


# ----------------------------------------------------------------------
# builders
# ----------------------------------------------------------------------

def _necking_materials(p: dict):
    elastic = ElasticModel.from_shear_bulk(
        p["shear_modulus"], p["bulk_modulus"], p["density"])
    hardening = HardeningModel(
        initial_flow_stress=p["initial_flow_stress"],
        saturation_flow_stress=p["saturation_flow_stress"],
        saturation_exponent=p["saturation_exponent"],
        linear_coefficient=p["hardening_coefficient"],
    ) if p["plasticity"] else None
    return elastic, hardening


def _check_spacing(extent: float, dp: float, name: str) -> int:
    count = int(round(extent / dp))
    if count < 1 or abs(count * dp - extent) > 0.005 * extent:
        raise ConfigError(
            f"particle spacing {dp:g} does not divide {name} {extent:g} "
            f"within 0.5%")
    return count


def _lattice_necking_2d(p: dict):
    length, width, dp = p["length"], p["width"], p["dp"]
    n_cols = _check_spacing(length, dp, "length")
    n_rows = _check_spacing(width, dp, "width")
    xoff = _centered_offsets(n_cols, dp)
    yoff = _centered_offsets(n_rows, dp)
    scale = _taper_scale(xoff, p["imperfection"],
                         0.5 * p["imperfection_extent"] * length)

    xs = np.repeat(xoff, n_rows)
    col = np.repeat(np.arange(n_cols), n_rows)
    ys = np.tile(yoff, n_cols) * np.repeat(scale, n_rows)
    pos = np.column_stack([xs, ys])
    vol = dp * dp * np.repeat(scale, n_rows)
    return pos, vol, col, n_cols


def build_necking_2d(p: dict) -> NeckingProblem:
    """Plane tensile bar with a smooth central imperfection."""
    dp = p["dp"]
    pos, vol, col, n_cols = _lattice_necking_2d(p)
    xs = pos[:, 0]
    layers = int(p["layers"])
    left = col < layers
    right = col >= n_cols - layers
    constrained = left | right

    elastic, hardening = _necking_materials(p)
    state = SolidState.at_rest(pos, p["density"], vol, constrained)
    plastic = PlasticState.initial(state.n, 2) if p["plasticity"] else None

    spec = KernelSpec(h=p["h_factor"] * dp, dim=2)
    nbh = build_neighborhoods(pos, vol, spec)
    correction = compute_correction_matrices(nbh)

    mid = np.abs(xs) <= 0.51 * dp
    return NeckingProblem(
        state, plastic, elastic, hardening, nbh, correction,
        left, right,
        end_disp_per_outer=p["stretch_per_end"] / p["n_outer"],
        ramp_steps=p["ramp_steps"], mid_mask=mid,
        cross_section=p["width"])


def _lattice_necking_3d(p: dict):
    length, radius, dp = p["length"], p["radius"], p["dp"]
    n_cols = _check_spacing(length, dp, "length")
    # even count: no particles on the y/z mirror planes, so mirror-image
    # damping pairs never share a particle
    n_trans = 2 * int(np.round(radius / dp))
    xoff = _centered_offsets(n_cols, dp)
    toff = _centered_offsets(n_trans, dp)
    scale = _taper_scale(xoff, p["imperfection"],
                         0.5 * p["imperfection_extent"] * length)

    yy, zz = np.meshgrid(toff, toff, indexing="ij")
    keep = yy ** 2 + zz ** 2 <= radius ** 2
    ysec, zsec = yy[keep], zz[keep]
    n_sec = len(ysec)
    if 2.0 * radius / dp < 8:
        raise ConfigError("need at least 8 particles across the diameter")

    xs = np.repeat(xoff, n_sec)
    col = np.repeat(np.arange(n_cols), n_sec)
    s = np.repeat(scale, n_sec)
    pos = np.column_stack([xs, np.tile(ysec, n_cols) * s,
                           np.tile(zsec, n_cols) * s])
    vol = dp ** 3 * s ** 2
    return pos, vol, col, n_cols


def build_necking_3d(p: dict) -> NeckingProblem:
    """Cylindrical tensile bar, length along x, circular cross-section."""
    dp = p["dp"]
    pos, vol, col, n_cols = _lattice_necking_3d(p)
    xs = pos[:, 0]
    layers = int(p["layers"])
    left = col < layers
    right = col >= n_cols - layers
    constrained = left | right

    elastic, hardening = _necking_materials(p)
    state = SolidState.at_rest(pos, p["density"], vol, constrained)
    plastic = PlasticState.initial(state.n, 3) if p["plasticity"] else None

    spec = KernelSpec(h=p["h_factor"] * dp, dim=3)
    nbh = build_neighborhoods(pos, vol, spec)
    correction = compute_correction_matrices(nbh)

    mid = np.abs(xs) <= 0.51 * dp
    return NeckingProblem(
        state, plastic, elastic, hardening, nbh, correction,
        left, right,
        end_disp_per_outer=p["stretch_per_end"] / p["n_outer"],
        ramp_steps=p["ramp_steps"], mid_mask=mid,
        cross_section=np.pi * p["radius"] ** 2)


def _membrane_model(p: dict) -> MembraneModel:
    return MembraneModel(
        density0=p["density"],
        diffusivity=p["diffusivity"],
        pressure_coeff=p["pressure_coeff"],
        youngs_modulus=p["youngs_modulus"],
        poisson_ratio=p["poisson_ratio"],
        porosity=p["porosity"],
        fluid_density0=p["fluid_density"],
        initial_saturation=p["initial_saturation"],
    )


def build_fsi_2d(p: dict) -> PorousProblem:
    """Thin porous beam, both ends clamped by ghost layers, droplet on top."""
    length, width, dp_fine = p["length"], p["width"], p["dp"]
    ratio = p["anisotropy"]
    dp_x = ratio * dp_fine
    n_span = _check_spacing(length, dp_x, "length")
    layers = int(p["layers"])
    n_rows = _check_spacing(width, dp_fine, "width")

    icol = np.arange(-layers, n_span + layers + 1)
    xoff = (icol - n_span / 2.0) * dp_x
    yoff = _centered_offsets(n_rows, dp_fine)

    n_cols = len(xoff)
    xs = np.repeat(xoff, n_rows)
    ys = np.tile(yoff, n_cols)
    col = np.repeat(np.arange(n_cols), n_rows)
    pos = np.column_stack([xs, ys])
    vol = np.full(len(xs), dp_x * dp_fine)

    half_span = n_span / 2.0 * dp_x
    constrained = np.abs(xs) > half_span * (1.0 + 1e-12)
    contact = (np.abs(xs) <= 0.5 * p["contact_frac"] * length * (1.0 + 1e-12)) \
        & (ys > 0.0)

    model = _membrane_model(p)
    state = PorousState.at_rest(pos, vol, constrained)
    spec = KernelSpec(h=p["h_factor"] * dp_fine, dim=2, anisotropy=(ratio, 1.0))
    nbh = build_neighborhoods(pos, vol, spec)
    correction = compute_correction_matrices(nbh)

    return PorousProblem(
        state, model, nbh, correction, contact,
        contact_time=p["contact_time"],
        evaporation_rate=p["evaporation_rate"],
        column_id=col, column_x=xoff,
        center_column=int(np.argmin(np.abs(xoff))),
        deflection_axis=1)


def build_fsi_3d(p: dict) -> PorousProblem:
    """Thin porous film, four edges clamped, droplet on the top face."""
    lx, ly, thick, dp_fine = p["length"], p["breadth"], p["thickness"], p["dp"]
    ratio = p["anisotropy"]
    dp_xy = ratio * dp_fine
    nx = _check_spacing(lx, dp_xy, "length")
    ny = _check_spacing(ly, dp_xy, "breadth")
    n_rows = _check_spacing(thick, dp_fine, "thickness")
    layers = int(p["layers"])

    ix = np.arange(-layers, nx + layers + 1)
    iy = np.arange(-layers, ny + layers + 1)
    xoff = (ix - nx / 2.0) * dp_xy
    yoff = (iy - ny / 2.0) * dp_xy
    zoff = _centered_offsets(n_rows, dp_fine)

    xs, ys, zs = [a.ravel() for a in np.meshgrid(xoff, yoff, zoff, indexing="ij")]
    pos = np.column_stack([xs, ys, zs])
    vol = np.full(len(xs), dp_xy * dp_xy * dp_fine)
    colx = np.repeat(np.arange(len(xoff)), len(yoff) * n_rows)

    constrained = (np.abs(xs) > nx / 2.0 * dp_xy * (1.0 + 1e-12)) \
        | (np.abs(ys) > ny / 2.0 * dp_xy * (1.0 + 1e-12))
    contact = (np.abs(xs) <= 0.5 * p["contact_frac"] * lx * (1.0 + 1e-12)) \
        & (np.abs(ys) <= 0.5 * p["contact_frac"] * ly * (1.0 + 1e-12)) \
        & (zs > 0.0)

    model = _membrane_model(p)
    state = PorousState.at_rest(pos, vol, constrained)
    spec = KernelSpec(h=p["h_factor"] * dp_fine, dim=3,
                      anisotropy=(ratio, ratio, 1.0))
    nbh = build_neighborhoods(pos, vol, spec)
    correction = compute_correction_matrices(nbh)

    return PorousProblem(
        state, model, nbh, correction, contact,
        contact_time=p["contact_time"],
        evaporation_rate=p["evaporation_rate"],
        column_id=colx, column_x=xoff,
        center_column=int(np.argmin(np.abs(xoff))),
        deflection_axis=2)


_BUILDERS = {
    "necking_2d": build_necking_2d,
    "necking_3d": build_necking_3d,
    "fsi_2d": build_fsi_2d,
    "fsi_3d": build_fsi_3d,
}


def measure_observables(problem) -> dict:
    """Current observable sample of a built problem (see Problem.measure)."""
    return problem.measure(0.0)


def particle_count(params: dict) -> int:
    """Number of particles the scenario lattice will carry (cheap: no
    neighborhood construction)."""
    name = params["scenario"]
    if name == "necking_2d":
        return len(_lattice_necking_2d(params)[0])
    if name == "necking_3d":
        return len(_lattice_necking_3d(params)[0])
    if name == "fsi_2d":
        n_span = _check_spacing(params["length"],
                                params["anisotropy"] * params["dp"], "length")
        n_rows = _check_spacing(params["width"], params["dp"], "width")
        return (n_span + 2 * int(params["layers"]) + 1) * n_rows
    if name == "fsi_3d":
        dp_xy = params["anisotropy"] * params["dp"]
        nx = _check_spacing(params["length"], dp_xy, "length")
        ny = _check_spacing(params["breadth"], dp_xy, "breadth")
        n_rows = _check_spacing(params["thickness"], params["dp"], "thickness")
        ghost = 2 * int(params["layers"]) + 1
        return (nx + ghost) * (ny + ghost) * n_rows
    raise ConfigError(f"unknown scenario {name!r}")


def build(params: dict):
    """Build (problem, policy) from fully resolved parameters."""
    name = params["scenario"]
    if name not in _BUILDERS:
        raise ConfigError(f"unknown scenario {name!r}")
    problem = _BUILDERS[name](params)

    dt_outer = params["t_total"] / params["n_outer"]
    if isinstance(problem, PorousProblem):
        dt_stable = stepping.diffusion_time_step(
            problem.h_min, params["diffusivity"])
        if dt_outer > dt_stable * (1.0 + 1e-9):
            raise ConfigError(
                f"outer step {dt_outer:g} s exceeds the diffusion stability "
                f"limit {dt_stable:g} s; increase n_outer")
        ref = params["pressure_coeff"] * (params["porosity"]
                                          - params["initial_saturation"])
        mode = "density"
    else:
        ref = 0.5 * params["ref_force"] * params["ref_displacement"]
        mode = "total"
    if params["energy_ref"] > 0.0:
        ref = params["energy_ref"]

    policy = stepping.SteppingPolicy(
        dt_outer=dt_outer,
        n_outer=params["n_outer"],
        eta=params["eta"],
        energy_criterion=params["energy_pct"] * ref,
        energy_reference=ref,
        energy_mode=mode,
        max_inner=params["max_inner"],
        min_inner=params["min_inner"],
        cfl=params["cfl"],
    )
    return problem, policy

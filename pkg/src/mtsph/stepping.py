"""Multi-rate outer/inner time stepping with dynamic-relaxation damping.

The slow process (stretch loading or fluid diffusion) advances with a
large outer step; after each outer step the solid is relaxed to
quasi-static equilibrium by an inner loop of small explicit steps with
implicit pairwise viscous damping, terminated by a kinetic-energy
criterion.  Counters for outer steps, inner relaxation steps and
damping sweeps are accumulated for the efficiency bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import SimulationError
from .neighbors import Neighborhood


@dataclass
class SteppingPolicy:
    """Outer/inner step sizes, damping and convergence control."""

    dt_outer: float
    n_outer: int
    eta: float                   # damping viscosity
    energy_criterion: float      # absolute kinetic-energy threshold
    energy_reference: float      # scale the criterion was derived from
    energy_mode: str = "total"   # "total" (J) or "density" (J/m^3)
    max_inner: int = 0           # 0 = derive from the single-rate count
    min_inner: int = 1
    cfl: float = 0.6

    def __post_init__(self):
        if self.dt_outer <= 0.0 or self.n_outer <= 0:
            raise ValueError("outer stepping must be positive")
        if self.eta < 0.0 or self.energy_criterion < 0.0:
            raise ValueError("eta and energy criterion must be >= 0")
        if self.energy_mode not in ("total", "density"):
            raise ValueError("energy_mode must be 'total' or 'density'")

    def inner_cap(self, dt_inner: float) -> int:
        """Safety cap; defaults to 10x the single-rate count."""
        if self.max_inner > 0:
            return self.max_inner
        return 10 * int(np.ceil(self.dt_outer / dt_inner))


@dataclass
class EnergyReport:
    """Kinetic energy against the convergence criterion."""

    value: float
    reference: float
    criterion: float
    converged: bool

    @property
    def ratio(self) -> float:
        return self.value / self.reference if self.reference > 0.0 else 0.0


def diffusion_time_step(h: float, diffusivity: float) -> float:
    """Largest stable explicit diffusion step 0.5 h^2 / D."""
    if h <= 0.0 or diffusivity <= 0.0:
        raise ValueError("h and diffusivity must be positive")
    return 0.5 * h * h / diffusivity


def kinetic_energy(vel, mass, movable, criterion, reference,
                   mode="total", volume=None) -> EnergyReport:
    """Kinetic energy of the movable particles vs. the criterion.

    "total" sums 1/2 m |v|^2 (J); "density" divides that sum by the
    movable volume, giving the volume-averaged kinetic energy density
    (Pa) compared against a pressure scale.
    """
    v2 = np.sum(vel * vel, axis=1)
    value = 0.5 * float(np.sum(mass[movable] * v2[movable]))
    if mode == "density":
        if volume is None:
            raise ValueError("density mode needs particle volumes")
        value /= float(np.sum(volume[movable]))
    return EnergyReport(
        value=value,
        reference=float(reference),
        criterion=float(criterion),
        converged=bool(value <= criterion),
    )


def damping_inverse_masses(mass, movable, nbh: Neighborhood):
    """Per-pair inverse masses for the damping sweep (0 when constrained)."""
    inv = np.where(movable, 1.0 / mass, 0.0)
    return (np.ascontiguousarray(inv[nbh.pair_i]),
            np.ascontiguousarray(inv[nbh.pair_j]))


def apply_damping_sweep(vel, mass, movable, nbh: Neighborhood,
                        eta: float, dt: float,
                        inv_masses=None) -> np.ndarray:
    """One implicit pairwise damping sweep over all neighbor pairs.

    Pairs are visited in a fixed deterministic order, forward then
    reverse, each pass over half the step.  Velocities of constrained
    particles never change; pairs of free particles conserve their
    momentum exactly.  Modifies `vel` in place and returns it.
    """
    if eta < 0.0:
        raise ValueError("eta must be >= 0")
    if inv_masses is None:
        inv_masses = damping_inverse_masses(mass, movable, nbh)
    _accel.damping_sweep(vel, nbh.pair_i, nbh.pair_j, nbh.pair_damp,
                         inv_masses[0], inv_masses[1], nbh.pair_group,
                         eta, dt)
    return vel


@dataclass
class RunCounters:
    """Iteration bookkeeping mirroring the efficiency tables."""

    n_outer: int = 0
    n_inner: int = 0      # stress-relaxation steps
    n_damping: int = 0    # damping sweeps (one per relaxation step)
    clamp_events: int = 0
    cap_hits: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    min_dt_inner: float = np.inf

    def single_rate_baseline(self, t_total: float) -> float:
        """Inner-step count a single-rate explicit run would need."""
        if not np.isfinite(self.min_dt_inner) or self.min_dt_inner <= 0.0:
            return np.nan
        return t_total / self.min_dt_inner


@dataclass
class Observables:
    """Per-outer-step time series collected during a run."""

    time: np.ndarray
    reaction_force: np.ndarray
    neck_disp: np.ndarray
    amplitude: np.ndarray
    ek_ratio: np.ndarray
    n_inner: np.ndarray
    ns_cum: np.ndarray
    nd_cum: np.ndarray
    extras: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.time)


def run_outer_inner(problem, policy: SteppingPolicy, observers=()):
    """Drive a problem through the outer/inner loop to its end time.

    Per outer step: advance the slow process (displacement increment or
    one diffusion update), then relax the solid at the inner step size
    until the kinetic-energy criterion is met (never fewer than
    `min_inner` steps, never while a loading ramp is still being
    applied); a safety cap aborts runaway inner loops and is recorded,
    never silent.  Observers are called after every outer step with
    (step, time, sample).
    """
    counters = RunCounters()
    rows = {k: [] for k in ("time", "reaction_force", "neck_disp",
                            "amplitude", "ek_ratio", "n_inner",
                            "ns_cum", "nd_cum")}
    extras: dict[str, list] = {}

    t = 0.0
    for step in range(1, policy.n_outer + 1):
        t = step * policy.dt_outer
        counters.clamp_events += problem.advance_slow(step, policy.dt_outer, t)

        n = 0
        report = None
        while True:
            n += 1
            dt_inner = problem.stable_time_step(policy.cfl)
            counters.min_dt_inner = min(counters.min_dt_inner, dt_inner)
            problem.relax_step(dt_inner, policy.eta)
            report = problem.energy_report(policy)
            if (report.converged and n >= policy.min_inner
                    and not problem.ramp_active):
                break
            if n >= policy.inner_cap(dt_inner):
                counters.cap_hits.append(step)
                counters.warnings.append(
                    f"inner cap reached at outer step {step} "
                    f"(E_k={report.value:.3e} > {report.criterion:.3e})")
                break
        counters.n_inner += n
        counters.n_damping += n
        counters.n_outer = step

        if not np.all(np.isfinite(problem.velocities())):
            raise SimulationError(
                f"non-finite velocities after outer step {step} (t={t:g} s)")

        sample = problem.measure(t)
        rows["time"].append(t)
        rows["reaction_force"].append(sample.get("reaction_force", 0.0))
        rows["neck_disp"].append(sample.get("neck_disp", 0.0))
        rows["amplitude"].append(sample.get("amplitude", 0.0))
        rows["ek_ratio"].append(report.ratio)
        rows["n_inner"].append(n)
        rows["ns_cum"].append(counters.n_inner)
        rows["nd_cum"].append(counters.n_damping)
        for key, value in sample.items():
            if key in ("reaction_force", "neck_disp", "amplitude"):
                continue
            extras.setdefault(key, []).append(value)
        for obs in observers:
            obs(step, t, sample)

    obs_arrays = {k: np.asarray(v) for k, v in rows.items()}
    return Observables(
        time=obs_arrays["time"],
        reaction_force=obs_arrays["reaction_force"],
        neck_disp=obs_arrays["neck_disp"],
        amplitude=obs_arrays["amplitude"],
        ek_ratio=obs_arrays["ek_ratio"],
        n_inner=obs_arrays["n_inner"].astype(int),
        ns_cum=obs_arrays["ns_cum"].astype(int),
        nd_cum=obs_arrays["nd_cum"].astype(int),
        extras={k: np.asarray(v) for k, v in extras.items()},
    ), counters

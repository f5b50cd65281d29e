"""Total-Lagrangian SPH solver with multi-rate time stepping.

Explicit solid dynamics (Neo-Hookean elasticity + J2 plasticity with
nonlinear isotropic hardening) and partially saturated porous-media
diffusion, coupled through an outer/inner loop: the slow process
(stretch loading or fluid diffusion) advances with a large time step,
the fast solid response is relaxed to quasi-static equilibrium with a
small time step and implicit pairwise viscous damping.
"""

__version__ = "0.1.0"

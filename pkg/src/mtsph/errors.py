"""Exception types raised by the solver."""


class MtsphError(Exception):
    """Base class for all solver errors."""


class ConfigError(MtsphError):
    """Invalid run configuration (unknown key, bad value, parse failure)."""


class GeometryError(MtsphError):
    """Invalid particle geometry (duplicate positions, bad lattice)."""


class SingularMomentMatrixError(MtsphError):
    """Moment matrix of a particle is not invertible."""

    def __init__(self, particle_ids, dets):
        self.particle_ids = list(particle_ids)
        self.dets = list(dets)
        ids = ", ".join(str(i) for i in self.particle_ids[:10])
        super().__init__(
            f"singular kernel moment matrix at {len(self.particle_ids)} "
            f"particle(s), first ids: [{ids}]"
        )


class ElementInversionError(MtsphError):
    """det(F) <= 0 at one or more particles."""

    def __init__(self, particle_ids):
        self.particle_ids = list(particle_ids)
        ids = ", ".join(str(i) for i in self.particle_ids[:10])
        super().__init__(
            f"non-positive deformation determinant at "
            f"{len(self.particle_ids)} particle(s), first ids: [{ids}]"
        )


class ReturnMapError(MtsphError):
    """Plastic return mapping failed to converge."""

    def __init__(self, particle_ids, residuals):
        self.particle_ids = list(particle_ids)
        self.residuals = list(residuals)
        ids = ", ".join(str(i) for i in self.particle_ids[:10])
        super().__init__(
            f"return mapping did not converge at {len(self.particle_ids)} "
            f"particle(s), first ids: [{ids}]"
        )


class SimulationError(MtsphError):
    """Run aborted (non-finite state or other unrecoverable condition)."""

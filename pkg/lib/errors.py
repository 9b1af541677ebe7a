class DiscordSimError(Exception):
    """Base class for every error raised by the simulator"""

    exit_code = 2


class ConfigError(DiscordSimError):
    """Scenario configuration failed validation.

    Carries every violated constraint, not just the first one found.
    """

    exit_code = 1

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DimensionError(DiscordSimError, ValueError):
    """Shapes, subsystem dims or indices are inconsistent"""


class NotHermitianError(DiscordSimError, ValueError):
    def __init__(self, asymmetry, tol):
        self.asymmetry = asymmetry
        super().__init__(f"Matrix is not Hermitian: max |a_ij - conj(a_ji)| = {asymmetry:.3e} > {tol:.1e}")


class NotAStateError(DiscordSimError, ValueError):
    """Matrix violates a density-matrix invariant beyond tolerance"""


class SolverError(DiscordSimError):
    pass


class PropagatorError(SolverError):
    pass


class NonUniqueSteadyStateError(SolverError):
    def __init__(self, gap, tol):
        self.gap = gap
        super().__init__(f"Non-unique steady state: spectral gap {gap:.3e} below {tol:.1e}")


class CutoffNotConvergedError(SolverError):
    pass


class NotSettledError(DiscordSimError):
    exit_code = 3

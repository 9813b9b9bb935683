"""Exception hierarchy shared by the solver, ROM and harness layers."""


class ScatteringError(Exception):
    """Base class for all numerical failures raised by romscatter."""


class ResonantWavenumberError(ScatteringError):
    """The discrete Schrodinger operator is singular at the requested k."""

    def __init__(self, k, pivot=None):
        self.k = k
        self.pivot = pivot
        msg = f"resonant wavenumber k={k!r}: discrete system is singular"
        if pivot is not None:
            msg += f" (scaled pivot {pivot:.3e})"
        super().__init__(msg)


class SpectrumError(ScatteringError):
    """Boundary data is unusable (coincident wavenumbers, NaNs, missing derivatives)."""


class RomSolveError(ScatteringError):
    """The projected ROM system is singular at the requested wavenumber."""


class LanczosError(ScatteringError):
    """The M-orthogonal Lanczos procedure could not be started or continued."""


class StageError(ScatteringError):
    """Wraps a failure inside one stage of the two-step inversion."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")

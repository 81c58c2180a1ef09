"""Exception hierarchy shared by all qsynth modules."""


class QsynthError(Exception):
    """Base class for every error raised by qsynth."""


class DimensionError(QsynthError, ValueError):
    pass


class NotHermitianError(QsynthError, ValueError):
    pass


class NotPositiveSemidefiniteError(QsynthError, ValueError):
    pass


class SingularSylvesterError(QsynthError):
    """Lyapunov/Sylvester operator is singular (A and -A^T share an eigenvalue)."""


class ImaginaryAxisEigenvalue(QsynthError):
    """The Hamiltonian matrix has eigenvalues on (or too close to) the imaginary axis."""


class SubspaceExtractionFailure(QsynthError):
    """The stable invariant subspace could not be turned into a Riccati solution."""


class UnstableA(QsynthError):
    pass


class ConventionError(QsynthError, ValueError):
    """A system violates the standard-form conventions (even n_y, n_w >= n_y, ...)."""


class SynthesisFailure(QsynthError):
    """A stage of the H-infinity pipeline failed.

    ``code`` is one of the stable failure codes listed in
    :data:`qsynth.synthesis.FAILURE_CODES`; ``stage`` names the pipeline stage.
    """

    def __init__(self, code, stage, detail=""):
        self.code = code
        self.stage = stage
        self.detail = detail
        msg = f"[{stage}] {code}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)

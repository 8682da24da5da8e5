"""Exception hierarchy.

Every error carries a short machine-readable ``code`` and a ``kind`` that the
command line maps to an exit status: ``"validation"`` for bad inputs and
``"numerical"`` for failures that happen while computing.
"""


class LaserModelError(Exception):
    code = "error"
    kind = "numerical"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"code": self.code, "kind": self.kind, "message": str(self)}
        out.update({k: _plain(v) for k, v in self.details.items()})
        return out


def _plain(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


class ValidationError(LaserModelError, ValueError):
    code = "invalid_input"
    kind = "validation"


class NonPositiveRate(ValidationError):
    code = "non_positive_rate"


class EmptyGrid(ValidationError):
    code = "empty_grid"


class NonIdenticalLasers(ValidationError):
    code = "non_identical_lasers"


class NonPositiveInputVariance(ValidationError):
    code = "non_positive_input_variance"


class StepTooLarge(ValidationError):
    code = "step_too_large"


class ConfigError(ValidationError):
    code = "bad_config"


class NoLasing(LaserModelError):
    code = "no_lasing"


class PhaseDiffusionDivergence(LaserModelError):
    code = "phase_diffusion_divergence"


class SingularSystem(LaserModelError):
    code = "singular_system"


class NotPositiveSemidefinite(LaserModelError):
    code = "not_positive_semidefinite"


class UnstableDrift(LaserModelError):
    code = "unstable_drift"


class QuadratureNonConvergence(LaserModelError):
    code = "quadrature_non_convergence"

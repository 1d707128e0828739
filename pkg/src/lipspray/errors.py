"""Exception types shared across the toolkit."""


class LipsprayError(Exception):
    """Base class for all toolkit errors."""


class DomainViolation(LipsprayError):
    """An evaluation or solve was requested outside its admissible domain."""


class EscapeFromBall(LipsprayError):
    """A Picard iterate left the working chart ball.

    Under valid constants this cannot happen; it signals that the constants
    do not actually bound the spray on the ball.
    """


class SingularTensor(LipsprayError):
    """The fundamental tensor is singular at an evaluation point."""


class SingularJacobian(LipsprayError):
    """A chart map Jacobian is singular at an evaluation point."""


class DegenerateMetric(LipsprayError):
    """A metric is degenerate where non-degeneracy is required."""


class UnboundedEstimate(LipsprayError):
    """A sampled Lipschitz quotient keeps growing under grid refinement.

    Raised when the quotient grows by a factor >= 2 across two successive
    refinements (the observable symptom of a Hölder-but-not-Lipschitz spray).
    """

    def __init__(self, constant, ratio, message=None):
        self.constant = constant
        self.ratio = ratio
        super().__init__(
            message
            or f"estimate for {constant!r} grew by {ratio:.3g}x over two refinements"
        )


class ConvergenceFailure(LipsprayError):
    """An iteration failed to reach its tolerance within the allowed steps."""


class NoncausalTangent(LipsprayError):
    """A curve tangent violates the causal precondition of a Lorentzian length."""


class AmbiguousClassification(LipsprayError):
    """A vector's causal character cannot be resolved within tolerance."""


class UnknownGeometry(LipsprayError):
    """Requested gallery entry does not exist."""


class InvalidParams(LipsprayError):
    """Gallery entry parameters are out of their admissible range."""

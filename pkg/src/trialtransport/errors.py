class PositivityError(ValueError):
    """A stratum needed by an estimand has no support."""

    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)

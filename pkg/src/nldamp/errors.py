"""Typed errors raised across the toolkit."""


class SingularInput(ValueError):
    """Damping denominator |e1| + mu is zero where the field is undefined."""


class OutOfDomain(ValueError):
    """Reference profile evaluated outside its time domain."""


class InvalidProfile(ValueError):
    """Reference profile segments do not fit together."""


class DegenerateInput(ValueError):
    """Estimator input carries no usable information (e.g. zero separation)."""


class ScenarioError(ValueError):
    """Malformed scenario file; message carries a field diagnostic."""

class DomainError(ValueError):
    """Argument outside the region where a formula is real and finite."""


class SingularityError(DomainError):
    """Argument too close to a pole or branch point of a closed form."""


class LightConeError(DomainError):
    """A velocity reached or crossed |v| = c."""


class ConvergenceError(RuntimeError):
    """An iterative method ran out of budget before meeting its tolerance."""


class GridMismatchError(ValueError):
    """Two objects that must share a velocity grid do not."""

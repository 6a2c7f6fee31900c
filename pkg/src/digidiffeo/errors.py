"""Exception types raised by the analysis library."""


class DiffeoError(Exception):
    """Base class for every error raised by digidiffeo."""


class LengthMismatch(DiffeoError, ValueError):
    pass


class NonFiniteValue(DiffeoError, ValueError):
    def __init__(self, index: int):
        super().__init__(f"non-finite value at linear index {index}")
        self.index = index


class OutOfBounds(DiffeoError, IndexError):
    pass


class BoundaryUndefined(DiffeoError, ValueError):
    """The requested stencil reaches outside the grid."""


class RankMismatch(DiffeoError, ValueError):
    pass


class InvalidSpec(DiffeoError, ValueError):
    pass


class UnsupportedDatatype(DiffeoError, ValueError):
    pass


class ShapeMismatch(DiffeoError, ValueError):
    pass


class CorruptHeader(DiffeoError, ValueError):
    pass


class IoFailure(DiffeoError, OSError):
    pass

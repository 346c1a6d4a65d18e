"""Exception types shared across the package.

Every error carries enough context (ids, levels, offending values) to be
actionable from a failed pipeline run without re-running the build.
"""


class CubeforgeError(Exception):
    """Base class for all package errors."""


class SpaceError(CubeforgeError):
    """Problems with the point set or its distance data."""


class SymmetryViolation(SpaceError):
    def __init__(self, x, y, dxy, dyx):
        self.x, self.y, self.dxy, self.dyx = x, y, dxy, dyx
        super().__init__(f"distance not symmetric: d({x},{y})={dxy!r} but d({y},{x})={dyx!r}")


class ZeroDistance(SpaceError):
    def __init__(self, x, y):
        self.x, self.y = x, y
        super().__init__(f"distinct points {x} and {y} at distance 0")


class NegativeDistance(SpaceError):
    def __init__(self, x, y, d):
        self.x, self.y, self.d = x, y, d
        super().__init__(f"negative distance d({x},{y})={d!r}")


class BadSpec(SpaceError):
    """Malformed or unsupported generator descriptor."""


class ModeViolation(CubeforgeError):
    """Strict mode requested but the scale ratio is too coarse for the
    triangle constant. The message records the failed product."""

    def __init__(self, product, limit, detail=""):
        self.product, self.limit = product, limit
        msg = f"strict mode needs constraint product <= {limit}, got {product}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DegenerateWindow(CubeforgeError):
    """No level window exists between diameter and minimum gap."""


class OrderError(CubeforgeError):
    """Problems assembling the parent relation between consecutive levels."""


class NoParent(OrderError):
    def __init__(self, level, child_index, point):
        self.level, self.child_index, self.point = level, child_index, point
        super().__init__(
            f"point {point} (index {child_index} on level {level + 1}) has no parent "
            f"candidate on level {level}")


class TightAmbiguity(OrderError):
    def __init__(self, level, child_index, point, candidates):
        self.level, self.child_index, self.point = level, child_index, point
        self.candidates = candidates
        super().__init__(
            f"point {point} on level {level + 1} has several close parents {candidates} "
            f"on level {level}; level separation is violated")


class SelectionError(CubeforgeError):
    """Problems applying a child-selection rule."""


class NoNearChild(SelectionError):
    def __init__(self, level, parent_index, point, radius):
        self.level, self.parent_index, self.point = level, parent_index, point
        self.radius = radius
        super().__init__(
            f"no child of index {parent_index} (point {point}) on level {level} "
            f"lies within {radius!r} of it")


class NotAChild(SelectionError):
    def __init__(self, level, parent_index, child_index):
        self.level, self.parent_index, self.child_index = level, parent_index, child_index
        super().__init__(
            f"index {child_index} on level {level + 1} is not a child of "
            f"index {parent_index} on level {level}")


class PreconditionFail(CubeforgeError):
    """A check was invoked outside its admissible parameter range."""


class ConfigError(CubeforgeError):
    """Malformed pipeline configuration."""


class BuildError(CubeforgeError):
    """A pipeline stage failed; the original error is chained."""

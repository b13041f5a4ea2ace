"""Exception hierarchy shared across the package."""


class YMHKError(Exception):
    pass


class BranchError(YMHKError, ValueError):
    """A group element is too close to the cut locus of the principal logarithm."""


class CurvatureTooRoughError(YMHKError):
    """A plaquette left the principal log chart; ``site`` is its lattice site id."""

    def __init__(self, message: str, site: int | None = None, plane: tuple[int, int] | None = None):
        super().__init__(message)
        self.site = site
        self.plane = plane


class LatticeTooSmallError(YMHKError, ValueError):
    pass


class StallSignal(YMHKError):
    """Backtracking exhausted its halvings without decreasing the energy."""


class BlowUpSignal(YMHKError):
    """The flow hit the blow-up ceiling or left the log chart."""

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class NoSingularityError(YMHKError):
    pass


class ConfigError(YMHKError, ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class SnapshotFormatError(YMHKError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class CorruptSnapshotError(YMHKError):
    pass

"""Exception taxonomy, mirrored by the CLI exit codes."""


class MpwaveError(Exception):
    """Base class for package errors."""


class InputError(MpwaveError):
    """Malformed configuration, file, or argument (CLI exit 2)."""


class DomainGateError(MpwaveError):
    """Parameter outside the admissible regime, e.g. |v| at or above the
    velocity threshold, or a trial profile that does not fit the box
    (CLI exit 3)."""


class SolverError(MpwaveError):
    """Solver failed to produce a usable result (CLI exit 4)."""


__all__ = ["MpwaveError", "InputError", "DomainGateError", "SolverError"]

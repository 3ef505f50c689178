"""Exception hierarchy shared by every module of the package."""


class N3AccessError(Exception):
    """Base class for all errors raised by n3access."""


class InvalidIdentityError(N3AccessError, ValueError):
    pass


class TopologyError(N3AccessError):
    """One or more topology rules are violated.

    ``errors`` holds every violated rule name (e.g. ``"missing-sepp"``).
    """

    def __init__(self, errors, details=None):
        self.errors = list(errors)
        self.details = list(details or [])
        msg = ", ".join(self.errors)
        if self.details:
            msg += " (" + "; ".join(self.details) + ")"
        super().__init__(msg)


class DerivationError(N3AccessError, ValueError):
    pass


class IncompleteHierarchyError(N3AccessError):
    pass


class IncompleteSizeTableError(N3AccessError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class TraceIncompleteError(N3AccessError):
    pass


class NoTunnelError(N3AccessError):
    pass


class MalformedPacketError(N3AccessError, ValueError):
    pass


class PreconditionError(N3AccessError):
    pass


class SelectionError(N3AccessError):
    """No serving AMF (or other function) could be selected."""


class NoCandidateError(N3AccessError):
    pass


class AnqpUnsupportedError(N3AccessError):
    pass


class UnreachableError(N3AccessError):
    pass


class GoldenParseError(N3AccessError, ValueError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class ConfigurationError(N3AccessError, ValueError):
    pass

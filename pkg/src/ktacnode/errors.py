"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class KTacnodeError(Exception):
    exit_code = 1
    module = "ktacnode"

    def __init__(self, message, module=None, **context):
        super().__init__(message)
        self.message = message
        if module is not None:
            self.module = module
        self.context = context

    def to_dict(self):
        return {
            "code": self.exit_code,
            "module": self.module,
            "message": self.message,
            "context": {k: _jsonable(v) for k, v in self.context.items()},
        }


def _jsonable(v):
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)


class DomainError(KTacnodeError, ValueError):
    """Bad arguments: outside an operation's precondition."""
    exit_code = 2


class NonexistenceError(KTacnodeError):
    """A norm h_{n,j} vanished; the orthogonal polynomial system does not exist."""
    exit_code = 3

    def __init__(self, message, degree=None, **context):
        super().__init__(message, degree=degree, **context)
        self.degree = degree


class AccuracyError(KTacnodeError):
    """A residual or drift exceeded its tolerance."""
    exit_code = 4


class SolverError(AccuracyError):
    """Newton or ODE solver failed to converge."""


class RegimeError(KTacnodeError):
    """Parameters outside the scaling regime an asymptotic formula needs."""
    exit_code = 5

class InputError(ValueError):
    """Caller supplied data outside an operation's domain."""


class InternalError(RuntimeError):
    """An invariant that construction should guarantee was violated."""


class InvalidParameterSet(InternalError, ValueError):
    """A parameter set makes one of the certified inequalities ill-defined."""

"""Exception hierarchy. CLI maps these onto exit codes (see cli.py)."""


class HlsInterpError(Exception):
    pass


class ParseError(HlsInterpError):
    """Source text rejected; carries 1-based line/column."""

    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class SchemaError(HlsInterpError):
    """A JSON input file does not match its schema."""


class ValidationError(HlsInterpError):
    """Semantic validation failed; carries the diagnostics list."""

    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = list(diagnostics)


class DimensionError(HlsInterpError):
    pass


class TransformError(HlsInterpError):
    """An IR transform could not be applied (loop missing, pattern unknown...)."""


class FlattenError(HlsInterpError):
    """A state machine cannot be lowered to the flat stepper form."""


class FuelExhausted(HlsInterpError):
    """Execution did not finish within the step budget."""


class SimError(HlsInterpError):
    pass


class PowerModelError(HlsInterpError):
    pass


class InfeasibleError(PowerModelError):
    """Numeric infeasibility: negative residual, uncalibrated parameters..."""

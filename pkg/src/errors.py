"""
Domain exceptions for the geodesic-flow lab.

The CLI maps ScenarioSchemaError to exit status 2. NumericalError, and any
other ValueError (ChartDomainError included) raised while a report runs, map to
exit status 3; ChartDomainError signals a point or frame outside a model's chart.
"""


class ChartDomainError(ValueError):
    """Point outside the chart validity region, or a degenerate frame"""


class NumericalError(ArithmeticError):
    """Numerical failure carrying the stage name and a diagnostics dictionary"""

    def __init__(self, message, stage="numerics", diagnostics=None):
        super().__init__(message)
        self.stage = stage
        self.diagnostics = dict(diagnostics or {})

    def to_dict(self):
        return {
            'stage': self.stage,
            'message': str(self),
            'diagnostics': self.diagnostics,
        }


class ScenarioSchemaError(ValueError):
    """Scenario file violation anchored to a line of the file"""

    def __init__(self, message, line=None, key=None):
        location = f"line {line}: " if line is not None else ""
        super().__init__(f"{location}{message}")
        self.line = line
        self.key = key

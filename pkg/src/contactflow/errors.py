"""Exception hierarchy.  Each class carries the CLI exit code of its category."""


class ContactFlowError(Exception):
    exit_code = 1


class ConfigError(ContactFlowError):
    exit_code = 2


class CompatibilityError(ConfigError):
    """Initial data violate a compatibility condition of the chosen flow."""


class GeometryError(ContactFlowError):
    exit_code = 3


class DegenerateMetricError(GeometryError):
    pass


class AngleAssumptionError(GeometryError):
    pass


class TubeViolationError(ContactFlowError):
    exit_code = 4


class OffsetSolverError(ContactFlowError):
    exit_code = 5


class SolverError(ContactFlowError):
    exit_code = 6


class OutputError(ContactFlowError):
    exit_code = 7

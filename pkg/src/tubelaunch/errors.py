"""Exception hierarchy; the CLI maps each class to an exit code."""


class SimulationError(Exception):
    exit_code = 1


class ConfigError(SimulationError, ValueError):
    """Invalid configuration value or unknown scenario key."""

    exit_code = 2


class LaunchFailure(SimulationError):
    """The launcher cannot push the vehicle out of the tube."""

    exit_code = 3


class IntegrationFault(SimulationError):
    """Non-finite value produced by the integrator."""

    exit_code = 4


class TelemetryParseError(SimulationError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line

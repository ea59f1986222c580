"""Exception hierarchy. The CLI maps each family onto an exit code."""


class IdncError(Exception):
    exit_code = 1


class InvalidArgument(IdncError, ValueError):
    pass


class ConfigError(IdncError, ValueError):
    pass


class TraceParseError(ConfigError):
    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class CapacityError(IdncError):
    exit_code = 2


class InvariantViolation(IdncError, AssertionError):
    exit_code = 3

"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Register would exceed the maximum supported number of qubits."""


class DomainError(ValueError):
    """A physical parameter lies outside its legal range."""


class IntegrityError(RuntimeError):
    """A state lost Hermiticity, unit trace or positivity during evolution."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Malformed or out-of-range configuration document."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

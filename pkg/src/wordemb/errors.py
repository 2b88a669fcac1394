"""Exception types shared across the package."""


class WordembError(Exception):
    """Base class for errors raised by wordemb."""


class ConfigError(WordembError):
    """Invalid configuration key, value, or model setup."""


class ParseError(WordembError):
    """A file did not match its expected format."""

    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


class TrainingDivergedError(WordembError):
    """Training hit a non-finite value and was aborted."""

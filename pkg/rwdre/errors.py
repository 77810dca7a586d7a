__all__ = [
    "CapacityError",
    "ConfigError",
    "ReducibleChainError",
]

from typing import Optional


class ConfigError(ValueError):
    """
    An invalid experiment or environment configuration

    Parameters
    ----------
    field: str
        the name of the offending configuration field
    message: str
        what is wrong with it
    note: Optional[str] = None
        an explanation appended to the message
    """

    def __init__(self, field: str, message: str, note: Optional[str] = None) -> None:
        self.field = field
        self.note = note
        text = f"{field}: {message}"
        if note is not None:
            text = f"{text} ({note})"
        super().__init__(text)


class CapacityError(ValueError):
    """An exact computation was requested beyond its size guard"""


class ReducibleChainError(RuntimeError):
    """A Markov chain that must be irreducible is not"""

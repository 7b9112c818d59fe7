"""Exceptions shared across validation stages."""


class EmptyScores(ValueError):
    """An aggregate over an empty score list is undefined."""


class MissingSubscore(ValueError):
    """A combined score requires a sub-score that was never computed."""

    def __init__(self, name: str):
        super().__init__(f"missing sub-score: {name}")
        self.name = name


class IncompleteChecks(ValueError):
    """A gate verdict requires every validation check to have run."""

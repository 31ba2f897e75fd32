from __future__ import annotations

from enum import Enum


class Label(str, Enum):
    NORMAL = "normal"
    ANTISOCIAL = "antisocial"
    #: toxicity pass only: the scorer failed or was never reached
    UNSCORED = "unscored"

    def __str__(self) -> str:
        return self.value

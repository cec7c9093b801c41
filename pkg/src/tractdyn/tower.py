"""Iterated-exponential numbers for values far beyond double range.

A :class:`Tower` ``(height, top)`` stands for ``exp(exp(...exp(top)))`` with
``height`` applications of ``exp``.  The canonical form keeps ``top`` at most
:data:`LOG_OVERFLOW` whenever ``height >= 1`` and collapses a level whenever
``exp(top)`` is itself small enough to be a top value, so two canonical towers
compare by height first and by top second.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

LOG_OVERFLOW = 700.0
TOWER_CAP = 8
_COLLAPSE = math.log(LOG_OVERFLOW)


@dataclass(frozen=True)
class Tower:
    height: int
    top: float
    capped: bool = False

    @classmethod
    def of(cls, value: float) -> "Tower":
        return cls(0, float(value)).normalized()

    @classmethod
    def from_log(cls, log_value: float) -> "Tower":
        """Tower whose natural log is ``log_value``."""
        return cls(1, float(log_value)).normalized()

    def normalized(self) -> "Tower":
        h, x, capped = self.height, self.top, self.capped
        if math.isnan(x):
            raise ValueError("tower top is NaN")
        if math.isinf(x):
            if x > 0:
                return Tower(TOWER_CAP, LOG_OVERFLOW, True)
            return Tower(h, x, capped)
        while x > LOG_OVERFLOW:
            if h >= TOWER_CAP:
                return Tower(TOWER_CAP, LOG_OVERFLOW, True)
            x = math.log(x)
            h += 1
        while h > 0 and x <= _COLLAPSE and not capped:
            x = math.exp(x)
            h -= 1
        return Tower(h, x, capped)

    # arithmetic in the tower sense
    def exp(self) -> "Tower":
        if self.height == 0 and self.top <= _COLLAPSE:
            return Tower(0, math.exp(self.top))
        if self.height >= TOWER_CAP:
            return Tower(TOWER_CAP, self.top, True)
        return Tower(self.height + 1, self.top, self.capped).normalized()

    def log(self) -> "Tower":
        if self.height == 0:
            if self.top <= 0:
                return Tower(0, -math.inf if self.top == 0 else math.nan)
            return Tower(0, math.log(self.top))
        return Tower(self.height - 1, self.top, self.capped).normalized()

    @property
    def value(self) -> float:
        """Plain float value (``inf`` when not representable)."""
        x = self.top
        for _ in range(self.height):
            if x > 709.0:
                return math.inf
            x = math.exp(x)
        return x

    @property
    def log_value(self) -> float:
        """Natural log of the value as a float (``inf`` when not representable)."""
        if self.height == 0:
            return math.log(self.top) if self.top > 0 else -math.inf
        return Tower(self.height - 1, self.top).value

    def _key(self):
        return (self.height, self.top)

    def __lt__(self, other: "Tower") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "Tower") -> bool:
        return self._key() <= other._key()

    def __gt__(self, other: "Tower") -> bool:
        return self._key() > other._key()

    def __ge__(self, other: "Tower") -> bool:
        return self._key() >= other._key()

    def to_json(self) -> dict:
        return {"height": self.height, "top": self.top, "capped": self.capped}

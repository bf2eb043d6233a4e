from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ScaleError


@dataclass(frozen=True, eq=False)
class Ciphertext:
    """RLWE ciphertext over q_0 .. q_level, parts held in NTT form.

    Two parts at every public API boundary; a third part exists only between
    a tensor product and relinearization inside the evaluator.
    """

    parts: tuple
    scale: float
    level: int

    def __post_init__(self):
        parts = tuple(self.parts)
        if len(parts) not in (2, 3):
            raise ValueError(f"ciphertext must have 2 or 3 parts, got {len(parts)}")
        if not self.scale > 0:
            raise ScaleError("ciphertext scale must be positive")
        if self.level < 0:
            raise ValueError("level must be non-negative")
        for p in parts:
            if p.dtype != np.uint64 or p.shape[0] != self.level + 1:
                raise ValueError("part shape does not match the level")
            p.setflags(write=False)
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def size(self) -> int:
        return len(self.parts)

    def same_as(self, other: "Ciphertext") -> bool:
        return (self.level == other.level and self.scale == other.scale
                and len(self.parts) == len(other.parts)
                and all(np.array_equal(a, b) for a, b in zip(self.parts, other.parts)))

"""Shared numerical tolerances and seed handling."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Tolerances:
    """Default tolerances; every kernel accepts an override."""

    feasibility: float = 1e-8
    symmetry: float = 1e-10
    determinant: float = 1e-10
    exactness: float = 1e-8
    eigen: float = 1e-9

    def with_(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOL = Tolerances()


def splitmix64(state: int) -> int:
    """One step of the splitmix64 output function."""
    z = (state + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(seed: int, index: int) -> int:
    """Derive the seed of an independent sub-stream ``index`` of ``seed``.

    Child streams are ``splitmix64(seed ^ splitmix64(index))`` so that
    trials can be evaluated in any order (or in parallel) and still be
    reproduced one by one.
    """
    return splitmix64((seed & MASK64) ^ splitmix64(index & MASK64))


def resolve_threads(threads: int | None) -> int:
    if threads is not None and threads > 0:
        return int(threads)
    env = os.environ.get("NORMGRID_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1

"""Run configuration: every tolerance and bound used by the math modules."""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .errors import DomainError

THREADS_ENV = "RECUR_DENSITY_THREADS"


@dataclass(frozen=True)
class RunConfig:
    precision: int = 128
    samples: int = 2**20
    seed: int = 0
    q_max: int = 10**6
    height_bound: int = 10**40
    epsilon_band: float = 1e-3
    output: str | None = None
    threads: int | None = None
    shifts: int = 32
    certified_radius: float = 1e-6
    max_exact_bits: int = 1 << 24
    scan_limit: int = 10**4

    def __post_init__(self):
        if self.precision < 64:
            raise DomainError(f"precision must be >= 64 bits, got {self.precision}")
        if self.samples < 2**10:
            raise DomainError(f"samples must be >= 1024, got {self.samples}")
        if self.shifts < 2 or self.samples < 2 * self.shifts:
            raise DomainError("need at least two random shifts with two samples each")
        if self.q_max < 1 or self.height_bound < 1:
            raise DomainError("q_max and height_bound must be positive")
        if not self.epsilon_band > 0:
            raise DomainError("epsilon_band must be positive")
        if self.threads is not None and self.threads < 1:
            raise DomainError("threads must be positive")

    @property
    def analysis_precision(self) -> int:
        # relation search needs four times the bits of the height bound
        return max(self.precision, 4 * self.height_bound.bit_length())

    @property
    def worker_count(self) -> int:
        if self.threads is not None:
            return self.threads
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        return 1

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def cluster_tolerance(precision: int):
    """Distance below which two roots are treated as one multiple root."""
    from mpmath import mpf, ldexp

    return ldexp(mpf(1), -(precision // 4))


def prune_tolerance(precision: int):
    """Relative size below which a coefficient counts as zero."""
    from mpmath import mpf, ldexp

    return ldexp(mpf(1), -(precision // 2))

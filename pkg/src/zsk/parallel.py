"""Deterministic chunked map-reduce for series summation.

Work is cut into fixed-size chunks of group indices; chunk partials may be
computed on a thread pool, but the reduction always folds them in ascending
chunk order through a compensated accumulator.  For a given chunk size the
result is therefore bit-identical no matter how many threads ran.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .numerics import CompensatedAccumulator

__all__ = ["ReductionPlan", "chunk_ranges", "fold_partials", "sum_chunks"]


@dataclass(frozen=True)
class ReductionPlan:
    """threads/chunk fully determine the reduction layout."""

    threads: int = 1
    chunk: int = 65536

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")


def chunk_ranges(start: int, stop: int, chunk: int) -> list[tuple[int, int]]:
    """Half-open [lo, hi) ranges covering [start, stop)."""
    return [(lo, min(stop, lo + chunk)) for lo in range(start, stop, chunk)]


def fold_partials(partials: Sequence[complex]) -> complex:
    """Compensated fold in index order; returns float if all parts are real."""
    re = CompensatedAccumulator()
    im = CompensatedAccumulator()
    for p in partials:
        c = complex(p)
        re.add(c.real)
        im.add(c.imag)
    if im.value == 0.0:
        return re.value
    return complex(re.value, im.value)


def sum_chunks(
    worker: Callable[[int, int], complex],
    ranges: Sequence[tuple[int, int]],
    plan: ReductionPlan,
) -> tuple[complex, list[complex]]:
    """Evaluate worker(lo, hi) over ranges and fold deterministically.

    Returns (total, partials); partials are in chunk order so callers can
    re-fold any prefix (used for truncation-error heuristics).
    """
    if plan.threads <= 1 or len(ranges) <= 1:
        partials = [worker(lo, hi) for lo, hi in ranges]
    else:
        with ThreadPoolExecutor(max_workers=plan.threads) as pool:
            partials = list(pool.map(lambda r: worker(r[0], r[1]), ranges))
    return fold_partials(partials), partials

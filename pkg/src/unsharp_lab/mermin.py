"""Sharp +-1 value assignments for the nine magic-square observables."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from typing import Mapping, Sequence

from .quantum import MERMIN_ROWS

LABELS: tuple[str, ...] = ("X1", "X2", "X1X2", "Y1", "Y2", "Y1Y2", "X1Y2", "Y1X2", "Z1Z2")
ROWS: tuple[tuple[str, str, str], ...] = tuple(labels for labels, _ in MERMIN_ROWS)
TARGETS: tuple[int, ...] = tuple(sign for _, sign in MERMIN_ROWS)


def _validate(assignment: Mapping[str, int]) -> None:
    if set(assignment) != set(LABELS):
        raise ValueError(f"assignment must cover exactly {LABELS}")
    for label, value in assignment.items():
        if value not in (-1, 1):
            raise ValueError(f"value for {label} must be +-1, got {value!r}")


def evaluate_rows(assignment: Mapping[str, int]) -> tuple[int, ...]:
    _validate(assignment)
    return tuple(math.prod(assignment[lab] for lab in row) for row in ROWS)


def all_assignments():
    for values in itertools.product((1, -1), repeat=len(LABELS)):
        yield dict(zip(LABELS, values))


def exhaustive_search(targets: Sequence[int] = TARGETS) -> tuple[int, list[dict[str, int]]]:
    """Count (and list) the assignments whose six row products equal ``targets``."""
    targets = tuple(targets)
    if len(targets) != len(ROWS) or any(t not in (-1, 1) for t in targets):
        raise ValueError("targets must be six values in {-1, +1}")
    hits = [a for a in all_assignments() if evaluate_rows(a) == targets]
    return len(hits), hits


def parity_certificate() -> tuple[int, int]:
    """Product of all left sides (forced by label multiplicity) and of all right sides.

    Every label appears in exactly two rows, so the left product is a square and hence +1
    for any assignment; the right sides multiply to -1.
    """
    counts = Counter(lab for row in ROWS for lab in row)
    bad = {lab: n for lab, n in counts.items() if n != 2}
    if bad or set(counts) != set(LABELS):
        raise ValueError(f"encoded rows are malformed, label counts: {dict(counts)}")
    lhs = 1  # each value enters squared
    return lhs, math.prod(TARGETS)

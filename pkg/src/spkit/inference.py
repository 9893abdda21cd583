"""Relative probabilities for competing alignments and their predictions.

Scores are bits saved, so candidate i gets probability

    2^score_i / sum_j 2^score_j

computed shift-invariantly.  Probabilities are relative to the candidate
set; no absolute calibration is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Alignment, Grammar, SPError
from .builder import flatten_alignment


@dataclass(frozen=True)
class ScoredCandidateSet:
    """Alignments with scores and parallel normalized probabilities."""

    candidates: tuple[tuple[Alignment, float], ...]
    probabilities: tuple[float, ...]


def alignment_probabilities(candidates, g: Grammar) -> ScoredCandidateSet:
    """Probability for each alignment in a non-empty candidate list."""
    candidates = list(candidates)
    if not candidates:
        raise SPError("cannot derive probabilities from an empty candidate list")
    scores = [a.score for a in candidates]
    top = max(scores)
    raw = [math.exp2(s - top) for s in scores]
    total = sum(raw)
    probs = tuple(r / total for r in raw)
    return ScoredCandidateSet(
        candidates=tuple(zip(candidates, scores)),
        probabilities=probs,
    )


def inferred_symbols(a: Alignment) -> list[tuple[int, str]]:
    """Old-row symbol occurrences the alignment predicts.

    Every old-row occurrence not assigned to any column, in flattening
    order, as (row ordinal, symbol).  For a full parse these are service
    symbols only; partially matched rows contribute the unseen material
    the alignment infers.
    """
    out = []
    for cell in flatten_alignment(a):
        if cell.col is None and cell.row is not None and cell.row > 0:
            out.append((cell.row, cell.symbol))
    return out

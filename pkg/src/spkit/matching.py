"""Finding good full and partial matches between two symbol sequences.

A match fragment is an order-preserving pairing of equal symbols between a
query and a target.  Fragments are weighted by the summed bit cost of the
matched symbols, so rare symbols count for more; gaps carry no penalty and
only break ties.

Below ``exact_threshold`` (query length x target length) a dynamic program
guarantees the top fragment is weight-optimal over all order-preserving
pairings.  Above it a seeded hit-and-extend heuristic takes over.  Both
regimes are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Grammar


@dataclass(frozen=True)
class SearchLimits:
    """Tunable bounds for match and alignment search."""

    max_fragments: int = 20
    exact_threshold: int = 4096
    beam_width: int = 10

    def __post_init__(self):
        if self.max_fragments < 1:
            raise ValueError("max_fragments must be >= 1")


@dataclass(frozen=True)
class MatchFragment:
    """An order-preserving pairing of equal symbols.

    ``pairs`` holds (query index, target index) with both sides strictly
    increasing.  ``gap_count`` totals the unmatched positions spanned
    strictly inside the fragment on both sides.
    """

    pairs: tuple[tuple[int, int], ...]
    gap_count: int
    weight: float

    def rank_key(self):
        return (-self.weight, self.gap_count, self.pairs)


def _gaps(pairs) -> int:
    total = 0
    for (qi, ti), (qj, tj) in zip(pairs, pairs[1:]):
        total += (qj - qi - 1) + (tj - ti - 1)
    return total


def _fragment(pairs, weights) -> MatchFragment:
    pairs = tuple(pairs)
    w = sum(weights[qi] for qi, _ in pairs)
    return MatchFragment(pairs=pairs, gap_count=_gaps(pairs), weight=w)


def _exact_fragments(query, target, weights, limits) -> list[MatchFragment]:
    """DP over all order-preserving pairings; top fragment is optimal.

    suf[i][j] = best pairing weight within query[i:], target[j:].
    ends[i][j] = best weight of a pairing ending exactly at pair (i, j).
    Additional ranked fragments are reconstructed through high-value
    anchor pairs to give the caller genuine alternatives.
    """
    n, m = len(query), len(target)
    suf = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        qi = query[i]
        wi = weights[i]
        row = suf[i]
        below = suf[i + 1]
        for j in range(m - 1, -1, -1):
            best = below[j] if below[j] >= row[j + 1] else row[j + 1]
            if qi == target[j]:
                cand = wi + below[j + 1]
                if cand > best:
                    best = cand
            row[j] = best
    if suf[0][0] <= 0.0:
        return []

    def walk_forward(i0, j0):
        """Lexicographically-smallest optimal pairing within suffixes."""
        out = []
        i, j = i0, j0
        while True:
            goal = suf[i][j]
            if goal <= 0.0:
                break
            found = False
            for qi in range(i, n):
                if suf[qi][j] != goal:
                    break  # skipping qi already lost weight
                for tj in range(j, m):
                    if query[qi] == target[tj] and weights[qi] + suf[qi + 1][tj + 1] == goal:
                        out.append((qi, tj))
                        i, j = qi + 1, tj + 1
                        found = True
                        break
                if found:
                    break
            if not found:
                break
        return out

    # ends / prefix-max tables for anchored alternatives.
    ends = [[0.0] * m for _ in range(n)]
    premax = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(n):
        qi = query[i]
        for j in range(m):
            if qi == target[j]:
                ends[i][j] = weights[i] + premax[i][j]
            premax[i + 1][j + 1] = max(premax[i][j + 1], premax[i + 1][j], ends[i][j])

    def walk_backward(i0, j0):
        out = [(i0, j0)]
        i, j = i0, j0
        remaining = ends[i][j] - weights[i]
        while remaining > 0.0:
            found = False
            for qi in range(i):
                for tj in range(j):
                    if query[qi] == target[tj] and ends[qi][tj] == remaining:
                        out.append((qi, tj))
                        i, j, remaining = qi, tj, remaining - weights[qi]
                        found = True
                        break
                if found:
                    break
            if not found:
                break
        out.reverse()
        return out

    results: dict[tuple, MatchFragment] = {}

    def add(pairs):
        if pairs:
            frag = _fragment(pairs, weights)
            results.setdefault(frag.pairs, frag)

    add(walk_forward(0, 0))

    anchors = sorted(
        ((-(ends[i][j] + suf[i + 1][j + 1]), i, j)
         for i in range(n) for j in range(m) if ends[i][j] > 0.0),
    )
    budget = max(limits.max_fragments * 3, 12)
    for _, i, j in anchors[:budget]:
        add(walk_backward(i, j) + walk_forward(i + 1, j + 1))

    ranked = sorted(results.values(), key=MatchFragment.rank_key)
    return ranked[: limits.max_fragments]


def _heuristic_fragments(query, target, weights, limits) -> list[MatchFragment]:
    """Hit-and-extend with greedy chaining for large inputs."""
    positions: dict[str, list[int]] = {}
    for j, sym in enumerate(target):
        positions.setdefault(sym, []).append(j)

    hit_cap = 8  # per query position, keeps run discovery near-linear
    runs = []  # (qstart, tstart, length, weight)
    covered = set()
    for i, sym in enumerate(query):
        for j in positions.get(sym, ())[:hit_cap]:
            if (i, j) in covered:
                continue
            qi, tj = i, j
            w = 0.0
            length = 0
            while qi < len(query) and tj < len(target) and query[qi] == target[tj]:
                covered.add((qi, tj))
                w += weights[qi]
                qi += 1
                tj += 1
                length += 1
            runs.append((i, j, length, w))
    if not runs:
        return []
    runs.sort(key=lambda r: (-r[3], r[0], r[1]))

    def chain(seed_idx):
        picked = [runs[seed_idx]]
        for r in runs:
            q0, t0, ln, _ = r
            last = picked[-1]
            first = picked[0]
            if q0 >= last[0] + last[2] and t0 >= last[1] + last[2]:
                picked.append(r)
            elif q0 + ln <= first[0] and t0 + ln <= first[1]:
                picked.insert(0, r)
        pairs = []
        for q0, t0, ln, _ in picked:
            pairs.extend((q0 + k, t0 + k) for k in range(ln))
        return pairs

    results: dict[tuple, MatchFragment] = {}
    for s in range(min(len(runs), limits.max_fragments)):
        frag = _fragment(chain(s), weights)
        results.setdefault(frag.pairs, frag)
    ranked = sorted(results.values(), key=MatchFragment.rank_key)
    return ranked[: limits.max_fragments]


def find_matches(
    query,
    target,
    g: Grammar,
    limits: SearchLimits | None = None,
) -> list[MatchFragment]:
    """Ranked full and partial matches of query against target.

    Accepts any symbol sequences.  Weights come from the grammar's cost
    table, falling back to a byte cost for symbols the grammar has never
    seen.  Empty result iff the sequences share no symbol.
    """
    limits = limits or SearchLimits()
    query = tuple(query)
    target = tuple(target)
    if not query or not target:
        return []
    weights = [g.cost_or_literal(s) for s in query]
    if len(query) * len(target) <= limits.exact_threshold:
        return _exact_fragments(query, target, weights, limits)
    return _heuristic_fragments(query, target, weights, limits)


def _shared_weight_bound(query, pattern, g) -> float:
    """Upper bound on any fragment weight; used only to screen patterns."""
    qcount: dict[str, int] = {}
    for s in query:
        qcount[s] = qcount.get(s, 0) + 1
    tcount: dict[str, int] = {}
    for s in pattern.symbols:
        tcount[s] = tcount.get(s, 0) + 1
    bound = 0.0
    for s, cq in qcount.items():
        ct = tcount.get(s)
        if ct:
            bound += min(cq, ct) * g.cost_or_literal(s)
    return bound


def match_all_old(
    query,
    g: Grammar,
    limits: SearchLimits | None = None,
    top_k: int | None = None,
) -> list[tuple[int, MatchFragment]]:
    """findMatches against every old pattern, globally re-ranked by weight.

    ``top_k`` optionally screens to the most promising patterns first (by a
    shared-symbol weight bound); screening is deterministic.
    """
    limits = limits or SearchLimits()
    query = tuple(query)
    if not query:
        return []
    candidates = list(g.patterns)
    if top_k is not None and len(candidates) > top_k:
        bounded = sorted(
            candidates, key=lambda p: (-_shared_weight_bound(query, p, g), p.id)
        )
        candidates = bounded[:top_k]
        candidates.sort(key=lambda p: p.id)
    hits: list[tuple[int, MatchFragment]] = []
    for p in candidates:
        for frag in find_matches(query, p.symbols, g, limits):
            hits.append((p.id, frag))
    hits.sort(key=lambda h: (-h[1].weight, h[1].gap_count, h[0], h[1].pairs))
    return hits

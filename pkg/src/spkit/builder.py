"""Building and ranking multiple alignments by compression difference.

The search is an iterative beam search guided by the bits each alignment
saves.  Iteration 0 matches the new pattern against every old pattern.
Each later iteration flattens the best partial alignments back into plain
symbol sequences (columns emit their symbol once, unassigned symbols fall
into the gaps between their neighboring columns, row order within a gap)
and re-matches those sequences against the grammar, merging compatible
fragments as additional rows.  Runners-up stay in the pool so the search
can climb out of local peaks.

An alignment's score is

    score = B_raw - B_enc

where B_raw sums the costs of the new symbols the alignment manages to
match, and B_enc sums the costs of the old rows' service symbols left
unmatched -- the identification material a decoder would still need in
order to cite each row.  Composing rows hierarchically pays off exactly
when outer rows absorb the service symbols of inner ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .core import NEW, Alignment, Grammar, Pattern, validate_alignment
from .matching import MatchFragment, SearchLimits, match_all_old


@dataclass(frozen=True)
class SearchParams:
    """Alignment search configuration.

    ``all_or_nothing`` drops every alignment that leaves any new symbol
    unmatched, trading probabilistic tolerance for conventional exactness.
    ``screen_top_k`` optionally bounds how many grammar patterns are
    matched per expansion (deterministic screening; used by the learner).
    """

    beam_width: int = 10
    max_iterations: int = 8
    all_or_nothing: bool = False
    limits: SearchLimits = field(default_factory=SearchLimits)
    screen_top_k: int | None = None

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class FlatCell(NamedTuple):
    symbol: str
    col: int | None  # column ordinal when the cell re-emits a column
    row: int | None  # (row, idx) when the cell is an unassigned occurrence
    idx: int | None


def flatten_alignment(a: Alignment) -> list[FlatCell]:
    """Project an alignment back onto a single symbol sequence.

    Columns appear once, in column order.  Unassigned occurrences are
    emitted in the gap before the owning row's next assigned column (after
    its previous one when trailing), rows in ordinal order within a gap.
    """
    n_cols = len(a.columns)
    assigned = a.assigned()
    gaps: list[list[tuple[int, int, str]]] = [[] for _ in range(n_cols + 1)]
    for r in range(a.n_rows()):
        pat = a.row(r)
        asg = assigned[r]
        ordered = sorted(asg)
        next_col: dict[int, int] = {}
        prev_col: dict[int, int] = {}
        for i in range(len(pat.symbols)):
            later = [j for j in ordered if j > i]
            earlier = [j for j in ordered if j < i]
            if later:
                next_col[i] = asg[later[0]]
            if earlier:
                prev_col[i] = asg[earlier[-1]]
        for i, sym in enumerate(pat.symbols):
            if i in asg:
                continue
            if i in next_col:
                gap = next_col[i]
            elif i in prev_col:
                gap = prev_col[i] + 1
            else:
                gap = 0
            gaps[gap].append((r, i, sym))

    flat: list[FlatCell] = []
    for ci in range(n_cols + 1):
        for r, i, sym in sorted(gaps[ci]):
            flat.append(FlatCell(sym, None, r, i))
        if ci < n_cols:
            col = a.columns[ci]
            row0, idx0 = col[0]
            flat.append(FlatCell(a.row(row0).symbols[idx0], ci, None, None))
    return flat


def _score(a: Alignment, g: Grammar) -> float:
    b_raw = 0.0
    matched: dict[int, set[int]] = {}
    for col in a.columns:
        for row, idx in col:
            matched.setdefault(row, set()).add(idx)
    for idx in matched.get(0, ()):
        b_raw += g.cost_or_literal(a.new.symbols[idx])
    b_enc = 0.0
    for r in range(1, a.n_rows()):
        pat = a.row(r)
        hit = matched.get(r, ())
        for i, sym in enumerate(pat.symbols):
            if i not in hit and g.is_service(sym):
                b_enc += g.cost_or_literal(sym)
    return b_raw - b_enc


def score_alignment(a: Alignment, g: Grammar) -> float:
    """Compression difference of an alignment, in bits.

    Raises AlignmentStructureError when the column invariants fail.  The
    new-only alignment scores exactly 0.
    """
    validate_alignment(a, g)
    return _score(a, g)


def merge_rows(
    a: Alignment,
    flat: list[FlatCell],
    additions: list[tuple[Pattern, MatchFragment]],
    g: Grammar,
) -> Alignment | None:
    """Attach one or more matched patterns to an alignment as new rows.

    Fragments address positions of ``flat``; fragments in one call must
    touch pairwise-disjoint flat positions.  Pairs landing on a column
    cell join that column, pairs landing on an unassigned occurrence open
    a new column ordered by flat position.  Returns None when the merge
    would match a pattern against another copy of itself.
    """
    rows = list(a.old_rows)
    cols: list[list[tuple[int, int]]] = [list(c) for c in a.columns]
    col_ids: list[set[int]] = [
        {a.row(row).id for row, _ in c if row > 0} for c in a.columns
    ]
    col_pos: dict[int, int] = {}
    for fpos, cell in enumerate(flat):
        if cell.col is not None:
            col_pos[cell.col] = fpos
    fresh: list[tuple[int, list[tuple[int, int]]]] = []
    for pat, frag in additions:
        ordinal = len(rows) + 1
        rows.append(pat)
        for fpos, pidx in frag.pairs:
            cell = flat[fpos]
            if cell.col is not None:
                if pat.id in col_ids[cell.col]:
                    return None  # self-match of one pattern across two rows
                col_ids[cell.col].add(pat.id)
                cols[cell.col].append((ordinal, pidx))
            else:
                if cell.row > 0 and a.row(cell.row).id == pat.id:
                    return None
                fresh.append((fpos, [(cell.row, cell.idx), (ordinal, pidx)]))
    merged = [(col_pos[ci], 0, entries) for ci, entries in enumerate(cols)]
    merged.extend((fpos, 1, entries) for fpos, entries in fresh)
    merged.sort(key=lambda t: (t[0], t[1]))
    columns = tuple(tuple(sorted(entries)) for _, _, entries in merged)
    out = Alignment(new=a.new, old_rows=tuple(rows), columns=columns)
    return Alignment(new=a.new, old_rows=tuple(rows), columns=columns, score=_score(out, g))


def _rank_key(a: Alignment):
    return (-a.score, len(a.old_rows), tuple(p.id for p in a.old_rows), a.signature())


def build_alignments(new: Pattern, g: Grammar, params: SearchParams | None = None) -> list[Alignment]:
    """Ranked multiple alignments of one new pattern against a grammar.

    The list is sorted by score descending (ties: fewer old rows, then
    row-id order), every entry passes the column validator, and the
    new-only alignment is always a candidate so the list is non-empty --
    unless all_or_nothing filters it away.
    """
    params = params or SearchParams()
    if new.kind != NEW:
        raise ValueError("build_alignments expects a new pattern")
    base = Alignment(new=new)
    archive: dict = {base.signature(): base}
    beam: list[Alignment] = [base]
    per_pattern_cap = max(2, params.limits.max_fragments // 5)

    for _ in range(params.max_iterations):
        added = False
        pool: dict = {}
        for a in beam:
            flat = flatten_alignment(a)
            qsyms = tuple(cell.symbol for cell in flat)
            hits = match_all_old(qsyms, g, params.limits, top_k=params.screen_top_k)
            taken: dict[int, int] = {}
            chosen: list[tuple[int, MatchFragment]] = []
            for pid, frag in hits:
                if taken.get(pid, 0) >= per_pattern_cap:
                    continue
                taken[pid] = taken.get(pid, 0) + 1
                chosen.append((pid, frag))
            expansions: list[list[tuple[Pattern, MatchFragment]]] = [
                [(g.by_id[pid], frag)] for pid, frag in chosen
            ]
            # Greedy pack of position-disjoint fragments: covers flat
            # grammars in a single step instead of one row per iteration.
            used: set[int] = set()
            pack: list[tuple[Pattern, MatchFragment]] = []
            for pid, frag in chosen:
                positions = {fpos for fpos, _ in frag.pairs}
                if positions & used:
                    continue
                used |= positions
                pack.append((g.by_id[pid], frag))
            if len(pack) > 1:
                expansions.append(pack)
            for adds in expansions:
                cand = merge_rows(a, flat, adds, g)
                if cand is None:
                    continue
                sig = cand.signature()
                if sig in archive or sig in pool:
                    continue
                pool[sig] = cand
                added = True
        archive.update(pool)
        ranked = sorted(set(beam) | set(pool.values()), key=_rank_key)
        # Diversify: equal-score rewirings of one row set must not crowd
        # out the runner-up row sets that escape local peaks.
        beam = []
        spill = []
        per_set: dict[tuple[int, ...], int] = {}
        for cand in ranked:
            key = tuple(sorted(p.id for p in cand.old_rows))
            if per_set.get(key, 0) < 2:
                per_set[key] = per_set.get(key, 0) + 1
                beam.append(cand)
                if len(beam) == params.beam_width:
                    break
            else:
                spill.append(cand)
        for cand in spill:
            if len(beam) >= params.beam_width:
                break
            beam.append(cand)
        if not added:
            break

    results = list(archive.values())
    if params.all_or_nothing:
        covered = set(range(len(new.symbols)))
        results = [a for a in results if set(a.matched_new_indices()) == covered]
    results.sort(key=_rank_key)
    for a in results:
        validate_alignment(a, g)
    return results

"""Text renderings of alignments: the rotated row/column layout and a
line-oriented machine-readable dump."""

from __future__ import annotations

from .core import Alignment
from .builder import flatten_alignment

RECORD_MAGIC = "%SPR1"


def _slots(a: Alignment):
    """One slot per flattened cell: (symbol, participants)."""
    slots = []
    for cell in flatten_alignment(a):
        if cell.col is not None:
            slots.append((cell.symbol, list(a.columns[cell.col])))
        else:
            slots.append((cell.symbol, [(cell.row, cell.idx)]))
    return slots


def render_alignment(a: Alignment, width: int = 120) -> str:
    """Rotated layout: new row on top, old rows below, rows numbered at
    both ends, matched symbols linked vertically with '|'."""
    slots = _slots(a)
    n_rows = a.n_rows()
    widths = [max(len(sym), 1) for sym, _ in slots]

    def row_cell(r, si):
        sym, parts = slots[si]
        rows_here = [row for row, _ in parts]
        if r in rows_here:
            return sym.ljust(widths[si])
        if len(parts) > 1 and min(rows_here) < r < max(rows_here):
            return "|".ljust(widths[si])
        return " " * widths[si]

    def link_cell(r, si):
        _, parts = slots[si]
        rows_here = [row for row, _ in parts]
        if len(parts) > 1 and min(rows_here) <= r < max(rows_here):
            return "|".ljust(widths[si])
        return " " * widths[si]

    label_w = len(str(n_rows - 1))
    chunks: list[tuple[int, int]] = []
    start = 0
    while start < len(slots):
        used = 0
        end = start
        while end < len(slots):
            step = widths[end] + 1
            if used + step > width and end > start:
                break
            used += step
            end += 1
        chunks.append((start, end))
        start = end
    if not slots:
        chunks = [(0, 0)]

    lines = []
    for ch, (lo, hi) in enumerate(chunks):
        if ch:
            lines.append("")
        for r in range(n_rows):
            body = " ".join(row_cell(r, si) for si in range(lo, hi))
            lines.append(f"{str(r).rjust(label_w)} {body.rstrip():<1} {r}".rstrip())
            if r < n_rows - 1:
                link = " ".join(link_cell(r, si) for si in range(lo, hi))
                lines.append(f"{' ' * label_w} {link}".rstrip())
    return "\n".join(lines)


def alignment_records(a: Alignment, rank: int | None = None, probability: float | None = None) -> str:
    """Machine-readable dump: one line per column.

    alignment\t<rank>\tscore=<bits>\trows=<id,...>[\tprob=<p>]
    col\t<ordinal>\t<symbol>\t<row>:<index>,...
    """
    head = ["alignment", str(rank if rank is not None else 0), f"score={a.score:.6f}"]
    head.append("rows=" + ",".join(str(p.id) for p in a.old_rows))
    if probability is not None:
        head.append(f"prob={probability:.6f}")
    lines = ["\t".join(head)]
    for ci, col in enumerate(a.columns):
        row0, idx0 = col[0]
        sym = a.row(row0).symbols[idx0]
        entries = ",".join(f"{row}:{idx}" for row, idx in col)
        lines.append(f"col\t{ci}\t{sym}\t{entries}")
    return "\n".join(lines)

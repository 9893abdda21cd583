"""Core data model: symbols, patterns, grammars and alignments.

Symbols are plain strings matched only by equality.  A pattern is an
ordered tuple of symbols, either "new" (input) or "old" (stored); old
patterns carry a frequency.  A grammar is an immutable collection of old
patterns together with a per-symbol bit-cost table derived from
frequency-weighted occurrence counts:

    cost(s) = -log2(f(s) / total_weight)

where f(s) sums frequency * occurrences over all patterns containing s and
total_weight sums frequency * length over all patterns.  Frequent symbols
therefore get short codes.

Grammar file format (UTF-8 text):

    %SPG1                       optional header
    % free-form comment
    @service <prefix> ...       symbols starting with a prefix are service
                                symbols; "#" is always a service prefix
    @dims 1                     optional; anything other than 1 is rejected
    <frequency>\t<sym> <sym> ...
    id=<n>\t<frequency>\t<sym> ...

Pattern ids default to the 1-based body-line ordinal.  The content hash of
a grammar is the SHA-256 of its canonical serialization (header, sorted
directives, patterns in id order).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable

NEW = "new"
OLD = "old"

GRAMMAR_MAGIC = "%SPG1"


class SPError(Exception):
    """Base class for all spkit errors."""


class GrammarFormatError(SPError):
    """Raised for malformed grammar or corpus files."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class UnknownSymbolError(SPError):
    """Raised when a symbol has no entry in a grammar's cost table."""


class AmbiguousGrammarError(SPError):
    """Raised when two patterns cannot be told apart by their identifiers."""


class AlignmentStructureError(SPError):
    """Raised when an alignment violates a column invariant."""


def check_symbol(text: str) -> str:
    """Validate a symbol token: non-empty, no whitespace."""
    if not text:
        raise GrammarFormatError("empty symbol")
    if any(ch.isspace() for ch in text):
        raise GrammarFormatError(f"symbol contains whitespace: {text!r}")
    return text


@dataclass(frozen=True)
class Pattern:
    """An ordered sequence of symbols.

    Order is significant and immutable.  ``frequency`` is meaningful only
    for old patterns and must be >= 1.  ``id`` identifies the pattern
    within a grammar.
    """

    symbols: tuple[str, ...]
    kind: str = NEW
    frequency: int = 1
    id: int = 0

    def __post_init__(self):
        if self.kind not in (NEW, OLD):
            raise ValueError(f"bad pattern kind: {self.kind!r}")
        if self.kind == OLD and self.frequency < 1:
            raise ValueError("old patterns need frequency >= 1")
        for sym in self.symbols:
            check_symbol(sym)

    def __len__(self) -> int:
        return len(self.symbols)

    def text(self) -> str:
        return " ".join(self.symbols)


def new_pattern(symbols: Iterable[str]) -> Pattern:
    return Pattern(tuple(symbols), kind=NEW)


def old_pattern(symbols: Iterable[str], frequency: int = 1, id: int = 0) -> Pattern:
    return Pattern(tuple(symbols), kind=OLD, frequency=frequency, id=id)


class Grammar:
    """An immutable store of old patterns plus derived symbol code lengths.

    Construction computes the weighted occurrence count of every symbol,
    the total weight, the per-symbol costs and the content hash.  Instances
    are safe to share between any number of concurrent readers.
    """

    def __init__(self, patterns: Iterable[Pattern], service_prefixes: Iterable[str] = ()):
        pats = []
        seen_ids = set()
        for p in patterns:
            if p.kind != OLD:
                raise GrammarFormatError("grammars hold old patterns only")
            if len(p.symbols) == 0:
                raise GrammarFormatError(f"pattern {p.id} has an empty body")
            if p.id in seen_ids:
                raise GrammarFormatError(f"duplicate pattern id {p.id}")
            seen_ids.add(p.id)
            pats.append(p)
        self.patterns: tuple[Pattern, ...] = tuple(sorted(pats, key=lambda p: p.id))
        self.service_prefixes: tuple[str, ...] = tuple(sorted(set(service_prefixes)))
        self.by_id: dict[int, Pattern] = {p.id: p for p in self.patterns}

        counts: dict[str, int] = {}
        total = 0
        for p in self.patterns:
            total += p.frequency * len(p.symbols)
            for sym in p.symbols:
                counts[sym] = counts.get(sym, 0) + p.frequency
        self.total_weight: int = total
        self._costs: dict[str, float] = {
            sym: -math.log2(c / total) for sym, c in counts.items()
        }
        self.content_hash: str = hashlib.sha256(
            self.canonical_text().encode("utf-8")
        ).hexdigest()

    # -- costs ---------------------------------------------------------

    def symbol_cost(self, sym: str) -> float:
        """Bit cost of one known symbol; raises UnknownSymbolError."""
        try:
            return self._costs[sym]
        except KeyError:
            raise UnknownSymbolError(f"symbol not in grammar: {sym!r}") from None

    def cost_or_literal(self, sym: str) -> float:
        """Bit cost of a symbol, falling back to 8 bits per UTF-8 byte.

        Total function used wherever input data may contain symbols the
        grammar has never seen.
        """
        cost = self._costs.get(sym)
        if cost is None:
            return 8.0 * len(sym.encode("utf-8"))
        return cost

    def __contains__(self, sym: str) -> bool:
        return sym in self._costs

    def symbols(self) -> tuple[str, ...]:
        return tuple(sorted(self._costs))

    # -- service vs content symbols -------------------------------------

    def is_service(self, sym: str) -> bool:
        """Service symbols identify and bracket patterns; '#' always does."""
        if sym.startswith("#"):
            return True
        return any(sym.startswith(pref) for pref in self.service_prefixes)

    def content_indices(self, p: Pattern) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(p.symbols) if not self.is_service(s))

    def content_symbols(self, p: Pattern) -> tuple[str, ...]:
        return tuple(p.symbols[i] for i in self.content_indices(p))

    # -- serialization ---------------------------------------------------

    def canonical_text(self) -> str:
        lines = [GRAMMAR_MAGIC]
        if self.service_prefixes:
            lines.append("@service " + " ".join(self.service_prefixes))
        contiguous = [p.id for p in self.patterns] == list(range(1, len(self.patterns) + 1))
        for p in self.patterns:
            body = f"{p.frequency}\t{p.text()}"
            if not contiguous:
                body = f"id={p.id}\t{body}"
            lines.append(body)
        return "\n".join(lines) + "\n"

    def __eq__(self, other) -> bool:
        return isinstance(other, Grammar) and self.content_hash == other.content_hash

    def __hash__(self) -> int:
        return hash(self.content_hash)

    def __repr__(self) -> str:
        return f"Grammar({len(self.patterns)} patterns, weight {self.total_weight})"


def symbol_cost(g: Grammar, sym: str) -> float:
    """Module-level alias for Grammar.symbol_cost."""
    return g.symbol_cost(sym)


def _parse_body_line(line: str, line_no: int) -> tuple[int | None, int, tuple[str, ...]]:
    """Parse one pattern line into (explicit id or None, frequency, symbols)."""
    fields = line.split("\t")
    explicit_id = None
    if fields and fields[0].startswith("id="):
        try:
            explicit_id = int(fields[0][3:])
        except ValueError:
            raise GrammarFormatError(f"bad id field {fields[0]!r}", line_no) from None
        fields = fields[1:]
    if len(fields) != 2:
        raise GrammarFormatError(
            "expected '<frequency>\\t<symbols>'", line_no
        )
    freq_text, body = fields
    try:
        freq = int(freq_text)
    except ValueError:
        raise GrammarFormatError(f"bad frequency {freq_text!r}", line_no) from None
    if freq < 1:
        raise GrammarFormatError(f"frequency must be >= 1, got {freq}", line_no)
    syms = tuple(body.split())
    if not syms:
        raise GrammarFormatError("empty pattern body", line_no)
    for s in syms:
        try:
            check_symbol(s)
        except GrammarFormatError as exc:
            raise GrammarFormatError(str(exc), line_no) from None
    return explicit_id, freq, syms


def load_grammar(source) -> Grammar:
    """Load a grammar from a text stream, a string, or a file path object.

    Rejects malformed lines (with line numbers), frequencies below 1,
    empty bodies, duplicate ids and multi-dimensional grammars.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
    service: list[str] = []
    rows: list[tuple[int | None, int, tuple[str, ...]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("%"):
            continue  # header or comment
        if line.startswith("@"):
            parts = line.split()
            if parts[0] == "@service":
                service.extend(parts[1:])
            elif parts[0] == "@dims":
                if parts[1:] != ["1"]:
                    raise GrammarFormatError(
                        "two-dimensional patterns are not supported", line_no
                    )
            else:
                raise GrammarFormatError(f"unknown directive {parts[0]!r}", line_no)
            continue
        rows.append(_parse_body_line(line, line_no))

    patterns = []
    next_ordinal = 1
    for explicit_id, freq, syms in rows:
        pid = explicit_id if explicit_id is not None else next_ordinal
        patterns.append(Pattern(syms, kind=OLD, frequency=freq, id=pid))
        next_ordinal += 1
    return Grammar(patterns, service)


def save_grammar(g: Grammar) -> str:
    """Serialize a grammar canonically; load(save(g)) == g, hash included."""
    return g.canonical_text()


# -- alignments ----------------------------------------------------------

# A column maps participating rows to the index of the symbol occurrence
# each contributes.  Row 0 is the new pattern; old rows are 1-based.
Column = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Alignment:
    """A column-structured arrangement of one new pattern against old rows.

    ``columns`` is ordered; within each column every contributed occurrence
    carries the same symbol, and per row the assigned indices are strictly
    increasing across the column order.  The score is the compression
    difference in bits; an alignment with no old rows scores exactly 0.
    """

    new: Pattern
    old_rows: tuple[Pattern, ...] = ()
    columns: tuple[Column, ...] = ()
    score: float = 0.0

    def row(self, ordinal: int) -> Pattern:
        return self.new if ordinal == 0 else self.old_rows[ordinal - 1]

    def n_rows(self) -> int:
        return len(self.old_rows) + 1

    def assigned(self) -> dict[int, dict[int, int]]:
        """row ordinal -> {symbol index: column ordinal}."""
        out: dict[int, dict[int, int]] = {r: {} for r in range(self.n_rows())}
        for ci, col in enumerate(self.columns):
            for row, idx in col:
                out[row][idx] = ci
        return out

    def matched_new_indices(self) -> tuple[int, ...]:
        got = sorted(idx for col in self.columns for row, idx in col if row == 0)
        return tuple(got)

    def signature(self):
        """Canonical hashable form, invariant under old-row reordering."""
        label = {}
        keyed = []
        for r in range(1, self.n_rows()):
            assigns = tuple(
                (ci, idx)
                for ci, col in enumerate(self.columns)
                for row, idx in col
                if row == r
            )
            keyed.append((self.row(r).id, assigns, r))
        for new_ord, (_, _, r) in enumerate(sorted(keyed), start=1):
            label[r] = new_ord
        label[0] = 0
        cols = tuple(
            tuple(sorted((label[row], idx) for row, idx in col)) for col in self.columns
        )
        row_ids = tuple(pid for pid, _, _ in sorted(keyed))
        return (self.new.symbols, row_ids, cols)


def validate_alignment(a: Alignment, g: Grammar | None = None) -> list[str]:
    """Check the column invariants; returns warnings, raises on violation.

    Used by every downstream test as the single structural authority.
    """
    warnings: list[str] = []
    if a.new.kind != NEW:
        raise AlignmentStructureError("row 0 must be a new pattern")
    last_index: dict[int, int] = {}
    seen: set[tuple[int, int]] = set()
    for ci, col in enumerate(a.columns):
        if not col:
            raise AlignmentStructureError(f"column {ci} is empty")
        syms = set()
        col_pattern_ids = set()
        for row, idx in col:
            if row < 0 or row >= a.n_rows():
                raise AlignmentStructureError(f"column {ci}: bad row {row}")
            pat = a.row(row)
            if idx < 0 or idx >= len(pat.symbols):
                raise AlignmentStructureError(f"column {ci}: bad index {idx} in row {row}")
            if (row, idx) in seen:
                raise AlignmentStructureError(
                    f"occurrence ({row},{idx}) assigned to more than one column"
                )
            seen.add((row, idx))
            if row in last_index and idx <= last_index[row]:
                raise AlignmentStructureError(
                    f"row {row}: indices not strictly increasing at column {ci}"
                )
            last_index[row] = idx
            syms.add(pat.symbols[idx])
            if row > 0:
                # Matching a pattern against a second copy of itself is a
                # degenerate self-match, not a unification.
                if pat.id in col_pattern_ids:
                    raise AlignmentStructureError(
                        f"column {ci}: pattern {pat.id} matched against itself"
                    )
                col_pattern_ids.add(pat.id)
        if len(syms) != 1:
            raise AlignmentStructureError(f"column {ci} mixes symbols {sorted(syms)}")
    if not a.old_rows and a.score != 0.0:
        raise AlignmentStructureError("alignment with no old rows must score 0")
    if g is not None:
        for p in a.old_rows:
            if g.by_id.get(p.id) is not p and p.id not in g.by_id:
                warnings.append(f"row pattern id {p.id} not present in grammar")
    ids = [p.id for p in a.old_rows]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        warnings.append(f"pattern(s) {dupes} appear in more than one row")
    rows_in_cols = {row for col in a.columns for row, _ in col}
    for r in range(1, a.n_rows()):
        if r not in rows_in_cols:
            warnings.append(f"old row {r} participates in no column")
    return warnings

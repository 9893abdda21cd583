"""Lossless grammar-based compression.

``encode`` derives an encoding from the best alignment of the data against
the grammar: each old row whose content symbols map onto a contiguous,
unclaimed block of the data is cited once by a Reference, everything else
is carried verbatim as Literals.  ``decode`` replays references by
emitting the cited pattern's content symbols and splices literals back in,
reconstructing the data exactly.

Cost model (bits): a Reference pays for the identifier symbols the
alignment left unmatched, a Literal pays the symbol's code length (8 bits
per UTF-8 byte when the grammar has never seen it), and every item pays a
1-bit escape flag.  References that would cost more than the literals they
replace are dropped, so an encoding never expands beyond the all-literal
bound.

Binary container:

    magic "SPE1" | 32-byte grammar hash | varint original length |
    varint item count | items

Each item is a varint whose low bit is the tag: tag 0 carries the pattern
id in the high bits, tag 1 carries the literal's UTF-8 byte length in the
high bits followed by the bytes.  The container is byte-aligned; the bit
costs above are the model, not the wire size.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    NEW,
    OLD,
    Alignment,
    AmbiguousGrammarError,
    Grammar,
    Pattern,
    SPError,
)
from .builder import SearchParams, build_alignments

ENCODING_MAGIC = b"SPE1"
PER_ITEM_FLAG_BITS = 1.0


class DecodeError(SPError):
    """Raised for hash mismatches, unknown ids, or corrupt reconstructions."""


@dataclass(frozen=True)
class Reference:
    pattern_id: int
    cited: tuple[str, ...] = ()


@dataclass(frozen=True)
class Literal:
    symbol: str


@dataclass(frozen=True)
class Encoding:
    """The compressed citation of a grammar that reconstructs one pattern."""

    items: tuple
    grammar_hash: str
    original_length: int
    bit_size: float | None = None


def _leading_service_run(g: Grammar, p: Pattern) -> tuple[str, ...]:
    run = []
    for sym in p.symbols:
        if not g.is_service(sym):
            break
        run.append(sym)
    return tuple(run)


def _identifier(g: Grammar, p: Pattern, strict: bool) -> tuple[str, ...]:
    run = _leading_service_run(g, p)
    if not run:
        if strict:
            raise AmbiguousGrammarError(
                f"pattern {p.id} has no leading service symbols to cite"
            )
        run = p.symbols  # cost-model fallback for bare patterns
    first = run[0]
    group = [
        q for q in g.patterns if q.id != p.id and q.symbols and q.symbols[0] == first
    ]
    group_runs = []
    for q in group:
        r = _leading_service_run(g, q)
        group_runs.append(r if r else q.symbols)
    # A bare class symbol also occurs as a slot inside other patterns, so
    # whenever the first symbol appears elsewhere the identifier carries at
    # least one discriminating symbol after it.
    occurs_elsewhere = any(
        first in q.symbols for q in g.patterns if q.id != p.id
    )
    k = 2 if occurs_elsewhere else 1
    k = min(k, len(run))
    while True:
        prefix = run[:k]
        clashes = [r for r in group_runs if r[: len(prefix)] == prefix]
        if not clashes:
            return prefix
        if k >= len(run):
            if strict:
                raise AmbiguousGrammarError(
                    f"pattern {p.id} is indistinguishable from another pattern"
                )
            return run
        k += 1


def identifier_rule(g: Grammar, p: Pattern) -> tuple[str, ...]:
    """Identifier symbols that cite pattern p within grammar g.

    The minimal leading run of service symbols that singles p out among
    the patterns sharing its first symbol; at least two symbols whenever
    the first symbol also occurs inside other patterns.  Raises
    AmbiguousGrammarError when two patterns cannot be told apart.
    """
    if p.kind != OLD:
        raise SPError("identifier_rule applies to old patterns")
    if g.by_id.get(p.id) is None:
        raise SPError(f"pattern {p.id} is not part of the grammar")
    return _identifier(g, p, strict=True)


def citation_symbols(g: Grammar, p: Pattern) -> tuple[str, ...]:
    """Like identifier_rule but total: never raises, used by cost models."""
    return _identifier(g, p, strict=False)


def literal_cost(g: Grammar, sym: str) -> float:
    return g.cost_or_literal(sym)


def encode(data: Pattern, g: Grammar, params: SearchParams | None = None) -> Encoding:
    """Encode new data against a grammar via its best alignment."""
    if data.kind != NEW:
        raise SPError("encode expects a new pattern")
    if not data.symbols:
        return Encoding(items=(), grammar_hash=g.content_hash, original_length=0, bit_size=0.0)
    best = build_alignments(data, g, params)[0]

    matched: dict[int, dict[int, int]] = {}
    new_partner: dict[tuple[int, int], int] = {}
    for col in best.columns:
        new_idx = None
        for row, idx in col:
            matched.setdefault(row, {})[idx] = True
            if row == 0:
                new_idx = idx
        if new_idx is not None:
            for row, idx in col:
                if row != 0:
                    new_partner[(row, idx)] = new_idx

    # Rows are citable when their whole content lands on a contiguous block
    # of the data; overlapping claims are resolved deterministically.
    candidates = []
    for r in range(1, best.n_rows()):
        pat = best.row(r)
        content = g.content_indices(pat)
        spans = [new_partner.get((r, i)) for i in content]
        if any(s is None for s in spans):
            continue
        if not spans:
            continue  # no content to reconstruct; nothing worth citing
        lo, hi = min(spans), max(spans)
        if hi - lo + 1 != len(spans):
            continue
        cited = tuple(
            sym
            for i, sym in enumerate(citation_symbols(g, pat))
            if i not in matched.get(r, {})
        )
        ref_cost = sum(g.symbol_cost(s) for s in cited) + PER_ITEM_FLAG_BITS
        block_cost = sum(
            literal_cost(g, data.symbols[i]) + PER_ITEM_FLAG_BITS
            for i in range(lo, hi + 1)
        )
        if ref_cost > block_cost:
            continue
        candidates.append((lo, hi, r, pat, cited, ref_cost))

    candidates.sort(key=lambda c: (c[0], -(c[1] - c[0]), c[2]))
    claimed = [False] * len(data.symbols)
    accepted = []
    for lo, hi, r, pat, cited, ref_cost in candidates:
        if any(claimed[lo : hi + 1]):
            continue
        for i in range(lo, hi + 1):
            claimed[i] = True
        accepted.append((lo, pat, cited, ref_cost))

    items = []
    bits = 0.0
    starts = {lo: (pat, cited, cost) for lo, pat, cited, cost in accepted}
    i = 0
    while i < len(data.symbols):
        if i in starts:
            pat, cited, cost = starts[i]
            items.append(Reference(pattern_id=pat.id, cited=cited))
            bits += cost
            while i < len(data.symbols) and claimed[i]:
                i += 1
        else:
            sym = data.symbols[i]
            items.append(Literal(symbol=sym))
            bits += literal_cost(g, sym) + PER_ITEM_FLAG_BITS
            i += 1

    return Encoding(
        items=tuple(items),
        grammar_hash=g.content_hash,
        original_length=len(data.symbols),
        bit_size=bits,
    )


def decode(e: Encoding, g: Grammar) -> Pattern:
    """Reconstruct the original data; exact inverse of encode."""
    if e.grammar_hash != g.content_hash:
        raise DecodeError("grammar hash mismatch")
    out: list[str] = []
    for item in e.items:
        if isinstance(item, Reference):
            pat = g.by_id.get(item.pattern_id)
            if pat is None:
                raise DecodeError(f"unknown pattern id {item.pattern_id}")
            out.extend(g.content_symbols(pat))
        else:
            out.append(item.symbol)
    if len(out) != e.original_length:
        raise DecodeError(
            f"reconstructed {len(out)} symbols, expected {e.original_length}"
        )
    return Pattern(tuple(out), kind=NEW)


# -- binary container ------------------------------------------------------


def _write_varint(n: int, out: bytearray) -> None:
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    shift = 0
    value = 0
    while True:
        if pos >= len(buf):
            raise DecodeError("truncated varint")
        b = buf[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7


def encoding_to_bytes(e: Encoding) -> bytes:
    out = bytearray()
    out.extend(ENCODING_MAGIC)
    out.extend(bytes.fromhex(e.grammar_hash))
    _write_varint(e.original_length, out)
    _write_varint(len(e.items), out)
    for item in e.items:
        if isinstance(item, Reference):
            _write_varint(item.pattern_id << 1, out)
        else:
            raw = item.symbol.encode("utf-8")
            _write_varint((len(raw) << 1) | 1, out)
            out.extend(raw)
    return bytes(out)


def encoding_from_bytes(buf: bytes) -> Encoding:
    if buf[:4] != ENCODING_MAGIC:
        raise DecodeError("bad encoding magic")
    if len(buf) < 36:
        raise DecodeError("truncated encoding header")
    grammar_hash = buf[4:36].hex()
    pos = 36
    original_length, pos = _read_varint(buf, pos)
    count, pos = _read_varint(buf, pos)
    items = []
    for _ in range(count):
        head, pos = _read_varint(buf, pos)
        if head & 1:
            length = head >> 1
            if pos + length > len(buf):
                raise DecodeError("truncated literal")
            items.append(Literal(symbol=buf[pos : pos + length].decode("utf-8")))
            pos += length
        else:
            items.append(Reference(pattern_id=head >> 1))
    if pos != len(buf):
        raise DecodeError("trailing bytes after encoding")
    return Encoding(
        items=tuple(items),
        grammar_hash=grammar_hash,
        original_length=original_length,
        bit_size=None,
    )

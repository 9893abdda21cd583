"""Unsupervised grammar induction by description-length minimization.

From a corpus of raw symbol sequences the learner produces a grammar G and
one encoding E per item such that G captures recurrent structure while
rare material (typically errors) stays out of G and survives only as
literals inside E.  Decoding every E against G reproduces the corpus
exactly, whatever G excludes.

Each pass aligns every item against the current working grammar (selected
patterns plus the strongest unselected candidates), mines the alignments
for evidence, and re-selects:

  * a row whose whole content matches re-supports its candidate;
  * a partially matched row contributes its matched runs as unified
    segment candidates;
  * leftover stretches of item or row content spin off residue candidates
    under fresh identifiers (%gN ... #%gN -- the % prefix cannot collide
    with corpus symbols because % opens comments in grammar files).

Selection greedily adds candidates whose estimated saving is positive,
refuses anything with support below ``rare_threshold``, then drops
patterns whose realized use no longer pays for their grammar bits.  After
segment learning stabilizes, a second phase proposes abstractions --
patterns citing other patterns' identifiers -- mined from recurring
reference bigrams and kept only when they shorten the total description.

Everything is deterministic for a given corpus and parameter set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .core import NEW, Grammar, Pattern
from .matching import SearchLimits
from .builder import SearchParams, build_alignments
from .codec import Encoding, Reference, citation_symbols, encode

PATTERN_HEADER_BITS = 8.0
LEDGER_MAGIC = "%SPLEDGER1"


@dataclass(frozen=True)
class LearnParams:
    rare_threshold: int = 2
    passes: int = 4
    min_segment: int = 2
    top_alignments: int = 3
    pool_limit: int = 300
    abstractions: bool = True
    seed: int | None = None
    search: SearchParams = field(
        default_factory=lambda: SearchParams(
            beam_width=3,
            max_iterations=2,
            limits=SearchLimits(max_fragments=8),
            screen_top_k=40,
        )
    )

    def __post_init__(self):
        if self.rare_threshold < 1:
            raise ValueError("rare_threshold must be >= 1")


@dataclass
class CandidatePattern:
    body: tuple[str, ...]
    support: int
    origin: str  # "unified-match" | "residue"


@dataclass
class LearnResult:
    grammar: Grammar
    encodings: list[Encoding]
    ledger: dict[str, float]
    candidates: dict[tuple[str, ...], CandidatePattern]


def corpus_raw_bits(corpus) -> float:
    """Corpus size under a unigram model of its own symbol frequencies."""
    counts: dict[str, int] = {}
    total = 0
    for item in corpus:
        for sym in item.symbols:
            counts[sym] = counts.get(sym, 0) + 1
            total += 1
    if total == 0:
        return 0.0
    return sum(-math.log2(counts[s] / total) for item in corpus for s in item.symbols)


def grammar_bits(g: Grammar) -> float:
    """bits(G): symbol costs of every pattern plus per-pattern headers."""
    bits = 0.0
    for p in g.patterns:
        bits += sum(g.symbol_cost(s) for s in p.symbols)
        bits += sum(g.symbol_cost(s) for s in citation_symbols(g, p))
        bits += PATTERN_HEADER_BITS
    return bits


class _Naming:
    """Stable fresh-identifier registry; a body keeps its id for good."""

    def __init__(self):
        self.ids: dict[tuple[str, ...], int] = {}
        self._next = 1

    def gid(self, body) -> int:
        if body not in self.ids:
            self.ids[body] = self._next
            self._next += 1
        return self.ids[body]


def _materialize(bodies, supports, naming, abstract_bodies=frozenset()) -> Grammar:
    """Wrap candidate bodies in fresh identifiers and build a grammar.

    Pattern ids equal the registry ids, so they stay stable while the
    selected set evolves.
    """
    patterns = []
    for body in bodies:
        gid = naming.gid(body)
        tag = f"%a{gid}" if body in abstract_bodies else f"%g{gid}"
        syms = (tag,) + tuple(body) + (f"#{tag}",)
        freq = max(1, supports.get(body, 1))
        patterns.append(Pattern(syms, kind="old", frequency=freq, id=gid))
    return Grammar(patterns, service_prefixes=("%",))


def _mine(alignment, g: Grammar, min_segment: int) -> dict[tuple[str, ...], str]:
    """Evidence bodies contributed by one alignment (body -> origin)."""
    evidence: dict[tuple[str, ...], str] = {}

    def offer(body, origin):
        if body:
            evidence.setdefault(body, origin)

    new_syms = alignment.new.symbols
    new_matched = [False] * len(new_syms)
    pair_of: dict[tuple[int, int], int] = {}
    for col in alignment.columns:
        new_idx = None
        for row, idx in col:
            if row == 0:
                new_idx = idx
        if new_idx is not None:
            new_matched[new_idx] = True
            for row, idx in col:
                if row != 0:
                    pair_of[(row, idx)] = new_idx

    for r in range(1, alignment.n_rows()):
        pat = alignment.row(r)
        content = g.content_indices(pat)
        if not content:
            continue
        runs: list[list[int]] = []
        prev_n = None
        for i in content:
            n = pair_of.get((r, i))
            if n is None:
                prev_n = None
                continue
            if runs and prev_n is not None and n == prev_n + 1:
                runs[-1].append(i)
            else:
                runs.append([i])
            prev_n = n
        covered = sum(len(run) for run in runs)
        if covered == len(content) and len(runs) == 1:
            offer(g.content_symbols(pat), "full")
            continue
        for run in runs:
            if len(run) >= min_segment:
                offer(tuple(pat.symbols[i] for i in run), "unified-match")
        miss: list[int] = []
        for i in content:
            if pair_of.get((r, i)) is None:
                miss.append(i)
            else:
                if len(miss) >= min_segment:
                    offer(tuple(pat.symbols[i] for i in miss), "residue")
                miss = []
        if len(miss) >= min_segment:
            offer(tuple(pat.symbols[i] for i in miss), "residue")

    whole = not alignment.old_rows
    run: list[int] = []
    for i in range(len(new_syms)):
        if not new_matched[i]:
            run.append(i)
        else:
            if run and (whole or len(run) >= min_segment):
                offer(tuple(new_syms[i] for i in run), "residue")
            run = []
    if run and (whole or len(run) >= min_segment):
        offer(tuple(new_syms[i] for i in run), "residue")
    return evidence


def _cover_bits(body, selected_costs, unigram) -> float:
    """Cheapest spelling of a body with selected patterns plus unigram
    literals; small Viterbi over body positions (1 flag bit per item)."""
    n = len(body)
    dp = [0.0] + [math.inf] * n
    for i in range(1, n + 1):
        dp[i] = dp[i - 1] + unigram(body[i - 1]) + 1.0
        for other, cost in selected_costs.items():
            ln = len(other)
            if 0 < ln <= i and body[i - ln : i] == other:
                cand = dp[i - ln] + cost + 1.0
                if cand < dp[i]:
                    dp[i] = cand
    return dp[n]


def _select(pool, params, unigram) -> list[tuple[str, ...]]:
    """Greedy add pass over eligible candidates by estimated saving.

    The estimate prices citations at -log2(support / total support) plus
    the escape flag; exactness is restored later by the drop pass and the
    final full encode.
    """
    eligible = {
        body: c for body, c in pool.items() if c.support >= params.rare_threshold
    }
    if not eligible:
        return []
    total = sum(c.support for c in eligible.values()) or 1

    def cite_est(body):
        return max(0.0, -math.log2(eligible[body].support / total)) + 1.0

    selected: dict[tuple[str, ...], float] = {}
    chosen: list[tuple[str, ...]] = []
    while True:
        best = None  # (gain, body)
        for body, cand in eligible.items():
            if body in selected:
                continue
            cover = _cover_bits(body, selected, unigram)
            cite = cite_est(body)
            own = sum(unigram(s) for s in body) + cite + PATTERN_HEADER_BITS + 8.0
            gain = cand.support * (cover - cite) - own
            if gain <= 1e-9:
                continue
            if best is None or gain > best[0] + 1e-9 or (
                abs(gain - best[0]) <= 1e-9 and body < best[1]
            ):
                best = (gain, body)
        if best is None:
            break
        selected[best[1]] = cite_est(best[1])
        chosen.append(best[1])
    return chosen


def _drop_pass(chosen, pool, params, unigram) -> list[tuple[str, ...]]:
    """Remove patterns whose realized saving no longer covers their bits.

    Approximate mirror image of _select: a pattern is kept only while
    support * (cover-without-it - citation) still exceeds its own bits.
    """
    kept = list(chosen)
    changed = True
    while changed and kept:
        changed = False
        total = sum(pool[b].support for b in kept) or 1
        costs = {
            b: max(0.0, -math.log2(pool[b].support / total)) + 1.0 for b in kept
        }
        for body in sorted(kept, key=lambda b: (pool[b].support, b)):
            others = {b: c for b, c in costs.items() if b != body}
            cover = _cover_bits(body, others, unigram)
            cite = costs[body]
            own = sum(unigram(s) for s in body) + cite + PATTERN_HEADER_BITS + 8.0
            if pool[body].support * (cover - cite) - own <= 0.0:
                kept.remove(body)
                changed = True
                break
    return kept


def _encode_corpus(corpus, g, search) -> list[Encoding]:
    cache: dict[tuple[str, ...], Encoding] = {}
    out = []
    for item in corpus:
        enc = cache.get(item.symbols)
        if enc is None:
            enc = encode(item, g, search)
            cache[item.symbols] = enc
        out.append(enc)
    return out


def learn(corpus, params: LearnParams | None = None) -> LearnResult:
    """Induce a grammar and per-item encodings from raw sequences."""
    params = params or LearnParams()
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus must be non-empty")
    for item in corpus:
        if item.kind != NEW:
            raise ValueError("corpus items must be new patterns")

    ucounts: dict[str, int] = {}
    utotal = 0
    for item in corpus:
        for s in item.symbols:
            ucounts[s] = ucounts.get(s, 0) + 1
            utotal += 1

    def unigram(sym):
        c = ucounts.get(sym)
        if not c:
            return 8.0 * len(sym.encode("utf-8"))
        return -math.log2(c / utotal)

    naming = _Naming()
    pool: dict[tuple[str, ...], CandidatePattern] = {}
    selected: list[tuple[str, ...]] = []

    for _ in range(params.passes):
        ranked = sorted(
            (b for b in pool if b not in selected),
            key=lambda b: (-pool[b].support, b),
        )
        working = list(selected) + ranked[: params.pool_limit]
        supports = {b: pool[b].support for b in working if b in pool}
        wg = _materialize(working, supports, naming)

        pass_counts: dict[tuple[str, ...], int] = {}
        origins: dict[tuple[str, ...], str] = {}
        mined_cache: dict[tuple[str, ...], tuple] = {}
        for item in corpus:
            got = mined_cache.get(item.symbols)
            if got is None:
                alist = build_alignments(item, wg, params.search)
                evidence: dict[tuple[str, ...], str] = {}
                for a in alist[: params.top_alignments]:
                    for body, origin in _mine(a, wg, params.min_segment).items():
                        evidence.setdefault(body, origin)
                got = tuple(sorted(evidence.items()))
                mined_cache[item.symbols] = got
            for body, origin in got:
                pass_counts[body] = pass_counts.get(body, 0) + 1
                if origin != "full":
                    origins.setdefault(body, origin)

        for body, count in pass_counts.items():
            cand = pool.get(body)
            if cand is None:
                pool[body] = CandidatePattern(
                    body=body, support=count, origin=origins.get(body, "residue")
                )
            else:
                cand.support = max(cand.support, count)

        new_selected = _drop_pass(_select(pool, params, unigram), pool, params, unigram)
        stable = new_selected == selected
        selected = new_selected
        if stable:
            break

    supports = {b: pool[b].support for b in selected}
    g = _materialize(selected, supports, naming)
    encodings = _encode_corpus(corpus, g, params.search)
    score = (grammar_bits(g) if g.patterns else 0.0) + sum(
        e.bit_size or 0.0 for e in encodings
    )

    abstract_bodies: set[tuple[str, ...]] = set()
    if params.abstractions and selected:
        pair_counts: dict[tuple[int, int], int] = {}
        for e in encodings:
            refs = [it.pattern_id for it in e.items if isinstance(it, Reference)]
            for x, y in zip(refs, refs[1:]):
                pair_counts[(x, y)] = pair_counts.get((x, y), 0) + 1
        threshold = max(params.rare_threshold, 2)
        proposals = sorted(
            ((c, p) for p, c in pair_counts.items() if c >= threshold),
            key=lambda t: (-t[0], t[1]),
        )
        deeper = replace(params.search, max_iterations=max(3, params.search.max_iterations))
        id_of = {naming.gid(b): b for b in selected}
        for count, (x, y) in proposals[:6]:
            if x not in id_of or y not in id_of:
                continue
            body = (f"%g{x}", f"#%g{x}", f"%g{y}", f"#%g{y}")
            if body in pool:
                continue
            pool[body] = CandidatePattern(body=body, support=count, origin="unified-match")
            trial = selected + [body]
            tsup = dict(supports)
            tsup[body] = count
            tg = _materialize(trial, tsup, naming, abstract_bodies | {body})
            tenc = _encode_corpus(corpus, tg, deeper)
            tscore = (grammar_bits(tg) if tg.patterns else 0.0) + sum(
                e.bit_size or 0.0 for e in tenc
            )
            if tscore < score - 1e-9:
                selected, supports = trial, tsup
                abstract_bodies.add(body)
                g, encodings, score = tg, tenc, tscore

    ledger = {
        "bits_grammar": grammar_bits(g) if g.patterns else 0.0,
        "bits_encodings": sum(e.bit_size or 0.0 for e in encodings),
        "bits_raw": corpus_raw_bits(corpus),
        "patterns": float(len(g.patterns)),
        "corpus_items": float(len(corpus)),
    }
    return LearnResult(grammar=g, encodings=encodings, ledger=ledger, candidates=pool)


def describe_lengths(r: LearnResult) -> dict[str, float]:
    """Description-length accounting: bits(G), bits(E), bits(raw corpus)."""
    bits_g = grammar_bits(r.grammar) if r.grammar.patterns else 0.0
    bits_e = sum(e.bit_size or 0.0 for e in r.encodings)
    return {
        "bits_grammar": bits_g,
        "bits_encodings": bits_e,
        "bits_raw": r.ledger["bits_raw"],
        "patterns": float(len(r.grammar.patterns)),
        "corpus_items": r.ledger["corpus_items"],
    }


def ledger_text(ledger: dict[str, float]) -> str:
    lines = [LEDGER_MAGIC]
    for key in sorted(ledger):
        lines.append(f"{key}\t{ledger[key]:.6f}")
    return "\n".join(lines) + "\n"

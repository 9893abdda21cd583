"""Command-line front end.

    sp parse  --grammar F input       best alignment, layout + score + prob
    sp align  --grammar F input       full ranked list, record mode
    sp encode --grammar F input -o E  write binary encoding
    sp decode --grammar F E [-o OUT]  reconstruct original text
    sp learn  --out G corpus          induce a grammar, write ledger
    sp serve  --grammar F --listen H:P
    sp send   --grammar F --endpoint H:P corpus
    sp stats  --grammar F             grammar summary

Exit codes: 0 ok, 1 usage, 2 input/format error (and hash mismatch for
send), 3 runtime/transfer error.  ``--seed`` falls back to the SP_SEED
environment variable.  All output is deterministic for fixed inputs.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .core import GrammarFormatError, NEW, Pattern, SPError, load_grammar, save_grammar
from .matching import SearchLimits
from .builder import SearchParams, build_alignments
from .inference import alignment_probabilities
from .codec import DecodeError, decode, encode, encoding_from_bytes, encoding_to_bytes
from .learn import LearnParams, learn, ledger_text
from .render import RECORD_MAGIC, alignment_records, render_alignment
from . import transmit

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def load_corpus_text(text: str) -> list[Pattern]:
    """One pattern per line, whitespace-separated symbols, % comments."""
    items = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        items.append(Pattern(tuple(line.split()), kind=NEW))
    return items


def _read_grammar(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return load_grammar(fh)


def _read_corpus(path: str) -> list[Pattern]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_corpus_text(fh.read())


def _search_params(args) -> SearchParams:
    limits = SearchLimits(
        max_fragments=args.max_fragments,
        exact_threshold=args.exact_threshold,
        beam_width=args.beam,
    )
    return SearchParams(
        beam_width=args.beam,
        max_iterations=args.iterations,
        all_or_nothing=args.all_or_nothing,
        limits=limits,
    )


def _add_search_flags(p):
    p.add_argument("--beam", type=int, default=10, help="beam width (default 10)")
    p.add_argument("--iterations", type=int, default=8, help="search iterations (default 8)")
    p.add_argument("--max-fragments", type=int, default=20, help="fragments per match (default 20)")
    p.add_argument("--exact-threshold", type=int, default=4096,
                   help="cell count below which matching is exact (default 4096)")
    p.add_argument("--all-or-nothing", action="store_true",
                   help="drop alignments leaving any input symbol unmatched")


def _host_port(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise _UsageError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _build_parser() -> _Parser:
    top = _Parser(prog="sp", description="pattern-alignment compression toolkit")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="print the best alignment of an input")
    p.add_argument("--grammar", required=True)
    p.add_argument("input", help="text file of whitespace-separated symbols")
    p.add_argument("--mode", choices=("pretty", "records"), default="pretty")
    p.add_argument("--width", type=int, default=120)
    _add_search_flags(p)

    p = sub.add_parser("align", help="print the full ranked alignment list")
    p.add_argument("--grammar", required=True)
    p.add_argument("input")
    p.add_argument("--top", type=int, default=0, help="limit list length (0 = all)")
    _add_search_flags(p)

    p = sub.add_parser("encode", help="compress input against a grammar")
    p.add_argument("--grammar", required=True)
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True)
    _add_search_flags(p)

    p = sub.add_parser("decode", help="reconstruct input from an encoding")
    p.add_argument("--grammar", required=True)
    p.add_argument("encoding")
    p.add_argument("-o", "--out", help="write here instead of stdout")

    p = sub.add_parser("learn", help="induce a grammar from a corpus")
    p.add_argument("corpus")
    p.add_argument("--out", required=True, help="grammar file to write")
    p.add_argument("--ledger", help="ledger file (default: <out>.ledger)")
    p.add_argument("--encodings-dir", help="write one .spe per corpus item here")
    p.add_argument("--rare-threshold", type=int, default=2)
    p.add_argument("--passes", type=int, default=4)
    p.add_argument("--no-abstractions", action="store_true")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("serve", help="receive encodings from senders")
    p.add_argument("--grammar", required=True)
    p.add_argument("--listen", required=True, metavar="HOST:PORT")

    p = sub.add_parser("send", help="transfer a corpus to a server")
    p.add_argument("--grammar", required=True)
    p.add_argument("--endpoint", required=True, metavar="HOST:PORT")
    p.add_argument("corpus")
    _add_search_flags(p)

    p = sub.add_parser("stats", help="summarize a grammar")
    p.add_argument("--grammar", required=True)
    return top


def _cmd_parse(args, out) -> int:
    g = _read_grammar(args.grammar)
    with open(args.input, "r", encoding="utf-8") as fh:
        items = load_corpus_text(fh.read())
    params = _search_params(args)
    for item in items:
        alignments = build_alignments(item, g, params)
        if not alignments:
            print("no alignment (all-or-nothing left nothing)", file=out)
            continue
        probs = alignment_probabilities(alignments, g).probabilities
        best = alignments[0]
        if args.mode == "records":
            print(RECORD_MAGIC, file=out)
            print(alignment_records(best, rank=0, probability=probs[0]), file=out)
        else:
            print(f"score: {best.score:.6f} bits", file=out)
            print(f"probability: {probs[0]:.6f} (of {len(alignments)} candidates)", file=out)
            print(render_alignment(best, width=args.width), file=out)
    return EXIT_OK


def _cmd_align(args, out) -> int:
    g = _read_grammar(args.grammar)
    with open(args.input, "r", encoding="utf-8") as fh:
        items = load_corpus_text(fh.read())
    params = _search_params(args)
    print(RECORD_MAGIC, file=out)
    for item in items:
        alignments = build_alignments(item, g, params)
        if args.top:
            alignments = alignments[: args.top]
        if not alignments:
            print("alignment\t-\tscore=nan\trows=", file=out)
            continue
        probs = alignment_probabilities(alignments, g).probabilities
        for rank, (a, prob) in enumerate(zip(alignments, probs)):
            print(alignment_records(a, rank=rank, probability=prob), file=out)
    return EXIT_OK


def _cmd_encode(args, out) -> int:
    g = _read_grammar(args.grammar)
    with open(args.input, "r", encoding="utf-8") as fh:
        items = load_corpus_text(fh.read())
    if len(items) != 1:
        raise SPError(f"encode expects exactly one input line, got {len(items)}")
    enc = encode(items[0], g, _search_params(args))
    with open(args.out, "wb") as fh:
        fh.write(encoding_to_bytes(enc))
    print(f"{len(enc.items)} items, {enc.bit_size:.2f} modeled bits", file=out)
    return EXIT_OK


def _cmd_decode(args, out) -> int:
    g = _read_grammar(args.grammar)
    with open(args.encoding, "rb") as fh:
        enc = encoding_from_bytes(fh.read())
    item = decode(enc, g)
    text = item.text() + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def _cmd_learn(args, out) -> int:
    corpus = _read_corpus(args.corpus)
    seed = args.seed
    if seed is None and os.environ.get("SP_SEED"):
        seed = int(os.environ["SP_SEED"])
    params = LearnParams(
        rare_threshold=args.rare_threshold,
        passes=args.passes,
        abstractions=not args.no_abstractions,
        seed=seed,
    )
    result = learn(corpus, params)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(save_grammar(result.grammar))
    ledger_path = args.ledger or args.out + ".ledger"
    ledger = dict(result.ledger)
    if seed is not None:
        ledger["seed"] = float(seed)
    with open(ledger_path, "w", encoding="utf-8") as fh:
        fh.write(ledger_text(ledger))
    if args.encodings_dir:
        os.makedirs(args.encodings_dir, exist_ok=True)
        for i, enc in enumerate(result.encodings):
            path = os.path.join(args.encodings_dir, f"item{i:05d}.spe")
            with open(path, "wb") as fh:
                fh.write(encoding_to_bytes(enc))
    print(
        f"{int(ledger['patterns'])} patterns; "
        f"G+E {ledger['bits_grammar'] + ledger['bits_encodings']:.1f} bits "
        f"vs raw {ledger['bits_raw']:.1f} bits",
        file=out,
    )
    return EXIT_OK


def _cmd_serve(args, out) -> int:
    g = _read_grammar(args.grammar)
    server = transmit.serve(g, _host_port(args.listen))
    print(f"serving grammar {g.content_hash[:12]} on {args.listen}", file=out)
    out.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return EXIT_OK


def _cmd_send(args, out) -> int:
    g = _read_grammar(args.grammar)
    corpus = _read_corpus(args.corpus)
    report = transmit.send(corpus, g, _host_port(args.endpoint), _search_params(args))
    print(
        f"items: {report.items}  raw: {report.bytes_raw}  "
        f"wire: {report.bytes_on_wire}  ratio: {report.ratio:.4f}",
        file=out,
    )
    return EXIT_OK


def _cmd_stats(args, out) -> int:
    g = _read_grammar(args.grammar)
    print(f"patterns: {len(g.patterns)}", file=out)
    print(f"total weight: {g.total_weight}", file=out)
    print(f"distinct symbols: {len(g.symbols())}", file=out)
    print(f"content hash: {g.content_hash}", file=out)
    for sym in g.symbols():
        kind = "service" if g.is_service(sym) else "content"
        print(f"symbol\t{sym}\t{g.symbol_cost(sym):.6f}\t{kind}", file=out)
    return EXIT_OK


_COMMANDS = {
    "parse": _cmd_parse,
    "align": _cmd_align,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "learn": _cmd_learn,
    "serve": _cmd_serve,
    "send": _cmd_send,
    "stats": _cmd_stats,
}


def run(argv, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"sp: {exc}", file=err)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, out)
    except transmit.ProtocolError as exc:
        print(f"sp: {exc}", file=err)
        return EXIT_INPUT if exc.code == transmit.ERR_HASH_MISMATCH else EXIT_RUNTIME
    except (GrammarFormatError, DecodeError, FileNotFoundError) as exc:
        print(f"sp: {exc}", file=err)
        return EXIT_INPUT
    except (SPError, OSError, ValueError) as exc:
        print(f"sp: {exc}", file=err)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

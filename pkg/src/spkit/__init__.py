"""spkit: symbolic pattern toolkit.

Knowledge is stored as flat patterns of atomic symbols.  An input sequence
is analysed by building multiple alignments of it against a grammar of
stored patterns, scored by the number of bits the alignment saves.  On top
of that one mechanism sit recognition, probabilistic inference, lossless
grammar-based compression, dictionary-synchronized transmission, and
unsupervised grammar induction.
"""

from .core import (
    NEW,
    OLD,
    Alignment,
    AlignmentStructureError,
    AmbiguousGrammarError,
    Grammar,
    GrammarFormatError,
    Pattern,
    SPError,
    UnknownSymbolError,
    load_grammar,
    save_grammar,
    symbol_cost,
    validate_alignment,
)
from .matching import MatchFragment, SearchLimits, find_matches, match_all_old
from .builder import SearchParams, build_alignments, flatten_alignment, score_alignment
from .inference import ScoredCandidateSet, alignment_probabilities, inferred_symbols
from .codec import (
    DecodeError,
    Encoding,
    Literal,
    Reference,
    decode,
    encode,
    encoding_from_bytes,
    encoding_to_bytes,
    identifier_rule,
)
from .learn import CandidatePattern, LearnParams, LearnResult, describe_lengths, learn

__all__ = [
    "NEW",
    "OLD",
    "Alignment",
    "AlignmentStructureError",
    "AmbiguousGrammarError",
    "CandidatePattern",
    "DecodeError",
    "Encoding",
    "Grammar",
    "GrammarFormatError",
    "LearnParams",
    "LearnResult",
    "Literal",
    "MatchFragment",
    "Pattern",
    "Reference",
    "SPError",
    "ScoredCandidateSet",
    "SearchLimits",
    "SearchParams",
    "UnknownSymbolError",
    "alignment_probabilities",
    "build_alignments",
    "decode",
    "describe_lengths",
    "encode",
    "encoding_from_bytes",
    "encoding_to_bytes",
    "find_matches",
    "flatten_alignment",
    "identifier_rule",
    "inferred_symbols",
    "learn",
    "load_grammar",
    "match_all_old",
    "save_grammar",
    "score_alignment",
    "symbol_cost",
    "validate_alignment",
]

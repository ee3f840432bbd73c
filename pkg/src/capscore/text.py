"""Tokenization schemes, n-gram counting, and the optional synonym table.

Two schemes are supported:

``coco-lite``
    Lowercase, remove the ASCII punctuation characters ``.,!?;:"'()[]``
    anywhere in a token, split on whitespace. Tokens that become empty are
    dropped. This is the convention used by the common captioning toolchain.

``intl-lite``
    Lowercase, make every Unicode punctuation character (category P*) a token
    of its own, split on whitespace. This is the convention used by the
    standardized corpus-level BLEU tooling.

Both schemes are idempotent on text produced by joining their own tokens with
spaces, which the perturbation pipeline relies on.
"""

import sys
import unicodedata
from collections import Counter

from .errors import FormatError

SCHEMES = ("coco-lite", "intl-lite")

_COCO_STRIP = set(".,!?;:\"'()[]")

# Unicode punctuation, precomputed once; sys.maxunicode scan is ~1M chars
_PUNCT = frozenset(
    chr(cp) for cp in range(sys.maxunicode + 1)
    if unicodedata.category(chr(cp)).startswith("P")
)


def tokenize(text: str, scheme: str = "coco-lite") -> list[str]:
    """Split raw caption text into tokens under the given scheme."""
    if scheme == "coco-lite":
        out = []
        for raw in text.lower().split():
            tok = "".join(ch for ch in raw if ch not in _COCO_STRIP)
            if tok:
                out.append(tok)
        return out
    if scheme == "intl-lite":
        pieces = []
        for ch in text.lower():
            if ch in _PUNCT:
                pieces.append(" ")
                pieces.append(ch)
                pieces.append(" ")
            else:
                pieces.append(ch)
        return "".join(pieces).split()
    raise ValueError(f"unknown tokenization scheme: {scheme!r}")


def ngram_counts(tokens, n: int) -> Counter:
    """Multiset of n-grams as tuples; empty when the sentence is shorter than n."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


class SynonymTable:
    """Word -> set of synonym class ids; two words match if their sets intersect."""

    def __init__(self, classes):
        self._classes = {w: frozenset(ids) for w, ids in classes.items()}

    def classes_of(self, word):
        return self._classes.get(word, frozenset())

    def are_synonyms(self, a: str, b: str) -> bool:
        ca = self._classes.get(a)
        if not ca:
            return False
        cb = self._classes.get(b)
        return bool(cb) and not ca.isdisjoint(cb)

    def __len__(self):
        return len(self._classes)


def load_synonym_table(path) -> SynonymTable:
    """Parse a word<TAB>comma-separated-class-ids file."""
    classes = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                word, ids = line.split("\t")
                id_set = {int(x) for x in ids.split(",")}
            except ValueError as exc:
                raise FormatError(f"{path}: bad synonym line {lineno}: {line!r}") from exc
            if not word or not id_set:
                raise FormatError(f"{path}: bad synonym line {lineno}: {line!r}")
            classes[word] = id_set
    return SynonymTable(classes)

"""Seeded caption degradation: bag-of-words replacement, order shuffling, and
whole-caption swapping between images.

Every perturbed caption is produced from the pristine caption and a seed
derived from (master seed, kind, fraction, caption id), so tiers are
independent of each other and of evaluation order, and reruns are
byte-identical.
"""

import hashlib
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, asdict

from .corpus import Caption, save_candidate_file
from .signature import build_signature
from .text import tokenize


@dataclass(frozen=True)
class BagOfWords:
    words: tuple
    min_count: int
    scheme: str

    def signature(self):
        return build_signature(
            "BAG", self.scheme, min=self.min_count, size=len(self.words)
        )


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str  # "replace" | "shuffle" | "random"
    fraction: float
    master_seed: int

    def __post_init__(self):
        if self.kind not in ("replace", "shuffle", "random"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must be in [0, 1]")


def build_bag(refsets, scheme="coco-lite", min_count=4) -> BagOfWords:
    """Vocabulary of reference words that occur at least min_count times."""
    if not refsets:
        raise ValueError("need at least one reference set")
    counts = Counter()
    for rs in refsets:
        for text in rs.texts():
            counts.update(tokenize(text, scheme))
    words = sorted(w for w, c in counts.items() if c >= min_count)
    if not words:
        raise ValueError(f"no word reaches min_count={min_count}; bag would be empty")
    return BagOfWords(words=tuple(words), min_count=min_count, scheme=scheme)


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit stream seed from the master seed and identifying parts."""
    material = ":".join([str(master_seed)] + [str(p) for p in parts])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def perturb_replace(tokens, fraction, bag, rng):
    """Replace round(fraction*L) uniformly chosen positions with bag draws.

    A draw may coincide with the word it replaces; at most k positions change.
    """
    if not bag.words:
        raise ValueError("replacement bag is empty")
    k = round_half_up(fraction * len(tokens))
    if k == 0:
        return list(tokens)
    out = list(tokens)
    for pos in rng.sample(range(len(tokens)), k):
        out[pos] = bag.words[rng.randrange(len(bag.words))]
    return out


def perturb_shuffle(tokens, fraction, rng):
    """Rearrange round(fraction*L) chosen positions by a uniform permutation.

    The token multiset is preserved exactly. For k >= 2 the identity
    permutation is resampled up to 10 times so the caption usually changes.
    """
    k = round_half_up(fraction * len(tokens))
    if k <= 1:
        return list(tokens)
    positions = sorted(rng.sample(range(len(tokens)), k))
    perm = list(range(k))
    for _ in range(10):
        rng.shuffle(perm)
        if any(p != i for i, p in enumerate(perm)):
            break
    out = list(tokens)
    picked = [tokens[p] for p in positions]
    for slot, src in zip(positions, perm):
        out[slot] = picked[src]
    return out


def assign_random_captions(captions, seed):
    """Give every image another image's caption: a seeded derangement."""
    n = len(captions)
    if n < 2:
        raise ValueError("need at least 2 captions to swap between images")
    rng = random.Random(seed)
    perm = list(range(n))
    for _ in range(1000):
        rng.shuffle(perm)
        if all(perm[i] != i for i in range(n)):
            break
    else:
        raise RuntimeError("could not find a fixed-point-free shuffle")
    return [
        Caption(id=str(captions[i].image_id), image_id=captions[i].image_id,
                text=captions[perm[i]].text)
        for i in range(n)
    ]


def generate_tier(spec: PerturbationSpec, candidates, bag=None, scheme="coco-lite"):
    """Apply one perturbation spec to every pristine candidate caption.

    Replace and shuffle emit token-joined text (both schemes re-tokenize such
    text to the same token list, so token-level scores are unaffected by the
    round trip). The random kind swaps whole raw captions between images.
    """
    if spec.kind == "random":
        return assign_random_captions(candidates, derive_seed(spec.master_seed, "random"))
    out = []
    for cap in candidates:
        rng = random.Random(
            derive_seed(spec.master_seed, spec.kind, f"{spec.fraction:g}", cap.id)
        )
        tokens = tokenize(cap.text, scheme)
        if spec.kind == "replace":
            tokens = perturb_replace(tokens, spec.fraction, bag, rng)
        else:
            tokens = perturb_shuffle(tokens, spec.fraction, rng)
        out.append(Caption(id=str(cap.image_id), image_id=cap.image_id,
                           text=" ".join(tokens)))
    return out


def write_tier(captions, path, spec=None, bag_signature=None):
    """Write a tier as a candidate file plus a provenance sidecar."""
    save_candidate_file(captions, path)
    sidecar = {
        "spec": asdict(spec) if spec is not None else None,
        "master_seed": spec.master_seed if spec is not None else None,
        "bag_signature": bag_signature,
    }
    side_path = str(path)
    side_path = side_path[: side_path.rfind(".")] if "." in side_path else side_path
    with open(side_path + ".provenance.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1)
        fh.write("\n")

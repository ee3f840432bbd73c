"""Reference-based n-gram metrics: BLEU, METEOR, ROUGE-L, CIDEr.

Each metric is a parameterized equation over tokenized captions; every knob
that can change a score is carried by a config dataclass and recorded in the
metric's signature string, so a signature uniquely determines scores for a
fixed corpus.
"""

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

from .errors import IntegrityError
from .porter import porter_stem
from .signature import build_signature
from .text import ngram_counts, tokenize


# ---------------------------------------------------------------------------
# configs


@dataclass(frozen=True)
class BleuConfig:
    n: int = 4
    weights: tuple = None  # None -> uniform 1/n
    # epsilon substitutes zero clipped counts; "exp" halves instead, which is
    # what the standardized corpus-level convention does
    smoothing: str = "epsilon"
    smoothing_epsilon: float = 1e-15
    ref_len_policy: str = "closest"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("max n-gram order must be >= 1")
        if self.smoothing_epsilon <= 0:
            raise ValueError("smoothing epsilon must be positive")
        if self.smoothing not in ("epsilon", "exp"):
            raise ValueError(f"unknown smoothing mode {self.smoothing!r}")
        if self.ref_len_policy != "closest":
            raise ValueError(f"unknown ref_len_policy {self.ref_len_policy!r}")
        if self.weights is not None:
            w = tuple(self.weights)
            if len(w) != self.n or any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
                raise ValueError("weights must be n non-negative reals summing to 1")
            object.__setattr__(self, "weights", w)

    def weight_vector(self):
        return self.weights if self.weights is not None else (1.0 / self.n,) * self.n

    def signature(self, scheme, name="BLEU", **extra):
        params = dict(
            n=self.n,
            reflen=self.ref_len_policy,
            smooth=self.smoothing,
            w="uniform" if self.weights is None else self.weights,
        )
        if self.smoothing == "epsilon":
            params["eps"] = self.smoothing_epsilon
        params.update(extra)
        return build_signature(name, scheme, **params)


@dataclass(frozen=True)
class MeteorConfig:
    # harmonic-mean weight, fragmentation exponent, fragmentation weight
    alpha: float = 0.85
    beta: float = 0.2
    gamma: float = 0.6
    stages: tuple = ("exact", "stem", "synonym")

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        bad = set(self.stages) - {"exact", "stem", "synonym"}
        if bad:
            raise ValueError(f"unknown alignment stages: {sorted(bad)}")

    def signature(self, scheme, syn=None):
        return build_signature(
            "METEOR",
            scheme,
            alpha=self.alpha,
            beta=self.beta,
            gamma=self.gamma,
            stages=",".join(self.stages),
            syn="on" if syn is not None else "off",
        )


@dataclass(frozen=True)
class RougeConfig:
    beta_mode: str = "fixed"  # "fixed" uses beta below; "ratio" uses P/R
    beta: float = 1.2

    def __post_init__(self):
        if self.beta_mode not in ("fixed", "ratio"):
            raise ValueError(f"unknown beta_mode {self.beta_mode!r}")
        if self.beta_mode == "fixed" and self.beta <= 0:
            raise ValueError("fixed beta must be positive")

    def signature(self, scheme):
        mode = f"fixed{self.beta:g}" if self.beta_mode == "fixed" else "ratio"
        return build_signature("ROUGE-L", scheme, beta=mode, multiref="max")


@dataclass(frozen=True)
class CiderConfig:
    n: int = 4
    weights: tuple = None  # None -> uniform 1/n
    scale: float = 10.0
    stem: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("max n-gram order must be >= 1")
        if self.weights is not None:
            w = tuple(self.weights)
            if len(w) != self.n or any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
                raise ValueError("weights must be n non-negative reals summing to 1")
            object.__setattr__(self, "weights", w)

    def weight_vector(self):
        return self.weights if self.weights is not None else (1.0 / self.n,) * self.n

    def signature(self, scheme):
        return build_signature(
            "CIDER",
            scheme,
            n=self.n,
            scale=self.scale,
            stem=self.stem,
            w="uniform" if self.weights is None else self.weights,
            idf="corpus",
        )


@dataclass(frozen=True)
class CorpusStats:
    """Per-order document frequencies over the reference sets of a corpus."""

    num_images: int
    doc_freq: tuple  # doc_freq[n-1] is a dict ngram -> images containing it
    stem: bool
    scheme: str


@dataclass(frozen=True)
class MetricReport:
    metric_name: str
    signature: str
    per_caption: dict
    aggregate: float

    def __post_init__(self):
        if not self.signature:
            raise ValueError("signature must be non-empty")
        if not math.isfinite(self.aggregate):
            raise ValueError(f"{self.metric_name}: non-finite aggregate")
        for cid, score in self.per_caption.items():
            if not math.isfinite(score):
                raise ValueError(f"{self.metric_name}: non-finite score for {cid}")


# ---------------------------------------------------------------------------
# BLEU


def _clipped_stats(candidate, refs, max_n):
    """Per order: (clipped match count, candidate n-gram count)."""
    stats = []
    for n in range(1, max_n + 1):
        cand_counts = ngram_counts(candidate, n)
        if not cand_counts:
            stats.append((0, 0))
            continue
        max_ref = Counter()
        for ref in refs:
            for gram, cnt in ngram_counts(ref, n).items():
                if cnt > max_ref[gram]:
                    max_ref[gram] = cnt
        num = sum(min(cnt, max_ref[gram]) for gram, cnt in cand_counts.items())
        stats.append((num, sum(cand_counts.values())))
    return stats


def closest_ref_len(cand_len, ref_lens):
    """Reference length closest to the candidate's; ties go to the shorter."""
    best = None
    for rl in ref_lens:
        key = (abs(rl - cand_len), rl)
        if best is None or key < best:
            best = key
    return best[1]


def _bleu_from_stats(stats, cand_len, ref_len, cfg, orders=None):
    """Apply the BLEU formula to pooled statistics. Returns one score per k."""
    if cand_len == 0:
        return [0.0] * (len(orders) if orders else cfg.n)
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    weights = cfg.weight_vector()
    wanted = orders or range(1, cfg.n + 1)
    out = []
    for k in wanted:
        total = sum(weights[:k])
        log_sum = 0.0
        halvings = 1.0
        for n in range(k):
            num, den = stats[n]
            den = den if den > 0 else 1
            if num == 0:
                if cfg.smoothing == "epsilon":
                    p = cfg.smoothing_epsilon / den
                else:
                    halvings *= 2.0
                    p = 1.0 / (halvings * den)
            else:
                p = num / den
            log_sum += (weights[n] / total) * math.log(p)
        out.append(min(1.0, bp * math.exp(log_sum)))
    return out


def bleu_sentence(candidate, refs, cfg=BleuConfig()):
    """Sentence-level BLEU_1..BLEU_N against one or more references.

    Clipping caps each candidate n-gram's credit at its maximum count across
    references. The brevity penalty compares against the closest reference
    length (ties resolved toward the shorter reference).
    """
    if not refs:
        raise ValueError("BLEU needs at least one reference")
    if not candidate:
        warnings.warn("empty candidate scored as 0", stacklevel=2)
        return [0.0] * cfg.n
    stats = _clipped_stats(candidate, refs, cfg.n)
    ref_len = closest_ref_len(len(candidate), [len(r) for r in refs])
    return _bleu_from_stats(stats, len(candidate), ref_len, cfg)


def bleu_corpus(corpus, cfg=None, scheme="intl-lite"):
    """Corpus-level BLEU: statistics pooled over all items, formula applied once.

    Defaults follow the standardized convention (international tokenization,
    exponential zero-count smoothing). per_caption holds each item's own
    sentence-level score under the same config; the aggregate is the pooled
    corpus score.
    """
    if cfg is None:
        cfg = BleuConfig(smoothing="exp")
    if not corpus.items:
        raise ValueError("corpus is empty")
    pooled = [(0, 0)] * cfg.n
    cand_total = 0
    ref_total = 0
    per_caption = {}
    ref_counts = set()
    for cand, refset in corpus.items:
        cand_toks = tokenize(cand.text, scheme)
        ref_toks = [tokenize(t, scheme) for t in refset.texts()]
        ref_counts.add(len(ref_toks))
        if not cand_toks:
            warnings.warn(f"empty candidate for image {cand.image_id} scored as 0",
                          stacklevel=2)
            per_caption[cand.id] = 0.0
            continue
        stats = _clipped_stats(cand_toks, ref_toks, cfg.n)
        pooled = [(a + n, b + d) for (a, b), (n, d) in zip(pooled, stats)]
        cand_total += len(cand_toks)
        ref_total += closest_ref_len(len(cand_toks), [len(r) for r in ref_toks])
        per_caption[cand.id] = _bleu_from_stats(
            stats, len(cand_toks), closest_ref_len(len(cand_toks), [len(r) for r in ref_toks]),
            cfg, orders=[cfg.n],
        )[0]
    aggregate = _bleu_from_stats(pooled, cand_total, ref_total, cfg, orders=[cfg.n])[0]
    nrefs = str(ref_counts.pop()) if len(ref_counts) == 1 else "mixed"
    sig = cfg.signature(scheme, name="CORPUS-BLEU", nrefs=nrefs)
    return MetricReport("corpus-bleu", sig, per_caption, aggregate)


# ---------------------------------------------------------------------------
# METEOR


def _stage_key_fn(stage, syn):
    if stage == "exact":
        return lambda t: t
    if stage == "stem":
        return porter_stem
    return lambda t: syn.classes_of(t)  # synonym: frozenset of class ids


def _meteor_align(candidate, ref, stages, syn):
    """One-to-one alignment in stage order; returns (matches, chunks).

    Within each stage the match cardinality is the multiset intersection of
    the still-unmatched tokens under that stage's key. Chunk count is then
    minimized exactly over the admissible slot assignments (small search with
    pruning; captions are short).
    """
    active = [s for s in stages if s != "synonym" or syn is not None]
    cand_match_stage = [None] * len(candidate)  # stage index that matched each slot
    ref_consumed = Counter()  # surface -> count consumed by earlier stages
    options = {}  # candidate slot -> list of admissible ref slots
    ref_taken_slots = set()  # only used for synonym-stage bookkeeping

    for stage in active:
        key_of = _stage_key_fn(stage, syn)
        if stage != "synonym":
            # availability per stage key, net of consumption by earlier stages
            avail = Counter()
            for tok, cnt in Counter(ref).items():
                remaining = cnt - ref_consumed[tok]
                if remaining > 0:
                    k = key_of(tok)
                    avail[k] += remaining
            for i, tok in enumerate(candidate):
                if cand_match_stage[i] is not None:
                    continue
                k = key_of(tok)
                if avail[k] > 0:
                    avail[k] -= 1
                    cand_match_stage[i] = stage
            # charge consumption back to surfaces (surface determines key)
            taken = Counter()
            for i, tok in enumerate(candidate):
                if cand_match_stage[i] == stage:
                    taken[key_of(tok)] += 1
            for tok, cnt in Counter(ref).items():
                k = key_of(tok)
                if taken[k] > 0:
                    free = cnt - ref_consumed[tok]
                    use = min(free, taken[k])
                    ref_consumed[tok] += use
                    taken[k] -= use
        else:
            # class-set intersection is not an equality key; consume slots directly
            surf_budget = Counter(ref)
            for tok in surf_budget:
                surf_budget[tok] -= ref_consumed[tok]
            for j, tok in enumerate(ref):
                if surf_budget[tok] > 0:
                    surf_budget[tok] -= 1
                else:
                    ref_taken_slots.add(j)
            free = [j for j in range(len(ref)) if j not in ref_taken_slots]
            for i, tok in enumerate(candidate):
                if cand_match_stage[i] is not None:
                    continue
                classes = syn.classes_of(tok)
                if not classes:
                    continue
                for j in free:
                    if classes & syn.classes_of(ref[j]):
                        cand_match_stage[i] = "synonym"
                        free.remove(j)
                        ref_taken_slots.add(j)
                        options[i] = None  # filled below
                        break

    matched = [i for i in range(len(candidate)) if cand_match_stage[i] is not None]
    if not matched:
        return 0, 0

    # admissible ref slots per matched candidate slot, under its own stage key
    for i in matched:
        stage = cand_match_stage[i]
        key_of = _stage_key_fn(stage, syn)
        if stage == "synonym":
            classes = syn.classes_of(candidate[i])
            opts = [j for j in range(len(ref)) if classes & syn.classes_of(ref[j])]
        else:
            k = key_of(candidate[i])
            opts = [j for j in range(len(ref)) if key_of(ref[j]) == k]
        options[i] = opts

    # exact minimum-chunk assignment: DFS over slots in order, prune on the
    # running chunk count, prefer run-continuing slots so the bound drops fast
    m = len(matched)
    best = [m + 1]
    budget = [200000]

    def dfs(idx, used, prev_slot, chunks):
        if chunks >= best[0] or budget[0] <= 0:
            return
        if idx == m:
            best[0] = chunks
            return
        budget[0] -= 1
        i = matched[idx]
        contiguous = idx > 0 and matched[idx - 1] == i - 1
        opts = options[i]
        if contiguous and prev_slot + 1 in opts and prev_slot + 1 not in used:
            order = [prev_slot + 1] + [j for j in opts if j != prev_slot + 1]
        else:
            order = opts
        for j in order:
            if j in used:
                continue
            run_continues = contiguous and j == prev_slot + 1
            dfs(idx + 1, used | {j}, j, chunks + (0 if run_continues else 1))

    dfs(0, frozenset(), -2, 0)
    chunks = best[0] if best[0] <= m else m
    return m, chunks


def meteor(candidate, refs, cfg=MeteorConfig(), syn=None):
    """Alignment-based score with a fragmentation penalty; best reference wins."""
    if not candidate or not refs or any(not r for r in refs):
        raise ValueError("METEOR needs a non-empty candidate and non-empty references")
    best = 0.0
    for ref in refs:
        matches, chunks = _meteor_align(candidate, ref, cfg.stages, syn)
        if matches == 0:
            continue
        p = matches / len(candidate)
        r = matches / len(ref)
        f_mean = p * r / (cfg.alpha * p + (1.0 - cfg.alpha) * r)
        frag = chunks / matches
        penalty = cfg.gamma * frag**cfg.beta
        best = max(best, (1.0 - penalty) * f_mean)
    return best


# ---------------------------------------------------------------------------
# ROUGE-L


def lcs_length(a, b):
    """Longest common subsequence length, O(len(a)*len(b)) table."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate, refs, cfg=RougeConfig()):
    """LCS F-measure; per-reference scores, maximum returned."""
    if not candidate or not refs or any(not r for r in refs):
        raise ValueError("ROUGE-L needs a non-empty candidate and non-empty references")
    best = 0.0
    for ref in refs:
        lcs = lcs_length(ref, candidate)
        if lcs == 0:
            continue
        r_lcs = lcs / len(ref)
        p_lcs = lcs / len(candidate)
        beta = (p_lcs / r_lcs) if cfg.beta_mode == "ratio" else cfg.beta
        b2 = beta * beta
        f = (1.0 + b2) * r_lcs * p_lcs / (r_lcs + b2 * p_lcs)
        best = max(best, f)
    return best


# ---------------------------------------------------------------------------
# CIDEr


def _cider_prepare(tokens, stem):
    return [porter_stem(t) for t in tokens] if stem else list(tokens)


def cider_build_stats(refsets, scheme="coco-lite", stem=True, max_n=4):
    """Document frequencies: how many images mention each n-gram in any reference."""
    if not refsets:
        raise ValueError("need at least one reference set to build statistics")
    doc_freq = [Counter() for _ in range(max_n)]
    for rs in refsets:
        seen = [set() for _ in range(max_n)]
        for text in rs.texts():
            toks = _cider_prepare(tokenize(text, scheme), stem)
            for n in range(1, max_n + 1):
                seen[n - 1].update(ngram_counts(toks, n))
        for n in range(max_n):
            for gram in seen[n]:
                doc_freq[n][gram] += 1
    return CorpusStats(
        num_images=len(refsets),
        doc_freq=tuple(dict(c) for c in doc_freq),
        stem=stem,
        scheme=scheme,
    )


def _tfidf_vector(tokens, n, stats):
    log_n = math.log(stats.num_images)
    df = stats.doc_freq[n - 1]
    vec = {}
    for gram, tf in ngram_counts(tokens, n).items():
        idf = log_n - math.log(max(1, df.get(gram, 1)))
        vec[gram] = tf * idf
    return vec


def _sparse_cos(a, b):
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(v * b.get(g, 0.0) for g, v in a.items())
    return dot / (na * nb)


def cider_score(candidate, refs, stats, cfg=CiderConfig()):
    """Consensus score: mean TF-IDF cosine against each reference, order-averaged.

    Takes raw-scheme tokens; stemming is applied internally when the stats
    were built with it, so candidate and statistics always agree.
    """
    if not refs:
        raise ValueError("CIDEr needs at least one reference")
    if cfg.n > len(stats.doc_freq):
        raise IntegrityError(
            f"stats hold orders up to {len(stats.doc_freq)}, config wants {cfg.n}"
        )
    cand = _cider_prepare(candidate, stats.stem)
    prepared_refs = [_cider_prepare(r, stats.stem) for r in refs]
    weights = cfg.weight_vector()
    total = 0.0
    for n in range(1, cfg.n + 1):
        cand_vec = _tfidf_vector(cand, n, stats)
        acc = 0.0
        for ref in prepared_refs:
            acc += _sparse_cos(cand_vec, _tfidf_vector(ref, n, stats))
        total += weights[n - 1] * (acc / len(refs))
    return cfg.scale * total

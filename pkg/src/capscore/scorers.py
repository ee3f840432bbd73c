"""Per-caption scorer registry.

Wraps every metric as a uniform closure ``scorer(caption, refset) -> float``
carrying a ``signature`` string, so ranking experiments and the CLI can treat
computed metrics, embedding metrics, and externally produced score files
identically.
"""

import math
from functools import lru_cache

from . import embedding_metrics as em
from . import ngram_metrics as nm
from .errors import IntegrityError
from .signature import build_signature
from .text import tokenize


class CaptionScorer:
    """Callable (caption, refset) -> float with a provenance signature."""

    def __init__(self, name, fn, signature):
        self.name = name
        self.signature = signature
        self._fn = fn

    def __call__(self, caption, refset):
        return self._fn(caption, refset)


@lru_cache(maxsize=None)
def _ref_tokens(refset, scheme):
    return tuple(tuple(tokenize(t, scheme)) for t in refset.texts())


def _cand_tokens(caption, scheme):
    return tokenize(caption.text, scheme)


def _bare_id(qualified: str) -> str:
    # tier runs qualify ids as "<tier>/<id>"; embeddings may be keyed either way
    return qualified.split("/", 1)[1] if "/" in qualified else qualified


def _embedding_key(bundle_ids, caption):
    if caption.id in bundle_ids:
        return caption.id
    bare = _bare_id(caption.id)
    if bare in bundle_ids:
        return bare
    raise IntegrityError(f"no embedding for caption id {caption.id!r}")


def build_idf_weights(token_lists):
    """Smoothed inverse document frequency over reference token surfaces."""
    token_lists = [list(t) for t in token_lists]
    n = len(token_lists)
    if n == 0:
        raise ValueError("need at least one reference token list")
    df = {}
    for toks in token_lists:
        for tok in set(toks):
            df[tok] = df.get(tok, 0) + 1
    return {tok: math.log((n + 1) / (d + 1)) for tok, d in df.items()}


def _make_bleu(order, scheme, params):
    cfg = nm.BleuConfig(
        n=order,
        smoothing=params.get("smoothing", "epsilon"),
        smoothing_epsilon=params.get("eps", 1e-15),
    )

    def fn(caption, refset):
        cand = _cand_tokens(caption, scheme)
        if not cand:
            return 0.0
        return nm.bleu_sentence(cand, _ref_tokens(refset, scheme), cfg)[-1]

    return CaptionScorer(f"bleu-{order}", fn, cfg.signature(scheme))


def _make_corpus_bleu(scheme, params):
    # the standardized corpus convention: international tokens, exp smoothing
    scheme = params.get("scheme", "intl-lite")
    cfg = nm.BleuConfig(n=params.get("n", 4), smoothing="exp")

    def fn(caption, refset):
        cand = _cand_tokens(caption, scheme)
        if not cand:
            return 0.0
        return nm.bleu_sentence(cand, _ref_tokens(refset, scheme), cfg)[-1]

    return CaptionScorer("corpus-bleu", fn, cfg.signature(scheme, name="CORPUS-BLEU"))


def _make_meteor(scheme, params, syn):
    cfg = nm.MeteorConfig(
        alpha=params.get("alpha", 0.85),
        beta=params.get("beta", 0.2),
        gamma=params.get("gamma", 0.6),
    )

    def fn(caption, refset):
        cand = _cand_tokens(caption, scheme)
        if not cand:
            return 0.0
        return nm.meteor(cand, _ref_tokens(refset, scheme), cfg, syn)

    return CaptionScorer("meteor", fn, cfg.signature(scheme, syn=syn))


def _make_rouge(scheme, params):
    cfg = nm.RougeConfig(
        beta_mode=params.get("beta_mode", "fixed"),
        beta=params.get("beta", 1.2),
    )

    def fn(caption, refset):
        cand = _cand_tokens(caption, scheme)
        if not cand:
            return 0.0
        return nm.rouge_l(cand, _ref_tokens(refset, scheme), cfg)

    return CaptionScorer("rouge-l", fn, cfg.signature(scheme))


def _make_cider(scheme, params, refsets):
    if refsets is None:
        raise ValueError("cider needs the reference corpus to build statistics")
    cfg = nm.CiderConfig(n=params.get("n", 4))
    stats = nm.cider_build_stats(
        refsets, scheme=scheme, stem=params.get("stem", True), max_n=cfg.n
    )

    def fn(caption, refset):
        cand = _cand_tokens(caption, scheme)
        if not cand:
            return 0.0
        return nm.cider_score(cand, _ref_tokens(refset, scheme), stats, cfg)

    return CaptionScorer("cider", fn, cfg.signature(scheme))


def _make_bertscore(params, bundle, idf_weights):
    if bundle is None:
        raise ValueError("bertscore needs an embedding bundle")
    use_idf = bool(params.get("idf", False))
    weights = idf_weights if use_idf else None
    if use_idf and idf_weights is None:
        raise ValueError("idf weighting requested but no weights supplied")

    def fn(caption, refset):
        cid = _embedding_key(bundle.token_vectors, caption)
        ref_ids = [_embedding_key(bundle.token_vectors, rc) for rc in refset.captions]
        return em.bertscore(cid, ref_ids, bundle, idf_weights=weights)[2]

    sig = build_signature("BERTSCORE", "ext", idf=use_idf, var="f1")
    return CaptionScorer("bertscore", fn, sig)


def _make_clipscore(params, bundle, with_refs):
    if bundle is None:
        raise ValueError("clipscore needs an embedding bundle")
    w = float(params.get("w", 1.0))

    def fn(caption, refset):
        cid = _embedding_key(bundle.sentence_vectors, caption)
        if with_refs:
            ref_ids = [
                _embedding_key(bundle.sentence_vectors, rc) for rc in refset.captions
            ]
            return em.clipscore_ref(caption.image_id, cid, ref_ids, bundle, w=w)
        return em.clipscore(caption.image_id, cid, bundle, w=w)

    name = "clipscore-ref" if with_refs else "clipscore"
    sig = build_signature(name.upper(), "ext", w=w)
    return CaptionScorer(name, fn, sig)


def make_external_scorer(name, scores, source="external"):
    """Adapter over an id -> score mapping produced by an outside tool."""

    def fn(caption, refset):
        if caption.id in scores:
            return scores[caption.id]
        bare = _bare_id(caption.id)
        if bare in scores:
            return scores[bare]
        raise IntegrityError(f"external metric {name!r} has no score for {caption.id!r}")

    sig = build_signature(f"EXTERNAL-{name.upper()}", "ext", src=source)
    return CaptionScorer(name, fn, sig)


COMPUTED_METRICS = (
    "bleu-1", "bleu-2", "bleu-3", "bleu-4", "corpus-bleu",
    "meteor", "rouge-l", "cider",
    "bertscore", "clipscore", "clipscore-ref",
)


def make_scorer(name, scheme="coco-lite", params=None, *, refsets=None,
                bundle=None, syn=None, idf_weights=None) -> CaptionScorer:
    params = dict(params or {})
    if name.startswith("bleu-"):
        try:
            order = int(name.split("-", 1)[1])
        except ValueError:
            raise ValueError(f"unknown metric {name!r}") from None
        if not 1 <= order <= 9:
            raise ValueError(f"BLEU order out of range in {name!r}")
        return _make_bleu(order, scheme, params)
    if name == "corpus-bleu":
        return _make_corpus_bleu(scheme, params)
    if name == "meteor":
        return _make_meteor(scheme, params, syn)
    if name == "rouge-l":
        return _make_rouge(scheme, params)
    if name == "cider":
        return _make_cider(scheme, params, refsets)
    if name == "bertscore":
        return _make_bertscore(params, bundle, idf_weights)
    if name == "clipscore":
        return _make_clipscore(params, bundle, with_refs=False)
    if name == "clipscore-ref":
        return _make_clipscore(params, bundle, with_refs=True)
    raise ValueError(f"unknown metric {name!r}")

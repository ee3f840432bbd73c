"""Cosine-similarity scoring over externally produced embeddings.

Embeddings always arrive from files (see load_embeddings); nothing here runs a
model. That keeps the scoring core deterministic and lets model-dependent
numbers live entirely in exported fixtures.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, IntegrityError


@dataclass(frozen=True)
class EmbeddingBundle:
    dim: int
    tokens: dict        # caption id -> list of token strings
    token_vectors: dict  # caption id -> (num_tokens, dim) array
    sentence_vectors: dict  # caption id -> (dim,) array
    image_vectors: dict  # image id (string) -> (dim,) array

    def require_caption(self, cid):
        if cid not in self.token_vectors:
            raise IntegrityError(f"no caption embedding for id {cid!r}")

    def require_sentence(self, cid):
        if cid not in self.sentence_vectors:
            raise IntegrityError(f"no sentence embedding for id {cid!r}")

    def require_image(self, iid):
        if str(iid) not in self.image_vectors:
            raise IntegrityError(f"no image embedding for id {iid!r}")


@dataclass(frozen=True)
class SimilarityMatrix:
    rows: tuple  # candidate token labels
    cols: tuple  # reference token labels
    values: np.ndarray


def cosine(a, b) -> float:
    """Cosine similarity; zero-magnitude operands give 0 by definition."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _unit_rows(mat):
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return mat / safe


def similarity_matrix(cand_labeled, ref_labeled) -> SimilarityMatrix:
    """All-pairs cosine grid between two labeled vector lists."""
    if not cand_labeled or not ref_labeled:
        raise ValueError("similarity matrix needs non-empty token lists")
    rows = tuple(label for label, _ in cand_labeled)
    cols = tuple(label for label, _ in ref_labeled)
    a = np.asarray([v for _, v in cand_labeled], dtype=float)
    b = np.asarray([v for _, v in ref_labeled], dtype=float)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    values = np.clip(_unit_rows(a) @ _unit_rows(b).T, -1.0, 1.0)
    return SimilarityMatrix(rows=rows, cols=cols, values=values)


def _weights_for(tokens, idf_weights):
    if idf_weights is None:
        return np.ones(len(tokens))
    return np.asarray([float(idf_weights.get(t, 1.0)) for t in tokens])


def _greedy_pr(cand_mat, ref_mat, cand_w, ref_w):
    sims = np.clip(_unit_rows(cand_mat) @ _unit_rows(ref_mat).T, -1.0, 1.0)
    # rows or columns of all-zero vectors produce 0 similarity already
    p_terms = sims.max(axis=1)
    r_terms = sims.max(axis=0)
    pw = cand_w.sum()
    rw = ref_w.sum()
    p = float((p_terms * cand_w).sum() / pw) if pw > 0 else 0.0
    r = float((r_terms * ref_w).sum() / rw) if rw > 0 else 0.0
    return p, r


def _f1(p, r):
    # the harmonic mean is only meaningful for positive operands; anything
    # else collapses to 0, which also keeps every output in [-1, 1]
    if p > 0.0 and r > 0.0:
        return 2.0 * p * r / (p + r)
    return 0.0


def bertscore(candidate_id, ref_ids, bundle, idf_weights=None):
    """Greedy token matching: per-reference (P, R, F1), best reference returned."""
    bundle.require_caption(candidate_id)
    if not ref_ids:
        raise ValueError("bertscore needs at least one reference id")
    cand_mat = bundle.token_vectors[candidate_id]
    cand_w = _weights_for(bundle.tokens[candidate_id], idf_weights)
    best = None
    for rid in ref_ids:
        bundle.require_caption(rid)
        ref_mat = bundle.token_vectors[rid]
        ref_w = _weights_for(bundle.tokens[rid], idf_weights)
        p, r = _greedy_pr(cand_mat, ref_mat, cand_w, ref_w)
        f1 = _f1(p, r)
        if best is None or f1 > best[2]:
            best = (p, r, f1)
    return best


def clipscore(image_id, candidate_id, bundle, w=1.0):
    """Referenceless: scaled, zero-clamped cosine between image and sentence."""
    bundle.require_image(image_id)
    bundle.require_sentence(candidate_id)
    sim = cosine(bundle.image_vectors[str(image_id)], bundle.sentence_vectors[candidate_id])
    return w * max(sim, 0.0)


def clipscore_ref(image_id, candidate_id, ref_ids, bundle, w=1.0):
    """Harmonic mean of the referenceless score and the best reference cosine."""
    if not ref_ids:
        raise ValueError("clipscore_ref needs at least one reference id")
    base = clipscore(image_id, candidate_id, bundle, w=w)
    cand_vec = bundle.sentence_vectors[candidate_id]
    ref_term = 0.0
    for rid in ref_ids:
        bundle.require_sentence(rid)
        ref_term = max(ref_term, max(cosine(cand_vec, bundle.sentence_vectors[rid]), 0.0))
    if base == 0.0 or ref_term == 0.0:
        return 0.0
    return 2.0 * base * ref_term / (base + ref_term)


def _check_vector(vec, dim, where):
    arr = np.asarray(vec, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise FormatError(f"{where}: expected a {dim}-dimensional vector")
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{where}: non-finite component")
    return arr


def load_embeddings(path) -> EmbeddingBundle:
    """Parse the line-delimited embedding format (header, then records)."""
    tokens = {}
    token_vectors = {}
    sentence_vectors = {}
    image_vectors = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: bad record: {exc.msg}") from exc
            if dim is None:
                if not isinstance(rec, dict) or not isinstance(rec.get("dim"), int) \
                        or rec["dim"] < 1:
                    raise FormatError(f"{path}:{lineno}: first record must be a dim header")
                dim = rec["dim"]
                continue
            kind = rec.get("kind")
            where = f"{path}:{lineno}"
            if kind == "caption":
                cid = rec.get("id")
                toks = rec.get("tokens")
                if not isinstance(cid, str) or not isinstance(toks, list) or not toks:
                    raise FormatError(f"{where}: caption record needs id and tokens")
                if cid in token_vectors:
                    raise IntegrityError(f"{where}: duplicate caption id {cid!r}")
                tvs = rec.get("token_vectors")
                if not isinstance(tvs, list) or len(tvs) != len(toks):
                    raise FormatError(
                        f"{where}: caption {cid!r} needs one token vector per token"
                    )
                mat = np.asarray(
                    [_check_vector(v, dim, f"{where} token {i}") for i, v in enumerate(tvs)]
                )
                tokens[cid] = [str(t) for t in toks]
                token_vectors[cid] = mat
                sentence_vectors[cid] = _check_vector(
                    rec.get("sentence_vector"), dim, f"{where} sentence vector"
                )
            elif kind == "image":
                iid = rec.get("id")
                if not isinstance(iid, str):
                    raise FormatError(f"{where}: image record needs a string id")
                if iid in image_vectors:
                    raise IntegrityError(f"{where}: duplicate image id {iid!r}")
                image_vectors[iid] = _check_vector(rec.get("vector"), dim, where)
            else:
                raise FormatError(f"{where}: unknown record kind {kind!r}")
    if dim is None:
        raise FormatError(f"{path}: empty embedding file")
    return EmbeddingBundle(
        dim=dim,
        tokens=tokens,
        token_vectors=token_vectors,
        sentence_vectors=sentence_vectors,
        image_vectors=image_vectors,
    )

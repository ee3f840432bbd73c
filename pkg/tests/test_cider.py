"""Consensus TF-IDF scoring checked against an independent small-corpus oracle."""

import math
import random

import pytest
from hypothesis import given, strategies as st

from capscore.corpus import Caption, ReferenceSet
from capscore.errors import IntegrityError
from capscore.ngram_metrics import CiderConfig, cider_build_stats, cider_score


def _refsets(image_refs):
    """image_refs: list (per image) of lists of caption texts."""
    out = []
    for i, texts in enumerate(image_refs):
        caps = tuple(
            Caption(id=f"{i}-{j}", image_id=i, text=t) for j, t in enumerate(texts)
        )
        out.append(ReferenceSet(image_id=i, captions=caps))
    return out


def oracle_cider(cand, refs, all_image_token_refs, n_max=4, scale=10.0):
    """From-scratch TF-IDF consensus score over pre-tokenized inputs."""
    num_images = len(all_image_token_refs)
    total = 0.0
    for n in range(1, n_max + 1):
        df = {}
        for image_refs in all_image_token_refs:
            grams = set()
            for r in image_refs:
                grams.update(tuple(r[i:i + n]) for i in range(len(r) - n + 1))
            for g in grams:
                df[g] = df.get(g, 0) + 1

        def vec(toks):
            tf = {}
            for i in range(len(toks) - n + 1):
                g = tuple(toks[i:i + n])
                tf[g] = tf.get(g, 0) + 1
            return {g: c * math.log(num_images / max(1.0, df.get(g, 0)))
                    for g, c in tf.items()}

        cv = vec(cand)
        ncv = math.sqrt(sum(v * v for v in cv.values()))
        acc = 0.0
        for ref in refs:
            rv = vec(ref)
            nrv = math.sqrt(sum(v * v for v in rv.values()))
            if ncv > 0 and nrv > 0:
                acc += sum(v * rv.get(g, 0.0) for g, v in cv.items()) / (ncv * nrv)
        total += (acc / len(refs)) / n_max
    return scale * total


def test_doc_freq_counts_images_not_captions():
    refsets = _refsets([
        ["a dog runs", "a dog sits"],  # "dog" twice in one image: df 1
        ["a cat sits"],
    ])
    stats = cider_build_stats(refsets, stem=False)
    assert stats.num_images == 2
    assert stats.doc_freq[0][("dog",)] == 1
    assert stats.doc_freq[0][("a",)] == 2
    assert stats.doc_freq[0][("sits",)] == 2


def test_no_overlap_scores_zero():
    refsets = _refsets([["a dog runs"], ["a cat sits"]])
    stats = cider_build_stats(refsets, stem=False)
    assert cider_score(["purple", "elephant"], [["a", "dog", "runs"]], stats) == 0.0


def test_distinctive_match_scores_high():
    refsets = _refsets([
        ["a spotted dog runs fast today", "a spotted dog runs quickly today"],
        ["a cat sits on the mat", "a cat rests on the mat"],
        ["a man rides a blue bike", "a man rides a bicycle"],
    ])
    stats = cider_build_stats(refsets, stem=False)
    refs = [["a", "spotted", "dog", "runs", "fast", "today"],
            ["a", "spotted", "dog", "runs", "quickly", "today"]]
    matching = cider_score(["a", "spotted", "dog", "runs", "fast", "today"], refs, stats)
    unrelated = cider_score(["a", "cat", "sits", "on", "the", "mat"], refs, stats)
    assert matching > unrelated
    assert matching > 1.0


def test_common_words_carry_no_weight():
    # "a" appears in every image: idf = log(N/N) = 0
    refsets = _refsets([["a dog"], ["a cat"], ["a man"]])
    stats = cider_build_stats(refsets, stem=False)
    assert cider_score(["a"], [["a", "dog"]], stats) == 0.0


def test_matches_independent_oracle():
    rng = random.Random(99)
    vocab = ["dog", "cat", "man", "runs", "sits", "park", "red", "big"]
    for _ in range(20):
        image_texts = []
        for _ in range(3):
            refs = [" ".join(rng.choice(vocab) for _ in range(rng.randint(4, 7)))
                    for _ in range(rng.randint(2, 3))]
            image_texts.append(refs)
        refsets = _refsets(image_texts)
        stats = cider_build_stats(refsets, stem=False)
        token_refs = [[t.split() for t in texts] for texts in image_texts]
        target_image = rng.randrange(3)
        cand = [rng.choice(vocab) for _ in range(rng.randint(4, 7))]
        got = cider_score(cand, token_refs[target_image], stats)
        want = oracle_cider(cand, token_refs[target_image], token_refs)
        assert got == pytest.approx(want, abs=1e-9)


def test_stemming_merges_inflections():
    refsets = _refsets([["a dog running today", "a dog walked today"],
                        ["a cat sleeping now", "a cat sat now"]])
    stemmed = cider_build_stats(refsets, stem=True)
    plain = cider_build_stats(refsets, stem=False)
    got = cider_score(["a", "dog", "runs", "today"],
                      [["a", "dog", "running", "today"]], stemmed)
    flat = cider_score(["a", "dog", "runs", "today"],
                       [["a", "dog", "running", "today"]], plain)
    assert got > flat  # runs/running unify only under stemming


def test_order_mismatch_rejected():
    refsets = _refsets([["a dog"], ["a cat"]])
    stats = cider_build_stats(refsets, stem=False, max_n=2)
    with pytest.raises(IntegrityError):
        cider_score(["a"], [["a"]], stats, CiderConfig(n=4))


def test_empty_refs_rejected():
    refsets = _refsets([["a dog"], ["a cat"]])
    stats = cider_build_stats(refsets, stem=False)
    with pytest.raises(ValueError):
        cider_score(["a"], [], stats)


def test_signature_string():
    assert CiderConfig().signature("coco-lite") == \
        "CIDER|tok:coco-lite|idf:corpus|n:4|scale:10|stem:on|w:uniform|v:0.1.0"


@given(st.lists(st.sampled_from(["dog", "cat", "man", "runs"]), min_size=1, max_size=8))
def test_score_bounded_by_scale(cand):
    refsets = _refsets([["dog runs", "dog sits"], ["cat runs", "man sits"]])
    stats = cider_build_stats(refsets, stem=False)
    score = cider_score(list(cand), [["dog", "runs"], ["dog", "sits"]], stats)
    assert 0.0 <= score <= 10.0 + 1e-9


def test_df_never_exceeds_image_count(synth_annotations):
    from capscore.corpus import load_coco_annotations

    refsets = load_coco_annotations(synth_annotations)
    stats = cider_build_stats(refsets)
    for order_df in stats.doc_freq:
        assert all(0 < df <= stats.num_images for df in order_df.values())

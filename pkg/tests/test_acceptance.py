"""Acceptance gate: every frozen behavioural target at its stated tolerance.

Each test asserts one frozen target and prints one pass/fail line. Tests
that need the 5,000-image validation annotations skip unless the file is
available (CAPSCORE_VAL2017 env var, or data/captions_val2017.json under the
repo root); their assertions are complete and run unchanged once the data is
present. Embedding targets additionally need externally produced vectors
(CAPSCORE_EMBEDDINGS_DIR, see test docstrings for the expected file names).
"""

import json
import math
import os
import random
import time

import pytest

from test_cider import _refsets as cider_refsets
from test_cider import oracle_cider
from test_rouge import _brute_force_lcs

from capscore.cli import main as cli_main
from capscore.corpus import Caption, load_coco_annotations, split_references
from capscore.embedding_metrics import (
    EmbeddingBundle,
    bertscore,
    clipscore,
    clipscore_ref,
    cosine,
    load_embeddings,
)
from capscore.ngram_metrics import (
    BleuConfig,
    _clipped_stats,
    bleu_sentence,
    cider_build_stats,
    cider_score,
    lcs_length,
    meteor,
    rouge_l,
)
from capscore.perturb import PerturbationSpec, build_bag, generate_tier
from capscore.rankeval import (
    Tier,
    run_model_vs_human,
    run_tier_experiment,
    spearman,
)
from capscore.scorers import make_scorer
from capscore.text import ngram_counts, tokenize
from capscore.cli import FIXTURE_CANDIDATE, FIXTURE_REFERENCES

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
_DEFAULT_VAL = os.path.join(_ROOT, "data", "captions_val2017.json")
VAL2017 = os.environ.get("CAPSCORE_VAL2017") or (
    _DEFAULT_VAL if os.path.exists(_DEFAULT_VAL) else None
)
EMB_DIR = os.environ.get("CAPSCORE_EMBEDDINGS_DIR")

needs_val2017 = pytest.mark.skipif(
    VAL2017 is None,
    reason="needs 5,000-image validation annotations: set CAPSCORE_VAL2017 "
           "or place captions_val2017.json under data/",
)
needs_embeddings = pytest.mark.skipif(
    EMB_DIR is None,
    reason="needs externally exported embedding files: set CAPSCORE_EMBEDDINGS_DIR",
)

ALL_METRICS = "bleu-1,bleu-2,bleu-3,bleu-4,corpus-bleu,meteor,rouge-l,cider"


# ---------------------------------------------------------------------------
# worked one-image example, coco-lite scheme


@pytest.fixture(scope="module")
def worked_example():
    t0 = time.monotonic()
    cand = tokenize(FIXTURE_CANDIDATE, "coco-lite")
    refs = [tokenize(t, "coco-lite") for t in FIXTURE_REFERENCES]
    scores = dict(zip(("bleu-1", "bleu-2", "bleu-3", "bleu-4"),
                      bleu_sentence(cand, refs)))
    scores["meteor"] = meteor(cand, refs)
    scores["rouge-l"] = rouge_l(cand, refs)
    intl_cand = tokenize(FIXTURE_CANDIDATE, "intl-lite")
    intl_refs = [tokenize(t, "intl-lite") for t in FIXTURE_REFERENCES]
    from capscore.ngram_metrics import _bleu_from_stats, closest_ref_len

    stats = _clipped_stats(intl_cand, intl_refs, 4)
    scores["corpus-bleu"] = _bleu_from_stats(
        stats, len(intl_cand),
        closest_ref_len(len(intl_cand), [len(r) for r in intl_refs]),
        BleuConfig(smoothing="exp"))[-1]
    scores["_elapsed"] = time.monotonic() - t0
    return scores


@pytest.mark.parametrize("name,target,tol", [
    ("bleu-1", 0.7273, 0.01),
    ("bleu-2", 0.3814, 0.01),
    ("bleu-3", 0.2528, 0.015),
    ("meteor", 0.2157, 0.05),
    ("rouge-l", 0.4485, 0.02),
    ("corpus-bleu", 0.1659, 0.02),
])
def test_worked_example_value(worked_example, name, target, tol):
    assert worked_example[name] == pytest.approx(target, abs=tol)


def test_worked_example_bleu4_vanishes(worked_example):
    assert worked_example["bleu-4"] <= 0.001


def test_worked_example_runtime_under_one_second(worked_example):
    assert worked_example["_elapsed"] < 1.0


# ---------------------------------------------------------------------------
# full-scale tier experiments (skipped without the validation annotations)


def _run_pipeline(mode, fractions, out_root):
    tiers = os.path.join(out_root, "tiers")
    rank = os.path.join(out_root, "rank")
    t0 = time.monotonic()
    assert cli_main(["perturb", "--annotations", VAL2017, "--mode", mode,
                     "--fraction", fractions, "--seed", "13",
                     "--out", tiers]) == 0
    assert cli_main(["rank-eval", "--tiers", tiers, "--metrics", ALL_METRICS,
                     "--out", rank]) == 0
    elapsed = time.monotonic() - t0
    with open(os.path.join(rank, "summary.json"), encoding="utf-8") as fh:
        rows = json.load(fh)["rows"]
    return {r["metric"]: r["rho"] for r in rows}, elapsed, tiers


@pytest.fixture(scope="module")
def replacing_run(tmp_path_factory):
    return _run_pipeline("replace", "0.25,0.5",
                         str(tmp_path_factory.mktemp("replacing")))


@pytest.fixture(scope="module")
def shuffling_run(tmp_path_factory):
    return _run_pipeline("shuffle", "0.25,0.5,1.0",
                         str(tmp_path_factory.mktemp("shuffling")))


@needs_val2017
@pytest.mark.parametrize("name,target", [
    ("bleu-1", 0.6408), ("bleu-2", 0.5559), ("bleu-3", 0.3302),
    ("bleu-4", 0.1290), ("corpus-bleu", 0.5606), ("meteor", 0.5755),
    ("rouge-l", 0.5708), ("cider", 0.7083),
])
def test_replacing_correlation(replacing_run, name, target):
    rhos, _, _ = replacing_run
    assert rhos[name] == pytest.approx(target, abs=0.08)


@needs_val2017
def test_replacing_bleu_order_is_strict(replacing_run):
    rhos, _, _ = replacing_run
    assert rhos["bleu-1"] > rhos["bleu-2"] > rhos["bleu-3"] > rhos["bleu-4"]


@needs_val2017
def test_replacing_consensus_metric_ranks_highest(replacing_run):
    rhos, _, _ = replacing_run
    assert rhos["cider"] == max(rhos.values())


@needs_val2017
def test_replacing_runtime_under_ten_minutes(replacing_run):
    _, elapsed, _ = replacing_run
    assert elapsed < 600.0


@needs_val2017
def test_shuffling_unigram_metric_is_blind(shuffling_run):
    rhos, _, _ = shuffling_run
    assert abs(rhos["bleu-1"]) <= 0.10


@needs_val2017
@pytest.mark.parametrize("name,target", [
    ("bleu-2", 0.3801), ("bleu-3", 0.3383), ("bleu-4", 0.1347),
    ("corpus-bleu", 0.4741),
])
def test_shuffling_correlation(shuffling_run, name, target):
    rhos, _, _ = shuffling_run
    assert rhos[name] == pytest.approx(target, abs=0.08)


@needs_val2017
def test_shuffling_bleu_order(shuffling_run):
    rhos, _, _ = shuffling_run
    assert rhos["bleu-2"] > rhos["bleu-3"] > rhos["bleu-4"]


@needs_val2017
@pytest.mark.parametrize("name", ["meteor", "rouge-l", "cider"])
def test_shuffling_order_sensitive_metrics_stay_low(shuffling_run, name):
    rhos, _, _ = shuffling_run
    assert rhos[name] < 0.30


def _per_caption_bleu1(tier_dir, tier_file, refmap):
    scorer = make_scorer("bleu-1")
    with open(os.path.join(tier_dir, tier_file), encoding="utf-8") as fh:
        rows = json.load(fh)
    out = {}
    for row in rows:
        cap = Caption(id=str(row["image_id"]), image_id=row["image_id"],
                      text=row["caption"])
        out[cap.id] = scorer(cap, refmap[cap.image_id])
    return out


@needs_val2017
def test_shuffling_keeps_per_caption_bleu1_bit_identical(shuffling_run):
    _, _, tier_dir = shuffling_run
    refmap = {rs.image_id: rs
              for rs in load_coco_annotations(os.path.join(tier_dir, "references.json"))}
    files = ["tier_ShuffleAll.json", "tier_Shuffle50.json", "tier_Shuffle25.json"]
    base = _per_caption_bleu1(tier_dir, files[0], refmap)
    for other in files[1:]:
        assert _per_caption_bleu1(tier_dir, other, refmap) == base


@needs_val2017
def test_bag_size_matches_reference_vocabulary(tmp_path):
    refsets = load_coco_annotations(VAL2017)
    split = split_references(refsets)
    bag = build_bag(split.reference_sets, "coco-lite", min_count=4)
    assert len(bag.words) == pytest.approx(1039, abs=1039 * 0.10)


# ---------------------------------------------------------------------------
# offline property suites (no large data, no embeddings, no network)


def test_rouge_lcs_matches_exhaustive_oracle():
    rng = random.Random(11)
    for _ in range(1000):
        a = [rng.choice("abcd") for _ in range(rng.randint(0, 8))]
        b = [rng.choice("abcd") for _ in range(rng.randint(0, 8))]
        assert lcs_length(a, b) == _brute_force_lcs(a, b)


def test_bleu_clipping_matches_hand_count():
    rng = random.Random(17)
    for _ in range(100):
        cand = [rng.choice("abc") for _ in range(rng.randint(1, 6))]
        refs = [[rng.choice("abc") for _ in range(rng.randint(1, 6))]
                for _ in range(rng.randint(1, 3))]
        stats = _clipped_stats(cand, refs, 2)
        for n in (1, 2):
            counts = ngram_counts(cand, n)
            want = sum(min(c, max((ngram_counts(r, n).get(g, 0) for r in refs),
                                  default=0))
                       for g, c in counts.items())
            assert stats[n - 1] == (want, sum(counts.values()))


def test_cider_matches_independent_tfidf_script():
    rng = random.Random(23)
    vocab = ["dog", "cat", "man", "runs", "sits", "park", "red", "big"]
    for _ in range(20):
        image_texts = [[" ".join(rng.choice(vocab) for _ in range(rng.randint(4, 7)))
                        for _ in range(rng.randint(2, 3))]
                       for _ in range(3)]
        stats = cider_build_stats(cider_refsets(image_texts), stem=False)
        token_refs = [[t.split() for t in texts] for texts in image_texts]
        cand = [rng.choice(vocab) for _ in range(rng.randint(4, 7))]
        got = cider_score(cand, token_refs[0], stats)
        want = oracle_cider(cand, token_refs[0], token_refs)
        assert abs(got - want) < 1e-9


def test_spearman_reference_points():
    assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    assert spearman([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)


def test_greedy_matching_matches_exhaustive_oracle():
    rng = random.Random(29)
    for _ in range(100):
        dim = rng.randint(2, 4)
        nc, nr = rng.randint(1, 5), rng.randint(1, 5)
        cmat = [[rng.uniform(-1, 1) for _ in range(dim)] for _ in range(nc)]
        rmat = [[rng.uniform(-1, 1) for _ in range(dim)] for _ in range(nr)]
        bundle = EmbeddingBundle(
            dim=dim,
            tokens={"c": [f"c{i}" for i in range(nc)],
                    "r": [f"r{j}" for j in range(nr)]},
            token_vectors={"c": cmat, "r": rmat},
            sentence_vectors={"c": [1.0] * dim, "r": [1.0] * dim},
            image_vectors={},
        )
        p, r, _ = bertscore("c", ["r"], bundle)
        assert p == pytest.approx(
            sum(max(cosine(cv, rv) for rv in rmat) for cv in cmat) / nc, abs=1e-9)
        assert r == pytest.approx(
            sum(max(cosine(rv, cv) for cv in cmat) for rv in rmat) / nr, abs=1e-9)


def test_harmonic_mean_and_clamping_bounds():
    rng = random.Random(31)
    # weighted harmonic combination stays inside [min, max] of its inputs
    for _ in range(200):
        cand = [rng.choice("abcde") for _ in range(rng.randint(1, 6))]
        ref = [rng.choice("abcde") for _ in range(rng.randint(1, 6))]
        if not set(cand) & set(ref):
            continue
        inter = sum(min(cand.count(t), ref.count(t)) for t in set(cand))
        p, r = inter / len(cand), inter / len(ref)
        score = meteor(cand, [ref])
        f_mean = p * r / (0.85 * p + 0.15 * r)
        assert min(p, r) - 1e-12 <= f_mean <= max(p, r) + 1e-12
        assert 0.0 <= score <= 1.0

    # anti-aligned image and caption vectors clamp to zero, never negative
    bundle = EmbeddingBundle(
        dim=2, tokens={}, token_vectors={},
        sentence_vectors={"c": [1.0, 0.0], "r": [0.0, 1.0]},
        image_vectors={"9": [-1.0, 0.0]},
    )
    assert clipscore("9", "c", bundle) == 0.0
    assert clipscore_ref("9", "c", ["r"], bundle) == 0.0
    bundle.image_vectors["9"] = [1.0, 0.0]
    both = clipscore_ref("9", "c", ["r"], bundle)
    assert both == 0.0  # harmonic mean vanishes when either side is zero


def test_seeded_perturbations_are_deterministic():
    cands = [Caption(id=str(i), image_id=i, text=f"token{i} alpha beta gamma delta")
             for i in range(12)]
    bag = build_bag(cider_refsets([["a dog runs fast", "a dog sits down"],
                                   ["a cat naps here", "a cat naps there"]]),
                    min_count=1)
    for kind in ("replace", "shuffle", "random"):
        spec = PerturbationSpec(kind=kind, fraction=1.0, master_seed=99)
        first = [c.text for c in generate_tier(spec, cands, bag=bag)]
        again = [c.text for c in generate_tier(spec, cands, bag=bag)]
        assert first == again


def test_constant_metric_yields_zero_correlation():
    def caps():
        return tuple(Caption(id=str(i), image_id=i, text="a b c") for i in range(10))

    tiers = [Tier("Low", 1, caps()), Tier("High", 2, caps())]
    refmap = {rs.image_id: rs for rs in cider_refsets([["a b c"]] * 10)}

    def constant(caption, refset):
        return 0.7

    result = run_tier_experiment(tiers, refmap, constant, tie_mode="fractional")
    assert result.rho == 0.0


def test_model_vs_human_report_shape(synth_annotations, tmp_path):
    refsets = load_coco_annotations(synth_annotations)
    split = split_references(refsets)
    model = generate_tier(PerturbationSpec("shuffle", 1.0, 3), split.candidates)
    human = [Caption(id=str(c.image_id), image_id=c.image_id, text=c.text)
             for c in split.candidates]
    refmap = {rs.image_id: rs for rs in split.reference_sets}
    result = run_model_vs_human(model, human, refmap, make_scorer("bleu-2"), bins=10)
    assert result.tier_names == ("Model", "Human")
    assert -1.0 <= result.rho <= 1.0
    assert set(result.histograms) == {"Model", "Human"}
    assert sum(result.histograms["Model"]) == len(model)
    assert len(result.bin_edges) == 10


# ---------------------------------------------------------------------------
# embedding-metric targets (need externally produced vectors)


@needs_embeddings
def test_embedding_worked_example_values():
    """Expects fixture_text.jsonl / fixture_clip.jsonl in CAPSCORE_EMBEDDINGS_DIR.

    fixture_text.jsonl: token vectors for candidate id "544" and reference ids
    "1".."5". fixture_clip.jsonl: sentence vectors for the same ids plus an
    image vector "544". Targets move with the encoder checkpoint.
    """
    text = load_embeddings(os.path.join(EMB_DIR, "fixture_text.jsonl"))
    clip = load_embeddings(os.path.join(EMB_DIR, "fixture_clip.jsonl"))
    ref_ids = [str(i) for i in range(1, 6)]
    _, _, f1 = bertscore("544", ref_ids, text)
    assert f1 == pytest.approx(0.9434, abs=0.03)
    assert clipscore("544", "544", clip, w=2.5) == pytest.approx(0.7762, abs=0.03)
    assert clipscore_ref("544", "544", ref_ids, clip, w=2.5) == pytest.approx(
        0.8387, abs=0.03)


@needs_val2017
@needs_embeddings
def test_embedding_rank_correlations(tmp_path_factory):
    """Expects replace_text.jsonl / shuffle_text.jsonl (token vectors) and
    replace_clip.jsonl (sentence and image vectors), all with tier captions
    under qualified ids "<Tier>/<image_id>", exported from the tier
    directories produced by `capscore perturb --seed 13`.
    """
    rep_dir = str(tmp_path_factory.mktemp("emb_replace"))
    shuf_dir = str(tmp_path_factory.mktemp("emb_shuffle"))
    assert cli_main(["perturb", "--annotations", VAL2017, "--mode", "replace",
                     "--fraction", "0.25,0.5", "--seed", "13",
                     "--out", rep_dir]) == 0
    assert cli_main(["perturb", "--annotations", VAL2017, "--mode", "shuffle",
                     "--fraction", "0.25,0.5,1.0", "--seed", "13",
                     "--out", shuf_dir]) == 0

    def rho(tier_dir, metrics, embeddings, out):
        assert cli_main(["rank-eval", "--tiers", tier_dir,
                         "--metrics", metrics, "--embeddings", embeddings,
                         "--out", out]) == 0
        with open(os.path.join(out, "summary.json"), encoding="utf-8") as fh:
            return {r["metric"]: r["rho"] for r in json.load(fh)["rows"]}

    rep = rho(rep_dir, ALL_METRICS + ",bertscore",
              os.path.join(EMB_DIR, "replace_text.jsonl"),
              str(tmp_path_factory.mktemp("rank_rep")))
    rep.update(rho(rep_dir, "clipscore,clipscore-ref",
                   os.path.join(EMB_DIR, "replace_clip.jsonl"),
                   str(tmp_path_factory.mktemp("rank_rep_clip"))))
    shuf = rho(shuf_dir, ALL_METRICS + ",bertscore",
               os.path.join(EMB_DIR, "shuffle_text.jsonl"),
               str(tmp_path_factory.mktemp("rank_shuf")))

    assert rep["bertscore"] == pytest.approx(0.5569, abs=0.10)
    assert rep["clipscore"] == pytest.approx(0.7741, abs=0.10)
    assert rep["clipscore-ref"] == pytest.approx(0.8056, abs=0.10)
    assert shuf["bertscore"] == pytest.approx(0.7096, abs=0.10)
    ngram = ("bleu-1", "bleu-2", "bleu-3", "bleu-4", "corpus-bleu",
             "meteor", "rouge-l", "cider")
    assert all(rep["clipscore-ref"] > rep[m] for m in ngram)
    assert all(shuf["bertscore"] > shuf[m] for m in ngram)

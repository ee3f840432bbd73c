"""Command-line pipeline: annotations -> perturbation tiers -> scores -> rank evaluation.

Subcommands: score, perturb, rank-eval, bow, fixtures. Settings come from
built-in defaults, then an optional JSON config file, then flags (highest
precedence). The effective configuration is echoed into the output directory,
and two runs with equal effective configuration produce byte-identical trees.

Exit codes: 0 success, 1 usage/config error, 2 data integrity error, 3 I/O.
"""

import argparse
import json
import os
import sys

from . import __version__
from .corpus import (
    Caption,
    ReferenceSet,
    build_eval_corpus,
    load_candidate_file,
    load_coco_annotations,
    load_external_scores,
    save_candidate_file,
    save_coco_annotations,
    split_references,
)
from .embedding_metrics import load_embeddings
from .errors import FormatError, IntegrityError
from .ngram_metrics import bleu_corpus
from .perturb import PerturbationSpec, build_bag, generate_tier, write_tier
from .rankeval import Tier, export_rank_result, parallel_map, run_tier_experiment
from .scorers import make_external_scorer, make_scorer
from .text import load_synonym_table

# Worked one-image demo corpus (image 544): candidate plus five references.
FIXTURE_IMAGE_ID = 544
FIXTURE_CANDIDATE = "A baseball player is swinging his bat to hit the ball."
FIXTURE_REFERENCES = (
    "A man swinging a bat at a baseball on a field.",
    "A man that has a baseball bat standing in the dirt.",
    "The stands are packed as a baseball player in a gray uniform holds a bat"
    " as a catcher holds out his mitt.",
    "A baseball player holding a bat over the top of a base.",
    "A baseball game is going on for the crowd.",
)

DEFAULTS = {
    "scheme": "coco-lite",
    "metrics": ["bleu-1", "bleu-2", "bleu-3", "bleu-4", "meteor", "rouge-l", "cider"],
    "mode": "replace",
    "fractions": [0.25, 0.5],
    "seed": 13,
    "tie_mode": "fractional",
    "bins": 50,
    "min_count": 4,
    "metric_params": {},
}


def _load_config_file(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return data


def _merge_config(args, keys):
    """defaults < config file < command-line flags; None means 'not given'."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(_load_config_file(args.config))
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return {k: cfg.get(k) for k in keys}


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def _echo_config(cfg, out_dir, command):
    payload = dict(cfg)
    payload["command"] = command
    payload["version"] = __version__
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=1, sort_keys=True)
        fh.write("\n")


def _parse_fractions(value):
    if isinstance(value, (list, tuple)):
        return [float(f) for f in value]
    return [float(f) for f in str(value).split(",") if f.strip()]


def _parse_external(value):
    """name=path pairs from repeated flags, or a dict from the config file."""
    if value is None:
        return {}
    if isinstance(value, dict):
        return dict(value)
    out = {}
    for item in value:
        if "=" not in item:
            raise ValueError(f"--external-scores expects name=path, got {item!r}")
        name, path = item.split("=", 1)
        out[name] = path
    return out


def _require(cfg, key, flag):
    if not cfg.get(key):
        raise ValueError(f"missing required setting {key!r} (flag {flag})")
    return cfg[key]


def _build_scorers(names, cfg, refsets):
    bundle = load_embeddings(cfg["embeddings"]) if cfg.get("embeddings") else None
    syn = load_synonym_table(cfg["synonyms"]) if cfg.get("synonyms") else None
    params = cfg.get("metric_params") or {}
    return [
        make_scorer(name, scheme=cfg["scheme"], params=params.get(name),
                    refsets=refsets, bundle=bundle, syn=syn)
        for name in names
    ]


# ---------------------------------------------------------------------------
# subcommands


def cmd_score(args):
    keys = ("annotations", "candidates", "metrics", "scheme", "embeddings",
            "synonyms", "external_scores", "metric_params", "out")
    cfg = _merge_config(args, keys)
    out_dir = _require(cfg, "out", "--out")
    refsets = load_coco_annotations(_require(cfg, "annotations", "--annotations"))

    if cfg.get("candidates"):
        candidates = load_candidate_file(cfg["candidates"])
    else:
        split = split_references(refsets)
        candidates, refsets = list(split.candidates), list(split.reference_sets)
    corpus = build_eval_corpus(candidates, refsets)
    if not corpus.items:
        raise IntegrityError("no candidates to score")

    os.makedirs(out_dir, exist_ok=True)
    _echo_config(cfg, out_dir, "score")

    reports = []
    names = cfg["metrics"] if isinstance(cfg["metrics"], list) else cfg["metrics"].split(",")
    params = cfg.get("metric_params") or {}
    for name in names:
        if name == "corpus-bleu":
            p = params.get(name) or {}
            report = bleu_corpus(corpus, scheme=p.get("scheme", "intl-lite"))
            reports.append((name, report.signature, report.per_caption, report.aggregate))
            continue
        scorer = _build_scorers([name], cfg, refsets)[0]
        scores = parallel_map(lambda item, s=scorer: s(item[0], item[1]), corpus.items)
        per_caption = {item[0].id: sc for item, sc in zip(corpus.items, scores)}
        reports.append((name, scorer.signature, per_caption,
                        sum(scores) / len(scores)))

    for name, path in sorted(_parse_external(cfg.get("external_scores")).items()):
        scores = load_external_scores(path, [c.id for c in candidates])
        scorer = make_external_scorer(name, scores, source=os.path.basename(path))
        vals = [scores[c.id] for c in candidates]
        reports.append((name, scorer.signature,
                        {c.id: scores[c.id] for c in candidates},
                        sum(vals) / len(vals)))

    for name, signature, per_caption, aggregate in reports:
        _write_json(
            {"metric": name, "signature": signature, "aggregate": aggregate,
             "per_caption": per_caption},
            os.path.join(out_dir, f"score_{name}.json"),
        )
        print(f"{name}\t{aggregate:.6f}")
    return 0


def _tier_plan(mode, fractions):
    """(name, spec-kind, fraction) triples ordered worst -> best."""
    if mode == "replace":
        plan = [("Random", "random", 1.0)]
        for f in sorted(fractions, reverse=True):
            plan.append((f"Replace{int(round(f * 100))}", "replace", f))
        plan.append(("Human", None, None))
        return plan
    if mode == "shuffle":
        plan = []
        for f in sorted(fractions, reverse=True):
            name = "ShuffleAll" if f >= 1.0 else f"Shuffle{int(round(f * 100))}"
            plan.append((name, "shuffle", f))
        plan.append(("Original", None, None))
        return plan
    if mode == "random":
        return [("Random", "random", 1.0), ("Human", None, None)]
    raise ValueError(f"unknown perturbation mode {mode!r}")


def cmd_perturb(args):
    keys = ("annotations", "mode", "fractions", "seed", "scheme", "min_count", "out")
    cfg = _merge_config(args, keys)
    out_dir = _require(cfg, "out", "--out")
    refsets = load_coco_annotations(_require(cfg, "annotations", "--annotations"))
    split = split_references(refsets)
    fractions = _parse_fractions(cfg["fractions"])

    bag = None
    bag_sig = None
    if cfg["mode"] == "replace":
        bag = build_bag(split.reference_sets, cfg["scheme"], cfg["min_count"])
        bag_sig = bag.signature()

    os.makedirs(out_dir, exist_ok=True)
    _echo_config(cfg, out_dir, "perturb")
    save_coco_annotations(split.reference_sets, os.path.join(out_dir, "references.json"))

    manifest = {"mode": cfg["mode"], "scheme": cfg["scheme"],
                "master_seed": cfg["seed"], "bag_signature": bag_sig,
                "references": "references.json", "tiers": []}
    plan = _tier_plan(cfg["mode"], fractions)
    for rank, (name, kind, fraction) in enumerate(plan, start=1):
        if kind is None:
            captions = [Caption(id=str(c.image_id), image_id=c.image_id, text=c.text)
                        for c in split.candidates]
            spec = None
        else:
            spec = PerturbationSpec(kind=kind, fraction=fraction,
                                    master_seed=cfg["seed"])
            captions = generate_tier(spec, split.candidates, bag=bag,
                                     scheme=cfg["scheme"])
        fname = f"tier_{name}.json"
        write_tier(captions, os.path.join(out_dir, fname), spec=spec,
                   bag_signature=bag_sig)
        manifest["tiers"].append({
            "name": name, "expected_rank": rank, "file": fname,
            "kind": kind, "fraction": fraction,
        })
        print(f"{name}\trank {rank}\t{len(captions)} captions")

    _write_json(manifest, os.path.join(out_dir, "manifest.json"))
    return 0


def cmd_rank_eval(args):
    keys = ("tiers", "metrics", "scheme", "tie_mode", "bins", "embeddings",
            "synonyms", "external_scores", "metric_params", "out")
    cfg = _merge_config(args, keys)
    out_dir = _require(cfg, "out", "--out")
    tier_dir = _require(cfg, "tiers", "--tiers")

    with open(os.path.join(tier_dir, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    refsets = load_coco_annotations(os.path.join(tier_dir, manifest["references"]))
    refmap = {rs.image_id: rs for rs in refsets}
    tiers = [
        Tier(name=t["name"], expected_rank=t["expected_rank"],
             captions=tuple(load_candidate_file(os.path.join(tier_dir, t["file"]))))
        for t in manifest["tiers"]
    ]

    os.makedirs(out_dir, exist_ok=True)
    _echo_config(cfg, out_dir, "rank-eval")

    names = cfg["metrics"] if isinstance(cfg["metrics"], list) else cfg["metrics"].split(",")
    scorers_list = _build_scorers(names, cfg, refsets)
    for name, path in sorted(_parse_external(cfg.get("external_scores")).items()):
        scores = load_external_scores(path, [])
        scorers_list.append(
            make_external_scorer(name, scores, source=os.path.basename(path)))

    summary = []
    for scorer in scorers_list:
        result = run_tier_experiment(tiers, refmap, scorer,
                                     bins=int(cfg["bins"]), tie_mode=cfg["tie_mode"])
        export_rank_result(result, os.path.join(out_dir, f"rank_{scorer.name}.json"))
        summary.append({"metric": scorer.name, "signature": result.metric_signature,
                        "rho": result.rho})
        print(f"{scorer.name}\trho={result.rho:.4f}")

    _write_json({"tie_mode": cfg["tie_mode"], "rows": summary},
                os.path.join(out_dir, "summary.json"))
    lines = ["metric,rho"] + [f"{r['metric']},{r['rho']:.6f}" for r in summary]
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def cmd_bow(args):
    keys = ("annotations", "scheme", "min_count", "out")
    cfg = _merge_config(args, keys)
    out_dir = _require(cfg, "out", "--out")
    refsets = load_coco_annotations(_require(cfg, "annotations", "--annotations"))
    split = split_references(refsets)
    bag = build_bag(split.reference_sets, cfg["scheme"], cfg["min_count"])
    os.makedirs(out_dir, exist_ok=True)
    _echo_config(cfg, out_dir, "bow")
    _write_json(
        {"signature": bag.signature(), "scheme": bag.scheme,
         "min_count": bag.min_count, "size": len(bag.words),
         "words": list(bag.words)},
        os.path.join(out_dir, "bag.json"),
    )
    print(f"bag of {len(bag.words)} words (min_count={bag.min_count})")
    return 0


def cmd_fixtures(args):
    cfg = _merge_config(args, ("out",))
    out_dir = _require(cfg, "out", "--out")
    os.makedirs(out_dir, exist_ok=True)
    refs = ReferenceSet(
        image_id=FIXTURE_IMAGE_ID,
        captions=tuple(
            Caption(id=str(i + 1), image_id=FIXTURE_IMAGE_ID, text=t)
            for i, t in enumerate(FIXTURE_REFERENCES)
        ),
    )
    ann_path = os.path.join(out_dir, "fixture_annotations.json")
    cand_path = os.path.join(out_dir, "fixture_candidate.json")
    save_coco_annotations([refs], ann_path)
    save_candidate_file(
        [Caption(id=str(FIXTURE_IMAGE_ID), image_id=FIXTURE_IMAGE_ID,
                 text=FIXTURE_CANDIDATE)],
        cand_path,
    )
    print(f"wrote {ann_path} and {cand_path}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sp):
    sp.add_argument("--config", help="JSON config file; flags override its keys")
    sp.add_argument("--out", help="output directory")


def _build_parser():
    p = argparse.ArgumentParser(prog="capscore",
                                description="caption metric scoring and rank evaluation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command")

    sp = sub.add_parser("score", help="score candidates against references")
    _add_common(sp)
    sp.add_argument("--annotations")
    sp.add_argument("--candidates")
    sp.add_argument("--metrics", type=lambda s: s.split(","))
    sp.add_argument("--scheme", choices=["coco-lite", "intl-lite"])
    sp.add_argument("--embeddings")
    sp.add_argument("--synonyms")
    sp.add_argument("--external-scores", dest="external_scores", action="append",
                    metavar="NAME=PATH")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("perturb", help="generate degraded caption tiers")
    _add_common(sp)
    sp.add_argument("--annotations")
    sp.add_argument("--mode", choices=["replace", "shuffle", "random"])
    sp.add_argument("--fraction", dest="fractions",
                    help="comma-separated fractions, e.g. 0.25,0.5")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--scheme", choices=["coco-lite", "intl-lite"])
    sp.add_argument("--min-count", dest="min_count", type=int)
    sp.set_defaults(func=cmd_perturb)

    sp = sub.add_parser("rank-eval", help="rank tiers by metric and correlate")
    _add_common(sp)
    sp.add_argument("--tiers", help="directory produced by the perturb command")
    sp.add_argument("--metrics", type=lambda s: s.split(","))
    sp.add_argument("--scheme", choices=["coco-lite", "intl-lite"])
    sp.add_argument("--tie-mode", dest="tie_mode")
    sp.add_argument("--bins", type=int)
    sp.add_argument("--embeddings")
    sp.add_argument("--synonyms")
    sp.add_argument("--external-scores", dest="external_scores", action="append",
                    metavar="NAME=PATH")
    sp.set_defaults(func=cmd_rank_eval)

    sp = sub.add_parser("bow", help="build the reference bag of words")
    _add_common(sp)
    sp.add_argument("--annotations")
    sp.add_argument("--scheme", choices=["coco-lite", "intl-lite"])
    sp.add_argument("--min-count", dest="min_count", type=int)
    sp.set_defaults(func=cmd_bow)

    sp = sub.add_parser("fixtures", help="write the built-in one-image demo corpus")
    _add_common(sp)
    sp.set_defaults(func=cmd_fixtures)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args) or 0
    except (FormatError, IntegrityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

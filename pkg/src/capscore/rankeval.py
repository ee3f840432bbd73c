"""Meta-evaluation of caption metrics without human judgments.

Captions of known relative quality (perturbation tiers) are scored, ranked,
and the metric-induced order is compared to the known order with Spearman
correlation. Rank-position histograms per tier show how cleanly a metric
separates quality levels.
"""

import dataclasses
import json
import math
import os
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import IntegrityError


@dataclass(frozen=True)
class Tier:
    name: str
    expected_rank: int  # 1 = worst
    captions: tuple


@dataclass(frozen=True)
class RankResult:
    metric_signature: str
    rho: float
    tie_mode: str
    tier_names: tuple
    bin_edges: tuple  # (lo, hi) pairs, equal width over the full rank range
    histograms: dict  # tier name -> list of counts, one per bin


_RANDOM_MODE = re.compile(r"^random\((-?\d+)\)$")


def parse_tie_mode(tie_mode: str):
    if tie_mode == "fractional":
        return "fractional", None
    m = _RANDOM_MODE.match(tie_mode)
    if m:
        return "random", int(m.group(1))
    raise ValueError(f"tie_mode must be 'fractional' or 'random(<seed>)', got {tie_mode!r}")


def _thread_budget() -> int:
    raw = os.environ.get("CAPSCORE_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Order-preserving map; fan-out capped by CAPSCORE_THREADS."""
    items = list(items)
    workers = min(_thread_budget(), len(items)) if items else 1
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _assign_ranks(values, mode, rng):
    """Ranks for values, 1 = lowest. Ties averaged or broken by seeded shuffle."""
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite score {v!r}")
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        group = order[i : j + 1]
        if mode == "random" and len(group) > 1:
            rng.shuffle(group)
            for offset, idx in enumerate(group):
                ranks[idx] = float(i + 1 + offset)
        else:
            avg = (i + 1 + j + 1) / 2.0
            for idx in group:
                ranks[idx] = avg
        i = j + 1
    return ranks


def rank_captions(scored, tie_mode="fractional"):
    """Ranks aligned with the input order; rank 1 = lowest score."""
    mode, seed = parse_tie_mode(tie_mode)
    rng = random.Random(seed) if mode == "random" else None
    return _assign_ranks([s for _, s in scored], mode, rng)


def _pearson(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    if vx == 0.0 or vy == 0.0:
        return 0.0
    return cov / math.sqrt(vx * vy)


def spearman(known_order, metric_order, tie_mode="fractional"):
    """Rank correlation of two orderings.

    Fractional mode averages tied ranks and takes the Pearson correlation of
    the rank vectors (zero variance on either side gives 0). Random mode
    breaks ties by seeded shuffle and applies 1 - 6*sum(d^2)/(n(n^2-1)).
    """
    if len(known_order) != len(metric_order):
        raise ValueError("rank lists differ in length")
    n = len(known_order)
    if n < 2:
        raise ValueError("need at least 2 items")
    mode, seed = parse_tie_mode(tie_mode)
    rng = random.Random(seed) if mode == "random" else None
    kr = _assign_ranks(list(known_order), mode, rng)
    mr = _assign_ranks(list(metric_order), mode, rng)
    if mode == "fractional":
        return _pearson(kr, mr)
    d2 = sum((a - b) ** 2 for a, b in zip(kr, mr))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))


def _validate_tiers(tiers):
    if len(tiers) < 2:
        raise ValueError("need at least 2 tiers")
    ranks = sorted(t.expected_rank for t in tiers)
    if ranks != list(range(1, len(tiers) + 1)):
        raise ValueError(f"expected_rank values must be 1..{len(tiers)}, got {ranks}")
    sizes = {len(t.captions) for t in tiers}
    if len(sizes) != 1:
        raise IntegrityError(f"tiers differ in size: {sorted(sizes)}")
    id_sets = {tier.name: sorted(c.image_id for c in tier.captions) for tier in tiers}
    first = next(iter(id_sets.values()))
    for name, ids in id_sets.items():
        if ids != first:
            raise IntegrityError(f"tier {name!r} covers different image ids")


def _bin_edges(total, bins):
    width = total / bins
    return tuple((1.0 + i * width, 1.0 + (i + 1) * width) for i in range(bins))


def run_tier_experiment(tiers, refsets, metric, bins=50, tie_mode="fractional"):
    """Score all tiers, rank the pooled captions, correlate with tier order.

    refsets maps image id to the ReferenceSet each caption is scored against.
    The known order concatenates tiers from worst (expected_rank 1) upward;
    within-tier order is the corpus order.
    """
    _validate_tiers(tiers)
    ordered = sorted(tiers, key=lambda t: t.expected_rank)
    jobs = []
    for tier in ordered:
        for cap in tier.captions:
            if cap.image_id not in refsets:
                raise IntegrityError(f"no references for image {cap.image_id}")
            qualified = dataclasses.replace(cap, id=f"{tier.name}/{cap.id}")
            jobs.append((tier.name, qualified, refsets[cap.image_id]))

    scores = parallel_map(lambda job: metric(job[1], job[2]), jobs)
    scored = [(job[1].id, s) for job, s in zip(jobs, scores)]
    ranks = rank_captions(scored, tie_mode)
    known = list(range(1, len(jobs) + 1))
    rho = spearman(known, ranks, tie_mode)

    total = len(jobs)
    edges = _bin_edges(total, bins)
    hist = {tier.name: [0] * bins for tier in ordered}
    for (tier_name, _, _), rank in zip(jobs, ranks):
        idx = min(bins - 1, int((rank - 1.0) * bins / total))
        hist[tier_name][idx] += 1

    return RankResult(
        metric_signature=getattr(metric, "signature", None)
        or getattr(metric, "__name__", "metric"),
        rho=rho,
        tie_mode=tie_mode,
        tier_names=tuple(t.name for t in ordered),
        bin_edges=edges,
        histograms=hist,
    )


def run_model_vs_human(model_captions, human_captions, refsets, metric,
                       bins=50, tie_mode="fractional"):
    """Two-tier experiment: can the metric tell model output from human text?"""
    model_ids = sorted(c.image_id for c in model_captions)
    human_ids = sorted(c.image_id for c in human_captions)
    if model_ids != human_ids:
        raise IntegrityError("model and human caption sets cover different image ids")
    tiers = [
        Tier(name="Model", expected_rank=1, captions=tuple(model_captions)),
        Tier(name="Human", expected_rank=2, captions=tuple(human_captions)),
    ]
    return run_tier_experiment(tiers, refsets, metric, bins=bins, tie_mode=tie_mode)


def export_rank_result(result: RankResult, path):
    """Serialize a RankResult as JSON plus a plot-ready CSV twin."""
    payload = {
        "metric_signature": result.metric_signature,
        "rho": result.rho,
        "tie_mode": result.tie_mode,
        "bins": [
            {
                "lo": lo,
                "hi": hi,
                "counts": {name: result.histograms[name][i] for name in result.tier_names},
            }
            for i, (lo, hi) in enumerate(result.bin_edges)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=1)
        fh.write("\n")

    base = str(path)
    csv_path = (base[: base.rfind(".")] if "." in os.path.basename(base) else base) + ".csv"
    lines = ["bin_lo,bin_hi," + ",".join(result.tier_names)]
    for i, (lo, hi) in enumerate(result.bin_edges):
        counts = ",".join(str(result.histograms[name][i]) for name in result.tier_names)
        lines.append(f"{lo:g},{hi:g},{counts}")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return csv_path

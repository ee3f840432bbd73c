"""Corpus loading: annotation files, candidate files, external score files.

All loaders validate eagerly and raise FormatError / IntegrityError with the
offending position or id, so the CLI can map failures to exit codes. Returned
values are immutable.
"""

import json
import math
from dataclasses import dataclass

from .errors import FormatError, IntegrityError


@dataclass(frozen=True)
class Caption:
    id: str
    image_id: int
    text: str


@dataclass(frozen=True)
class ReferenceSet:
    image_id: int
    captions: tuple

    def texts(self):
        return [c.text for c in self.captions]


@dataclass(frozen=True)
class SplitCorpus:
    """1+4 split: first-listed caption per image vs the remaining four."""

    candidates: tuple
    reference_sets: tuple


@dataclass(frozen=True)
class EvalCorpus:
    """Candidate captions paired with the reference sets they are scored against."""

    items: tuple  # (Caption, ReferenceSet) pairs


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON at byte {exc.pos}: {exc.msg}") from exc


def load_coco_annotations(path):
    """Parse a COCO-style captions file into one ReferenceSet per image.

    Grouping preserves annotation file order, which downstream code relies on
    (the first-listed caption of an image is special to split_references).
    """
    data = _load_json(path)
    if not isinstance(data, dict) or "images" not in data or "annotations" not in data:
        raise FormatError(f"{path}: expected an object with 'images' and 'annotations'")

    image_ids = set()
    for i, rec in enumerate(data["images"]):
        if not isinstance(rec, dict) or not isinstance(rec.get("id"), int):
            raise FormatError(f"{path}: images[{i}] lacks an integer 'id'")
        if rec["id"] in image_ids:
            raise IntegrityError(f"{path}: duplicate image id {rec['id']}")
        image_ids.add(rec["id"])

    grouped = {}  # image_id -> [Caption], insertion order = first appearance
    seen_ann = set()
    for i, rec in enumerate(data["annotations"]):
        if (
            not isinstance(rec, dict)
            or not isinstance(rec.get("id"), int)
            or not isinstance(rec.get("image_id"), int)
            or not isinstance(rec.get("caption"), str)
        ):
            raise FormatError(
                f"{path}: annotations[{i}] must have integer 'id', integer 'image_id',"
                " string 'caption'"
            )
        if rec["id"] in seen_ann:
            raise IntegrityError(f"{path}: duplicate annotation id {rec['id']}")
        seen_ann.add(rec["id"])
        if rec["image_id"] not in image_ids:
            raise IntegrityError(
                f"{path}: annotation {rec['id']} references unknown image {rec['image_id']}"
            )
        cap = Caption(id=str(rec["id"]), image_id=rec["image_id"], text=rec["caption"])
        grouped.setdefault(rec["image_id"], []).append(cap)

    return [ReferenceSet(image_id=iid, captions=tuple(caps)) for iid, caps in grouped.items()]


def save_coco_annotations(refsets, path):
    """Serialize ReferenceSets back to the annotation schema, preserving order."""
    images = [{"id": rs.image_id} for rs in refsets]
    annotations = [
        {"id": int(c.id) if c.id.isdigit() else c.id, "image_id": c.image_id, "caption": c.text}
        for rs in refsets
        for c in rs.captions
    ]
    payload = {"images": images, "annotations": annotations}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def split_references(refsets):
    """Per image: first-listed caption becomes the candidate, refs 2-5 the ground truth.

    References beyond the fifth are discarded; fewer than five is an error.
    """
    candidates = []
    kept = []
    for rs in refsets:
        if len(rs.captions) < 5:
            raise IntegrityError(
                f"image {rs.image_id} has {len(rs.captions)} captions, need >= 5 to split"
            )
        candidates.append(rs.captions[0])
        kept.append(ReferenceSet(image_id=rs.image_id, captions=tuple(rs.captions[1:5])))
    return SplitCorpus(candidates=tuple(candidates), reference_sets=tuple(kept))


def load_candidate_file(path):
    """Parse an array of {image_id, caption} records; ids synthesized from image ids."""
    data = _load_json(path)
    if not isinstance(data, list):
        raise FormatError(f"{path}: expected a top-level array of candidate records")
    captions = []
    seen = set()
    for i, rec in enumerate(data):
        if (
            not isinstance(rec, dict)
            or not isinstance(rec.get("image_id"), int)
            or not isinstance(rec.get("caption"), str)
        ):
            raise FormatError(f"{path}: record {i} must be {{'image_id': int, 'caption': str}}")
        if rec["image_id"] in seen:
            raise IntegrityError(f"{path}: duplicate image_id {rec['image_id']} at record {i}")
        seen.add(rec["image_id"])
        if not rec["caption"].strip():
            raise IntegrityError(f"{path}: empty caption for image {rec['image_id']}")
        captions.append(
            Caption(id=str(rec["image_id"]), image_id=rec["image_id"], text=rec["caption"])
        )
    return captions


def save_candidate_file(captions, path):
    records = [{"image_id": c.image_id, "caption": c.text} for c in captions]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def _reject_duplicate_keys(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise IntegrityError(f"duplicate id {k!r} in scores object")
        out[k] = v
    return out


def load_external_scores(path, expected_ids):
    """Parse {"metric": name, "scores": {id: value}} and check id coverage."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON at byte {exc.pos}: {exc.msg}") from exc
    except IntegrityError as exc:
        raise IntegrityError(f"{path}: {exc}") from None
    if not isinstance(data, dict) or not isinstance(data.get("metric"), str) \
            or not isinstance(data.get("scores"), dict):
        raise FormatError(f"{path}: expected {{'metric': str, 'scores': object}}")
    scores = {}
    for cid, value in data["scores"].items():
        if not isinstance(value, (int, float)) or isinstance(value, bool) \
                or not math.isfinite(value):
            raise IntegrityError(f"{path}: non-finite or non-numeric score for id {cid!r}")
        scores[cid] = float(value)
    for cid in expected_ids:
        if cid not in scores:
            raise IntegrityError(f"{path}: missing score for id {cid!r}")
    return scores


def build_eval_corpus(candidates, refsets):
    """Pair each candidate with the reference set of its image."""
    by_image = {rs.image_id: rs for rs in refsets}
    items = []
    for cand in candidates:
        rs = by_image.get(cand.image_id)
        if rs is None:
            raise IntegrityError(f"candidate for image {cand.image_id} has no references")
        if not rs.captions:
            raise IntegrityError(f"image {cand.image_id} has an empty reference set")
        items.append((cand, rs))
    return EvalCorpus(items=tuple(items))

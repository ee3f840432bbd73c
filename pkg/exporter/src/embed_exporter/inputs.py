"""Caption file readers and image directory discovery.

Two caption file shapes are understood: a COCO-style annotation object
({"annotations": [{"image_id", "id", "caption"}]}), where each record keeps
its own annotation id, and a plain candidate list ([{"image_id", "caption"}]),
where the caption id is the image id. A caption source given as "name=path"
prefixes every id with "name/" so several tiers of the same images can share
one file.
"""

import json
import os
from dataclasses import dataclass

from .errors import ExportError


@dataclass(frozen=True)
class CaptionRecord:
    id: str
    image_id: str
    text: str


def parse_caption_arg(arg):
    """"[name=]path" -> (prefix or None, path)."""
    if "=" in arg:
        prefix, path = arg.split("=", 1)
        if not prefix or not path:
            raise ValueError(f"bad caption source {arg!r}, expected [name=]path")
        return prefix, path
    return None, arg


def read_caption_file(path, prefix=None):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)

    def qualify(cid):
        return f"{prefix}/{cid}" if prefix else cid

    out = []
    if isinstance(data, dict) and isinstance(data.get("annotations"), list):
        rows = data["annotations"]
        id_key = "id"
    elif isinstance(data, list):
        rows = data
        id_key = None
    else:
        raise ExportError(f"{path}: expected an annotation object or a caption list")

    for i, row in enumerate(rows):
        if not isinstance(row, dict) or "image_id" not in row or "caption" not in row:
            raise ExportError(f"{path}: record {i} needs image_id and caption")
        cid = row[id_key] if id_key else row["image_id"]
        out.append(CaptionRecord(id=qualify(str(cid)),
                                 image_id=str(row["image_id"]),
                                 text=str(row["caption"])))
    return out


def collect_captions(sources):
    """Read every [name=]path source, preserving order; ids must be unique."""
    records = []
    seen = set()
    for arg in sources:
        prefix, path = parse_caption_arg(arg)
        for rec in read_caption_file(path, prefix):
            if rec.id in seen:
                raise ExportError(f"duplicate caption id {rec.id!r} (from {path})")
            seen.add(rec.id)
            records.append(rec)
    return records


IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp")


def discover_images(directory):
    """(image_id, path) pairs, id = filename stem, sorted by id."""
    found = {}
    for name in sorted(os.listdir(directory)):
        stem, ext = os.path.splitext(name)
        if ext.lower() not in IMAGE_EXTENSIONS:
            continue
        if stem in found:
            raise ExportError(f"duplicate image id {stem!r} in {directory}")
        found[stem] = os.path.join(directory, name)
    return sorted(found.items())

"""Writer for the line-delimited embedding format.

One JSON object per line: a header carrying the dimensionality and the
encoder identifiers, then caption records ({kind, id, tokens, token_vectors,
sentence_vector}) and image records ({kind, id, vector}). The writer enforces
the schema at write time so a produced file always loads cleanly on the
consuming side: consistent dimensionality, finite components, one vector per
token, no duplicate ids, no empty token lists.
"""

import json

import numpy as np

from .errors import ExportError


def _as_vector(value, dim, where):
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise ExportError(f"{where}: expected a {dim}-dimensional vector")
    if not np.all(np.isfinite(arr)):
        raise ExportError(f"{where}: non-finite component")
    return arr


class EmbeddingWriter:
    """Streams records to `path`; use as a context manager."""

    def __init__(self, path, dim, header_extra=None):
        if not isinstance(dim, int) or dim < 1:
            raise ExportError(f"dim must be a positive int, got {dim!r}")
        self.path = path
        self.dim = dim
        self.caption_ids = set()
        self.image_ids = set()
        self.captions_written = 0
        self.images_written = 0
        self._fh = open(path, "w", encoding="utf-8")
        header = {"dim": dim}
        header.update(header_extra or {})
        self._emit(header)

    def _emit(self, obj):
        self._fh.write(json.dumps(obj, ensure_ascii=False) + "\n")

    def add_caption(self, cid, tokens, token_vectors, sentence_vector):
        cid = str(cid)
        if cid in self.caption_ids:
            raise ExportError(f"duplicate caption id {cid!r}")
        tokens = [str(t) for t in tokens]
        if not tokens:
            raise ExportError(f"caption {cid!r} produced no tokens")
        mat = np.asarray(token_vectors, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != len(tokens):
            got = 0 if mat.ndim != 2 else mat.shape[0]
            raise ExportError(
                f"caption {cid!r}: token count mismatch, "
                f"{got} vectors for {len(tokens)} tokens"
            )
        rows = [_as_vector(row, self.dim, f"caption {cid!r} token {i}")
                for i, row in enumerate(mat)]
        sent = _as_vector(sentence_vector, self.dim, f"caption {cid!r} sentence vector")
        self._emit({
            "kind": "caption",
            "id": cid,
            "tokens": tokens,
            "token_vectors": [r.tolist() for r in rows],
            "sentence_vector": sent.tolist(),
        })
        self.caption_ids.add(cid)
        self.captions_written += 1

    def add_image(self, iid, vector):
        iid = str(iid)
        if iid in self.image_ids:
            raise ExportError(f"duplicate image id {iid!r}")
        vec = _as_vector(vector, self.dim, f"image {iid!r}")
        self._emit({"kind": "image", "id": iid, "vector": vec.tolist()})
        self.image_ids.add(iid)
        self.images_written += 1

    def close(self):
        if self._fh:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False

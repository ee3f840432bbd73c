"""Encoder families behind the export operations.

Two kinds per modality: a deterministic hash family that needs no weights or
network (identifiers "hash-<dim>" and "hash-clip-<dim>") and wrappers around
pretrained checkpoints loaded lazily by identifier. The hash text encoder is
contextual in the same structural sense as a transformer: a token's vector
mixes in its neighbors, so the same surface word embeds differently in
different sentences. Hash vectors carry no lexical semantics; tests that rely
on synonym geometry need a real checkpoint.
"""

import hashlib
import re

import numpy as np

from .errors import ExportError

_WORD = re.compile(r"[a-z0-9]+")

# context mixing for the hash text encoder
_WINDOW = 2
_ALPHA = 0.25


def simple_tokenize(text):
    return _WORD.findall(text.lower())


def _unit(v):
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def _seed_vector(key: bytes, dim):
    seed = int.from_bytes(hashlib.sha256(key).digest()[:8], "big")
    return _unit(np.random.default_rng(seed).standard_normal(dim))


class HashTextEncoder:
    """Deterministic stand-in for a contextual text encoder."""

    def __init__(self, dim):
        self.dim = dim
        self.ident = f"hash-{dim}"

    def _word_vec(self, word):
        return _seed_vector(word.encode("utf-8"), self.dim)

    def encode_batch(self, texts):
        """list of texts -> list of (tokens, token_matrix, sentence_vector)."""
        out = []
        for text in texts:
            tokens = simple_tokenize(text)
            if not tokens:
                out.append((tokens, np.zeros((0, self.dim)), np.zeros(self.dim)))
                continue
            bases = [self._word_vec(t) for t in tokens]
            rows = []
            for i in range(len(tokens)):
                ctx = np.zeros(self.dim)
                for j in range(max(0, i - _WINDOW), min(len(tokens), i + _WINDOW + 1)):
                    if j != i:
                        ctx += bases[j]
                vec = bases[i] + _ALPHA * _unit(ctx)
                rows.append(_unit(vec))
            mat = np.asarray(rows)
            out.append((tokens, mat, _unit(mat.mean(axis=0))))
        return out


class HashImageTextEncoder:
    """Deterministic stand-in for a joint image/text encoder."""

    def __init__(self, dim):
        self.dim = dim
        self.ident = f"hash-clip-{dim}"

    def encode_text_batch(self, texts):
        out = []
        for text in texts:
            tokens = simple_tokenize(text)
            if not tokens:
                out.append(np.zeros(self.dim))
                continue
            out.append(_unit(np.mean([_seed_vector(t.encode("utf-8"), self.dim)
                                      for t in tokens], axis=0)))
        return out

    def encode_image_batch(self, paths):
        out = []
        for path in paths:
            with open(path, "rb") as fh:
                out.append(_seed_vector(fh.read(), self.dim))
        return out


class TransformerTextEncoder:
    """Pretrained masked-LM encoder: wordpiece token vectors from the last
    hidden state, sentence vector by mean pooling over non-special tokens."""

    def __init__(self, model_id):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ExportError(f"encoder unavailable: {exc}") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id).eval()
        except Exception as exc:  # weights missing, no network, bad id
            raise ExportError(f"encoder unavailable: {model_id}: {exc}") from exc
        self._torch = torch
        self.ident = model_id
        self.dim = int(self.model.config.hidden_size)

    def encode_batch(self, texts):
        torch = self._torch
        enc = self.tokenizer(list(texts), return_tensors="pt", padding=True,
                             truncation=True, return_special_tokens_mask=True)
        special = enc.pop("special_tokens_mask")
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state
        out = []
        for i, text in enumerate(texts):
            keep = (special[i] == 0) & (enc["attention_mask"][i] == 1)
            ids = enc["input_ids"][i][keep]
            tokens = self.tokenizer.convert_ids_to_tokens(ids)
            mat = hidden[i][keep].numpy().astype(float)
            sent = mat.mean(axis=0) if len(tokens) else np.zeros(self.dim)
            out.append((tokens, mat, sent))
        return out


class ClipImageTextEncoder:
    """Pretrained two-tower encoder; both sides unit-normalized."""

    def __init__(self, model_id):
        try:
            import torch
            from PIL import Image
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ExportError(f"encoder unavailable: {exc}") from exc
        try:
            self.processor = CLIPProcessor.from_pretrained(model_id)
            self.model = CLIPModel.from_pretrained(model_id).eval()
        except Exception as exc:
            raise ExportError(f"encoder unavailable: {model_id}: {exc}") from exc
        self._torch = torch
        self._image_cls = Image
        self.ident = model_id
        self.dim = int(self.model.config.projection_dim)

    def encode_text_batch(self, texts):
        torch = self._torch
        enc = self.processor(text=list(texts), return_tensors="pt",
                             padding=True, truncation=True)
        with torch.no_grad():
            feats = self.model.get_text_features(**enc)
        feats = feats / feats.norm(dim=-1, keepdim=True)
        return [row.numpy().astype(float) for row in feats]

    def encode_image_batch(self, paths):
        torch = self._torch
        images = []
        for path in paths:
            try:
                images.append(self._image_cls.open(path).convert("RGB"))
            except OSError as exc:
                raise ExportError(f"unreadable image {path}: {exc}") from exc
        enc = self.processor(images=images, return_tensors="pt")
        with torch.no_grad():
            feats = self.model.get_image_features(**enc)
        feats = feats / feats.norm(dim=-1, keepdim=True)
        return [row.numpy().astype(float) for row in feats]


_HASH_TEXT = re.compile(r"^hash-(\d+)$")
_HASH_CLIP = re.compile(r"^hash-clip-(\d+)$")


def make_text_encoder(ident):
    m = _HASH_TEXT.match(ident)
    if m:
        return HashTextEncoder(int(m.group(1)))
    return TransformerTextEncoder(ident)


def make_image_text_encoder(ident):
    m = _HASH_CLIP.match(ident)
    if m:
        return HashImageTextEncoder(int(m.group(1)))
    return ClipImageTextEncoder(ident)

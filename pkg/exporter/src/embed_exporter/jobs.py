"""Export jobs: batch captions and images through an encoder into one file.

Records are written in input order regardless of batch size. A caption whose
tokenization is empty is an error naming the caption id; nothing is dropped
silently.
"""

from dataclasses import dataclass

from .encoders import make_image_text_encoder, make_text_encoder, simple_tokenize
from .errors import ExportError
from .inputs import collect_captions, discover_images
from .schema import EmbeddingWriter


@dataclass(frozen=True)
class ExportJob:
    captions: tuple = ()      # "[name=]path" caption sources, in order
    images: str = ""          # directory of image files, stem = image id
    text_model: str = ""
    clip_model: str = ""
    out: str = ""
    batch_size: int = 32

    # config problems are ValueError (usage); data problems are ExportError
    def __post_init__(self):
        if bool(self.text_model) == bool(self.clip_model):
            raise ValueError("exactly one of text_model / clip_model is required")
        if not self.out:
            raise ValueError("an output path is required")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.text_model and not self.captions:
            raise ValueError("text export needs at least one caption source")
        if self.clip_model and not (self.captions or self.images):
            raise ValueError("image-text export needs captions or an image directory")


@dataclass(frozen=True)
class ExportResult:
    path: str
    dim: int
    model: str
    captions: int
    images: int


def _batches(items, size):
    for i in range(0, len(items), size):
        yield items[i:i + size]


def export_text_embeddings(job: ExportJob) -> ExportResult:
    """Contextual token vectors plus a sentence vector for every caption."""
    encoder = make_text_encoder(job.text_model)
    records = collect_captions(job.captions)
    with EmbeddingWriter(job.out, encoder.dim,
                         {"text_model": encoder.ident}) as writer:
        for batch in _batches(records, job.batch_size):
            encoded = encoder.encode_batch([r.text for r in batch])
            for rec, (tokens, mat, sent) in zip(batch, encoded):
                if not tokens:
                    raise ExportError(f"caption {rec.id!r} produced no tokens")
                writer.add_caption(rec.id, tokens, mat, sent)
        return ExportResult(job.out, encoder.dim, encoder.ident,
                            writer.captions_written, writer.images_written)


def export_image_text_embeddings(job: ExportJob) -> ExportResult:
    """Unit-normalized image vectors and caption sentence vectors, one space."""
    encoder = make_image_text_encoder(job.clip_model)
    records = collect_captions(job.captions) if job.captions else []
    images = discover_images(job.images) if job.images else []
    with EmbeddingWriter(job.out, encoder.dim,
                         {"image_text_model": encoder.ident}) as writer:
        for batch in _batches(records, job.batch_size):
            encoded = encoder.encode_text_batch([r.text for r in batch])
            for rec, sent in zip(batch, encoded):
                if not simple_tokenize(rec.text):
                    raise ExportError(f"caption {rec.id!r} produced no tokens")
                # sentence-level encoder: a single pooled slot stands in for tokens
                writer.add_caption(rec.id, ["<text>"], [sent], sent)
        for batch in _batches(images, job.batch_size):
            encoded = encoder.encode_image_batch([path for _, path in batch])
            for (iid, _), vec in zip(batch, encoded):
                writer.add_image(iid, vec)
        return ExportResult(job.out, encoder.dim, encoder.ident,
                            writer.captions_written, writer.images_written)

__version__ = "0.1.0"

from .encoders import (
    ClipImageTextEncoder,
    HashImageTextEncoder,
    HashTextEncoder,
    TransformerTextEncoder,
    make_image_text_encoder,
    make_text_encoder,
    simple_tokenize,
)
from .errors import ExportError
from .inputs import (
    CaptionRecord,
    collect_captions,
    discover_images,
    parse_caption_arg,
    read_caption_file,
)
from .jobs import (
    ExportJob,
    ExportResult,
    export_image_text_embeddings,
    export_text_embeddings,
)
from .schema import EmbeddingWriter

"""Command line entry: one export job per invocation.

embed-export --captions [name=]file.json [--captions ...] [--images DIR]
             (--text-model ID | --clip-model ID) --out FILE [--batch N]

Exit codes: 0 success, 1 usage error, 2 data or encoder error, 3 I/O error.
"""

import argparse
import sys

from .errors import ExportError
from .jobs import ExportJob, export_image_text_embeddings, export_text_embeddings


def _build_parser():
    p = argparse.ArgumentParser(
        prog="embed-export",
        description="Export caption and image embeddings as line-delimited JSON")
    p.add_argument("--captions", action="append", default=[],
                   metavar="[NAME=]FILE",
                   help="caption file; NAME= prefixes ids with 'NAME/'")
    p.add_argument("--images", default="", metavar="DIR",
                   help="directory of image files, filename stem = image id")
    p.add_argument("--text-model", default="", dest="text_model",
                   help="text encoder id ('hash-<dim>' or a pretrained checkpoint)")
    p.add_argument("--clip-model", default="", dest="clip_model",
                   help="image-text encoder id ('hash-clip-<dim>' or a checkpoint)")
    p.add_argument("--out", required=True, help="output embedding file")
    p.add_argument("--batch", type=int, default=32, dest="batch_size")
    return p


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        job = ExportJob(captions=tuple(args.captions), images=args.images,
                        text_model=args.text_model, clip_model=args.clip_model,
                        out=args.out, batch_size=args.batch_size)
        if job.text_model:
            result = export_text_embeddings(job)
        else:
            result = export_image_text_embeddings(job)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    print(f"{result.model}\tdim {result.dim}\t{result.captions} captions"
          f"\t{result.images} images\t{result.path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

    viewexport export --images DIR --arch resnet50,vgg16 --out DIR [--labels CSV]

Exit codes: 0 success, 2 for any configuration or input problem.
"""

from __future__ import annotations

import argparse
import sys

from .export import ExportSpec, export
from .models import ExportError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="viewexport",
        description="Export CNN feature views of an image folder as .fvb files",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    exp = sub.add_parser("export", help="extract features for every requested architecture")
    exp.add_argument("--images", required=True, help="directory of images")
    exp.add_argument("--arch", required=True, help="comma-separated architecture names")
    exp.add_argument("--out", required=True, help="output directory for .fvb files + manifest")
    exp.add_argument("--labels", help="CSV with filename,label rows")
    exp.add_argument("--batch-size", type=int, default=16)
    args = parser.parse_args(argv)

    try:
        spec = ExportSpec(
            image_dir=args.images,
            architectures=[a for a in args.arch.split(",") if a.strip()],
            out_dir=args.out,
            labels_csv=args.labels,
            batch_size=args.batch_size,
        )
        manifest = export(spec)
    except (ExportError, OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())

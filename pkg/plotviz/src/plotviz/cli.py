"""Figure rendering command: plot <kind> --manifest <path> --out <png>."""

import argparse
import sys

from .readers import InputError
from .render import KINDS, waveform_overlay


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot", description="render terrapulse outputs to figures")
    parser.add_argument("kind", choices=sorted(KINDS))
    parser.add_argument("--manifest", action="append", required=True,
                        help="run manifest (repeatable for overlays)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--pattern", default=None,
                        help="file-name filter inside the manifest")
    args = parser.parse_args(argv)
    try:
        if args.kind == "waveform":
            files = waveform_overlay(args.manifest, args.out)
        else:
            if len(args.manifest) != 1:
                raise InputError(f"{args.kind} takes exactly one manifest")
            kwargs = {}
            if args.pattern and args.kind in ("field-map", "envelope-map"):
                kwargs["pattern"] = args.pattern
            files = KINDS[args.kind](args.manifest[0], args.out, **kwargs)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print("wrote " + ", ".join(files))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

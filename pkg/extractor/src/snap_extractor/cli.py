"""Command-line front end: audio manifest to embedding container."""

from __future__ import annotations

import argparse
import sys

from .encoder import DEFAULT_LAYERS, get_encoder
from .extract import extract_container, read_audio_manifest


def build_parser():
    p = argparse.ArgumentParser(
        prog="snap-extract",
        description="Encode a manifest of audio files into an SNAPEMB1 "
                    "embedding container.")
    p.add_argument("--manifest", required=True,
                   help="text file: path speaker_id label attack_id per line "
                        "('-' for no attack id)")
    p.add_argument("--out", required=True, help="output container path")
    p.add_argument("--report", help="extraction report JSON "
                                    "(default: <out>.extraction.json)")
    p.add_argument("--encoder", default="wavlm",
                   help="'wavlm[:model-id]' or 'stub[:seed]' (default wavlm)")
    p.add_argument("--layers", default=",".join(map(str, DEFAULT_LAYERS)),
                   help="comma-separated 1-based transformer layers")
    p.add_argument("--frames", action="store_true",
                   help="keep per-frame features instead of pooling")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        entries = read_audio_manifest(args.manifest)
        layers = tuple(int(l) for l in args.layers.split(","))
        if len(layers) != 2:
            raise ValueError("exactly two layers required")
        encoder = get_encoder(args.encoder)
        eset, manifest = extract_container(
            entries, encoder, args.out, pooled=not args.frames, layers=layers)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest.save(args.report or f"{args.out}.extraction.json")
    failed = sum(1 for f in manifest.files if not f.ok)
    print(f"wrote {len(eset)} records (dim {eset.dim}) -> {args.out}"
          + (f", {failed} file(s) failed" if failed else ""))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

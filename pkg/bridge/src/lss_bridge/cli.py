import argparse
import sys

from .bridge import BridgeManifest, ModelConfig, export_latents, import_and_decode
from .errors import BridgeError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lss-bridge",
        description="Move audio between WAV and LSSL latent files via a codec model.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("export", help="encode WAV -> LSSL latents")
    p.add_argument("input", help="input WAV (mono)")
    p.add_argument("output", help="output LSSL path")
    p.add_argument("--model", default="encodec_24khz",
                   help="codec backend (encodec_24khz or dct_proxy)")
    p.add_argument("--bandwidth", type=float, default=6.0,
                   help="target bandwidth in kbps, recorded with the job")

    p = sub.add_parser("decode", help="decode LSSL latents -> WAV")
    p.add_argument("input", help="input LSSL file")
    p.add_argument("output", help="output WAV path")
    p.add_argument("--model", default="encodec_24khz")
    p.add_argument("--bandwidth", type=float, default=6.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            manifest = BridgeManifest.from_pairs(
                [(args.input, args.output)], args.model, args.bandwidth
            )
            for path in export_latents(manifest):
                print(f"wrote {path}")
        else:
            out = import_and_decode(
                args.input, args.output, ModelConfig(args.model, args.bandwidth)
            )
            print(f"wrote {out}")
        return 0
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()

"""Command-line front end.

Subcommands cover the whole pipeline: ``fit-pca``, ``embed``, ``detect``,
``attack``, ``evaluate``, ``gen-corpus``. Flags mirror config keys 1:1 and a
plain key=value file passed via --config supplies defaults that explicit
flags override. The secret key comes from --key-hex, --key-file, or the
LSS_KEY environment variable, in that order.

Exit codes: 0 success (or watermark detected), 1 watermark not detected,
2 usage/config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import glob as globlib
import hashlib
import json
import os
import sys

from .codecs import (
    CodecSpec,
    decode,
    encode,
    parse_codec,
    read_latents,
    read_wav,
    standardize_duration,
    write_latents,
    write_wav,
)
from .errors import ExternalToolError, FormatError, ValidationError
from .evaluation import (
    SyntheticCorpusSpec,
    default_experiment,
    generate_synthetic_corpus,
    write_records_csv,
    write_summary_json,
)
from .formats import pack_latents
from .latent import fit_pca, project, read_basis, unproject, write_basis
from .manipulations import apply_manipulation, parse_manipulation
from .schedule import (
    Nonce,
    Payload,
    ScheduleParams,
    SecretKey,
    derive_nonce,
    derive_schedule,
)
from .watermark import calibrate_threshold, detect, embed, expected_score

EXIT_OK = 0
EXIT_NOT_DETECTED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

_DEFAULT_PAYLOAD_HEX = "a5c3"
_DEFAULT_PAYLOAD_BITS = 16


def _add_codec_flag(p):
    p.add_argument(
        "--codec",
        default="frame_stack:frame_len=320",
        help="codec spec, e.g. frame_stack:frame_len=320 or dct_bank:frame_len=256",
    )


def _add_schedule_flags(p):
    g = p.add_argument_group("schedule parameters")
    g.add_argument("--chunk-frames", dest="chunk_frames", type=int, default=32,
                   help="frames per chunk (default 32)")
    g.add_argument("--subchunk-frames", dest="subchunk_frames", type=int, default=8,
                   help="frames per subchunk/chip (default 8)")
    g.add_argument("--planes-per-chunk", dest="planes_per_chunk", type=int, default=24,
                   help="disjoint rotation planes per chunk (default 24)")
    g.add_argument("--theta", type=float, default=0.18,
                   help="rotation angle in radians (default 0.18)")
    g.add_argument("--candidate-components", dest="candidate_components", type=int,
                   default=64, help="plane pool: top-D principal components (default 64)")


def _add_key_flags(p):
    g = p.add_argument_group("key material")
    g.add_argument("--key-hex", help="64 hex chars (32 bytes)")
    g.add_argument("--key-file", help="file containing the key as hex")
    g.add_argument("--nonce-hex", help="32 hex chars (16 bytes)")
    g.add_argument("--payload-hex", default=_DEFAULT_PAYLOAD_HEX,
                   help=f"payload bits as hex (default {_DEFAULT_PAYLOAD_HEX})")
    g.add_argument("--payload-bits", dest="payload_bits", type=int,
                   default=_DEFAULT_PAYLOAD_BITS,
                   help=f"payload bit length (default {_DEFAULT_PAYLOAD_BITS})")


def _params_from(args) -> ScheduleParams:
    return ScheduleParams(
        chunk_frames=args.chunk_frames,
        subchunk_frames=args.subchunk_frames,
        planes_per_chunk=args.planes_per_chunk,
        theta=args.theta,
        candidate_components=args.candidate_components,
    )


def _resolve_key(args) -> SecretKey:
    if args.key_hex:
        return SecretKey.from_hex(args.key_hex)
    if args.key_file:
        with open(args.key_file) as fh:
            return SecretKey.from_hex(fh.read())
    env = os.environ.get("LSS_KEY")
    if env:
        return SecretKey.from_hex(env)
    raise ValidationError("no key given: use --key-hex, --key-file, or set LSS_KEY")


def _resolve_payload(args) -> Payload:
    return Payload.from_hex(args.payload_hex, args.payload_bits)


def _is_latents_path(path: str) -> bool:
    return str(path).lower().endswith(".lssl")


def _read_front_end(path: str, codec: CodecSpec, duration_s: float):
    """Read a WAV or LSSL input into a LatentSequence."""
    if _is_latents_path(path):
        return read_latents(path)
    x = read_wav(path)
    if duration_s > 0:
        x = standardize_duration(x, duration_s)
    return encode(x, codec)


def _content_nonce(key: SecretKey, f) -> Nonce:
    content = hashlib.sha256(pack_latents(f.data, f.frame_rate_hz)).digest()
    return derive_nonce(key, content)


def _expand_inputs(patterns) -> list[str]:
    paths = []
    for pattern in patterns:
        hits = sorted(globlib.glob(pattern))
        if hits:
            paths.extend(hits)
        elif os.path.exists(pattern):
            paths.append(pattern)
    return paths


def cmd_fit_pca(args) -> int:
    codec = parse_codec(args.codec)
    paths = _expand_inputs(args.inputs)
    if not paths:
        raise ValidationError(f"no input files match {args.inputs}")

    def corpus():
        for path in paths:
            yield _read_front_end(path, codec, args.duration)

    basis = fit_pca(corpus())
    write_basis(basis, args.out)
    print(f"wrote {args.out}: n={basis.dim}, inputs={len(paths)}")
    return EXIT_OK


def cmd_embed(args) -> int:
    codec = parse_codec(args.codec)
    basis = read_basis(args.basis)
    key = _resolve_key(args)
    payload = _resolve_payload(args)
    params = _params_from(args)

    f = _read_front_end(args.input, codec, args.duration)
    z = project(f, basis)
    if args.nonce_hex:
        nonce = Nonce.from_hex(args.nonce_hex)
    else:
        nonce = _content_nonce(key, f)
    print(f"nonce: {nonce.nonce.hex()}", file=sys.stderr)

    schedule = derive_schedule(key, nonce, payload, params, z.num_frames)
    capacity = schedule.chunk_count * params.planes_per_chunk
    if payload.num_bits > capacity:
        print(
            f"warning: payload has {payload.num_bits} bits but only {capacity} "
            f"(chunk, plane) slots exist; bits beyond {capacity} are not embedded",
            file=sys.stderr,
        )
    marked = unproject(embed(z, schedule), basis)

    if _is_latents_path(args.output):
        write_latents(marked, args.output)
    else:
        write_wav(decode(marked, codec), args.output, fmt=args.format)
    print(f"chunks={schedule.chunk_count} frames_watermarked={schedule.frames_watermarked}")
    return EXIT_OK


def cmd_detect(args) -> int:
    codec = parse_codec(args.codec)
    basis = read_basis(args.basis)
    key = _resolve_key(args)
    payload = _resolve_payload(args)
    params = _params_from(args)
    if not args.nonce_hex:
        raise ValidationError(
            "detect needs --nonce-hex (embed prints the nonce it used to stderr)"
        )
    nonce = Nonce.from_hex(args.nonce_hex)

    f = _read_front_end(args.input, codec, args.duration)
    z = project(f, basis)
    schedule = derive_schedule(key, nonce, payload, params, z.num_frames)

    if args.threshold is not None:
        threshold = args.threshold
    elif args.calibrate:
        null_paths = _expand_inputs([args.calibrate])
        scores = []
        for path in null_paths:
            g = _read_front_end(path, codec, args.duration)
            zg = project(g, basis)
            sched_g = derive_schedule(key, nonce, payload, params, zg.num_frames)
            scores.append(detect(zg, sched_g, basis.eigenvalues, 0.0).score)
        threshold = calibrate_threshold(scores, args.fpr)
    else:
        # Data-free default: halfway between the null mean (0) and the
        # model-predicted watermarked mean.
        threshold = 0.5 * expected_score(schedule, basis.eigenvalues)

    report = detect(z, schedule, basis.eigenvalues, threshold)
    print(json.dumps(report.to_dict(include_terms=args.terms), indent=2))
    return EXIT_OK if report.decision else EXIT_NOT_DETECTED


def cmd_attack(args) -> int:
    spec = parse_manipulation(args.spec)
    x = read_wav(args.input)
    write_wav(apply_manipulation(x, spec), args.output, fmt=args.format)
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    spec = SyntheticCorpusSpec(
        n=args.n,
        num_frames=args.frames,
        num_utterances=args.num,
        eigen_spectrum=args.spectrum,
        seed=args.seed,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    count = 0
    for f in generate_synthetic_corpus(spec):
        write_latents(f, os.path.join(args.out_dir, f"utt-{count:04d}.lssl"))
        count += 1
    print(f"wrote {count} latent files to {args.out_dir}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    key = None
    if args.key_hex or args.key_file or os.environ.get("LSS_KEY"):
        key = _resolve_key(args)
    conditions = args.condition or ["white:snr=20,seed=7", "white:snr=5,seed=7"]
    records, summary = default_experiment(
        num_train=args.num_train,
        num_eval=args.num_eval,
        n=args.n,
        num_frames=args.frames,
        eigen_spectrum=args.spectrum,
        corpus_seed=args.seed,
        key=key,
        payload=_resolve_payload(args),
        params=_params_from(args),
        conditions=conditions,
    )
    write_records_csv(records, args.out_csv)
    write_summary_json(summary, args.out_json)
    failed = False
    for name in summary:
        entry = summary[name]
        if "error" in entry:
            failed = True
            print(f"{name:<28} FAILED: {entry['error']}")
        else:
            line = f"{name:<28} auc={entry['auc']:.4f} n={entry['n_pos']}/{entry['n_neg']}"
            if "wrong_key_auc" in entry:
                line += (
                    f" wrong_key_auc={entry['wrong_key_auc']:.4f}"
                    f" wrong_nonce_auc={entry['wrong_nonce_auc']:.4f}"
                )
            print(line)
    print(f"records: {args.out_csv}  summary: {args.out_json}")
    return EXIT_RUNTIME if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lss",
        description=(
            "Blind watermarking of latent feature sequences via keyed principal-"
            "component plane rotations, detected by signed covariance accumulation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    registry = {}

    def register(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value defaults file (flags still override)")
        p.set_defaults(func=func)
        registry[name] = p
        return p

    p = register("fit-pca", cmd_fit_pca, "fit a PCA basis over WAV/LSSL inputs")
    p.add_argument("inputs", nargs="+", help="WAV or LSSL files (globs allowed)")
    p.add_argument("--out", required=True, help="output LSSB basis path")
    p.add_argument("--duration", type=float, default=0.0,
                   help="standardize WAV inputs to this many seconds (0 = off)")
    _add_codec_flag(p)

    p = register("embed", cmd_embed, "watermark a WAV or LSSL file")
    p.add_argument("input", help="input WAV or LSSL file")
    p.add_argument("output", help="output WAV or LSSL path")
    p.add_argument("--basis", required=True, help="LSSB basis path")
    p.add_argument("--duration", type=float, default=10.0,
                   help="standardize WAV input to this many seconds (0 = off, default 10)")
    p.add_argument("--format", default="float32", choices=("float32", "pcm16"),
                   help="WAV output sample format")
    _add_codec_flag(p)
    _add_key_flags(p)
    _add_schedule_flags(p)

    p = register("detect", cmd_detect, "score a file for a watermark (exit 0 iff detected)")
    p.add_argument("input", help="input WAV or LSSL file")
    p.add_argument("--basis", required=True, help="LSSB basis path")
    p.add_argument("--duration", type=float, default=0.0,
                   help="standardize WAV input before scoring (0 = off)")
    p.add_argument("--threshold", type=float, default=None,
                   help="decision threshold (default: half the predicted watermarked mean)")
    p.add_argument("--calibrate", metavar="GLOB", default=None,
                   help="calibrate the threshold from >=100 unwatermarked files")
    p.add_argument("--fpr", type=float, default=0.01,
                   help="target false-positive rate for --calibrate (default 0.01)")
    p.add_argument("--terms", action="store_true",
                   help="include per-(chunk,plane,subchunk) terms in the JSON report")
    _add_codec_flag(p)
    _add_key_flags(p)
    _add_schedule_flags(p)

    p = register("attack", cmd_attack, "apply a manipulation to a WAV file")
    p.add_argument("input", help="input WAV file")
    p.add_argument("output", help="output WAV path")
    p.add_argument("--spec", required=True,
                   help='manipulation, e.g. lowpass:fc=1000 or white:snr=20,seed=7')
    p.add_argument("--format", default="float32", choices=("float32", "pcm16"),
                   help="WAV output sample format")

    p = register("gen-corpus", cmd_gen_corpus, "write a synthetic latent corpus as LSSL files")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--n", type=int, default=128, help="latent dimension")
    p.add_argument("--frames", type=int, default=750, help="frames per utterance")
    p.add_argument("--num", type=int, default=100, help="number of utterances")
    p.add_argument("--spectrum", default="decade",
                   help='eigen spectrum: identity|decade|linear|geometric:R|v1,v2,...')
    p.add_argument("--seed", type=int, default=0)

    p = register("evaluate", cmd_evaluate, "run the synthetic embed/attack/detect experiment")
    p.add_argument("--num-train", dest="num_train", type=int, default=100,
                   help="utterances used to fit the basis")
    p.add_argument("--num-eval", dest="num_eval", type=int, default=100,
                   help="utterances scored")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--frames", type=int, default=750)
    p.add_argument("--spectrum", default="decade")
    p.add_argument("--seed", type=int, default=0, help="corpus seed")
    p.add_argument("--condition", action="append", default=None,
                   help="manipulation condition (repeatable); clean always runs "
                        "(default: white noise at SNR 20 and 5 dB)")
    p.add_argument("--out-csv", dest="out_csv", default="results.csv")
    p.add_argument("--out-json", dest="out_json", default="summary.json")
    _add_key_flags(p)
    _add_schedule_flags(p)

    return parser, registry


def _load_config(path: str) -> dict[str, str]:
    pairs = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}")
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            k, sep, v = line.partition("=")
            if not sep:
                raise ValidationError(f"{path}:{lineno}: expected key=value, got {line!r}")
            pairs[k.strip()] = v.strip()
    return pairs


def _apply_config(parser_registry, command: str, pairs: dict) -> None:
    sub = parser_registry[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for k, v in pairs.items():
        if k not in actions or k in ("help", "config", "func"):
            raise ValidationError(f"unknown config key {k!r} for command {command!r}")
        action = actions[k]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[k] = [s for s in v.split(";") if s]
        elif action.type is not None:
            try:
                defaults[k] = action.type(v)
            except ValueError:
                raise ValidationError(f"config key {k!r}: cannot parse {v!r}")
        else:
            defaults[k] = v
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            _apply_config(registry, args.command, _load_config(args.config))
            args = parser.parse_args(argv)
        return args.func(args)
    except (ValidationError, FormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExternalToolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except BrokenPipeError:
        return EXIT_RUNTIME


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()

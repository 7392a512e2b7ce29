"""Waveform manipulations applied between embedding and detection.

Covers the usual non-malicious channel: 6th-order Butterworth filtering,
additive white/pink noise at an exact SNR, polyphase resampling, and an
escape hatch that round-trips the waveform through an arbitrary external
command (e.g. an MP3 encoder).

Specs parse from compact strings so they can ride in CLI flags and result
CSVs::

    lowpass:fc=1000
    highpass:fc=100
    bandpass:lo=300,hi=3400
    white:snr=20,seed=7
    pink:snr=10,seed=7
    resample:rate=16000
    ext:cmd="lame -b 32 {in} {out}"

``to_string`` round-trips whatever ``parse_manipulation`` accepts.
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.signal

from .codecs import Waveform, read_wav, write_wav
from .errors import ExternalToolError, FormatError, ValidationError

FILTER_ORDER = 6
MAX_RESAMPLE_FACTOR = 1000
# Kaiser beta for ~80 dB stopband (0.1102 * (80 - 8.7)).
_KAISER_BETA = 7.857

_KINDS = (
    "lowpass",
    "highpass",
    "bandpass",
    "white_noise",
    "pink_noise",
    "resample",
    "external_command",
)
_ALIASES = {"white": "white_noise", "pink": "pink_noise", "ext": "external_command"}
_SHORT = {"white_noise": "white", "pink_noise": "pink", "external_command": "ext"}


@dataclass(frozen=True)
class ManipulationSpec:
    kind: str
    cutoff_hz: float | None = None
    band_hz: tuple[float, float] | None = None
    snr_db: float | None = None
    rng_seed: int = 0
    target_rate_hz: int | None = None
    command: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown manipulation kind {self.kind!r}")
        if self.kind in ("lowpass", "highpass") and self.cutoff_hz is None:
            raise ValidationError(f"{self.kind} requires a cutoff (fc=...)")
        if self.kind == "bandpass" and self.band_hz is None:
            raise ValidationError("bandpass requires band edges (lo=...,hi=...)")
        if self.kind in ("white_noise", "pink_noise"):
            if self.snr_db is None or not math.isfinite(self.snr_db):
                raise ValidationError(f"{self.kind} requires a finite snr (snr=...)")
        if self.kind == "resample" and (
            self.target_rate_hz is None or self.target_rate_hz <= 0
        ):
            raise ValidationError("resample requires a positive target rate (rate=...)")
        if self.kind == "external_command" and not self.command:
            raise ValidationError("external_command requires cmd=\"...\"")


def _split_options(text: str) -> list[str]:
    """Split on commas that are not inside double quotes."""
    parts, buf, quoted = [], [], False
    for ch in text:
        if ch == '"':
            quoted = not quoted
            buf.append(ch)
        elif ch == "," and not quoted:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    if quoted:
        raise ValidationError(f"unterminated quote in manipulation options {text!r}")
    parts.append("".join(buf))
    return [p for p in parts if p.strip()]


def parse_manipulation(text: str) -> ManipulationSpec:
    head, _, rest = text.strip().partition(":")
    kind = _ALIASES.get(head.strip(), head.strip())
    if kind not in _KINDS:
        raise ValidationError(f"unknown manipulation {head.strip()!r} in {text!r}")
    opts = {}
    for part in _split_options(rest):
        k, sep, v = part.partition("=")
        if not sep:
            raise ValidationError(f"bad manipulation option {part!r} in {text!r}")
        k, v = k.strip(), v.strip()
        if len(v) >= 2 and v[0] == '"' and v[-1] == '"':
            v = v[1:-1]
        opts[k] = v

    def _num(key, cast=float):
        try:
            return cast(opts.pop(key))
        except KeyError:
            raise ValidationError(f"{kind} requires option {key}= in {text!r}")
        except ValueError:
            raise ValidationError(f"option {key}= must be numeric in {text!r}")

    kwargs = {}
    if kind in ("lowpass", "highpass"):
        kwargs["cutoff_hz"] = _num("fc")
    elif kind == "bandpass":
        kwargs["band_hz"] = (_num("lo"), _num("hi"))
    elif kind in ("white_noise", "pink_noise"):
        kwargs["snr_db"] = _num("snr")
        if "seed" in opts:
            kwargs["rng_seed"] = _num("seed", int)
    elif kind == "resample":
        kwargs["target_rate_hz"] = _num("rate", int)
    elif kind == "external_command":
        if "cmd" not in opts:
            raise ValidationError(f"ext requires cmd=\"...\" in {text!r}")
        kwargs["command"] = opts.pop("cmd")
    if opts:
        raise ValidationError(f"unknown option(s) {sorted(opts)} for {kind} in {text!r}")
    return ManipulationSpec(kind=kind, **kwargs)


def _fmt(v: float) -> str:
    return f"{v:g}"


def manipulation_to_string(spec: ManipulationSpec) -> str:
    kind = _SHORT.get(spec.kind, spec.kind)
    if spec.kind in ("lowpass", "highpass"):
        return f"{kind}:fc={_fmt(spec.cutoff_hz)}"
    if spec.kind == "bandpass":
        lo, hi = spec.band_hz
        return f"{kind}:lo={_fmt(lo)},hi={_fmt(hi)}"
    if spec.kind in ("white_noise", "pink_noise"):
        return f"{kind}:snr={_fmt(spec.snr_db)},seed={spec.rng_seed}"
    if spec.kind == "resample":
        return f"{kind}:rate={spec.target_rate_hz}"
    return f'{kind}:cmd="{spec.command}"'


def _check_edge(fc: float, nyquist: float, what: str) -> None:
    if not 0.0 < fc < nyquist:
        raise ValidationError(f"{what} {fc} Hz outside (0, {nyquist}) Hz")


def butterworth(x: Waveform, kind: str, cutoff_hz) -> Waveform:
    """Causal 6-pole Butterworth filter (cascade of second-order sections).

    Single forward pass, so the output carries the filter's (small) group
    delay; bandpass uses 3 analog poles per edge for 6 total.
    """
    nyq = x.sample_rate_hz / 2.0
    if kind in ("lowpass", "highpass"):
        _check_edge(float(cutoff_hz), nyq, f"{kind} cutoff")
        sos = scipy.signal.butter(
            FILTER_ORDER, cutoff_hz, btype=kind, fs=x.sample_rate_hz, output="sos"
        )
    elif kind == "bandpass":
        lo, hi = (float(cutoff_hz[0]), float(cutoff_hz[1]))
        _check_edge(lo, nyq, "bandpass low edge")
        _check_edge(hi, nyq, "bandpass high edge")
        if lo >= hi:
            raise ValidationError(f"bandpass needs lo < hi, got {lo} >= {hi}")
        sos = scipy.signal.butter(
            FILTER_ORDER // 2, (lo, hi), btype="bandpass", fs=x.sample_rate_hz,
            output="sos",
        )
    else:
        raise ValidationError(f"unknown filter kind {kind!r}")
    y = scipy.signal.sosfilt(sos, x.samples)
    return Waveform(samples=y, sample_rate_hz=x.sample_rate_hz)


def add_noise(x: Waveform, color: str, snr_db: float, seed: int = 0) -> Waveform:
    """Add white or pink Gaussian noise at exactly the requested SNR.

    Power is measured over the whole utterance. Pink noise is white noise
    whose spectrum is shaped by 1/sqrt(f) (DC bin zeroed) before the power
    normalization, giving the -10 dB/decade PSD slope.
    """
    if color not in ("white", "pink"):
        raise ValidationError(f"noise color must be white or pink, got {color!r}")
    p_signal = float(np.mean(x.samples**2))
    if p_signal <= 0.0:
        raise ValidationError("cannot set an SNR against a silent (zero-power) input")
    n = x.num_samples
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n)
    if color == "pink":
        spectrum = np.fft.rfft(noise)
        k = np.arange(spectrum.shape[0], dtype=np.float64)
        k[0] = 1.0
        spectrum /= np.sqrt(k)
        spectrum[0] = 0.0
        noise = np.fft.irfft(spectrum, n=n)
    p_target = p_signal / (10.0 ** (snr_db / 10.0))
    noise *= math.sqrt(p_target / float(np.mean(noise**2)))
    return Waveform(samples=x.samples + noise, sample_rate_hz=x.sample_rate_hz)


def resample(x: Waveform, target_rate_hz: int) -> Waveform:
    """Rational-ratio polyphase resampling (Kaiser-windowed sinc, ~80 dB stop).

    Output length is round(len * target/source). Identity when the rates
    already match.
    """
    target = int(target_rate_hz)
    if target <= 0:
        raise ValidationError(f"target rate must be positive, got {target_rate_hz}")
    if target == x.sample_rate_hz:
        return x
    ratio = Fraction(target, x.sample_rate_hz)
    up, down = ratio.numerator, ratio.denominator
    if up > MAX_RESAMPLE_FACTOR or down > MAX_RESAMPLE_FACTOR:
        raise ValidationError(
            f"resampling {x.sample_rate_hz} -> {target} Hz needs ratio {up}/{down}; "
            f"factors above {MAX_RESAMPLE_FACTOR} are not supported"
        )
    y = scipy.signal.resample_poly(x.samples, up, down, window=("kaiser", _KAISER_BETA))
    expected = round(Fraction(x.num_samples * up, down))
    return Waveform(samples=y[:expected], sample_rate_hz=target)


def external_command(x: Waveform, command_template: str) -> Waveform:
    """Round-trip the waveform through an external command.

    The template must contain {in} and {out}; it is run without a shell after
    substitution. The input is written as a float32 WAV; if the tool returns a
    different sample rate the result is resampled back to the input rate.
    """
    if "{in}" not in command_template or "{out}" not in command_template:
        raise ValidationError("command template must contain both {in} and {out}")
    with tempfile.TemporaryDirectory(prefix="lss-ext-") as tmp:
        in_path = os.path.join(tmp, "in.wav")
        out_path = os.path.join(tmp, "out.wav")
        write_wav(x, in_path, fmt="float32")
        argv = shlex.split(
            command_template.replace("{in}", in_path).replace("{out}", out_path)
        )
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except FileNotFoundError:
            raise ExternalToolError(f"external tool not found: {argv[0]!r}")
        if proc.returncode != 0:
            detail = proc.stderr.strip() or proc.stdout.strip()
            raise ExternalToolError(
                f"external command exited {proc.returncode}: {detail[:500]}"
            )
        if not os.path.exists(out_path):
            raise ExternalToolError("external command produced no {out} file")
        try:
            y = read_wav(out_path)
        except (FormatError, ValidationError) as exc:
            raise ExternalToolError(f"external command output unreadable: {exc}")
    if y.sample_rate_hz != x.sample_rate_hz:
        y = resample(y, x.sample_rate_hz)
    return y


def apply_manipulation(x: Waveform, spec: ManipulationSpec) -> Waveform:
    if spec.kind in ("lowpass", "highpass"):
        return butterworth(x, spec.kind, spec.cutoff_hz)
    if spec.kind == "bandpass":
        return butterworth(x, "bandpass", spec.band_hz)
    if spec.kind == "white_noise":
        return add_noise(x, "white", spec.snr_db, spec.rng_seed)
    if spec.kind == "pink_noise":
        return add_noise(x, "pink", spec.snr_db, spec.rng_seed)
    if spec.kind == "resample":
        return resample(x, spec.target_rate_hz)
    return external_command(x, spec.command)

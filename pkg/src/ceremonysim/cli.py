"""Command-line front end.

Each subcommand is a thin wrapper over one library operation. Usage and
domain errors exit nonzero with a one-line diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .audio import read_wav, write_wav
from .cepstral import CepstralParams, mcd_spliced_vs_original
from .codes import IdentityKey, derive_security_code, format_code, parse_code
from .errors import CeremonySimError, SegmentationCountError
from .harness import execute_attack, load_scenario
from .reporting import emit_plot_data, render_table, run_experiment
from .splicing import (
    LabeledSpan,
    SegmentationParams,
    detect_voiced_spans,
    load_fsdd_corpus,
    read_span_file,
    synthesize_code_audio,
    write_span_file,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ceremonysim",
        description=(
            "Simulate group-E2EE meeting authentication ceremonies and "
            "digit-splicing session-injection attacks."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive-code", help="derive a security code from a host identity key")
    p.add_argument("--key-hex", required=True, metavar="HEX64",
                   help="host public identity key as 64 hex characters")

    p = sub.add_parser("segment", help="split a recording into voiced utterances")
    p.add_argument("--in", dest="infile", required=True, help="input WAV file")
    p.add_argument("--expected", type=int, required=True, help="required utterance count")
    p.add_argument("--out-dir", help="write each utterance as a WAV here")
    p.add_argument("--code", help="digit labels for the utterances (40-digit code)")
    p.add_argument("--spans-out", help="write labeled spans here (needs --code)")
    p.add_argument("--frame-ms", type=float, default=25.0)
    p.add_argument("--hop-ms", type=float, default=10.0)
    p.add_argument("--threshold-ratio", type=float, default=0.1)
    p.add_argument("--min-gap-ms", type=float, default=100.0)
    p.add_argument("--min-utterance-ms", type=float, default=80.0)

    p = sub.add_parser("synthesize-code", help="splice corpus snippets into a code announcement")
    p.add_argument("--library", required=True, help="FSDD-style corpus directory")
    p.add_argument("--speaker", help="speaker id (optional when the corpus has one speaker)")
    p.add_argument("--code", required=True, help="40-digit code to speak")
    p.add_argument("--gap-ms", type=float, default=150.0)
    p.add_argument("--out", required=True, help="output WAV path")
    p.add_argument("--spans-out", help="write ground-truth spans here")

    p = sub.add_parser("mcd", help="mel-cepstral distortion between two span-annotated recordings")
    p.add_argument("original_wav")
    p.add_argument("original_spans")
    p.add_argument("spliced_wav")
    p.add_argument("spliced_spans")

    p = sub.add_parser("simulate", help="run one attack scenario")
    p.add_argument("--config", required=True, help="scenario config file")
    p.add_argument("--seed", type=int, help="override the scenario master seed")
    p.add_argument("--out", help="also write the outcome record to this file")

    p = sub.add_parser("report", help="run the speaker x channel experiment sweep")
    p.add_argument("--config", required=True, help="scenario config file with a [corpus] section")
    p.add_argument("--seed", type=int, help="override the scenario master seed")
    p.add_argument("--out-dir", default=".", help="directory for report.csv / report.txt")

    p = sub.add_parser("plot-data", help="emit waveform and spectrum data files")
    p.add_argument("--in", dest="infile", required=True, help="input WAV file")
    p.add_argument("--out-prefix", required=True, help="output path prefix")

    return parser


def _cmd_derive_code(args) -> int:
    code = derive_security_code(IdentityKey.from_hex(args.key_hex))
    print(format_code(code))
    return 0


def _cmd_segment(args) -> int:
    clip = read_wav(args.infile)
    params = SegmentationParams(
        frame_ms=args.frame_ms,
        hop_ms=args.hop_ms,
        threshold_ratio=args.threshold_ratio,
        min_gap_ms=args.min_gap_ms,
        min_utterance_ms=args.min_utterance_ms,
    )
    spans = detect_voiced_spans(clip, params)
    if len(spans) != args.expected:
        raise SegmentationCountError(len(spans), args.expected)
    if args.spans_out and not args.code:
        raise CeremonySimError("--spans-out requires --code for digit labels")
    if args.code:
        code = parse_code(args.code)
        if len(spans) != len(code.digits):
            raise CeremonySimError(
                f"{len(spans)} utterances cannot be labeled with {len(code.digits)} digits"
            )
        labeled = [
            LabeledSpan(s, e, d) for (s, e), d in zip(spans, code.digits)
        ]
        if args.spans_out:
            write_span_file(labeled, args.spans_out)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, (s, e) in enumerate(spans):
            write_wav(clip.slice(s, e), out_dir / f"utterance_{i:02d}.wav")
    print(f"utterances={len(spans)}")
    return 0


def _pick_speaker(corpus, speaker):
    if speaker is not None:
        if speaker not in corpus:
            raise CeremonySimError(
                f"speaker {speaker!r} not in corpus (have: {', '.join(sorted(corpus))})"
            )
        return speaker
    if len(corpus) == 1:
        return next(iter(corpus))
    raise CeremonySimError(
        f"corpus has {len(corpus)} speakers; pick one with --speaker"
    )


def _cmd_synthesize_code(args) -> int:
    corpus = load_fsdd_corpus(args.library)
    speaker = _pick_speaker(corpus, args.speaker)
    code = parse_code(args.code)
    clip, spans = synthesize_code_audio(corpus[speaker], code, args.gap_ms)
    write_wav(clip, args.out)
    if args.spans_out:
        write_span_file(spans, args.spans_out)
    print(f"wrote {args.out} ({clip.duration_seconds:.2f}s, 40 digits)")
    return 0


def _cmd_mcd(args) -> int:
    original = read_wav(args.original_wav)
    spliced = read_wav(args.spliced_wav)
    original_spans = read_span_file(args.original_spans)
    spliced_spans = read_span_file(args.spliced_spans)
    per_digit, mean = mcd_spliced_vs_original(
        original, original_spans, spliced, spliced_spans, CepstralParams()
    )
    for span, value in zip(spliced_spans, per_digit):
        print(f"digit={span.digit} mcd={value:.2f}")
    print(f"mean_mcd={mean:.2f}")
    return 0


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.config)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    outcome = execute_attack(scenario)
    record = outcome.to_record()
    print(record)
    if args.out:
        Path(args.out).write_text(record + "\n", encoding="ascii")
    return 0


def _cmd_report(args) -> int:
    rows, _ = run_experiment(args.config, args.out_dir, seed=args.seed)
    sys.stdout.write(render_table(rows))
    return 0


def _cmd_plot_data(args) -> int:
    clip = read_wav(args.infile)
    emit_plot_data(clip, args.out_prefix)
    return 0


_COMMANDS = {
    "derive-code": _cmd_derive_code,
    "segment": _cmd_segment,
    "synthesize-code": _cmd_synthesize_code,
    "mcd": _cmd_mcd,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
    "plot-data": _cmd_plot_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CeremonySimError as exc:
        print(f"{exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Experiment runner and table/plot-data emitters.

The experiment sweeps every corpus speaker through both capture channels
with baseline mitigation and tabulates one row per cell, mirroring the
objective-evaluation tables: codes, code size, recording tool, and the
mean MCD rendered to two decimals.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .audio import AudioClip
from .cepstral import CepstralParams, frame_signal
from .errors import IoError
from .harness import AttackOutcome, execute_attack, load_scenario, subseed
from .splicing import load_fsdd_corpus

CHANNEL_LABELS = {"lossless": "Lossless", "phone": "Phone"}

REPORT_FIELDS = (
    "speaker_id",
    "speaker_language_or_accent",
    "original_code",
    "reordered_code",
    "code_size",
    "recording_tool",
    "mcd",
    "status",
)


@dataclass(frozen=True)
class ReportRow:
    """One speaker x channel cell of the experiment table."""

    speaker_id: str
    speaker_language_or_accent: str
    original_code: str
    reordered_code: str
    code_size: int
    recording_tool: str
    mcd: str
    status: str

    def values(self) -> tuple[str, ...]:
        return (
            self.speaker_id,
            self.speaker_language_or_accent,
            self.original_code,
            self.reordered_code,
            str(self.code_size),
            self.recording_tool,
            self.mcd,
            self.status,
        )


def row_from_outcome(outcome: AttackOutcome, accent_label: str) -> ReportRow:
    return ReportRow(
        speaker_id=outcome.speaker_id,
        speaker_language_or_accent=accent_label,
        original_code=outcome.original_code,
        reordered_code=outcome.injected_code,
        code_size=40,
        recording_tool=CHANNEL_LABELS[outcome.channel],
        mcd="" if outcome.mean_mcd is None else f"{outcome.mean_mcd:.2f}",
        status="ok" if outcome.success else str(outcome.failure_reason),
    )


def run_experiment(config_path, out_dir=".", seed=None):
    """Run the speaker x channel sweep and write report.csv / report.txt.

    Every cell runs the attack with baseline mitigation; failed cells
    (e.g. an incomplete speaker library) become annotated rows, not
    crashes. ``seed`` overrides the config's master seed. Returns
    ``(rows, outcomes)``.
    """
    config = load_scenario(config_path)
    if seed is not None:
        config = replace(config, seed=seed)
    corpus = load_fsdd_corpus(config.corpus_dir)
    out_dir = Path(out_dir)

    rows = []
    outcomes = []
    for speaker in sorted(corpus):
        for channel in ("lossless", "phone"):
            scenario = replace(
                config,
                victim_speaker=speaker,
                channel=channel,
                mitigation_mode="none",
                seed=subseed(config.seed, f"cell:{speaker}:{channel}"),
            )
            outcome = execute_attack(scenario, corpus)
            outcomes.append(outcome)
            rows.append(row_from_outcome(outcome, config.accent_label))

    write_report_files(rows, out_dir)
    return rows, outcomes


def write_report_files(rows, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    csv_path = out_dir / "report.csv"
    txt_path = out_dir / "report.txt"
    try:
        csv_path.write_text(render_csv(rows), encoding="ascii")
        txt_path.write_text(render_table(rows), encoding="ascii")
    except OSError as exc:
        raise IoError(f"cannot write report files in {out_dir}: {exc}") from exc
    return csv_path, txt_path


def render_csv(rows) -> str:
    lines = [",".join(REPORT_FIELDS)]
    lines.extend(",".join(row.values()) for row in rows)
    return "\n".join(lines) + "\n"


def render_table(rows) -> str:
    """Human-readable aligned table."""
    table = [REPORT_FIELDS] + [row.values() for row in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(REPORT_FIELDS))]
    lines = []
    for r, row in enumerate(table):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def emit_plot_data(clip: AudioClip, out_prefix, params: CepstralParams | None = None):
    """Write waveform and spectrum data files for a clip.

    ``<prefix>.time.csv`` holds ``sample_index,time_s,amplitude`` rows;
    ``<prefix>.freq.csv`` holds ``frame_index,bin_hz,magnitude`` rows using
    the cepstral analysis framing (frame, hop, Hamming window, FFT size).
    Numeric data only, no rendering.
    """
    params = params or CepstralParams()
    prefix = str(out_prefix)
    time_path = Path(prefix + ".time.csv")
    freq_path = Path(prefix + ".freq.csv")

    rate = clip.sample_rate
    time_lines = ["sample_index,time_s,amplitude"]
    for i, amp in enumerate(clip.samples):
        time_lines.append(f"{i},{i / rate:.6f},{amp:.8f}")

    freq_lines = ["frame_index,bin_hz,magnitude"]
    frame_len = params.frame_len(rate)
    if len(clip) >= frame_len:
        frames = frame_signal(clip.samples, frame_len, params.hop_len(rate))
        frames = frames * np.hamming(frame_len)
        magnitude = np.abs(np.fft.rfft(frames, n=params.fft_size, axis=1))
        bin_hz = np.arange(magnitude.shape[1]) * rate / params.fft_size
        for t in range(magnitude.shape[0]):
            for k in range(magnitude.shape[1]):
                freq_lines.append(f"{t},{bin_hz[k]:.3f},{magnitude[t, k]:.8e}")

    try:
        time_path.write_text("\n".join(time_lines) + "\n", encoding="ascii")
        freq_path.write_text("\n".join(freq_lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise IoError(f"cannot write plot data {prefix}.*: {exc}") from exc
    return time_path, freq_path

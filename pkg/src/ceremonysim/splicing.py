"""Digit snippets: segmentation of spoken codes, snippet libraries, splicing.

The splice path is sample-exact: every digit span of a synthesized
announcement is bitwise-equal to the library snippet it came from.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioClip, concat_clips, read_wav
from .codes import SecurityCode
from .errors import (
    EmptyInputError,
    IoError,
    LabelCountError,
    MissingDigitError,
    NoUtterancesError,
    SegmentationCountError,
    SpanError,
    SpeakerMixError,
)


class Provenance(enum.Enum):
    CEREMONY_CAPTURE = "ceremony_capture"
    CLOUD_RECORDING = "cloud_recording"
    CONVERSATION_CAPTURE = "conversation_capture"


@dataclass(frozen=True)
class LabeledSpan:
    """Half-open sample range [start_sample, end_sample) labeled with a digit."""

    start_sample: int
    end_sample: int
    digit: int

    def __post_init__(self):
        if self.start_sample < 0 or self.end_sample <= self.start_sample:
            raise SpanError(
                f"invalid span [{self.start_sample}, {self.end_sample})"
            )
        if not 0 <= self.digit <= 9:
            raise SpanError(f"span digit must be 0..9, got {self.digit}")

    @property
    def length(self) -> int:
        return self.end_sample - self.start_sample


@dataclass(frozen=True, eq=False)
class DigitSnippet:
    """One captured utterance of a single digit in one speaker's voice."""

    digit: int
    clip: AudioClip
    speaker_id: str
    provenance: Provenance
    source_session: str = ""

    def __post_init__(self):
        if not 0 <= self.digit <= 9:
            raise ValueError(f"digit must be 0..9, got {self.digit}")
        if len(self.clip) == 0:
            raise EmptyInputError("snippet clip is empty")


@dataclass(frozen=True, eq=False)
class SnippetLibrary:
    """Per-speaker map from digit to the snippet the attacker holds for it."""

    speaker_id: str
    entries: dict[int, DigitSnippet] = field(default_factory=dict)

    def __post_init__(self):
        for digit, snippet in self.entries.items():
            if snippet.digit != digit:
                raise ValueError(f"entry key {digit} holds snippet for {snippet.digit}")
            if snippet.speaker_id != self.speaker_id:
                raise SpeakerMixError(
                    f"library speaker {self.speaker_id!r} vs snippet {snippet.speaker_id!r}"
                )

    def is_complete(self) -> bool:
        """True when all ten digits are present."""
        return all(d in self.entries for d in range(10))

    def missing_digits(self) -> list[int]:
        return [d for d in range(10) if d not in self.entries]

    def merged(self, snippets) -> "SnippetLibrary":
        """New library with extra snippets folded in, existing entries winning."""
        entries = dict(self.entries)
        for snippet in snippets:
            if snippet.speaker_id != self.speaker_id:
                raise SpeakerMixError(
                    f"cannot merge speaker {snippet.speaker_id!r} into {self.speaker_id!r}"
                )
            entries.setdefault(snippet.digit, snippet)
        return SnippetLibrary(self.speaker_id, entries)

    def without_digits(self, digits) -> "SnippetLibrary":
        """Copy of the library with the given digits removed (fault injection)."""
        drop = set(digits)
        return SnippetLibrary(
            self.speaker_id,
            {d: s for d, s in self.entries.items() if d not in drop},
        )


@dataclass(frozen=True)
class SegmentationParams:
    """Energy-endpointing parameters; defaults suit 8 kHz spoken digits."""

    frame_ms: float = 25.0
    hop_ms: float = 10.0
    threshold_ratio: float = 0.1
    min_gap_ms: float = 100.0
    min_utterance_ms: float = 80.0

    def __post_init__(self):
        if self.frame_ms <= 0 or self.hop_ms <= 0:
            raise ValueError("frame_ms and hop_ms must be positive")
        if not 0 < self.threshold_ratio <= 1:
            raise ValueError("threshold_ratio must lie in (0, 1]")


def detect_voiced_spans(clip: AudioClip, params: SegmentationParams | None = None):
    """Locate voiced regions as (start, end) sample index pairs.

    Frames the signal, thresholds per-frame RMS against the loudest frame,
    refines each region boundary to the first/last audible sample, merges
    regions separated by less than min_gap_ms, and drops regions shorter
    than min_utterance_ms.
    """
    params = params or SegmentationParams()
    rate = clip.sample_rate
    n = len(clip)
    if n == 0:
        raise NoUtterancesError("empty clip")
    frame_len = max(1, int(round(params.frame_ms * rate / 1000.0)))
    hop = max(1, int(round(params.hop_ms * rate / 1000.0)))

    x = clip.samples
    if n < frame_len:
        frame_rms = np.array([np.sqrt(np.mean(x**2))])
        frame_len = n
    else:
        n_frames = (n - frame_len) // hop + 1
        idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
        frame_rms = np.sqrt(np.mean(x[idx] ** 2, axis=1))

    peak = float(frame_rms.max())
    if peak == 0.0:
        raise NoUtterancesError("clip is silent")
    voiced = frame_rms >= params.threshold_ratio * peak

    # voiced frame runs -> raw sample spans
    raw = []
    start = None
    for i, v in enumerate(voiced):
        if v and start is None:
            start = i
        elif not v and start is not None:
            raw.append((start * hop, (i - 1) * hop + frame_len))
            start = None
    if start is not None:
        raw.append((start * hop, min((len(voiced) - 1) * hop + frame_len, n)))

    # frame-quantized edges can overshoot the utterance by most of a frame;
    # pull each edge in to the first/last sample audible within the span
    refined = []
    for s, e in raw:
        e = min(e, n)
        seg = np.abs(x[s:e])
        floor = seg.max() * 1e-3
        hot = np.nonzero(seg >= floor)[0]
        refined.append((s + int(hot[0]), s + int(hot[-1]) + 1))

    min_gap = params.min_gap_ms * rate / 1000.0
    merged = [refined[0]]
    for s, e in refined[1:]:
        if s - merged[-1][1] < min_gap:
            merged[-1] = (merged[-1][0], e)
        else:
            merged.append((s, e))

    min_len = params.min_utterance_ms * rate / 1000.0
    spans = [(s, e) for s, e in merged if e - s >= min_len]
    if not spans:
        raise NoUtterancesError("no utterance exceeded the minimum length")
    return spans


def segment_utterances(
    clip: AudioClip,
    expected_count: int,
    params: SegmentationParams | None = None,
) -> list[AudioClip]:
    """Split a recording into exactly expected_count voiced utterances.

    Raises SegmentationCountError when the detected count differs and
    NoUtterancesError on silent input.
    """
    spans = detect_voiced_spans(clip, params)
    if len(spans) != expected_count:
        raise SegmentationCountError(len(spans), expected_count)
    return [clip.slice(s, e) for s, e in spans]


def label_snippets(
    clips,
    code: SecurityCode,
    speaker_id: str,
    provenance: Provenance,
    source_session: str = "",
) -> list[DigitSnippet]:
    """Label the i-th clip with the i-th code digit."""
    clips = list(clips)
    if len(clips) != len(code.digits):
        raise LabelCountError(
            f"{len(clips)} clips cannot be labeled with {len(code.digits)} digits"
        )
    return [
        DigitSnippet(digit, clip, speaker_id, provenance, source_session)
        for clip, digit in zip(clips, code.digits)
    ]


def build_library(snippets) -> SnippetLibrary:
    """Collect snippets into a library, keeping the earliest per digit."""
    snippets = list(snippets)
    if not snippets:
        raise EmptyInputError("cannot build a library from no snippets")
    speaker = snippets[0].speaker_id
    return SnippetLibrary(speaker, {}).merged(snippets)


def splice_digit_sequence(library: SnippetLibrary, digits, gap_ms: float = 150.0):
    """Splice library snippets for an arbitrary digit sequence.

    Returns the spliced clip and exact per-digit spans; every span's samples
    are bitwise-equal to the source snippet. Raises MissingDigitError for
    the first requested digit absent from the library.
    """
    digits = tuple(digits)
    for digit in digits:
        if digit not in library.entries:
            raise MissingDigitError(digit)
    clips = [library.entries[d].clip for d in digits]
    spliced = concat_clips(clips, gap_ms)
    gap = int(round(gap_ms * spliced.sample_rate / 1000.0))
    spans = []
    offset = 0
    for clip, digit in zip(clips, digits):
        spans.append(LabeledSpan(offset, offset + len(clip), digit))
        offset += len(clip) + gap
    return spliced, spans


def synthesize_code_audio(
    library: SnippetLibrary,
    code: SecurityCode,
    gap_ms: float = 150.0,
):
    """Splice library snippets into an announcement of a 40-digit code."""
    return splice_digit_sequence(library, code.digits, gap_ms)


def harvest_labeled_recording(
    clip: AudioClip,
    spans,
    speaker_id: str,
    source_session: str = "",
) -> list[DigitSnippet]:
    """Extract labeled spans of a stored recording as cloud-harvested snippets."""
    snippets = []
    for span in spans:
        if span.end_sample > len(clip):
            raise SpanError(
                f"span end {span.end_sample} beyond clip length {len(clip)}"
            )
        snippets.append(
            DigitSnippet(
                span.digit,
                clip.slice(span.start_sample, span.end_sample),
                speaker_id,
                Provenance.CLOUD_RECORDING,
                source_session,
            )
        )
    return snippets


_FSDD_NAME = re.compile(r"^(?P<digit>\d)_(?P<speaker>[^_]+)_(?P<index>\d+)\.wav$")


def load_fsdd_corpus(directory) -> dict[str, SnippetLibrary]:
    """Load a directory of ``<digit>_<speaker>_<index>.wav`` files.

    Builds one library per speaker; the first file per digit in sorted
    filename order wins. Files not matching the naming convention are
    ignored.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IoError(f"corpus directory not found: {directory}")
    per_speaker: dict[str, list[DigitSnippet]] = {}
    for path in sorted(directory.iterdir()):
        m = _FSDD_NAME.match(path.name)
        if not m:
            continue
        clip = read_wav(path)
        snippet = DigitSnippet(
            int(m.group("digit")),
            clip,
            m.group("speaker"),
            Provenance.CEREMONY_CAPTURE,
            source_session="corpus",
        )
        per_speaker.setdefault(m.group("speaker"), []).append(snippet)
    if not per_speaker:
        raise IoError(f"no corpus files matching <digit>_<speaker>_<index>.wav in {directory}")
    return {spk: build_library(snips) for spk, snips in sorted(per_speaker.items())}


def write_span_file(spans, path) -> None:
    """Write spans as ``start_sample,end_sample,digit`` lines."""
    try:
        with open(path, "w", encoding="ascii") as fh:
            for span in spans:
                fh.write(f"{span.start_sample},{span.end_sample},{span.digit}\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_span_file(path) -> list[LabeledSpan]:
    """Read spans written by :func:`write_span_file`."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    spans = []
    for lineno, line in enumerate(lines, 1):
        parts = line.split(",")
        if len(parts) != 3:
            raise SpanError(f"{path}:{lineno}: expected start,end,digit")
        try:
            start, end, digit = (int(p) for p in parts)
        except ValueError as exc:
            raise SpanError(f"{path}:{lineno}: non-integer field") from exc
        spans.append(LabeledSpan(start, end, digit))
    return spans

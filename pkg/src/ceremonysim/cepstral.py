"""Mel-cepstral features and the mel-cepstral distortion (MCD) metric.

MCD is the dB-scaled Euclidean distance between 25-dimensional cepstral
vectors, excluding dimension 0 (loudness), averaged over positionally
paired frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .audio import AudioClip
from .errors import AlignmentError, PairingError, TooShortError

NUM_COEFFS = 25  # cepstral dimensions d = 0..24

_MCD_SCALE = 10.0 / math.log(10.0)


@dataclass(frozen=True)
class CepstralParams:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    fft_size: int = 512
    mel_filters: int = 26
    num_coeffs: int = NUM_COEFFS
    preemphasis: float = 0.97
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.num_coeffs != NUM_COEFFS:
            raise ValueError(f"num_coeffs is fixed at {NUM_COEFFS}")
        if self.mel_filters < self.num_coeffs:
            raise ValueError("mel_filters must be >= num_coeffs")
        if self.frame_ms <= 0 or self.hop_ms <= 0 or self.fft_size <= 0:
            raise ValueError("frame_ms, hop_ms, fft_size must be positive")

    def frame_len(self, sample_rate: int) -> int:
        return int(round(self.frame_ms * sample_rate / 1000.0))

    def hop_len(self, sample_rate: int) -> int:
        return int(round(self.hop_ms * sample_rate / 1000.0))


@dataclass(frozen=True, eq=False)
class CepstralFrames:
    """Per-frame cepstral coefficient vectors (frame count x 25)."""

    frames: np.ndarray
    params: CepstralParams
    sample_rate: int

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)
        if frames.ndim != 2 or frames.shape[1] != NUM_COEFFS:
            raise ValueError(f"frames must be (n, {NUM_COEFFS})")
        if frames.size and not np.all(np.isfinite(frames)):
            raise ValueError("cepstral coefficients must be finite")

    def __len__(self) -> int:
        return self.frames.shape[0]

    def prefix(self, n: int) -> "CepstralFrames":
        return CepstralFrames(self.frames[:n].copy(), self.params, self.sample_rate)


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int, fft_size: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank matrix of shape (n_filters, fft_size//2 + 1)."""
    low_mel = _hz_to_mel(0.0)
    high_mel = _hz_to_mel(sample_rate / 2.0)
    mel_points = np.linspace(low_mel, high_mel, n_filters + 2)
    bins = np.floor((fft_size + 1) * _mel_to_hz(mel_points) / sample_rate).astype(int)
    bank = np.zeros((n_filters, fft_size // 2 + 1))
    for j in range(n_filters):
        left, center, right = bins[j], bins[j + 1], bins[j + 2]
        for i in range(left, center):
            bank[j, i] = (i - left) / (center - left)
        for i in range(center, right):
            bank[j, i] = (right - i) / (right - center)
    return bank


def frame_signal(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Full frames only: count = floor((n - frame_len)/hop) + 1."""
    n = samples.size
    if n < frame_len:
        raise TooShortError(f"{n} samples < one frame of {frame_len}")
    n_frames = (n - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def extract_mcep(clip: AudioClip, params: CepstralParams | None = None) -> CepstralFrames:
    """Extract 25-dimensional mel-cepstral vectors, one per frame.

    Pipeline: preemphasis, Hamming window, fft_size-point magnitude
    spectrum, mel filterbank energies floored at log_floor, natural log,
    orthonormal DCT-II, coefficients 0..24. Deterministic.
    """
    params = params or CepstralParams()
    rate = clip.sample_rate
    frame_len = params.frame_len(rate)
    if frame_len > params.fft_size:
        raise ValueError(
            f"frame of {frame_len} samples exceeds fft_size {params.fft_size}"
        )
    x = clip.samples
    if len(clip) < frame_len:
        raise TooShortError(f"clip of {len(clip)} samples < one {frame_len}-sample frame")
    emphasized = np.concatenate(([x[0]], x[1:] - params.preemphasis * x[:-1]))
    frames = frame_signal(emphasized, frame_len, params.hop_len(rate))
    frames = frames * np.hamming(frame_len)
    magnitude = np.abs(np.fft.rfft(frames, n=params.fft_size, axis=1))
    bank = mel_filterbank(params.mel_filters, params.fft_size, rate)
    energies = magnitude @ bank.T
    log_energies = np.log(np.maximum(energies, params.log_floor))
    coeffs = dct(log_energies, type=2, axis=1, norm="ortho")[:, : params.num_coeffs]
    return CepstralFrames(coeffs, params, rate)


def mcd_frames(a: CepstralFrames, b: CepstralFrames) -> float:
    """Mean per-frame MCD in dB between positionally paired frames.

    Per frame: (10/ln 10) * sqrt(2 * sum_{d=1..24} (a_d - b_d)^2);
    dimension 0 is excluded. Zero iff all paired d=1..24 coefficients match.
    """
    if a.params != b.params:
        raise AlignmentError("cepstral params differ")
    if len(a) != len(b):
        raise AlignmentError(f"frame counts differ: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise AlignmentError("no frames to compare")
    diff = a.frames[:, 1:] - b.frames[:, 1:]
    per_frame = _MCD_SCALE * np.sqrt(2.0 * np.sum(diff**2, axis=1))
    return float(np.mean(per_frame))


def mcd_spliced_vs_original(
    original_capture: AudioClip,
    original_spans,
    spliced: AudioClip,
    spliced_spans,
    params: CepstralParams | None = None,
):
    """Per-digit and mean MCD of a spliced announcement against its source.

    Each spliced digit span is paired with the first original span carrying
    the same digit. When a spliced span was cut from that source span the
    comparison is exact and yields 0.0. Spans of unequal length (snippets
    from another capture) are compared over the shorter frame-count prefix.

    Returns ``(per_digit, mean)`` where per_digit lists one value per
    spliced span, in order.
    """
    params = params or CepstralParams()
    source_by_digit: dict[int, object] = {}
    for span in original_spans:
        source_by_digit.setdefault(span.digit, span)

    per_digit = []
    for span in spliced_spans:
        source = source_by_digit.get(span.digit)
        if source is None:
            raise PairingError(span.digit)
        spliced_mcep = extract_mcep(
            spliced.slice(span.start_sample, span.end_sample), params
        )
        source_mcep = extract_mcep(
            original_capture.slice(source.start_sample, source.end_sample), params
        )
        n = min(len(spliced_mcep), len(source_mcep))
        if n == 0:
            raise AlignmentError("span too short for one frame")
        per_digit.append(mcd_frames(spliced_mcep.prefix(n), source_mcep.prefix(n)))
    if not per_digit:
        raise AlignmentError("no spans to compare")
    return per_digit, float(np.mean(per_digit))

"""Mono PCM audio: clips, WAV I/O, concatenation, and capture-channel models.

The canonical on-disk format is PCM 16-bit signed little-endian mono WAV with
a 44-byte header and exactly one data chunk. Files outside that profile are
rejected, never coerced.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, IoError, RateMismatchError, WavFormatError

PCM_SCALE = 32768.0


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Immutable mono clip: float samples in [-1, +1] at a fixed rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        if samples.size and (np.max(samples) > 1.0 or np.min(samples) < -1.0):
            raise ValueError("samples must lie in [-1, +1]")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate

    def slice(self, start: int, end: int) -> "AudioClip":
        """Sub-clip over [start, end) sample indices."""
        return AudioClip(self.samples[start:end], self.sample_rate)


def silence(n_samples: int, sample_rate: int) -> AudioClip:
    return AudioClip(np.zeros(n_samples), sample_rate)


class ChannelKind(enum.Enum):
    LOSSLESS = "lossless"
    PHONE = "phone"


@dataclass(frozen=True)
class ChannelModel:
    """Recording-channel degradation model.

    Lossless copies samples verbatim (direct software capture). Phone
    resamples to ``target_rate`` by linear interpolation and adds seeded
    white noise at ``snr_db`` (external-device capture). ``snr_db`` of
    +inf means no noise.
    """

    kind: ChannelKind
    target_rate: int = 0
    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if self.kind is ChannelKind.PHONE:
            if self.target_rate <= 0:
                raise ValueError("phone channel requires target_rate > 0")
            if math.isnan(self.snr_db) or self.snr_db == -math.inf:
                raise ValueError("phone channel requires a real or +inf snr_db")

    @classmethod
    def lossless(cls) -> "ChannelModel":
        return cls(ChannelKind.LOSSLESS)

    @classmethod
    def phone(cls, target_rate: int, snr_db: float, seed: int = 0) -> "ChannelModel":
        return cls(ChannelKind.PHONE, target_rate, snr_db, seed)


def read_wav(path) -> AudioClip:
    """Decode a canonical PCM16 mono WAV file.

    Samples are scaled by 1/32768. Raises IoError when the file cannot be
    read and WavFormatError when it is not PCM16 mono with one data chunk.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    riff_size = struct.unpack_from("<I", data, 4)[0]
    if riff_size + 8 > len(data):
        raise WavFormatError(f"{path}: truncated RIFF payload")

    fmt = None
    pcm = None
    data_chunks = 0
    pos = 12
    end = 8 + riff_size
    while pos + 8 <= end:
        chunk_id = data[pos : pos + 4]
        chunk_size = struct.unpack_from("<I", data, pos + 4)[0]
        body = data[pos + 8 : pos + 8 + chunk_size]
        if len(body) != chunk_size:
            raise WavFormatError(f"{path}: truncated {chunk_id!r} chunk")
        if chunk_id == b"fmt ":
            if fmt is not None:
                raise WavFormatError(f"{path}: multiple fmt chunks")
            if chunk_size < 16:
                raise WavFormatError(f"{path}: fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            data_chunks += 1
            pcm = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if data_chunks != 1:
        raise WavFormatError(f"{path}: expected exactly one data chunk, found {data_chunks}")
    tag, channels, rate, byte_rate, block_align, bits = fmt
    if tag != 1:
        raise WavFormatError(f"{path}: not PCM (format tag {tag})")
    if channels != 1:
        raise WavFormatError(f"{path}: expected mono, got {channels} channels")
    if bits != 16:
        raise WavFormatError(f"{path}: expected 16 bits/sample, got {bits}")
    if block_align != 2 or byte_rate != rate * 2:
        raise WavFormatError(f"{path}: inconsistent fmt fields")
    if len(pcm) % 2:
        raise WavFormatError(f"{path}: odd data chunk length")

    ints = np.frombuffer(pcm, dtype="<i2")
    return AudioClip(ints.astype(np.float64) / PCM_SCALE, rate)


def write_wav(clip: AudioClip, path) -> None:
    """Write a clip as PCM16 mono WAV with the canonical 44-byte header.

    Samples are rounded to the nearest integer and clamped to
    [-32768, 32767].
    """
    ints = np.clip(np.rint(clip.samples * PCM_SCALE), -32768, 32767).astype("<i2")
    pcm = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(pcm),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        clip.sample_rate,
        clip.sample_rate * 2,
        2,
        16,
        b"data",
        len(pcm),
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(pcm)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def concat_clips(clips, gap_ms: float = 0.0) -> AudioClip:
    """Concatenate clips in order with a silent gap between consecutive clips.

    The gap is round(gap_ms * rate / 1000) zero samples. All clips must share
    one sample rate.
    """
    clips = list(clips)
    if not clips:
        raise EmptyInputError("no clips to concatenate")
    if gap_ms < 0:
        raise ValueError("gap_ms must be nonnegative")
    rate = clips[0].sample_rate
    for clip in clips:
        if clip.sample_rate != rate:
            raise RateMismatchError(
                f"mixed sample rates: {clip.sample_rate} vs {rate}"
            )
    gap = int(round(gap_ms * rate / 1000.0))
    pieces = []
    for i, clip in enumerate(clips):
        if i and gap:
            pieces.append(np.zeros(gap))
        pieces.append(clip.samples)
    return AudioClip(np.concatenate(pieces) if pieces else np.zeros(0), rate)


def resample_linear(clip: AudioClip, target_rate: int) -> AudioClip:
    """Resample by linear interpolation. Identity when rates already match."""
    if target_rate == clip.sample_rate:
        return AudioClip(clip.samples, clip.sample_rate)
    n_in = len(clip)
    if n_in == 0:
        return AudioClip(np.zeros(0), target_rate)
    n_out = max(1, int(round(n_in * target_rate / clip.sample_rate)))
    positions = np.arange(n_out) * (clip.sample_rate / target_rate)
    positions = np.clip(positions, 0, n_in - 1)
    out = np.interp(positions, np.arange(n_in), clip.samples)
    return AudioClip(out, target_rate)


def apply_channel(clip: AudioClip, model: ChannelModel) -> AudioClip:
    """Run a clip through a capture channel.

    Lossless returns a sample-identical copy. Phone resamples then adds
    zero-mean white noise scaled so the measured SNR equals ``snr_db``
    (signal power is the mean square of the resampled clip); deterministic
    for a fixed seed. Output is clamped to [-1, +1].
    """
    if model.kind is ChannelKind.LOSSLESS:
        return AudioClip(clip.samples, clip.sample_rate)

    out = resample_linear(clip, model.target_rate)
    if model.snr_db == math.inf or len(out) == 0:
        return out
    signal_power = float(np.mean(out.samples**2))
    if signal_power == 0.0:
        return out
    rng = np.random.default_rng(model.seed)
    noise = rng.standard_normal(len(out))
    noise_power = signal_power / 10.0 ** (model.snr_db / 10.0)
    noise *= math.sqrt(noise_power / np.mean(noise**2))
    noisy = np.clip(out.samples + noise, -1.0, 1.0)
    return AudioClip(noisy, out.sample_rate)


def rms(clip: AudioClip) -> float:
    """Root mean square of the samples."""
    if len(clip) == 0:
        raise EmptyInputError("rms of an empty clip")
    return float(np.sqrt(np.mean(clip.samples**2)))

"""Audio to log-Mel spectrogram, one fixed-length window at a time."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DataError, NonFiniteSampleError, SampleRateMismatchError


@dataclass(frozen=True)
class SpectrogramConfig:
    sample_rate: int = 16000
    frame_hop: int = 128
    fft_size: int = 2048
    window_length: int | None = None  # defaults to fft_size
    mel_bins: int = 512
    fmin: float = 20.0
    fmax: float = 8000.0
    log_floor: float = 1e-6
    segment_seconds: float = 2.048

    def __post_init__(self):
        if self.win_length > self.fft_size:
            raise ValueError("window_length must not exceed fft_size")
        if not 0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise ValueError("need 0 <= fmin < fmax <= Nyquist")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def win_length(self) -> int:
        return self.fft_size if self.window_length is None else self.window_length

    @property
    def segment_samples(self) -> int:
        return int(round(self.segment_seconds * self.sample_rate))

    @property
    def frames_per_segment(self) -> int:
        return math.ceil(self.segment_samples / self.frame_hop)


DEFAULT_SPECTROGRAM = SpectrogramConfig()


@dataclass(frozen=True)
class AudioSegment:
    samples: np.ndarray
    sample_rate: int

    @classmethod
    def from_array(cls, samples, sample_rate: int) -> AudioSegment:
        """Mono float64 audio; 2-D input of shape (samples, channels) is averaged."""
        x = np.asarray(samples, dtype=np.float64)
        if x.ndim == 2:
            x = x.mean(axis=1)
        elif x.ndim != 1:
            raise ValueError(f"expected 1-D or 2-D audio, got shape {x.shape}")
        return cls(x, int(sample_rate))


def hann_window(n: int) -> np.ndarray:
    """Hann window without the zero end points (a length n+2 Hann, trimmed).

    Keeping the first tap non-zero means an impulse at the start of a frame
    still registers in that frame.
    """
    k = np.arange(1, n + 1)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / (n + 1))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def _triangle_cumulative(x: np.ndarray, lo: float, mid: float, hi: float) -> np.ndarray:
    """Integral from -inf to x of a unit-height triangle on [lo, hi] peaking at mid."""
    rise = np.clip(x, lo, mid) - lo
    fall = np.clip(x, mid, hi) - mid
    out = rise ** 2 / (2.0 * (mid - lo))
    out += fall - fall ** 2 / (2.0 * (hi - mid))
    return out


@lru_cache(maxsize=8)
def mel_filterbank(config: SpectrogramConfig = DEFAULT_SPECTROGRAM) -> np.ndarray:
    """Triangular HTK-scale filters, shape (mel_bins, fft_size // 2 + 1).

    Each weight is the mean of the triangle over the FFT bin's frequency
    span rather than a point sample at the bin centre, so filters narrower
    than one bin still get non-zero weight.
    """
    n_freqs = config.fft_size // 2 + 1
    bin_hz = config.sample_rate / config.fft_size
    centers = np.arange(n_freqs) * bin_hz
    left, right = centers - bin_hz / 2, centers + bin_hz / 2
    edges = mel_to_hz(np.linspace(hz_to_mel(config.fmin), hz_to_mel(config.fmax),
                                  config.mel_bins + 2))
    fb = np.empty((config.mel_bins, n_freqs))
    for m in range(config.mel_bins):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        fb[m] = (_triangle_cumulative(right, lo, mid, hi)
                 - _triangle_cumulative(left, lo, mid, hi)) / bin_hz
    fb.setflags(write=False)
    return fb


def frame_audio(audio: AudioSegment, config: SpectrogramConfig = DEFAULT_SPECTROGRAM) -> np.ndarray:
    """Windowed frames, shape (frames, fft_size).

    Frame ``i`` starts at sample ``i * frame_hop``. Audio shorter than one
    segment is zero-padded to a full segment; the tail is zero-padded so the
    last frame is complete.
    """
    if audio.sample_rate != config.sample_rate:
        raise SampleRateMismatchError(
            f"audio at {audio.sample_rate} Hz, config expects {config.sample_rate} Hz"
        )
    x = np.asarray(audio.samples, dtype=np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if not np.all(np.isfinite(x)):
        raise NonFiniteSampleError("audio contains NaN or infinite samples")
    n = max(len(x), config.segment_samples)
    n_frames = math.ceil(n / config.frame_hop)
    win = config.win_length
    padded = np.zeros((n_frames - 1) * config.frame_hop + win)
    padded[:len(x)] = x
    view = np.lib.stride_tricks.sliding_window_view(padded, win)[::config.frame_hop]
    frames = np.zeros((n_frames, config.fft_size))
    frames[:, :win] = view[:n_frames] * hann_window(win)
    return frames


def power_spectrum(frames: np.ndarray, config: SpectrogramConfig = DEFAULT_SPECTROGRAM) -> np.ndarray:
    spec = np.fft.rfft(frames, n=config.fft_size, axis=-1)
    return spec.real ** 2 + spec.imag ** 2


def log_mel(frames: np.ndarray, config: SpectrogramConfig = DEFAULT_SPECTROGRAM) -> np.ndarray:
    """Natural-log mel power, shape (frames, mel_bins), floored at ``log_floor``."""
    mel = power_spectrum(frames, config) @ mel_filterbank(config).T
    return np.log(np.maximum(mel, config.log_floor))


def spectrogram(audio: AudioSegment, config: SpectrogramConfig = DEFAULT_SPECTROGRAM) -> np.ndarray:
    return log_mel(frame_audio(audio, config), config)


def segment_audio(audio: AudioSegment, config: SpectrogramConfig = DEFAULT_SPECTROGRAM) -> list[AudioSegment]:
    """Cut audio into consecutive full-length segments (last one zero-padded)."""
    size = config.segment_samples
    x = audio.samples
    count = max(1, math.ceil(len(x) / size))
    out = []
    for k in range(count):
        chunk = np.zeros(size)
        part = x[k * size:(k + 1) * size]
        chunk[:len(part)] = part
        out.append(AudioSegment(chunk, audio.sample_rate))
    return out


def segment_spectrograms(audio: AudioSegment,
                         config: SpectrogramConfig = DEFAULT_SPECTROGRAM) -> np.ndarray:
    """Stacked spectrograms, shape (segments, frames_per_segment, mel_bins)."""
    return np.stack([spectrogram(seg, config) for seg in segment_audio(audio, config)])


def dump_tensor(array: np.ndarray) -> bytes:
    """uint32 rank, uint32 dims, then float32 values row-major; all little-endian."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    header = struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape)
    return header + arr.tobytes()


def load_tensor(data: bytes) -> np.ndarray:
    if len(data) < 4:
        raise DataError("truncated tensor header")
    (ndim,) = struct.unpack_from("<I", data, 0)
    if len(data) < 4 + 4 * ndim:
        raise DataError("truncated tensor header")
    dims = struct.unpack_from(f"<{ndim}I", data, 4)
    offset = 4 + 4 * ndim
    count = int(np.prod(dims)) if dims else 1
    if len(data) != offset + 4 * count:
        raise DataError("tensor size does not match header")
    return np.frombuffer(data, dtype="<f4", offset=offset).reshape(dims)

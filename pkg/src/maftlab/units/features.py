"""Frame-level features at 50 frames/s: log-mel, MFCC, or teacher hidden states.

Every extractor yields exactly floor(duration * 50) frames so that feature
rows, discrete targets, and encoder outputs stay aligned sample-for-sample.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, rfft

from ..corpus.audio import TARGET_RATE, AudioRecord
from ..errors import ConfigError, EmptyFeatureError

FPS = 50
HOP = TARGET_RATE // FPS          # 320 samples (20 ms)
WIN = int(0.025 * TARGET_RATE)    # 400 samples (25 ms)
N_FFT = 512
N_MELS = 80
N_MFCC = 13
_LOG_FLOOR = 1e-10


@dataclass
class FrameFeatures:
    segment_id: str
    matrix: np.ndarray            # T x F, float32
    feature_kind: str             # teacher_layer | log_mel | mfcc
    teacher_layer_index: int = None

    @property
    def num_frames(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def num_frames(n_samples: int) -> int:
    return n_samples // HOP


def _frame(samples: np.ndarray) -> np.ndarray:
    """Slice into 25 ms windows hopped by 20 ms, end-padded with zeros so the
    frame count is exactly floor(n / hop)."""
    t = num_frames(len(samples))
    if t == 0:
        raise EmptyFeatureError(f"audio too short for one frame ({len(samples)} samples)")
    padded = np.concatenate([samples, np.zeros(WIN - HOP, dtype=samples.dtype)])
    idx = np.arange(WIN)[None, :] + HOP * np.arange(t)[:, None]
    return padded[idx]


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT, rate: int = TARGET_RATE) -> np.ndarray:
    """Triangular mel filters over the rfft bins, 0 Hz to Nyquist."""
    mel_points = np.linspace(_hz_to_mel(0.0), _hz_to_mel(rate / 2.0), n_mels + 2)
    hz_points = _mel_to_hz(mel_points)
    bins = np.floor((n_fft + 1) * hz_points / rate).astype(int)
    fb = np.zeros((n_mels, n_fft // 2 + 1))
    for m in range(1, n_mels + 1):
        left, center, right = bins[m - 1], bins[m], bins[m + 1]
        for b in range(left, center):
            fb[m - 1, b] = (b - left) / max(center - left, 1)
        for b in range(center, right):
            fb[m - 1, b] = (right - b) / max(right - center, 1)
    return fb


_MEL_FB = None
_HANN = None


def _log_mel(samples: np.ndarray) -> np.ndarray:
    global _MEL_FB, _HANN
    if _MEL_FB is None:
        _MEL_FB = mel_filterbank()
        _HANN = np.hanning(WIN)
    frames = _frame(samples) * _HANN
    spectrum = rfft(frames, n=N_FFT, axis=1)
    power = np.abs(spectrum) ** 2
    mel = power @ _MEL_FB.T
    return np.log(mel + _LOG_FLOOR)


def _mfcc(samples: np.ndarray) -> np.ndarray:
    return dct(_log_mel(samples), type=2, norm="ortho", axis=1)[:, :N_MFCC]


def extract_features(rec: AudioRecord, kind: str = "log_mel", teacher=None,
                     teacher_layer: int = None) -> FrameFeatures:
    """Extract T x F features for one normalized segment.

    kind `teacher_layer` runs the waveform through the teacher encoder and
    returns the hidden states after the requested block (defaults to the
    teacher's configured unit layer); `log_mel` and `mfcc` are the spectral
    fallbacks used to bootstrap a first codebook.
    """
    if rec.sample_rate != TARGET_RATE:
        raise ConfigError(f"{rec.id}: features require {TARGET_RATE} Hz audio")
    if kind == "log_mel":
        matrix = _log_mel(rec.samples)
        layer = None
    elif kind == "mfcc":
        matrix = _mfcc(rec.samples)
        layer = None
    elif kind == "teacher_layer":
        if teacher is None:
            raise ConfigError("teacher_layer features need a teacher checkpoint")
        matrix, layer = teacher.hidden_states(rec.samples, layer=teacher_layer)
    else:
        raise ConfigError(f"unknown feature kind {kind!r}")
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if not np.isfinite(matrix).all():
        raise ConfigError(f"{rec.id}: non-finite feature values")
    expected = num_frames(len(rec.samples))
    if matrix.shape[0] != expected:
        raise ConfigError(
            f"{rec.id}: extractor produced {matrix.shape[0]} frames, expected {expected}"
        )
    return FrameFeatures(
        segment_id=rec.id, matrix=matrix, feature_kind=kind, teacher_layer_index=layer
    )

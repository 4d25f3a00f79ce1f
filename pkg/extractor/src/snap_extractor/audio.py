"""WAV decoding and resampling to the encoder's 16 kHz input rate."""

from __future__ import annotations

import wave

import numpy as np
from scipy.signal import resample_poly

TARGET_RATE = 16_000


class AudioDecodeError(ValueError):
    """File could not be decoded as PCM WAV audio."""


def load_audio(path, target_rate: int = TARGET_RATE) -> np.ndarray:
    """Mono float64 waveform in [-1, 1] at target_rate.

    Accepts 16-bit PCM WAV at any source rate; multi-channel input is
    averaged down to mono before resampling.
    """
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            n_frames = wav.getnframes()
            raw = wav.readframes(n_frames)
    except (wave.Error, EOFError, OSError) as exc:
        raise AudioDecodeError(f"{path}: {exc}") from exc
    if width != 2:
        raise AudioDecodeError(f"{path}: only 16-bit PCM supported, got "
                               f"{8 * width}-bit")
    if n_frames < 1:
        raise AudioDecodeError(f"{path}: empty audio stream")

    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    if rate != target_rate:
        g = np.gcd(rate, target_rate)
        samples = resample_poly(samples, target_rate // g, rate // g)
    return samples

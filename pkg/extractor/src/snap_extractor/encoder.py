"""Frozen speech encoders exposing per-layer hidden states.

Layer indexing convention: transformer blocks, 1-based. Index 0 is the
convolutional frontend output; index l is the output of the l-th
transformer block. The default picks layers 8 and 22 of a 24-block,
1024-wide encoder, giving 2048-dimensional concatenated frames.
"""

from __future__ import annotations

import numpy as np

DEFAULT_LAYERS = (8, 22)
WAVLM_MODEL_ID = "microsoft/wavlm-large"

# 16 kHz frontend geometry shared by wav2vec2-family encoders:
# 25 ms receptive field, 20 ms hop
FRAME_SAMPLES = 400
HOP_SAMPLES = 320


class EncoderMismatchError(ValueError):
    """Encoder does not expose the requested layers (too shallow)."""


def n_frames_for(n_samples: int) -> int:
    if n_samples < FRAME_SAMPLES:
        return 1  # short clips are right-padded to one full frame
    return 1 + (n_samples - FRAME_SAMPLES) // HOP_SAMPLES


class StubEncoder:
    """Deterministic drop-in encoder for tests and offline pipelines.

    Projects each 25 ms frame through a fixed random matrix per layer and
    squashes with tanh. No learned weights, but the interface, frame
    geometry and output shapes match the real encoder, so everything
    downstream of `encode` is exercised for real.
    """

    name = "stub"
    revision = "v1"
    n_layers = 24
    hidden_size = 1024

    def __init__(self, seed: int = 0):
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(FRAME_SAMPLES)
        self._proj = [
            rng.standard_normal((FRAME_SAMPLES, self.hidden_size)) * scale
            for _ in range(self.n_layers + 1)
        ]
        # bias keeps silence away from the zero vector, like a real encoder
        self._bias = [rng.standard_normal(self.hidden_size) * 0.1
                      for _ in range(self.n_layers + 1)]

    def encode(self, waveform: np.ndarray) -> list:
        """Hidden states for every layer: n_layers+1 arrays of (T, hidden)."""
        x = np.asarray(waveform, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] < 1:
            raise ValueError("waveform must be a non-empty 1-D array")
        t = n_frames_for(x.shape[0])
        need = FRAME_SAMPLES + (t - 1) * HOP_SAMPLES
        if x.shape[0] < need:
            x = np.pad(x, (0, need - x.shape[0]))
        idx = np.arange(FRAME_SAMPLES)[None, :] + \
            HOP_SAMPLES * np.arange(t)[:, None]
        frames = x[idx]
        return [np.tanh(frames @ p + b)
                for p, b in zip(self._proj, self._bias)]


class WavlmEncoder:
    """WavLM-Large via transformers; weights loaded lazily on first use."""

    name = WAVLM_MODEL_ID
    n_layers = 24
    hidden_size = 1024

    def __init__(self, model_id: str = WAVLM_MODEL_ID, device: str = "cpu"):
        self.name = model_id
        self._device = device
        self._model = None
        self.revision = "main"

    def _load(self):
        if self._model is None:
            import torch  # noqa: F401  (required backend)
            from transformers import WavLMModel

            model = WavLMModel.from_pretrained(self.name)
            model.eval().to(self._device)
            self.n_layers = model.config.num_hidden_layers
            self.hidden_size = model.config.hidden_size
            self._model = model
        return self._model

    def encode(self, waveform: np.ndarray) -> list:
        import torch

        model = self._load()
        x = torch.as_tensor(np.asarray(waveform, dtype=np.float32))[None, :]
        with torch.inference_mode():
            out = model(x.to(self._device), output_hidden_states=True)
        return [h[0].cpu().double().numpy() for h in out.hidden_states]


def get_encoder(spec: str):
    """Encoder factory: 'stub', 'stub:<seed>', 'wavlm' or 'wavlm:<model-id>'."""
    kind, _, arg = spec.partition(":")
    if kind == "stub":
        return StubEncoder(seed=int(arg) if arg else 0)
    if kind == "wavlm":
        return WavlmEncoder(model_id=arg or WAVLM_MODEL_ID)
    raise ValueError(f"unknown encoder '{spec}'")


def layer_states(encoder, waveform: np.ndarray, layers) -> list:
    """Hidden states for the requested 1-based transformer layers."""
    layers = tuple(int(l) for l in layers)
    if any(l < 0 for l in layers):
        raise ValueError("layer indices must be >= 0")
    if max(layers) > encoder.n_layers:
        raise EncoderMismatchError(
            f"encoder '{encoder.name}' has {encoder.n_layers} layers, "
            f"layer {max(layers)} requested"
        )
    states = encoder.encode(waveform)
    return [states[l] for l in layers]

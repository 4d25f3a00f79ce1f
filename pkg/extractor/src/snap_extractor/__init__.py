"""Bridge from audio files to SNAPEMB1 embedding containers.

Runs a frozen self-supervised speech encoder over 16 kHz audio, captures
the hidden states of two transformer layers, concatenates them per frame
and writes the result as a container the detection pipeline consumes
directly.
"""

from .audio import AudioDecodeError, load_audio
from .encoder import (DEFAULT_LAYERS, EncoderMismatchError, StubEncoder,
                      WavlmEncoder, get_encoder)
from .extract import (ExtractionManifest, FileStatus, ManifestEntry,
                      extract_container, read_audio_manifest)

__version__ = "0.1.0"

__all__ = [
    "AudioDecodeError",
    "DEFAULT_LAYERS",
    "EncoderMismatchError",
    "ExtractionManifest",
    "FileStatus",
    "ManifestEntry",
    "StubEncoder",
    "WavlmEncoder",
    "extract_container",
    "get_encoder",
    "load_audio",
    "read_audio_manifest",
]

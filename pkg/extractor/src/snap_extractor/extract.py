"""Audio manifest -> SNAPEMB1 container, plus the extraction report."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from snap.features import concat_layers, l2_normalize, pool_mean
from snap.store import LabeledEmbeddingSet, UtteranceRecord, save_container

from .audio import TARGET_RATE, AudioDecodeError, load_audio
from .encoder import DEFAULT_LAYERS, layer_states


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    speaker_id: str
    label: int
    attack_id: str = ""

    @property
    def utt_id(self) -> str:
        stem = self.path.replace("\\", "/").rsplit("/", 1)[-1]
        return stem.rsplit(".", 1)[0]


@dataclass(frozen=True)
class FileStatus:
    path: str
    ok: bool
    error: str = ""


@dataclass
class ExtractionManifest:
    encoder: str
    revision: str
    layers: tuple
    sample_rate: int
    pooled: bool
    files: list = field(default_factory=list)
    container_sha256: str = ""

    def save(self, path) -> None:
        doc = dataclasses.asdict(self)
        doc["files"] = [dataclasses.asdict(f) for f in self.files]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")


def read_audio_manifest(source) -> list:
    """Parse `path speaker_id label attack_id` lines ('-' = no attack id)."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            return read_audio_manifest(fh)
    entries = []
    for lineno, line in enumerate(source, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"manifest line {lineno}: expected 4 fields, "
                             f"got {len(parts)}")
        path, speaker_id, label, attack_id = parts
        if label not in ("0", "1"):
            raise ValueError(f"manifest line {lineno}: label must be 0 or 1")
        entries.append(ManifestEntry(path, speaker_id, int(label),
                                     "" if attack_id == "-" else attack_id))
    return entries


def extract_container(entries, encoder, out_path, pooled: bool = True,
                      layers=DEFAULT_LAYERS):
    """Encode every manifest entry and write one SNAPEMB1 container.

    Undecodable files are skipped and recorded in the returned
    ExtractionManifest; encoder/layer mismatch aborts the whole run.
    Record order follows manifest order.
    """
    manifest = ExtractionManifest(
        encoder=encoder.name, revision=encoder.revision,
        layers=tuple(int(l) for l in layers),
        sample_rate=TARGET_RATE, pooled=pooled,
    )
    records = []
    dim = 2 * encoder.hidden_size
    for entry in entries:
        try:
            waveform = load_audio(entry.path)
        except AudioDecodeError as exc:
            manifest.files.append(FileStatus(entry.path, False, str(exc)))
            continue
        low, high = layer_states(encoder, waveform, layers)
        frames = concat_layers(low, high)
        if pooled:
            frames = l2_normalize(pool_mean(frames))[None, :]
        records.append(UtteranceRecord(entry.utt_id, entry.speaker_id,
                                       entry.label, entry.attack_id, frames))
        manifest.files.append(FileStatus(entry.path, True))

    eset = LabeledEmbeddingSet(dim=dim, pooled=pooled, records=tuple(records))
    save_container(eset, out_path)
    with open(out_path, "rb") as fh:
        manifest.container_sha256 = hashlib.sha256(fh.read()).hexdigest()
    return eset, manifest

"""Labeled embedding sets and the SNAPEMB1 container format.

A LabeledEmbeddingSet holds per-utterance embeddings (either per-frame
matrices or pooled vectors) together with speaker / class / attack labels.
The binary container is little-endian throughout and stores embedding
values as float32; everything downstream works in float64 after load.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SNAPEMB1"
FORMAT_VERSION = 1
_FLAG_POOLED = 0x1

# attack_id placeholder in the plain-text table (empty string = bona fide)
_TEXT_NO_ATTACK = "-"


class ValidationError(ValueError):
    """A record or set violates a structural invariant."""


class ContainerParseError(ValueError):
    """Malformed SNAPEMB1 data; carries the byte offset where parsing failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class UtteranceRecord:
    """One utterance: id, speaker, class label, attack tag and its embedding.

    `frames` is (T, dim); a pooled record has T == 1. label 0 = bona fide,
    1 = spoof. attack_id is "" for bona fide / not applicable.
    """

    utt_id: str
    speaker_id: str
    label: int
    attack_id: str
    frames: np.ndarray

    def __post_init__(self):
        frames = np.atleast_2d(np.asarray(self.frames, dtype=np.float64))
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def validate(self):
        if self.label not in (0, 1):
            raise ValidationError(
                f"record '{self.utt_id}': label must be 0 or 1, got {self.label}"
            )
        if self.frames.ndim != 2 or self.frames.shape[0] < 1 or self.frames.shape[1] < 1:
            raise ValidationError(
                f"record '{self.utt_id}': frames must be a T x D matrix with "
                f"T >= 1, D >= 1, got shape {self.frames.shape}"
            )
        if not np.all(np.isfinite(self.frames)):
            raise ValidationError(f"record '{self.utt_id}': non-finite embedding value")


@dataclass(frozen=True)
class LabeledEmbeddingSet:
    """An ordered collection of UtteranceRecords sharing one embedding dim."""

    dim: int
    pooled: bool
    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def validate(self):
        if self.dim < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")
        seen = set()
        for rec in self.records:
            rec.validate()
            if rec.dim != self.dim:
                raise ValidationError(
                    f"record '{rec.utt_id}': dim {rec.dim} != set dim {self.dim}"
                )
            if self.pooled and rec.n_frames != 1:
                raise ValidationError(
                    f"record '{rec.utt_id}': pooled set requires T == 1, got "
                    f"T = {rec.n_frames}"
                )
            if rec.utt_id in seen:
                raise ValidationError(f"duplicate utt_id '{rec.utt_id}'")
            seen.add(rec.utt_id)

    def embeddings(self) -> np.ndarray:
        """(N, dim) matrix of pooled vectors. Requires a pooled set."""
        if not self.pooled:
            raise ValidationError("embeddings() requires a pooled set")
        if not self.records:
            return np.zeros((0, self.dim))
        return np.vstack([rec.frames[0] for rec in self.records])

    def labels(self) -> np.ndarray:
        return np.array([rec.label for rec in self.records], dtype=np.int64)

    def speaker_ids(self) -> list:
        return [rec.speaker_id for rec in self.records]


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValidationError(f"string too long for container: {text[:32]!r}...")
    return struct.pack("<H", len(raw)) + raw


def write_container(eset: LabeledEmbeddingSet, dest) -> int:
    """Serialize a set to a binary SNAPEMB1 stream; returns bytes written.

    Deterministic: identical sets produce identical bytes.
    """
    eset.validate()
    flags = _FLAG_POOLED if eset.pooled else 0
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<IIII", FORMAT_VERSION, len(eset.records), eset.dim, flags))
    for rec in eset.records:
        out.write(_pack_str(rec.utt_id))
        out.write(_pack_str(rec.speaker_id))
        out.write(struct.pack("<B", rec.label))
        out.write(_pack_str(rec.attack_id))
        out.write(struct.pack("<I", rec.n_frames))
        out.write(np.ascontiguousarray(rec.frames, dtype="<f4").tobytes())
    payload = out.getvalue()
    dest.write(payload)
    return len(payload)


def save_container(eset: LabeledEmbeddingSet, path) -> int:
    with open(path, "wb") as fh:
        return write_container(eset, fh)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ContainerParseError(f"truncated container: {what}", offset=self.pos)
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self, what):
        return self.take(1, what)[0]

    def u16(self, what):
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]

    def string(self, what):
        n = self.u16(what + " length")
        raw = self.take(n, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise ContainerParseError(f"invalid UTF-8 in {what}", offset=self.pos - n)


def read_container(source) -> LabeledEmbeddingSet:
    """Parse a complete SNAPEMB1 stream back into a LabeledEmbeddingSet."""
    data = source.read() if hasattr(source, "read") else bytes(source)
    rd = _Reader(data)
    if rd.take(len(MAGIC), "magic") != MAGIC:
        raise ContainerParseError("bad magic, not a SNAPEMB1 container", offset=0)
    version = rd.u32("version")
    if version != FORMAT_VERSION:
        raise ContainerParseError(f"unsupported container version {version}", offset=8)
    n_records = rd.u32("record count")
    dim = rd.u32("dim")
    flags = rd.u32("flags")
    pooled = bool(flags & _FLAG_POOLED)
    if dim < 1:
        raise ContainerParseError(f"dim must be >= 1, got {dim}", offset=16)

    records = []
    for i in range(n_records):
        where = f"record {i}"
        utt_id = rd.string(f"{where} utt_id")
        speaker_id = rd.string(f"{where} speaker_id")
        label = rd.u8(f"{where} label")
        if label not in (0, 1):
            raise ContainerParseError(
                f"{where}: label must be 0 or 1, got {label}", offset=rd.pos - 1
            )
        attack_id = rd.string(f"{where} attack_id")
        n_frames = rd.u32(f"{where} frame count")
        if n_frames < 1:
            raise ContainerParseError(f"{where}: frame count 0", offset=rd.pos - 4)
        value_offset = rd.pos
        raw = rd.take(n_frames * dim * 4, f"{where} values")
        frames = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(frames)):
            raise ContainerParseError(
                f"{where}: non-finite embedding value", offset=value_offset
            )
        records.append(
            UtteranceRecord(utt_id, speaker_id, int(label), attack_id,
                            frames.reshape(n_frames, dim))
        )
    if rd.pos != len(data):
        raise ContainerParseError(
            f"{len(data) - rd.pos} trailing bytes after last record", offset=rd.pos
        )
    eset = LabeledEmbeddingSet(dim=dim, pooled=pooled, records=tuple(records))
    try:
        eset.validate()
    except ValidationError as exc:
        raise ContainerParseError(str(exc)) from exc
    return eset


def load_container(path) -> LabeledEmbeddingSet:
    with open(path, "rb") as fh:
        return read_container(fh)


def write_text_table(eset: LabeledEmbeddingSet, dest) -> None:
    """Plain-text form for tiny tests: one pooled record per line."""
    eset.validate()
    if not eset.pooled:
        raise ValidationError("text table supports pooled sets only")
    for rec in eset.records:
        attack = rec.attack_id if rec.attack_id else _TEXT_NO_ATTACK
        values = " ".join(f"{v:.17g}" for v in rec.frames[0])
        dest.write(f"{rec.utt_id} {rec.speaker_id} {rec.label} {attack} {values}\n")


def read_text_table(source) -> LabeledEmbeddingSet:
    text = source.read() if hasattr(source, "read") else str(source)
    records = []
    dim = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 5:
            raise ContainerParseError(f"line {lineno}: expected at least 5 fields")
        utt_id, speaker_id, label_s, attack = parts[:4]
        attack_id = "" if attack == _TEXT_NO_ATTACK else attack
        try:
            label = int(label_s)
            values = np.array([float(v) for v in parts[4:]], dtype=np.float64)
        except ValueError as exc:
            raise ContainerParseError(f"line {lineno}: {exc}") from exc
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise ContainerParseError(
                f"line {lineno}: {len(values)} values, expected {dim}"
            )
        records.append(
            UtteranceRecord(utt_id, speaker_id, label, attack_id, values.reshape(1, -1))
        )
    if dim is None:
        raise ContainerParseError("empty text table")
    eset = LabeledEmbeddingSet(dim=dim, pooled=True, records=tuple(records))
    eset.validate()
    return eset


def stratified_split(eset: LabeledEmbeddingSet, train_fraction: float, seed: int):
    """Split into (train, validation), stratified by (label, attack_id).

    Per stratum, round(n * train_fraction) records go to the training split,
    chosen by a seeded shuffle. Output order within each split preserves
    input order. The two outputs partition the input.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not eset.records:
        raise ValidationError("cannot split an empty set")

    strata = {}
    for idx, rec in enumerate(eset.records):
        strata.setdefault((rec.label, rec.attack_id), []).append(idx)

    rng = np.random.default_rng(seed)
    train_idx = set()
    for key in sorted(strata):
        indices = strata[key]
        n_train = int(np.floor(len(indices) * train_fraction + 0.5))
        chosen = rng.permutation(len(indices))[:n_train]
        train_idx.update(indices[i] for i in chosen)

    train_recs = tuple(r for i, r in enumerate(eset.records) if i in train_idx)
    val_recs = tuple(r for i, r in enumerate(eset.records) if i not in train_idx)
    make = lambda recs: LabeledEmbeddingSet(eset.dim, eset.pooled, recs)
    return make(train_recs), make(val_recs)

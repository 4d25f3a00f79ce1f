"""Model file: subspace + classifier in one checksummed text document.

Every real number is serialized with float.hex() so round trips are
bit-exact. The last line carries a CRC32 of all preceding bytes.
"""

from __future__ import annotations

import zlib

import numpy as np

from .classifier import LinearClassifier
from .subspace import SpeakerSubspace

MODEL_FORMAT_VERSION = 1
DEFAULT_K = 5
TOOL_VERSION = "0.1.0"


class ModelFormatError(ValueError):
    """Unreadable, corrupted, or version-mismatched model file."""


def _hexline(values) -> str:
    return " ".join(float(v).hex() for v in np.asarray(values, dtype=np.float64).ravel())


def _render(sub: SpeakerSubspace, clf: LinearClassifier) -> str:
    lines = [
        f"format_version {MODEL_FORMAT_VERSION}",
        f"dim {sub.dim}",
        f"k {sub.k}",
        "centroid_mean " + _hexline(sub.centroid_mean),
        "eigenvalues " + _hexline(sub.eigenvalues),
    ]
    for row in sub.basis:
        lines.append("basis_row " + _hexline(row))
    lines.append("weights " + _hexline(clf.weights))
    lines.append("bias " + float(clf.bias).hex())
    lines.append(f"meta default_k {DEFAULT_K}")
    lines.append(f"meta tool_version {TOOL_VERSION}")
    return "\n".join(lines) + "\n"


def save_model(sub: SpeakerSubspace, clf: LinearClassifier, path) -> None:
    if clf.dim != sub.dim:
        raise ValueError(
            f"classifier dim {clf.dim} does not match subspace dim {sub.dim}"
        )
    payload = _render(sub, clf).encode("ascii")
    checksum = zlib.crc32(payload)
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(f"checksum {checksum:08x}\n".encode("ascii"))


def _parse_floats(rest: str, what: str) -> np.ndarray:
    try:
        return np.array([float.fromhex(tok) for tok in rest.split()], dtype=np.float64)
    except ValueError as exc:
        raise ModelFormatError(f"bad float in {what}: {exc}") from exc


def load_model(path):
    """Read a model file back into (SpeakerSubspace, LinearClassifier)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    head, _, tail = raw.rpartition(b"checksum ")
    if not _:
        raise ModelFormatError("missing checksum line")
    try:
        stated = int(tail.strip(), 16)
    except ValueError as exc:
        raise ModelFormatError("unreadable checksum") from exc
    if zlib.crc32(head) != stated:
        raise ModelFormatError("checksum mismatch, file is corrupted")

    fields = {}
    basis_rows = []
    for line in head.decode("ascii").splitlines():
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key == "basis_row":
            basis_rows.append(_parse_floats(rest, "basis_row"))
        elif key == "meta":
            mkey, _, mval = rest.partition(" ")
            fields.setdefault("meta", {})[mkey] = mval
        else:
            fields[key] = rest

    for required in ("format_version", "dim", "k", "centroid_mean",
                     "eigenvalues", "weights", "bias"):
        if required not in fields:
            raise ModelFormatError(f"missing section '{required}'")
    if int(fields["format_version"]) != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {fields['format_version']}"
        )

    dim = int(fields["dim"])
    k = int(fields["k"])
    if len(basis_rows) != dim:
        raise ModelFormatError(f"expected {dim} basis rows, found {len(basis_rows)}")
    basis = (np.vstack(basis_rows) if dim else np.zeros((0, k)))
    if basis.shape != (dim, k):
        raise ModelFormatError(f"basis shape {basis.shape}, expected ({dim}, {k})")

    sub = SpeakerSubspace(
        dim=dim, k=k,
        centroid_mean=_parse_floats(fields["centroid_mean"], "centroid_mean"),
        basis=basis,
        eigenvalues=_parse_floats(fields["eigenvalues"], "eigenvalues"),
    )
    sub.validate()
    clf = LinearClassifier(
        weights=_parse_floats(fields["weights"], "weights"),
        bias=float.fromhex(fields["bias"]),
    )
    if clf.dim != dim:
        raise ModelFormatError(
            f"weight count {clf.dim} does not match dim {dim}"
        )
    return sub, clf

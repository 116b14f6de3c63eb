"""Embedding ingestion, validation, normalization and comparison.

Feature sets are immutable collections of d-dimensional float32 vectors
keyed by unique string ids. Two on-disk formats are supported:

* Binary "SCSF v1": magic ``SCSF``, little-endian u32 version (=1),
  u32 N, u32 d, then N*d little-endian IEEE-754 float32 values in
  row-major order, then N id records, each a u16 byte length followed
  by that many UTF-8 bytes.
* CSV: one row per sample, first field the id, remaining d fields
  decimal floats, no header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    FormatError,
    NonFiniteError,
    NormalizationError,
)
from .seeding import STREAM_SYNTH, substream

_SCSF_MAGIC = b"SCSF"
_SCSF_VERSION = 1


@dataclass(frozen=True)
class FeatureVector:
    """One embedding: a stable sample id plus its coordinates."""

    id: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size < 1:
            raise DimensionMismatchError(
                f"feature vector {self.id!r} must be 1-D with d >= 1, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise NonFiniteError(f"feature vector {self.id!r} contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class FeatureSet:
    """Immutable ordered set of equal-dimension feature vectors.

    `values` is an (N, dim) float32 array; row i belongs to `ids[i]`.
    When `normalized` is true every row has unit L2 norm.
    """

    dim: int
    ids: tuple[str, ...]
    values: np.ndarray
    normalized: bool = False
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatchError(f"dimension must be >= 1, got {self.dim}")
        vals = np.asarray(self.values, dtype=np.float32)
        if vals.ndim != 2 or vals.shape != (len(self.ids), self.dim):
            raise DimensionMismatchError(
                f"values shape {vals.shape} does not match ({len(self.ids)}, {self.dim})"
            )
        if not np.all(np.isfinite(vals)):
            bad = [self.ids[i] for i in np.nonzero(~np.isfinite(vals).all(axis=1))[0][:5]]
            raise NonFiniteError(f"non-finite values in samples {bad}")
        index: dict[str, int] = {}
        for i, sid in enumerate(self.ids):
            if sid in index:
                raise DuplicateIdError(f"duplicate sample id {sid!r}")
            index[sid] = i
        if self.normalized and len(self.ids):
            norms = np.linalg.norm(vals.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise NormalizationError("normalized=True but some vectors are not unit length")
        vals.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._index

    def row(self, sample_id: str) -> int:
        try:
            return self._index[sample_id]
        except KeyError:
            raise KeyError(f"unknown sample id {sample_id!r}") from None

    def vector(self, sample_id: str) -> FeatureVector:
        return FeatureVector(sample_id, self.values[self.row(sample_id)])

    def subset(self, ids: list[str] | tuple[str, ...]) -> "FeatureSet":
        """New set restricted to `ids`, in the given order."""
        rows = [self.row(i) for i in ids]
        return FeatureSet(self.dim, tuple(ids), self.values[rows].copy(), self.normalized)


@dataclass(frozen=True)
class SyntheticWorldConfig:
    """Seeded class-prototype world standing in for encoder features."""

    num_classes: int
    samples_per_class: int
    dim: int
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 1 or self.samples_per_class < 1 or self.dim < 1:
            raise DimensionMismatchError("num_classes, samples_per_class and dim must be >= 1")
        if self.noise_scale < 0:
            raise NonFiniteError("noise_scale must be >= 0")


def save_features(fset: FeatureSet, path, fmt: str = "binary") -> None:
    """Write `fset` to `path` in 'binary' (SCSF v1) or 'csv' format.

    Binary round-trips bit-exactly; CSV uses shortest float32 reprs and
    round-trips exactly as well (well within the 1e-6 contract).
    """
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_SCSF_MAGIC)
            fh.write(struct.pack("<III", _SCSF_VERSION, len(fset), fset.dim))
            fh.write(fset.values.astype("<f4").tobytes(order="C"))
            for sid in fset.ids:
                raw = sid.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise FormatError(f"id too long for SCSF format: {sid[:32]!r}...")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for sid, row in zip(fset.ids, fset.values):
                if "," in sid or "\n" in sid:
                    raise FormatError(f"id {sid!r} not representable in CSV feature format")
                fh.write(sid + "," + ",".join(str(np.float32(v)) for v in row) + "\n")
    else:
        raise FormatError(f"unknown feature format {fmt!r}")


def _parse_scsf(data: bytes, offset: int = 0) -> tuple[FeatureSet, int]:
    """Parse one SCSF block starting at `offset`; returns (set, end offset)."""
    if data[offset : offset + 4] != _SCSF_MAGIC:
        raise FormatError("bad magic: not an SCSF feature block")
    pos = offset + 4
    if len(data) < pos + 12:
        raise FormatError("truncated SCSF header")
    version, n, d = struct.unpack_from("<III", data, pos)
    pos += 12
    if version != _SCSF_VERSION:
        raise FormatError(f"unsupported SCSF version {version}")
    if d < 1:
        raise FormatError("SCSF header declares dimension 0")
    nbytes = n * d * 4
    if len(data) < pos + nbytes:
        raise FormatError("truncated SCSF payload")
    values = np.frombuffer(data[pos : pos + nbytes], dtype="<f4").reshape(n, d)
    pos += nbytes
    ids = []
    for _ in range(n):
        if len(data) < pos + 2:
            raise FormatError("truncated SCSF id table")
        (length,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if len(data) < pos + length:
            raise FormatError("truncated SCSF id record")
        ids.append(data[pos : pos + length].decode("utf-8"))
        pos += length
    return FeatureSet(d, tuple(ids), values.astype(np.float32), normalized=False), pos


def load_features(path, fmt: str = "binary") -> FeatureSet:
    """Read a FeatureSet from `path`; `fmt` is 'binary' or 'csv'."""
    if fmt == "binary":
        with open(path, "rb") as fh:
            data = fh.read()
        fset, end = _parse_scsf(data)
        if end != len(data):
            raise FormatError(f"{len(data) - end} trailing bytes after SCSF block")
        return fset
    if fmt == "csv":
        ids: list[str] = []
        rows: list[list[float]] = []
        dim = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) < 2:
                    raise FormatError(f"line {lineno}: expected 'id,v1,...,vd'")
                sid, fields = parts[0], parts[1:]
                if dim is None:
                    dim = len(fields)
                elif len(fields) != dim:
                    raise DimensionMismatchError(
                        f"line {lineno}: {len(fields)} values, expected {dim}"
                    )
                try:
                    vals = [float(f) for f in fields]
                except ValueError as exc:
                    raise FormatError(f"line {lineno}: {exc}") from None
                ids.append(sid)
                rows.append(vals)
        if dim is None:
            raise FormatError("empty CSV: cannot infer feature dimension")
        values = np.array(rows, dtype=np.float32)
        if not all(np.isfinite(r).all() for r in (np.array(rows, dtype=np.float64),)):
            raise NonFiniteError("CSV contains non-finite values")
        return FeatureSet(dim, tuple(ids), values, normalized=False)
    raise FormatError(f"unknown feature format {fmt!r}")


def l2_normalize(fset: FeatureSet) -> FeatureSet:
    """Rescale every vector to unit L2 norm; directions are preserved."""
    if len(fset) == 0:
        return FeatureSet(fset.dim, (), fset.values.copy(), normalized=True)
    vals = fset.values.astype(np.float64)
    norms = np.linalg.norm(vals, axis=1)
    tiny = norms < 1e-12
    if np.any(tiny):
        offender = fset.ids[int(np.nonzero(tiny)[0][0])]
        raise NormalizationError(f"cannot normalize near-zero vector {offender!r}")
    out = (vals / norms[:, None]).astype(np.float32)
    return FeatureSet(fset.dim, fset.ids, out, normalized=True)


def cosine_similarity(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dims differ: {a.dim} vs {b.dim}")
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na < 1e-12 or nb < 1e-12:
        raise NormalizationError("cosine similarity undefined for zero vector")
    if np.array_equal(a.values, b.values):
        return 1.0  # identical inputs: avoid sqrt round-off shaving the top
    return float(np.clip(np.dot(av, bv) / (na * nb), -1.0, 1.0))


def cosine_similarity_matrix(queries: FeatureSet, candidates: FeatureSet) -> np.ndarray:
    """(len(queries), len(candidates)) cosine similarities, clamped.

    Rows bitwise-equal between the two sets score exactly 1, matching
    `cosine_similarity`.
    """
    if queries.dim != candidates.dim:
        raise DimensionMismatchError(f"dims differ: {queries.dim} vs {candidates.dim}")
    q = queries.values.astype(np.float64)
    c = candidates.values.astype(np.float64)
    qn = np.linalg.norm(q, axis=1)
    cn = np.linalg.norm(c, axis=1)
    if np.any(qn < 1e-12) or np.any(cn < 1e-12):
        raise NormalizationError("cosine similarity undefined for zero vector")
    sims = np.clip((q @ c.T) / np.outer(qn, cn), -1.0, 1.0)
    for i in range(len(queries)):
        for j in range(len(candidates)):
            if np.array_equal(queries.values[i], candidates.values[j]):
                sims[i, j] = 1.0
    return sims


def generate_synthetic(cfg: SyntheticWorldConfig) -> tuple[FeatureSet, dict[str, int]]:
    """Seeded class-prototype world: per class a standard-normal prototype,
    each sample = prototype + noise_scale * standard normal.

    Returns the feature set and a map id -> latent class. Deterministic
    for a fixed config; with noise_scale 0 all same-class samples are
    bit-identical.
    """
    rng = substream(cfg.seed, STREAM_SYNTH)
    protos = rng.standard_normal((cfg.num_classes, cfg.dim))
    ids = []
    labels: dict[str, int] = {}
    rows = np.empty((cfg.num_classes * cfg.samples_per_class, cfg.dim), dtype=np.float64)
    k = 0
    for c in range(cfg.num_classes):
        for s in range(cfg.samples_per_class):
            sid = f"c{c:03d}_s{s:05d}"
            noise = rng.standard_normal(cfg.dim) if cfg.noise_scale > 0 else 0.0
            rows[k] = protos[c] + cfg.noise_scale * noise
            ids.append(sid)
            labels[sid] = c
            k += 1
    fset = FeatureSet(cfg.dim, tuple(ids), rows.astype(np.float32), normalized=False)
    return fset, labels


def save_labels(labels: dict[str, int], path) -> None:
    """Write an id -> class CSV (two columns, no header)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sid in labels:
            fh.write(f"{sid},{labels[sid]}\n")


def load_labels(path) -> dict[str, int]:
    """Read an id -> class CSV written by `save_labels`."""
    labels: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            sid, _, raw = line.rpartition(",")
            if not sid:
                raise FormatError(f"line {lineno}: expected 'id,label'")
            if sid in labels:
                raise DuplicateIdError(f"duplicate id {sid!r} in label file")
            try:
                labels[sid] = int(raw)
            except ValueError:
                raise FormatError(f"line {lineno}: label {raw!r} is not an integer") from None
    return labels

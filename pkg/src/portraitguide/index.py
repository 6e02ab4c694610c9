"""Corpus retrieval index: histograms per entry, cosine-ranked queries.

A linear scan over the stored histograms; at corpus scales up to ~10^4
entries this sits far inside the interactive latency budget and is trivial
to verify. The on-disk format is endianness-pinned little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoder import GalifEncoder
from .errors import FormatError, ValidationError
from .galif import Codebook
from .images import load_binary
from .maskdata import DatasetEntry, DatasetManifest
from .validation import check_binary_raster

INDEX_MAGIC = b"DFIDX"
INDEX_VERSION = 1


@dataclass(frozen=True)
class RetrievalResult:
    entry_id: str
    similarity: float
    rank: int


class Index:
    def __init__(self, entries, histograms, encoder: GalifEncoder, canvas_size):
        self.entries: list[DatasetEntry] = list(entries)
        self.histograms = np.asarray(histograms, dtype=float)
        self.encoder = encoder
        self.canvas_size = tuple(canvas_size)
        self.codebook_hash = encoder.codebook().content_hash()
        if self.histograms.shape != (len(self.entries), encoder.codebook().k):
            raise ValidationError("histogram matrix does not match entries/codebook")
        norms = np.linalg.norm(self.histograms, axis=1)
        self._unit = np.where(norms[:, None] > 0, self.histograms / np.maximum(norms, 1e-300)[:, None], 0.0)

    def __len__(self):
        return len(self.entries)

    def entry(self, entry_id: str) -> DatasetEntry:
        for e in self.entries:
            if e.entry_id == entry_id:
                return e
        raise KeyError(entry_id)


def build_index(manifest: DatasetManifest, codebook: Codebook, encoder: GalifEncoder | None = None) -> Index:
    """Encode every manifest entry's contour sketch into the index."""
    if not manifest.entries:
        raise ValidationError("manifest has no entries")
    if encoder is None:
        encoder = GalifEncoder(codebook_size=codebook.k)
    encoder.set_codebook(codebook)
    histograms = []
    for e in manifest.entries:
        try:
            raster = load_binary(e.contour_path)
        except (OSError, FormatError) as exc:
            raise ValidationError(f"entry {e.entry_id}: cannot load contour: {exc}") from exc
        histograms.append(encoder.encode(check_binary_raster(raster, manifest.canvas_size)))
    return Index(manifest.entries, np.stack(histograms), encoder, manifest.canvas_size)


def query(index: Index, query_raster, n: int) -> list[RetrievalResult]:
    """Top-n entries by cosine similarity; blank queries return nothing.

    Ties break toward the lower entry_id; ranks are contiguous from 1.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    raster = check_binary_raster(query_raster, index.canvas_size)
    if not raster.any():
        return []
    hist = index.encoder.encode(raster)
    norm = np.linalg.norm(hist)
    if norm == 0:
        return []
    sims = index._unit @ (hist / norm)
    sims = np.clip(sims, 0.0, 1.0)
    order = sorted(range(len(sims)), key=lambda i: (-sims[i], index.entries[i].entry_id))
    return [
        RetrievalResult(entry_id=index.entries[i].entry_id, similarity=float(sims[i]), rank=r + 1)
        for r, i in enumerate(order[: min(n, len(sims))])
    ]


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValidationError(f"string too long for index format: {s[:32]}...")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.off = 0
        self.path = path

    def take(self, fmt: str):
        try:
            out = struct.unpack_from(fmt, self.blob, self.off)
        except struct.error as exc:
            raise FormatError(f"{self.path}: truncated index file") from exc
        self.off += struct.calcsize(fmt)
        return out

    def take_str(self) -> str:
        (length,) = self.take("<H")
        raw = self.blob[self.off : self.off + length]
        if len(raw) != length:
            raise FormatError(f"{self.path}: truncated index file")
        self.off += length
        return raw.decode("utf-8")

    def take_floats(self, count: int) -> np.ndarray:
        nbytes = count * 8
        raw = self.blob[self.off : self.off + nbytes]
        if len(raw) != nbytes:
            raise FormatError(f"{self.path}: truncated index file")
        self.off += nbytes
        return np.frombuffer(raw, dtype="<f8").astype(float)


def save_index(index: Index, path) -> None:
    """Write the index; entry paths are stored relative to the index file."""
    path = Path(path)
    base = path.parent.resolve()
    enc = index.encoder
    k = enc.codebook().k
    out = [INDEX_MAGIC, struct.pack("<B", INDEX_VERSION)]
    out.append(
        struct.pack(
            "<IHHHddHHHIq",
            k,
            index.canvas_size[0],
            index.canvas_size[1],
            enc.num_orientations,
            enc.wavelength,
            enc.bandwidth,
            enc.kernel_size,
            enc.patch,
            enc.tile,
            enc.max_samples,
            enc.seed,
        )
    )
    out.append(index.codebook_hash)
    out.append(struct.pack("<I", len(index.entries)))
    from .maskdata import relpath

    for e, hist in zip(index.entries, index.histograms):
        out.append(_pack_str(e.entry_id))
        out.append(_pack_str(relpath(e.contour_path, base)))
        out.append(_pack_str(relpath(e.mask_path, base)))
        out.append(_pack_str(relpath(e.image_path, base)))
        out.append(np.ascontiguousarray(hist, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(out))


def load_index(path, codebook: Codebook) -> Index:
    path = Path(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(INDEX_MAGIC):
        raise FormatError(f"{path}: not an index file")
    r = _Reader(blob, path)
    r.off = len(INDEX_MAGIC)
    (version,) = r.take("<B")
    if version != INDEX_VERSION:
        raise FormatError(f"{path}: unsupported index version {version}")
    (k, cw, ch, n_orient, wavelength, bandwidth, kernel_size, patch, tile, max_samples, seed) = r.take(
        "<IHHHddHHHIq"
    )
    stored_hash = blob[r.off : r.off + 32]
    if len(stored_hash) != 32:
        raise FormatError(f"{path}: truncated index file")
    r.off += 32
    if stored_hash != codebook.content_hash():
        raise FormatError(f"{path}: index was built against a different codebook")
    (count,) = r.take("<I")
    base = path.parent.resolve()
    entries, rows = [], []
    for _ in range(count):
        entry_id = r.take_str()
        contour = base / r.take_str()
        mask = base / r.take_str()
        image = base / r.take_str()
        rows.append(r.take_floats(k))
        entries.append(
            DatasetEntry(entry_id=entry_id, contour_path=contour, mask_path=mask, image_path=image)
        )
    encoder = GalifEncoder(
        num_orientations=n_orient,
        wavelength=wavelength,
        bandwidth=bandwidth,
        kernel_size=kernel_size,
        patch=patch,
        tile=tile,
        max_samples=max_samples,
        codebook_size=k,
        seed=seed,
    ).set_codebook(codebook)
    return Index(entries, np.stack(rows) if rows else np.zeros((0, k)), encoder, (cw, ch))

"""Oriented-filter bag-of-features sketch descriptors.

A sketch raster is convolved with a bank of complex oriented filters, local
patch descriptors are sampled at ink pixels from the response magnitudes,
and the descriptors are quantized against a learned codebook into one
normalized histogram per sketch.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import FormatError, ValidationError
from .validation import check_binary_raster

CODEBOOK_MAGIC = b"DFCBK"
CODEBOOK_VERSION = 1

# Envelope aspect ratio: filters are elongated along the line direction,
# which sharpens orientation selectivity for stroke imagery.
_ASPECT = 0.5


@dataclass(frozen=True)
class GaborBankParams:
    num_orientations: int = 6
    wavelength: float = 8.0
    bandwidth: float = 1.0
    kernel_size: int = 25

    def validate(self) -> "GaborBankParams":
        if self.num_orientations < 2:
            raise ValidationError("num_orientations must be >= 2")
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ValidationError("kernel_size must be odd and >= 3")
        if self.wavelength <= 0 or self.bandwidth <= 0:
            raise ValidationError("wavelength and bandwidth must be positive")
        return self


def _sigma_from_bandwidth(wavelength: float, bandwidth: float) -> float:
    # Standard half-response spatial-frequency bandwidth relation.
    factor = np.sqrt(np.log(2) / 2) / np.pi
    return wavelength * factor * (2.0**bandwidth + 1) / (2.0**bandwidth - 1)


class GaborBank:
    """Bank of complex oriented kernels plus a cached FFT applier.

    ``angles[i]`` is the line orientation (degrees from the x axis) that
    channel i responds to most strongly. Kernels are zero-mean so constant
    images produce no response.
    """

    def __init__(self, params: GaborBankParams):
        self.params = params.validate()
        n = params.num_orientations
        self.angles = np.arange(n) * (180.0 / n)
        self.kernels = np.stack(
            [self._kernel(np.deg2rad(a)) for a in self.angles]
        )
        self._fft_cache: dict[tuple, np.ndarray] = {}

    def _kernel(self, line_angle: float) -> np.ndarray:
        k = self.params.kernel_size
        half = k // 2
        ys, xs = np.mgrid[-half : half + 1, -half : half + 1].astype(float)
        # Carrier runs perpendicular to the line orientation.
        theta = line_angle + np.pi / 2
        xr = xs * np.cos(theta) + ys * np.sin(theta)
        yr = -xs * np.sin(theta) + ys * np.cos(theta)
        sigma = _sigma_from_bandwidth(self.params.wavelength, self.params.bandwidth)
        envelope = np.exp(-(xr**2 + (_ASPECT * yr) ** 2) / (2 * sigma**2))
        carrier = np.exp(1j * (2 * np.pi / self.params.wavelength) * xr)
        kern = envelope * carrier
        kern = kern - kern.mean()
        return kern / np.linalg.norm(kern)

    def _kernel_ffts(self, shape) -> np.ndarray:
        key = tuple(shape)
        if key not in self._fft_cache:
            n, k, _ = self.kernels.shape
            padded = np.zeros((n,) + shape, dtype=complex)
            padded[:, :k, :k] = self.kernels
            self._fft_cache[key] = scipy.fft.fft2(padded, axes=(-2, -1))
        return self._fft_cache[key]

    def respond(self, raster: np.ndarray) -> np.ndarray:
        """Per-orientation response magnitudes, reflect-padded borders."""
        img = check_binary_raster(raster).astype(float)
        k = self.params.kernel_size
        half = k // 2
        padded = np.pad(img, half, mode="reflect")
        fh = scipy.fft.next_fast_len(padded.shape[0] + k - 1)
        fw = scipy.fft.next_fast_len(padded.shape[1] + k - 1)
        # workers only split the orientation batch; each transform is still
        # computed serially, so results stay bit-identical
        workers = min(len(self.kernels), os.cpu_count() or 1)
        fimg = scipy.fft.fft2(padded, s=(fh, fw))
        resp = scipy.fft.ifft2(
            fimg[None] * self._kernel_ffts((fh, fw)), axes=(-2, -1), workers=workers
        )
        # Full linear convolution: the kernel center lands at offset 2*half.
        y0 = x0 = 2 * half
        h, w = img.shape
        return np.abs(resp[:, y0 : y0 + h, x0 : x0 + w])


def make_gabor_bank(params: GaborBankParams) -> GaborBank:
    return GaborBank(params)


def response_maps(raster, bank: GaborBank) -> np.ndarray:
    return bank.respond(raster)


def sample_local_features(
    maps: np.ndarray,
    raster,
    max_samples: int = 500,
    patch: int = 64,
    tile: int = 4,
    seed: int = 0,
):
    """Sample patch descriptors at ink pixels.

    Each descriptor tiles a ``patch`` x ``patch`` window into ``tile`` x
    ``tile`` cells, averages every orientation map over each cell (area
    outside the canvas counts as zero response), and is L2-normalized.
    Returns ``(descriptors, positions)`` with positions as (x, y) rows.
    """
    ink = check_binary_raster(raster)
    n, h, w = maps.shape
    if patch >= min(h, w):
        raise ValidationError(f"patch {patch} must be smaller than the canvas {w}x{h}")
    ys, xs = np.nonzero(ink)
    dim = n * tile * tile
    if len(ys) == 0:
        return np.zeros((0, dim), dtype=float), np.zeros((0, 2), dtype=int)
    if len(ys) > max_samples:
        pick = np.sort(np.random.default_rng(seed).choice(len(ys), max_samples, replace=False))
        ys, xs = ys[pick], xs[pick]

    # Padded integral images make every cell average a 4-corner lookup.
    integral = np.zeros((n, h + 1, w + 1), dtype=np.float64)
    integral[:, 1:, 1:] = maps.astype(np.float64).cumsum(axis=1).cumsum(axis=2)

    cell = patch // tile
    edges = np.arange(tile + 1) * cell - patch // 2  # offsets from the center
    ye = np.clip(ys[:, None] + edges[None, :], 0, h)  # (m, tile+1)
    xe = np.clip(xs[:, None] + edges[None, :], 0, w)
    y0, y1 = ye[:, :-1], ye[:, 1:]
    x0, x1 = xe[:, :-1], xe[:, 1:]
    # Broadcast to (n, m, tile, tile) cell sums.
    sums = (
        integral[:, y1[:, :, None], x1[:, None, :]]
        - integral[:, y0[:, :, None], x1[:, None, :]]
        - integral[:, y1[:, :, None], x0[:, None, :]]
        + integral[:, y0[:, :, None], x0[:, None, :]]
    )
    means = sums / float(cell * cell)
    desc = np.transpose(means, (1, 0, 2, 3)).reshape(len(ys), dim)
    norms = np.linalg.norm(desc, axis=1)
    nonzero = norms > 0
    desc[nonzero] /= norms[nonzero, None]
    return desc, np.stack([xs, ys], axis=1)


@dataclass(frozen=True)
class Codebook:
    words: np.ndarray  # (k, dim) float64 centroids
    training_seed: int
    corpus_hash: bytes = b"\x00" * 32

    @property
    def k(self) -> int:
        return self.words.shape[0]

    @property
    def dim(self) -> int:
        return self.words.shape[1]

    def content_hash(self) -> bytes:
        h = hashlib.sha256()
        h.update(struct.pack("<IIq", self.k, self.dim, self.training_seed))
        h.update(self.corpus_hash)
        h.update(np.ascontiguousarray(self.words, dtype="<f8").tobytes())
        return h.digest()


def _nearest_word(x: np.ndarray, words: np.ndarray) -> np.ndarray:
    # argmin of ||x - w||^2; the ||x||^2 term is constant per row.
    d = -2.0 * (x @ words.T) + np.sum(words * words, axis=1)[None, :]
    return np.argmin(d, axis=1)


def train_codebook(descriptors, k: int, seed: int = 0, max_iter: int = 30) -> Codebook:
    """Iterative partition refinement with D^2-weighted seeding.

    Deterministic given the seed; stops at assignment fixpoint or the
    iteration cap. Empty clusters are re-seeded from the farthest point.
    """
    x = np.asarray(descriptors, dtype=float)
    if x.ndim != 2:
        raise ValidationError(f"descriptors must be 2-D, got shape {x.shape}")
    if k < 2:
        raise ValidationError("codebook size must be >= 2")
    if len(x) < k:
        raise ValidationError(f"need at least {k} descriptors, got {len(x)}")

    rng = np.random.default_rng(seed)
    centers = np.empty((k, x.shape[1]), dtype=float)
    centers[0] = x[rng.integers(len(x))]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = x[rng.integers(len(x))]
            continue
        centers[j] = x[rng.choice(len(x), p=d2 / total)]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))

    assign = np.full(len(x), -1)
    for _ in range(max_iter):
        new_assign = _nearest_word(x, centers)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        counts = np.bincount(assign, minlength=k)
        sums = np.stack(
            [np.bincount(assign, weights=x[:, d], minlength=k) for d in range(x.shape[1])],
            axis=1,
        )
        for j in np.nonzero(counts == 0)[0]:
            far = int(np.argmax(np.sum((x - centers[assign]) ** 2, axis=1)))
            counts[j] = 1
            sums[j] = x[far]
            assign[far] = j
        centers = sums / counts[:, None]

    if not np.all(np.isfinite(centers)):
        raise ValidationError("codebook training produced non-finite centroids")
    return Codebook(words=centers, training_seed=int(seed))


def encode_histogram(descriptors, codebook: Codebook) -> np.ndarray:
    """Nearest-word counts normalized to sum 1; empty input gives all zeros.

    Distance ties break toward the lowest word index.
    """
    x = np.asarray(descriptors, dtype=float)
    hist = np.zeros(codebook.k, dtype=float)
    if x.size == 0:
        return hist
    if x.ndim != 2 or x.shape[1] != codebook.dim:
        raise ValidationError(
            f"descriptor length {x.shape[-1] if x.ndim else 0} != codebook dim {codebook.dim}"
        )
    words = _nearest_word(x, codebook.words)
    np.add.at(hist, words, 1.0)
    return hist / hist.sum()


def save_codebook(path, codebook: Codebook) -> None:
    payload = struct.pack(
        "<HIIq", CODEBOOK_VERSION, codebook.k, codebook.dim, codebook.training_seed
    )
    payload += codebook.corpus_hash
    payload += np.ascontiguousarray(codebook.words, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(CODEBOOK_MAGIC + payload)


def load_codebook(path) -> Codebook:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(CODEBOOK_MAGIC):
        raise FormatError(f"{path}: not a codebook file")
    off = len(CODEBOOK_MAGIC)
    try:
        version, k, dim, seed = struct.unpack_from("<HIIq", blob, off)
        off += struct.calcsize("<HIIq")
        if version != CODEBOOK_VERSION:
            raise FormatError(f"{path}: unsupported codebook version {version}")
        corpus_hash = blob[off : off + 32]
        off += 32
        words = np.frombuffer(blob, dtype="<f8", count=k * dim, offset=off)
    except (struct.error, ValueError) as exc:
        raise FormatError(f"{path}: truncated codebook file") from exc
    if words.size != k * dim:
        raise FormatError(f"{path}: truncated codebook file")
    return Codebook(
        words=words.reshape(k, dim).astype(float),
        training_seed=int(seed),
        corpus_hash=bytes(corpus_hash),
    )

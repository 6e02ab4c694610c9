"""Scikit-learn style estimator over the sketch feature pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import galif
from .errors import ValidationError
from .validation import check_binary_raster


class GalifEncoder(BaseEstimator, TransformerMixin):
    """Sketch raster -> normalized bag-of-features histogram.

    ``fit`` pools local descriptors over a corpus of boolean ink rasters
    (optionally subsampled to ``max_fit_descriptors``) and trains the
    codebook; ``transform`` encodes rasters into an (n, codebook_size)
    histogram matrix. Deterministic for a fixed seed.
    """

    def __init__(
        self,
        num_orientations=6,
        wavelength=8.0,
        bandwidth=1.0,
        kernel_size=25,
        patch=64,
        tile=4,
        max_samples=500,
        codebook_size=512,
        seed=0,
        max_fit_descriptors=50_000,
        max_iter=30,
    ):
        self.num_orientations = num_orientations
        self.wavelength = wavelength
        self.bandwidth = bandwidth
        self.kernel_size = kernel_size
        self.patch = patch
        self.tile = tile
        self.max_samples = max_samples
        self.codebook_size = codebook_size
        self.seed = seed
        self.max_fit_descriptors = max_fit_descriptors
        self.max_iter = max_iter

    # -- pipeline pieces -------------------------------------------------

    @property
    def bank_params(self) -> galif.GaborBankParams:
        return galif.GaborBankParams(
            num_orientations=self.num_orientations,
            wavelength=self.wavelength,
            bandwidth=self.bandwidth,
            kernel_size=self.kernel_size,
        )

    def _bank(self) -> galif.GaborBank:
        # The bank is derived state, cached because kernel FFTs are reused
        # across every encode at a given canvas size.
        bank = getattr(self, "_bank_cache", None)
        if bank is None or bank.params != self.bank_params:
            bank = galif.make_gabor_bank(self.bank_params)
            self._bank_cache = bank
        return bank

    @property
    def descriptor_dim(self) -> int:
        return self.num_orientations * self.tile * self.tile

    def describe(self, raster) -> np.ndarray:
        """Local descriptors for one raster (codebook not required)."""
        raster = check_binary_raster(raster)
        maps = self._bank().respond(raster)
        desc, _ = galif.sample_local_features(
            maps,
            raster,
            max_samples=self.max_samples,
            patch=self.patch,
            tile=self.tile,
            seed=self.seed,
        )
        return desc

    # -- estimator API ---------------------------------------------------

    def fit(self, X, y=None):
        pools = []
        for raster in X:
            desc = self.describe(raster)
            if len(desc):
                pools.append(desc)
        if not pools:
            raise ValidationError("no ink in any training raster")
        pooled = np.concatenate(pools, axis=0)
        if len(pooled) > self.max_fit_descriptors:
            rng = np.random.default_rng(self.seed)
            keep = np.sort(rng.choice(len(pooled), self.max_fit_descriptors, replace=False))
            pooled = pooled[keep]
        self.codebook_ = galif.train_codebook(
            pooled, self.codebook_size, seed=self.seed, max_iter=self.max_iter
        )
        return self

    def transform(self, X) -> np.ndarray:
        return np.stack([self.encode(raster) for raster in X])

    def encode(self, raster) -> np.ndarray:
        codebook = self.codebook()
        return galif.encode_histogram(self.describe(raster), codebook)

    # -- codebook attachment ----------------------------------------------

    def codebook(self) -> galif.Codebook:
        cb = getattr(self, "codebook_", None)
        if cb is None:
            raise NotFittedError("GalifEncoder has no codebook; call fit() or set_codebook()")
        return cb

    def set_codebook(self, codebook: galif.Codebook) -> "GalifEncoder":
        if codebook.dim != self.descriptor_dim:
            raise ValidationError(
                f"codebook dim {codebook.dim} != descriptor dim {self.descriptor_dim}"
            )
        self.codebook_ = codebook
        return self

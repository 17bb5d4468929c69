"""Implicit neural representation: multiresolution hash encoding + small MLP.

The model maps normalized (x, y, t) coordinates in [0, 1]^3 to complex
intensities through ``L`` hash-grid levels (trilinear interpolation of
learned feature vectors, concatenated across levels) followed by a ReLU MLP
with two linear outputs combined as ``out0 + 1j*out1``.

Both the forward pass and full reverse-mode backpropagation are implemented
analytically; no autodiff framework is involved. Gradients for complex
outputs follow the real-pair convention: an upstream gradient ``g`` packs
``dL/dRe`` in its real part and ``dL/dIm`` in its imaginary part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .numerics import seeded_rng

# Spatial-hash multipliers, one per coordinate axis (x, y, t).
HASH_PRIMES = (1, 2654435761, 805459861)

_CORNER_OFFSETS = np.array(
    [[dx, dy, dz] for dz in (0, 1) for dy in (0, 1) for dx in (0, 1)],
    dtype=np.int64,
)  # (8, 3)


@dataclass(frozen=True)
class HashEncoderConfig:
    """Hyperparameters of the multiresolution hash encoder.

    Level ``l`` has lattice resolution ``floor(base_resolution *
    growth_factor**l)`` cells per axis, shared by all three axes of the
    normalized coordinate cube.
    """

    levels: int = 12
    log2_table_size: int = 17
    features_per_level: int = 2
    base_resolution: int = 4
    growth_factor: float = 1.45

    def __post_init__(self) -> None:
        if self.levels < 1 or self.features_per_level < 1:
            raise DataError("levels and features_per_level must be >= 1")
        if self.base_resolution < 2:
            raise DataError("base_resolution must be >= 2")
        if self.growth_factor <= 1.0:
            raise DataError("growth_factor must be > 1")

    @property
    def table_size(self) -> int:
        return 1 << self.log2_table_size

    def level_resolutions(self) -> list[int]:
        return [
            int(math.floor(self.base_resolution * self.growth_factor**level))
            for level in range(self.levels)
        ]

    def level_is_dense(self, level: int) -> bool:
        res = self.level_resolutions()[level]
        return (res + 1) ** 3 <= self.table_size


@dataclass(frozen=True)
class ModelConfig:
    """Encoder plus MLP shape: hidden ReLU layers ending in 2 linear outputs."""

    encoder: HashEncoderConfig = field(default_factory=HashEncoderConfig)
    hidden_layers: int = 5
    hidden_units: int = 64

    def __post_init__(self) -> None:
        if self.hidden_layers < 0 or (self.hidden_layers > 0 and self.hidden_units < 1):
            raise DataError("invalid MLP shape")

    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per linear layer, input to output."""
        in_dim = self.encoder.levels * self.encoder.features_per_level
        dims = []
        for _ in range(self.hidden_layers):
            dims.append((in_dim, self.hidden_units))
            in_dim = self.hidden_units
        dims.append((in_dim, 2))
        return dims


@dataclass
class ModelParams:
    """Learnable state: one feature table per level plus MLP weights/biases."""

    grids: list[np.ndarray]  # each (table_rows, features_per_level)
    weights: list[np.ndarray]  # each (fan_in, fan_out)
    biases: list[np.ndarray]  # each (fan_out,)

    def arrays(self) -> list[np.ndarray]:
        """Flat parameter list in the canonical order: grids level-ascending,
        then per MLP layer weights before biases."""
        out = list(self.grids)
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            grids=[g.copy() for g in self.grids],
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def num_params(self) -> int:
        return sum(a.size for a in self.arrays())


@dataclass(frozen=True)
class CoordinateBatch:
    """Normalized (x, y, t) triples plus the pixel/frame grid they came from.

    ``coords`` enumerates row-major (row, col, time) with time fastest, so
    model outputs reshape directly to an (n, n, num_times) image stack.
    ``t_frames`` keeps the time axis in frame units (0 .. frames-1, with
    inserted fractional values when temporally upsampled).
    """

    coords: np.ndarray  # (B, 3) float64 in [0, 1]
    n: int
    frames: int
    t_frames: np.ndarray  # (num_times,) frame-unit times

    @property
    def num_times(self) -> int:
        return self.t_frames.shape[0]


def make_coordinates(n: int, frames: int, temporal_upsample: int = 1) -> CoordinateBatch:
    """Pixel-center coordinate batch, optionally with a denser time axis.

    Spatial coordinates sit at pixel centers ``(p + 0.5)/n``. Temporal
    coordinates sit at frame centers ``(t + 0.5)/frames``; with upsampling
    factor ``R`` the gap between consecutive frames receives ``R - 1``
    equally spaced extra values (frame units ``k + i/R``), endpoints
    inclusive, mapped through the same affine normalization used at
    training time.
    """
    if n < 1 or frames < 1:
        raise DataError("n and frames must be >= 1")
    r = int(temporal_upsample)
    if r != temporal_upsample or r < 1:
        raise DataError(f"temporal_upsample must be an integer >= 1, got {temporal_upsample}")

    if frames == 1:
        t_frames = np.array([0.0])
    else:
        t_frames = np.arange((frames - 1) * r + 1, dtype=np.float64) / r
    xs = (np.arange(n, dtype=np.float64) + 0.5) / n
    ts = (t_frames + 0.5) / frames

    rows, cols, times = np.meshgrid(xs, xs, ts, indexing="ij")
    coords = np.stack([cols.ravel(), rows.ravel(), times.ravel()], axis=-1)
    return CoordinateBatch(coords=coords, n=n, frames=frames, t_frames=t_frames)


def hash_index(config: HashEncoderConfig, level: int, lattice: np.ndarray) -> np.ndarray:
    """Table row(s) for integer lattice coordinates at one level.

    Dense levels (where the full lattice fits the table) use an injective
    row-major index with x fastest; hashed levels use the xor-of-primes
    spatial hash reduced modulo the table size.
    """
    lattice = np.asarray(lattice, dtype=np.int64)
    squeeze = lattice.ndim == 1
    nodes = lattice.reshape(-1, 3)
    if config.level_is_dense(level):
        side = config.level_resolutions()[level] + 1
        idx = nodes[:, 0] + side * (nodes[:, 1] + side * nodes[:, 2])
    else:
        h = (
            nodes[:, 0].astype(np.uint64) * np.uint64(HASH_PRIMES[0])
            ^ nodes[:, 1].astype(np.uint64) * np.uint64(HASH_PRIMES[1])
            ^ nodes[:, 2].astype(np.uint64) * np.uint64(HASH_PRIMES[2])
        )
        idx = (h & np.uint64(config.table_size - 1)).astype(np.int64)
    return idx[0] if squeeze else idx.reshape(lattice.shape[:-1])


@dataclass
class EncodeCache:
    indices: list[np.ndarray]  # per level (B, 8) int64
    weights: list[np.ndarray]  # per level (B, 8) float64


def _level_geometry(coords: np.ndarray, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    pos = coords * resolution
    cell = np.minimum(np.floor(pos), resolution - 1).astype(np.int64)
    frac = pos - cell
    return cell, frac


def encode(
    coords: np.ndarray, config: HashEncoderConfig, grids: list[np.ndarray]
) -> tuple[np.ndarray, EncodeCache]:
    """Trilinear hash-grid features for a coordinate batch.

    Returns the (B, levels*features) feature matrix and the interpolation
    cache (corner rows and blend weights) needed for backpropagation.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise DataError(f"coords must have shape (B, 3), got {coords.shape}")
    if coords.size and (coords.min() < 0.0 or coords.max() > 1.0):
        raise DataError("coordinates outside [0, 1]")
    if len(grids) != config.levels:
        raise DataError(f"{len(grids)} grids for {config.levels} levels")

    batch = coords.shape[0]
    feats = np.empty((batch, config.levels * config.features_per_level))
    cache = EncodeCache(indices=[], weights=[])
    resolutions = config.level_resolutions()
    f = config.features_per_level

    for level, res in enumerate(resolutions):
        cell, frac = _level_geometry(coords, res)
        corners = cell[:, None, :] + _CORNER_OFFSETS[None, :, :]  # (B, 8, 3)
        along = np.where(_CORNER_OFFSETS[None, :, :] == 1, frac[:, None, :], 1.0 - frac[:, None, :])
        w = along[:, :, 0] * along[:, :, 1] * along[:, :, 2]  # (B, 8)
        idx = hash_index(config, level, corners)  # (B, 8)
        gathered = grids[level][idx]  # (B, 8, F)
        feats[:, level * f : (level + 1) * f] = np.einsum("bc,bcf->bf", w, gathered)
        cache.indices.append(idx)
        cache.weights.append(w)
    return feats, cache


def encode_backward(
    cache: EncodeCache, config: HashEncoderConfig, grad_feats: np.ndarray
) -> list[np.ndarray]:
    """Scatter-add feature gradients back into per-level table gradients.

    Accumulation runs through ``np.bincount`` in batch order, a serial
    fixed-order reduction, so results are bitwise reproducible.
    """
    f = config.features_per_level
    grads = []
    for level in range(config.levels):
        idx = cache.indices[level].ravel()
        w = cache.weights[level]
        g_level = grad_feats[:, level * f : (level + 1) * f]  # (B, F)
        contrib = w[:, :, None] * g_level[:, None, :]  # (B, 8, F)
        table_rows = _grid_rows(config, level)
        grad = np.empty((table_rows, f))
        for fi in range(f):
            grad[:, fi] = np.bincount(
                idx, weights=contrib[:, :, fi].ravel(), minlength=table_rows
            )
        grads.append(grad)
    return grads


def _grid_rows(config: HashEncoderConfig, level: int) -> int:
    # Every level owns a full-size table; dense levels use an injective
    # prefix of it and leave the remaining rows untouched.
    return config.table_size


@dataclass
class ForwardCache:
    """Activations retained by model_forward for the backward pass."""

    encode_cache: EncodeCache
    layer_inputs: list[np.ndarray]  # input to each linear layer
    batch_size: int
    params_ref: ModelParams


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """Deterministic initialization: grid features uniform in [-1e-4, 1e-4],
    MLP weights uniform in +-sqrt(6/fan_in), biases zero."""
    rng = seeded_rng(seed)
    enc = config.encoder
    grids = [
        rng.uniform(-1e-4, 1e-4, size=(_grid_rows(enc, level), enc.features_per_level))
        for level in range(enc.levels)
    ]
    weights = []
    biases = []
    for fan_in, fan_out in config.layer_dims():
        lim = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(grids=grids, weights=weights, biases=biases)


def model_forward(
    batch: CoordinateBatch | np.ndarray,
    params: ModelParams,
    config: ModelConfig,
) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network; returns complex values (B,) plus the cache.

    Rows are independent, so evaluating any chunking of the batch and
    concatenating gives bitwise-identical results.
    """
    coords = batch.coords if isinstance(batch, CoordinateBatch) else batch
    feats, enc_cache = encode(coords, config.encoder, params.grids)

    layer_inputs = [feats]
    x = feats
    n_layers = len(params.weights)
    for i in range(n_layers - 1):
        z = x @ params.weights[i] + params.biases[i]
        x = np.maximum(z, 0.0)
        layer_inputs.append(x)
    out = x @ params.weights[-1] + params.biases[-1]  # (B, 2)
    values = out[:, 0] + 1j * out[:, 1]
    cache = ForwardCache(
        encode_cache=enc_cache,
        layer_inputs=layer_inputs,
        batch_size=coords.shape[0],
        params_ref=params,
    )
    return values, cache


def model_backward(
    cache: ForwardCache,
    upstream: np.ndarray,
    params: ModelParams,
    config: ModelConfig,
) -> ModelParams:
    """Exact reverse-mode gradients for every parameter array.

    ``upstream`` is the complex loss gradient per output value in the
    real-pair convention (real part = dL/d out0, imaginary part =
    dL/d out1). The ReLU subgradient at exactly zero is zero; the stored
    post-activations recover the pre-activation sign, since relu(z) > 0
    iff z > 0.
    """
    if params is not cache.params_ref:
        raise DataError("backward cache does not belong to these parameters")
    if upstream.shape != (cache.batch_size,):
        raise DataError(
            f"upstream gradient shape {upstream.shape} does not match batch "
            f"size {cache.batch_size}"
        )
    g = np.stack([upstream.real, upstream.imag], axis=-1)  # (B, 2)

    grad_w = [np.empty(0)] * len(params.weights)
    grad_b = [np.empty(0)] * len(params.biases)

    # Output layer, then hidden layers in reverse.
    x_last = cache.layer_inputs[-1]
    grad_w[-1] = x_last.T @ g
    grad_b[-1] = g.sum(axis=0)
    gx = g @ params.weights[-1].T
    for i in range(len(params.weights) - 2, -1, -1):
        mask = cache.layer_inputs[i + 1] > 0
        gz = np.where(mask, gx, 0.0)
        grad_w[i] = cache.layer_inputs[i].T @ gz
        grad_b[i] = gz.sum(axis=0)
        gx = gz @ params.weights[i].T

    grad_grids = encode_backward(cache.encode_cache, config.encoder, gx)
    return ModelParams(grids=grad_grids, weights=grad_w, biases=grad_b)

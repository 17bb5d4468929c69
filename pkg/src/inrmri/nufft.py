"""Non-uniform Fourier operators via Kaiser-Bessel gridding.

Conventions
-----------
Images are indexed ``[row, col]`` with pixel offsets ``ry = row - n/2``,
``rx = col - n/2``. k-space coordinates are radians/pixel, and the forward
operator evaluates

    s(k) = (1/n) * sum_r img(r) * exp(-i (kx*rx + ky*ry))

on the trajectory samples (the 1/n factor mirrors the unitary Cartesian
FFT). The adjoint is the exact adjoint of the gridding forward, which in
turn approximates the direct sum above to the accuracy set by the kernel
width and oversampling factor.

The gridding pipeline is the standard one: deapodize in image space, FFT on
an oversampled power-of-two grid, then interpolate the Cartesian spectrum
onto the target coordinates with a finite-support Kaiser-Bessel kernel.
Because every step is linear and the adjoint reverses each step exactly
(spread, inverse FFT, crop, deapodize), the forward/adjoint pair passes
dot-product tests at machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .numerics import is_power_of_two
from .trajectory import DensityWeights, Trajectory

DEFAULT_OVERSAMPLING = 2.0
# Measured relative L2 error against direct summation at alpha = 2:
# W=4 ~7e-4, W=6 ~7e-6, W=8 ~6e-8. Width 8 holds the 1e-6 budget with margin.
DEFAULT_KERNEL_WIDTH = 8


def beatty_beta(kernel_width: int, oversampling: float) -> float:
    """Kaiser-Bessel shape parameter for a given (width, oversampling)."""
    w = kernel_width
    a = oversampling
    return np.pi * np.sqrt(w**2 / a**2 * (a - 0.5) ** 2 - 0.8)


def kaiser_bessel(u: np.ndarray, kernel_width: int, beta: float) -> np.ndarray:
    """Kaiser-Bessel interpolation kernel I0(beta*sqrt(1-(2u/W)^2)) on |u|<=W/2."""
    u = np.asarray(u, dtype=np.float64)
    inside = np.abs(u) <= kernel_width / 2
    arg = 1.0 - (2.0 * u / kernel_width) ** 2
    arg = np.where(inside, np.maximum(arg, 0.0), 0.0)
    return np.where(inside, np.i0(beta * np.sqrt(arg)), 0.0)


def kaiser_bessel_fourier(
    x: np.ndarray, kernel_width: int, beta: float, grid_size: int
) -> np.ndarray:
    """Continuous Fourier transform of the kernel at image offsets ``x``.

    Evaluates W * sinh(z)/z with z = sqrt(beta^2 - (pi*W*x/G)^2), continued
    as sin for imaginary z. This is the exact deapodization profile.
    """
    x = np.asarray(x, dtype=np.float64)
    q = np.pi * kernel_width * x / grid_size
    diff = beta**2 - q**2
    z = np.sqrt(np.abs(diff))
    with np.errstate(invalid="ignore"):
        val = np.where(diff > 0, np.sinh(z) / z, np.sinc(z / np.pi))
    # sinc handles the sin(z)/z branch including z == 0 (limit 1)
    return kernel_width * np.where(z == 0, 1.0, val)


@dataclass(frozen=True)
class NufftPlan:
    """Immutable gridding plan for one frame's sample coordinates.

    The interpolation taps (flat grid indices and Kaiser-Bessel weights) are
    precomputed at plan build time, so forward/adjoint calls reduce to a
    gather/scatter plus one FFT. Plans are safe to share across threads.
    """

    n: int
    oversampling: float
    kernel_width: int
    beta: float
    grid_size: int
    coords: np.ndarray  # (M, S, 2) radians/pixel
    kernel_table: np.ndarray  # dense symmetric sampling of the kernel
    apodization: np.ndarray  # (n, n) strictly positive deapodization map
    flat_index: np.ndarray = field(repr=False)  # (P*W*W,) int64 into G*G grid
    flat_weight: np.ndarray = field(repr=False)  # (P*W*W,) float64

    @property
    def num_samples(self) -> int:
        return self.coords.shape[0] * self.coords.shape[1]


def _next_power_of_two(n: int) -> int:
    g = 1
    while g < n:
        g *= 2
    return g


def make_plan(
    n: int,
    coords: np.ndarray,
    oversampling: float = DEFAULT_OVERSAMPLING,
    kernel_width: int = DEFAULT_KERNEL_WIDTH,
) -> NufftPlan:
    """Build a gridding plan for one frame.

    Parameters
    ----------
    n : int
        Image side length (power of two).
    coords : ndarray, shape (M, S, 2)
        Sample coordinates in radians/pixel, components in [-pi, pi).
    """
    if not is_power_of_two(n):
        raise DataError(f"image size must be a power of two, got {n}")
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 3 or coords.shape[-1] != 2:
        raise DataError(f"coords must have shape (M, S, 2), got {coords.shape}")
    if kernel_width < 2 or kernel_width % 2 != 0:
        raise DataError(f"kernel_width must be an even integer >= 2, got {kernel_width}")
    if oversampling < 1.25:
        raise DataError(f"oversampling must be >= 1.25, got {oversampling}")

    grid = _next_power_of_two(int(np.ceil(oversampling * n)))
    beta = beatty_beta(kernel_width, oversampling)

    # Deapodization: kernel FT sampled at the n pixel offsets, per axis.
    offsets = np.arange(n, dtype=np.float64) - n / 2
    apod_1d = kaiser_bessel_fourier(offsets, kernel_width, beta, grid)
    apodization = np.outer(apod_1d, apod_1d)
    if not np.all(apodization > 0):
        raise DataError(
            "deapodization map not strictly positive; widen oversampling"
        )

    # Interpolation taps: W integer grid lines per axis around each sample.
    w = kernel_width
    flat = coords.reshape(-1, 2)
    u = flat * grid / (2.0 * np.pi)  # grid units, in [-G/2, G/2)
    base = np.floor(u).astype(np.int64) - w // 2 + 1
    taps = base[:, None, :] + np.arange(w)[None, :, None]  # (P, W, 2)
    dist = taps - u[:, None, :]
    weights = kaiser_bessel(dist, w, beta)  # (P, W, 2)
    wrapped = np.mod(taps, grid)

    # Combined 2D taps: rows from the ky axis, columns from the kx axis.
    iy = wrapped[:, :, 1]
    ix = wrapped[:, :, 0]
    flat_index = (iy[:, :, None] * grid + ix[:, None, :]).reshape(-1)
    flat_weight = (weights[:, :, 1][:, :, None] * weights[:, :, 0][:, None, :]).reshape(-1)

    half = w / 2
    table_u = np.linspace(-half, half, 1025)
    kernel_table = kaiser_bessel(table_u, w, beta)

    return NufftPlan(
        n=n,
        oversampling=oversampling,
        kernel_width=w,
        beta=beta,
        grid_size=grid,
        coords=coords,
        kernel_table=kernel_table,
        apodization=apodization,
        flat_index=flat_index,
        flat_weight=flat_weight,
    )


def make_plans(
    traj: Trajectory,
    oversampling: float = DEFAULT_OVERSAMPLING,
    kernel_width: int = DEFAULT_KERNEL_WIDTH,
) -> list[NufftPlan]:
    """One immutable plan per frame (frames differ only in spoke angles)."""
    return [
        make_plan(traj.n, traj.coords[t], oversampling, kernel_width)
        for t in range(traj.frames)
    ]


def nufft_forward(img: np.ndarray, plan: NufftPlan) -> np.ndarray:
    """Image (n, n) -> non-Cartesian samples (M, S)."""
    n = plan.n
    if img.shape != (n, n):
        raise DataError(f"image shape {img.shape} does not match plan size {n}")
    g = plan.grid_size
    padded = np.zeros((g, g), dtype=np.complex128)
    lo = g // 2 - n // 2
    padded[lo : lo + n, lo : lo + n] = img / plan.apodization
    spectrum = np.fft.fft2(np.fft.ifftshift(padded))
    vals = spectrum.ravel()[plan.flat_index] * plan.flat_weight
    m, s = plan.coords.shape[:2]
    out = vals.reshape(m * s, plan.kernel_width**2).sum(axis=1)
    return (out / n).reshape(m, s)


def nufft_adjoint(samples: np.ndarray, plan: NufftPlan) -> np.ndarray:
    """Non-Cartesian samples (M, S) -> image (n, n); exact adjoint of forward."""
    m, s = plan.coords.shape[:2]
    if samples.shape != (m, s):
        raise DataError(
            f"sample shape {samples.shape} does not match plan ({m}, {s})"
        )
    g = plan.grid_size
    w2 = plan.kernel_width**2
    spread = np.repeat(samples.reshape(-1), w2) * plan.flat_weight
    grid_re = np.bincount(plan.flat_index, weights=spread.real, minlength=g * g)
    grid_im = np.bincount(plan.flat_index, weights=spread.imag, minlength=g * g)
    grid = (grid_re + 1j * grid_im).reshape(g, g)
    padded = np.fft.fftshift(np.fft.ifft2(grid)) * (g * g)
    n = plan.n
    lo = g // 2 - n // 2
    img = padded[lo : lo + n, lo : lo + n] / plan.apodization
    return img / n


@dataclass(frozen=True)
class CoilMaps:
    """Complex coil sensitivity maps, shape (coils, n, n).

    Inside the support (pixels where any coil is nonzero) the maps satisfy
    sum_c |S_c|^2 = 1.
    """

    maps: np.ndarray

    @property
    def num_coils(self) -> int:
        return self.maps.shape[0]

    def validate(self, tol: float = 1e-10) -> None:
        power = np.sum(np.abs(self.maps) ** 2, axis=0)
        support = power > 0
        if np.any(np.abs(power[support] - 1.0) > tol):
            raise DataError("coil maps violate sum_c |S_c|^2 = 1 on the support")


def multicoil_forward(
    img: np.ndarray, coils: CoilMaps, plans: list[NufftPlan]
) -> np.ndarray:
    """Dynamic image (n, n, T) -> k-space samples (C, T, M, S)."""
    n_frames = img.shape[2]
    if len(plans) != n_frames:
        raise DataError(f"{len(plans)} plans for {n_frames} frames")
    if coils.maps.shape[1:] != img.shape[:2]:
        raise DataError(
            f"coil map grid {coils.maps.shape[1:]} does not match image {img.shape[:2]}"
        )
    c = coils.num_coils
    m, s = plans[0].coords.shape[:2]
    out = np.empty((c, n_frames, m, s), dtype=np.complex128)
    for t in range(n_frames):
        frame = img[:, :, t]
        for ci in range(c):
            out[ci, t] = nufft_forward(coils.maps[ci] * frame, plans[t])
    return out


def multicoil_adjoint(
    samples: np.ndarray,
    coils: CoilMaps,
    plans: list[NufftPlan],
    weights: DensityWeights | None = None,
) -> np.ndarray:
    """k-space samples (C, T, M, S) -> dynamic image (n, n, T).

    With ``weights`` this is the density-compensated adjoint baseline;
    without, it is the exact adjoint of :func:`multicoil_forward`. The coil
    sum runs in a fixed order, so results are reproducible bit for bit.
    """
    c, n_frames, m, s = samples.shape
    if c != coils.num_coils or len(plans) != n_frames:
        raise DataError(
            f"samples shape {samples.shape} inconsistent with "
            f"{coils.num_coils} coils / {len(plans)} plans"
        )
    n = plans[0].n
    out = np.zeros((n, n, n_frames), dtype=np.complex128)
    conj_maps = np.conj(coils.maps)
    for t in range(n_frames):
        acc = np.zeros((n, n), dtype=np.complex128)
        for ci in range(c):
            frame_samples = samples[ci, t]
            if weights is not None:
                frame_samples = frame_samples * weights.weights[t]
            acc += conj_maps[ci] * nufft_adjoint(frame_samples, plans[t])
        out[:, :, t] = acc
    return out

"""Quantitative evaluation: PSNR, SSIM, k-space NRMSE, ROI curves.

PSNR and SSIM operate frame by frame on magnitude sequences normalized to
[0, 1] by the sequence-global minimum and maximum. SSIM uses global
per-frame statistics (single window) with c1 = 0.01^2 and c2 = 0.03^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .numerics import fft2
from .nufft import CoilMaps

PSNR_CAP_DB = 99.0
_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2


@dataclass(frozen=True)
class MetricsReport:
    frame_psnr: np.ndarray
    frame_ssim: np.ndarray
    coil_nrmse: np.ndarray

    @property
    def mean_psnr(self) -> float:
        return float(self.frame_psnr.mean())

    def summary(self) -> dict:
        def agg(x: np.ndarray) -> tuple[float, float]:
            return float(x.mean()), float(x.std())

        p, ps = agg(self.frame_psnr)
        s, ss = agg(self.frame_ssim)
        n, ns = agg(self.coil_nrmse) if self.coil_nrmse.size else (float("nan"),) * 2
        return {
            "psnr_mean": p,
            "psnr_std": ps,
            "ssim_mean": s,
            "ssim_std": ss,
            "nrmse_mean": n,
            "nrmse_std": ns,
        }


@dataclass(frozen=True)
class RoiCurve:
    mask: np.ndarray
    values: np.ndarray


def normalize_sequence(d: np.ndarray) -> np.ndarray:
    """Magnitude sequence mapped to [0, 1] by the global min/max."""
    mag = np.abs(d)
    lo = mag.min()
    hi = mag.max()
    if hi <= lo:
        raise DataError("cannot normalize a constant sequence")
    return (mag - lo) / (hi - lo)


def psnr(y: np.ndarray, y_hat: np.ndarray) -> float:
    """10*log10(1/MSE) for [0,1] frames, capped at 99 dB for exact matches."""
    if y.shape != y_hat.shape:
        raise DataError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    mse = float(np.mean((y - y_hat) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def ssim(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Single-window SSIM from global frame statistics."""
    if y.shape != y_hat.shape:
        raise DataError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    mu_y = y.mean()
    mu_h = y_hat.mean()
    var_y = y.var()
    var_h = y_hat.var()
    cov = ((y - mu_y) * (y_hat - mu_h)).mean()
    return float(
        (2 * mu_y * mu_h + _SSIM_C1)
        * (2 * cov + _SSIM_C2)
        / ((mu_y**2 + mu_h**2 + _SSIM_C1) * (var_y + var_h + _SSIM_C2))
    )


def nrmse_kspace(pred: np.ndarray, meas: np.ndarray) -> np.ndarray:
    """Per-coil ||meas - pred|| / ||meas|| over all frames of each coil.

    Both arguments are full-Cartesian spectra with the coil axis first.
    """
    if pred.shape != meas.shape:
        raise DataError(f"shape mismatch: {pred.shape} vs {meas.shape}")
    axes = tuple(range(1, meas.ndim))
    ref = np.sqrt(np.sum(np.abs(meas) ** 2, axis=axes))
    if np.any(ref == 0):
        raise DataError("zero-norm reference coil in NRMSE")
    err = np.sqrt(np.sum(np.abs(meas - pred) ** 2, axis=axes))
    return err / ref


def coil_spectra(d: np.ndarray, coils: CoilMaps) -> np.ndarray:
    """Cartesian spectra (C, T, n, n) of coil-weighted frames via unitary FFT."""
    c = coils.num_coils
    n, _, t = d.shape
    out = np.empty((c, t, n, n), dtype=np.complex128)
    for ci in range(c):
        for ti in range(t):
            out[ci, ti] = fft2(coils.maps[ci] * d[:, :, ti], "forward")
    return out


def roi_curve(d: np.ndarray, mask: np.ndarray) -> RoiCurve:
    """Mean magnitude inside the mask, one value per frame."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != d.shape[:2]:
        raise DataError(f"mask shape {mask.shape} does not match image {d.shape[:2]}")
    if not mask.any():
        raise DataError("ROI mask is empty")
    mag = np.abs(d[mask, :])
    return RoiCurve(mask=mask, values=mag.mean(axis=0))


def evaluate_reconstruction(
    recon: np.ndarray, truth: np.ndarray, coils: CoilMaps
) -> MetricsReport:
    """Frame-wise PSNR/SSIM on normalized magnitudes plus coil-wise NRMSE
    between the Cartesian spectra of reconstruction and ground truth."""
    if recon.shape != truth.shape:
        raise DataError(f"shape mismatch: {recon.shape} vs {truth.shape}")
    y = normalize_sequence(truth)
    y_hat = normalize_sequence(recon)
    frames = recon.shape[2]
    frame_psnr = np.array([psnr(y[:, :, t], y_hat[:, :, t]) for t in range(frames)])
    frame_ssim = np.array([ssim(y[:, :, t], y_hat[:, :, t]) for t in range(frames)])
    nrmse = nrmse_kspace(coil_spectra(recon, coils), coil_spectra(truth, coils))
    return MetricsReport(
        frame_psnr=frame_psnr, frame_ssim=frame_ssim, coil_nrmse=nrmse
    )

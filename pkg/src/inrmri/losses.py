"""Training objective terms and their analytic gradients.

All gradients follow the real-pair convention for complex variables: the
returned complex array packs dL/dRe in its real part and dL/dIm in its
imaginary part, so central finite differences on the real and imaginary
parts match the returned values directly.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .numerics import svd

_TV_ZERO = 1e-12


def casorati(d: np.ndarray) -> np.ndarray:
    """(n, n, T) image stack -> (n*n, T) space-time matrix."""
    return d.reshape(-1, d.shape[-1])


def dc_loss(
    pred: np.ndarray, meas: np.ndarray, eps_dc: float = 1e-4
) -> tuple[float, np.ndarray]:
    """Relative L2 data-consistency loss.

    value = sum_i |pred_i - meas_i|^2 / (|pred_i|^2 + eps), summed over all
    k-space elements. The epsilon keeps the normalization finite where the
    prediction vanishes, and the per-element normalization balances
    gradients between low- and high-frequency samples.
    """
    if pred.shape != meas.shape:
        raise DataError(f"shape mismatch: pred {pred.shape} vs meas {meas.shape}")
    if eps_dc <= 0:
        raise DataError("eps_dc must be > 0")
    diff = pred - meas
    num = np.abs(diff) ** 2
    den = np.abs(pred) ** 2 + eps_dc
    value = float(np.sum(num / den))
    grad = 2.0 * (diff / den - num * pred / den**2)
    return value, grad


def tv_loss(d: np.ndarray) -> tuple[float, np.ndarray]:
    """Temporal total variation: sum over pixels of |d[t+1] - d[t]|.

    The subgradient of |z| is z/|z| for |z| above numerical zero and 0
    otherwise; it enters the two frames of each difference with opposite
    signs. A single-frame sequence has zero loss and gradient.
    """
    grad = np.zeros_like(d)
    if d.shape[-1] < 2:
        return 0.0, grad
    diff = d[..., 1:] - d[..., :-1]
    mag = np.abs(diff)
    value = float(mag.sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(mag > _TV_ZERO, diff / np.where(mag > 0, mag, 1.0), 0.0)
    grad[..., 1:] += unit
    grad[..., :-1] -= unit
    return value, grad


def nuclear_loss(d: np.ndarray) -> tuple[float, np.ndarray]:
    """Nuclear norm of the Casorati matrix and its subgradient U V^H.

    The subgradient is exact when the singular values are distinct and
    nonzero, which holds almost surely during training.
    """
    mat = casorati(d)
    u, s, v = svd(mat)
    value = float(s.sum())
    grad = (u @ v.conj().T).reshape(d.shape)
    return value, grad

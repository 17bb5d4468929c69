"""Foundational numerical kernels: FFT, SVD, seeded RNG.

Complex arrays are plain ``numpy.ndarray`` objects (complex128 by default;
complex64 is an opt-in storage format). All internal optimization math runs
in double precision.

The FFT is unitary (``norm="ortho"``, i.e. 1/sqrt(N) per dimension), so a
forward/inverse round trip is the identity and Parseval's identity holds
exactly up to rounding.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DataError, NumericalError


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


class SvdResult(NamedTuple):
    """Thin SVD ``m = u @ diag(s) @ v.conj().T``.

    ``u`` and ``v`` have orthonormal columns; ``s`` is non-negative and
    sorted descending.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def fft2(img: np.ndarray, direction: str = "forward") -> np.ndarray:
    """Unitary 2D DFT of a power-of-two-sized array.

    Parameters
    ----------
    img : ndarray
        2D complex array; both dimensions must be powers of two.
    direction : {"forward", "inverse"}

    Returns
    -------
    ndarray
        Transformed array, same shape, DC term at index (0, 0).
    """
    if img.ndim != 2:
        raise DataError(f"fft2 expects a 2D array, got shape {img.shape}")
    for dim in img.shape:
        if not is_power_of_two(dim):
            raise DataError(
                f"fft2 requires power-of-two dimensions, got shape {img.shape}"
            )
    if direction == "forward":
        return np.fft.fft2(img, norm="ortho")
    if direction == "inverse":
        return np.fft.ifft2(img, norm="ortho")
    raise DataError(f"unknown fft2 direction {direction!r}")


def svd(m: np.ndarray) -> SvdResult:
    """Thin SVD of a 2D matrix with descending singular values.

    Raises
    ------
    NumericalError
        If the underlying LAPACK iteration fails to converge.
    """
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DataError(f"svd expects a non-empty 2D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DataError("svd input contains non-finite entries")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return SvdResult(u=u, s=s, v=vh.conj().T)


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic random stream: same seed, same sequence, any platform.

    The stream is single-owner; do not share one generator across threads.
    """
    return np.random.Generator(np.random.PCG64(seed))

"""Shared independent oracles: brute-force transforms kept deliberately
separate from the library code paths they check."""

import numpy as np
import pytest


def direct_dft2(img, inverse=False):
    """O(N^4) double-loop unitary DFT, the oracle for fft2."""
    n0, n1 = img.shape
    out = np.zeros((n0, n1), dtype=complex)
    sign = 1j if inverse else -1j
    for k0 in range(n0):
        for k1 in range(n1):
            acc = 0.0 + 0.0j
            for x0 in range(n0):
                for x1 in range(n1):
                    acc += img[x0, x1] * np.exp(
                        sign * 2 * np.pi * (k0 * x0 / n0 + k1 * x1 / n1)
                    )
            out[k0, k1] = acc
    return out / np.sqrt(n0 * n1)


def direct_nufft_forward(img, coords):
    """Direct non-uniform DFT summation with centered integer pixel offsets
    and the same 1/n scale as the library operator."""
    n = img.shape[0]
    off = np.arange(n) - n // 2
    rx = off[None, :]
    ry = off[:, None]
    flat = coords.reshape(-1, 2)
    out = np.empty(flat.shape[0], dtype=complex)
    for i, (kx, ky) in enumerate(flat):
        out[i] = np.sum(img * np.exp(-1j * (kx * rx + ky * ry)))
    return (out / n).reshape(coords.shape[:-1])


def direct_nufft_adjoint(samples, coords, n):
    """Direct adjoint summation (1/n) sum_k s_k e^{+i k.r}."""
    off = np.arange(n) - n // 2
    rx = off[None, :]
    ry = off[:, None]
    flat_c = coords.reshape(-1, 2)
    flat_s = samples.reshape(-1)
    out = np.zeros((n, n), dtype=complex)
    for s, (kx, ky) in zip(flat_s, flat_c):
        out += s * np.exp(1j * (kx * rx + ky * ry))
    return out / n


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

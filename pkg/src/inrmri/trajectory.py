"""Golden-angle radial sampling geometry and density compensation.

Spokes advance by 111.25 degrees per readout, accumulate over the full
circle, and are grouped into temporal frames as consecutive acquisition
blocks. k-space coordinates are expressed in radians/pixel, each component
in [-pi, pi), so sample j of a spoke at angle phi sits at
``k = ((j - S/2)/S) * 2*pi * (cos phi, sin phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

GOLDEN_ANGLE_DEG = 111.25


@dataclass(frozen=True)
class Trajectory:
    """Per-frame golden-angle spoke geometry.

    Attributes
    ----------
    n : int
        Target image grid size (side length), kept for plan building and
        serialization.
    spokes_per_frame : int
    frames : int
    samples_per_spoke : int
    angles : ndarray, shape (frames * spokes_per_frame,)
        Spoke angles in radians, acquisition order.
    coords : ndarray, shape (frames, spokes_per_frame, samples_per_spoke, 2)
        Per-sample (kx, ky) in radians/pixel.
    """

    n: int
    spokes_per_frame: int
    frames: int
    samples_per_spoke: int
    angles: np.ndarray
    coords: np.ndarray


@dataclass(frozen=True)
class DensityWeights:
    """Radial ramp weights, shape (frames, spokes_per_frame, samples_per_spoke)."""

    weights: np.ndarray


def golden_angle_trajectory(
    n: int, frames: int, spokes_per_frame: int, samples_per_spoke: int
) -> Trajectory:
    """Generate a golden-angle radial trajectory grouped into frames.

    Spoke ``i`` (global acquisition index) has angle ``(i * 111.25) mod 360``
    degrees; frame ``f`` holds spokes ``f*M .. (f+1)*M - 1``. Samples run
    from the -pi edge through the exact k-space center (sample S/2) up to
    just below +pi, so the extreme samples reach the Nyquist annulus.
    """
    from .numerics import is_power_of_two

    if not is_power_of_two(n):
        raise DataError(f"grid size must be a power of two, got {n}")
    if frames < 1 or spokes_per_frame < 1 or samples_per_spoke < 1:
        raise DataError("frames, spokes_per_frame and samples_per_spoke must be >= 1")
    if samples_per_spoke % 2 != 0:
        raise DataError(
            f"samples_per_spoke must be even so the center sample exists exactly, "
            f"got {samples_per_spoke}"
        )

    total = frames * spokes_per_frame
    angles_deg = (np.arange(total, dtype=np.float64) * GOLDEN_ANGLE_DEG) % 360.0
    angles = np.deg2rad(angles_deg)

    s = samples_per_spoke
    radius = (np.arange(s, dtype=np.float64) - s / 2) / s  # in [-1/2, 1/2)
    direction = np.stack([np.cos(angles), np.sin(angles)], axis=-1)  # (total, 2)
    coords = 2.0 * np.pi * radius[None, :, None] * direction[:, None, :]
    coords = coords.reshape(frames, spokes_per_frame, s, 2)

    return Trajectory(
        n=n,
        spokes_per_frame=spokes_per_frame,
        frames=frames,
        samples_per_spoke=s,
        angles=angles,
        coords=coords,
    )


def ramp_density_weights(traj: Trajectory) -> DensityWeights:
    """Radial ramp density compensation for the adjoint baseline.

    weight = |k| / (2*pi), except the exact-center sample which receives the
    weight of half the first radial step, 1/(2*S). Weights depend only on
    the readout index, so equal radii on different spokes get equal weights.
    """
    s = traj.samples_per_spoke
    w_line = np.abs(np.arange(s, dtype=np.float64) - s / 2) / s
    w_line[s // 2] = 1.0 / (2.0 * s)
    weights = np.broadcast_to(
        w_line, (traj.frames, traj.spokes_per_frame, s)
    ).copy()
    return DensityWeights(weights=weights)

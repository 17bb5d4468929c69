import numpy as np
import numpy.testing as npt
import pytest

from inrmri import (
    CoilMaps,
    DataError,
    golden_angle_trajectory,
    make_plan,
    make_plans,
    multicoil_adjoint,
    multicoil_forward,
    nufft_adjoint,
    nufft_forward,
    simulate_coil_maps,
)
from inrmri.numerics import is_power_of_two

from conftest import direct_nufft_forward, random_complex


@pytest.fixture
def small_plan():
    traj = golden_angle_trajectory(16, 1, 8, 32)
    return make_plan(16, traj.coords[0])


def test_plan_invariants(small_plan):
    assert is_power_of_two(small_plan.grid_size)
    assert small_plan.grid_size >= 2 * small_plan.n
    assert np.all(small_plan.apodization > 0)
    npt.assert_allclose(small_plan.kernel_table, small_plan.kernel_table[::-1])


def test_forward_delta_has_flat_spectrum(small_plan):
    img = np.zeros((16, 16), dtype=complex)
    img[8, 8] = 1.0  # pixel offset (0, 0)
    out = np.abs(nufft_forward(img, small_plan))
    ref = 1.0 / 16
    assert np.max(np.abs(out - ref)) / ref < 1e-6


def test_forward_zero_image(small_plan):
    out = nufft_forward(np.zeros((16, 16), dtype=complex), small_plan)
    assert np.all(out == 0)


def test_forward_matches_direct_summation(rng, small_plan):
    img = random_complex(rng, (16, 16))
    got = nufft_forward(img, small_plan)
    want = direct_nufft_forward(img, small_plan.coords)
    rel = np.linalg.norm(got - want) / np.linalg.norm(want)
    assert rel < 1e-6


def test_forward_linearity(rng, small_plan):
    x = random_complex(rng, (16, 16))
    y = random_complex(rng, (16, 16))
    a, b = 0.7 - 1.3j, -0.2 + 0.9j
    lhs = nufft_forward(a * x + b * y, small_plan)
    rhs = a * nufft_forward(x, small_plan) + b * nufft_forward(y, small_plan)
    assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) < 1e-10


def test_adjoint_dot_product(rng, small_plan):
    for _ in range(5):
        x = random_complex(rng, (16, 16))
        y = random_complex(rng, (8, 32))
        lhs = np.vdot(y, nufft_forward(x, small_plan))
        rhs = np.vdot(nufft_adjoint(y, small_plan), x)
        assert abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(y)) < 1e-6


def test_adjoint_zero_samples(small_plan):
    out = nufft_adjoint(np.zeros((8, 32), dtype=complex), small_plan)
    assert np.all(out == 0)


def test_psf_peaks_at_delta_location(small_plan):
    img = np.zeros((16, 16), dtype=complex)
    img[5, 11] = 1.0
    psf = nufft_adjoint(nufft_forward(img, small_plan), small_plan)
    peak = np.unravel_index(np.argmax(np.abs(psf)), psf.shape)
    assert peak == (5, 11)


def test_accuracy_improves_with_kernel_width(rng):
    traj = golden_angle_trajectory(16, 1, 8, 32)
    img = random_complex(rng, (16, 16))
    want = direct_nufft_forward(img, traj.coords[0])
    errs = []
    for w in (4, 6):
        plan = make_plan(16, traj.coords[0], kernel_width=w)
        got = nufft_forward(img, plan)
        errs.append(np.max(np.abs(got - want)))
    assert errs[1] <= errs[0]


def test_shape_errors(small_plan):
    with pytest.raises(DataError):
        nufft_forward(np.zeros((8, 8), dtype=complex), small_plan)
    with pytest.raises(DataError):
        nufft_adjoint(np.zeros((4, 4), dtype=complex), small_plan)
    with pytest.raises(DataError):
        make_plan(20, np.zeros((2, 4, 2)))  # not a power of two


def test_multicoil_identity_coil_reduces_to_nufft(rng):
    traj = golden_angle_trajectory(8, 2, 3, 16)
    plans = make_plans(traj)
    img = random_complex(rng, (8, 8, 2))
    coils = CoilMaps(maps=np.ones((1, 8, 8), dtype=complex))
    out = multicoil_forward(img, coils, plans)
    for t in range(2):
        npt.assert_allclose(out[0, t], nufft_forward(img[:, :, t], plans[t]), atol=1e-14)


def test_multicoil_zero_image(rng):
    traj = golden_angle_trajectory(8, 2, 3, 16)
    plans = make_plans(traj)
    coils = simulate_coil_maps(8, 3, seed=0)
    out = multicoil_forward(np.zeros((8, 8, 2), dtype=complex), coils, plans)
    assert np.all(out == 0)
    img = multicoil_adjoint(np.zeros((3, 2, 3, 16), dtype=complex), coils, plans)
    assert np.all(img == 0)


def test_multicoil_matches_composition_oracle(rng):
    traj = golden_angle_trajectory(8, 2, 4, 16)
    plans = make_plans(traj)
    coils = simulate_coil_maps(8, 2, seed=1)
    img = random_complex(rng, (8, 8, 2))
    out = multicoil_forward(img, coils, plans)
    for c in range(2):
        for t in range(2):
            want = direct_nufft_forward(coils.maps[c] * img[:, :, t], traj.coords[t])
            rel = np.linalg.norm(out[c, t] - want) / np.linalg.norm(want)
            assert rel < 1e-6


def test_multicoil_adjoint_dot_product(rng):
    traj = golden_angle_trajectory(8, 2, 4, 16)
    plans = make_plans(traj)
    coils = simulate_coil_maps(8, 3, seed=2)
    x = random_complex(rng, (8, 8, 2))
    y = random_complex(rng, (3, 2, 4, 16))
    lhs = np.vdot(y, multicoil_forward(x, coils, plans))
    rhs = np.vdot(multicoil_adjoint(y, coils, plans), x)
    assert abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(y)) < 1e-6


def test_multicoil_shape_errors(rng):
    traj = golden_angle_trajectory(8, 2, 3, 16)
    plans = make_plans(traj)
    coils = simulate_coil_maps(8, 2, seed=0)
    with pytest.raises(DataError):
        multicoil_forward(np.zeros((8, 8, 3), dtype=complex), coils, plans)
    with pytest.raises(DataError):
        multicoil_adjoint(np.zeros((4, 2, 3, 16), dtype=complex), coils, plans)

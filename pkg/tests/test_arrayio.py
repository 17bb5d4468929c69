import json

import numpy as np
import numpy.testing as npt
import pytest

from inrmri import (
    DataError,
    HashEncoderConfig,
    ModelConfig,
    golden_angle_trajectory,
    init_params,
    simulate_coil_maps,
)
from inrmri.arrayio import (
    load_checkpoint,
    load_dataset,
    load_trajectory,
    read_array,
    save_checkpoint,
    save_dataset,
    save_trajectory,
    to_uint8,
    write_array,
    write_loss_csv,
    write_metrics_csv,
    write_pgm,
)
from inrmri.metrics import MetricsReport
from inrmri.phantom import (
    DynamicImage,
    default_phantom_spec,
    generate_dynamic_image,
    retrospective_undersample,
)
from inrmri.training import LossRow

from conftest import random_complex


@pytest.mark.parametrize(
    "dtype",
    [np.float32, np.float64, np.complex64, np.complex128, np.bool_],
)
def test_array_roundtrip_bit_exact(tmp_path, rng, dtype):
    if dtype is np.bool_:
        arr = rng.random((5, 3)) > 0.5
    elif np.issubdtype(dtype, np.complexfloating):
        arr = random_complex(rng, (4, 6, 2)).astype(dtype)
    else:
        arr = rng.standard_normal((7, 2)).astype(dtype)
    path = tmp_path / "x.arr"
    write_array(path, arr, semantic="test")
    back, header = read_array(path)
    assert back.dtype == arr.dtype
    npt.assert_array_equal(back, arr)
    assert back.tobytes() == arr.tobytes()
    assert header["semantic"] == "test"
    assert header["byte_order"] == "little"


def test_array_roundtrip_preserves_tricky_floats(tmp_path):
    arr = np.array([0.0, -0.0, 5e-324, -5e-324, 1e308, np.pi], dtype=np.float64)
    path = tmp_path / "tricky.arr"
    write_array(path, arr)
    back, _ = read_array(path)
    assert back.tobytes() == arr.tobytes()
    assert np.all(np.isfinite(back))


def test_array_rejects_unsupported_dtype(tmp_path):
    with pytest.raises(DataError):
        write_array(tmp_path / "bad.arr", np.zeros(3, dtype=np.int32))


def test_array_truncation_detected(tmp_path):
    path = tmp_path / "x.arr"
    write_array(path, np.arange(8, dtype=np.float64))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(DataError):
        read_array(path)


def test_read_missing_file(tmp_path):
    with pytest.raises(DataError):
        read_array(tmp_path / "absent.arr")


def test_trajectory_roundtrip(tmp_path):
    traj = golden_angle_trajectory(32, 3, 5, 64)
    save_trajectory(tmp_path, traj)
    sidecar = json.loads((tmp_path / "traj.json").read_text())
    assert sidecar == {
        "n": 32,
        "frames": 3,
        "spokes_per_frame": 5,
        "samples_per_spoke": 64,
    }
    back = load_trajectory(tmp_path)
    npt.assert_array_equal(back.coords, traj.coords)
    npt.assert_allclose(back.angles, traj.angles, atol=1e-12)


def test_dataset_roundtrip(tmp_path):
    spec = default_phantom_spec(16, 3)
    truth = generate_dynamic_image(spec)
    traj = golden_angle_trajectory(16, 3, 4, 32)
    coils = simulate_coil_maps(16, 2, seed=0)
    ds = retrospective_undersample(truth, coils, traj, seed=1)
    save_dataset(tmp_path, ds, truth=truth)
    back, back_truth = load_dataset(tmp_path)
    npt.assert_array_equal(back.samples, ds.samples)
    npt.assert_array_equal(back.coils.maps, coils.maps)
    npt.assert_array_equal(back_truth.data, truth.data)
    assert back.meta["spokes_per_frame"] == 4


def test_dataset_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path)


def test_checkpoint_roundtrip(tmp_path):
    config = ModelConfig(
        encoder=HashEncoderConfig(
            levels=2,
            log2_table_size=8,
            features_per_level=2,
            base_resolution=4,
            growth_factor=1.7,
        ),
        hidden_layers=2,
        hidden_units=8,
    )
    params = init_params(config, seed=9)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, params, config, seed=9, n=16, frames=4)
    back_params, back_config, header = load_checkpoint(path)
    assert back_config == config
    assert header["seed"] == 9 and header["n"] == 16 and header["frames"] == 4
    for a, b in zip(params.arrays(), back_params.arrays()):
        npt.assert_array_equal(a, b)


def test_checkpoint_rejects_array_container(tmp_path):
    path = tmp_path / "x.arr"
    write_array(path, np.zeros(3))
    with pytest.raises(DataError):
        load_checkpoint(path)


def test_loss_csv_format(tmp_path):
    rows = [LossRow(1, 1.5, 0.25, 0.125, 1.50390625), LossRow(2, 0.75, 0.2, 0.1, 0.753)]
    path = tmp_path / "loss.csv"
    write_loss_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,dc,tv,lr_term,total"
    assert lines[1] == "1,1.5,0.25,0.125,1.50390625"
    assert len(lines) == 3


def test_metrics_csv_format(tmp_path):
    report = MetricsReport(
        frame_psnr=np.array([30.0, 40.0]),
        frame_ssim=np.array([0.9, 1.0]),
        coil_nrmse=np.array([0.5]),
    )
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, report)
    lines = path.read_text().splitlines()
    assert lines[0] == "kind,index,psnr,ssim,nrmse"
    assert lines[1].startswith("frame,0,30.0,0.9,")
    assert lines[3] == "coil,0,,,0.5"
    assert lines[4].startswith("aggregate_mean,,35.0,")
    assert lines[5].startswith("aggregate_std,,5.0,")


def test_pgm_writer(tmp_path):
    img = to_uint8(np.linspace(0, 1, 12).reshape(3, 4), 0.0, 1.0)
    path = tmp_path / "img.pgm"
    write_pgm(path, img)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n4 3\n255\n")
    assert raw[len(b"P5\n4 3\n255\n"):] == img.tobytes()
    assert img[0, 0] == 0 and img[2, 3] == 255


def test_to_uint8_windowing():
    frame = np.array([[0.0, 0.5, 1.0, 2.0]])
    out = to_uint8(frame, 0.5, 1.5)
    npt.assert_array_equal(out, [[0, 0, 128, 255]])
    with pytest.raises(DataError):
        to_uint8(frame, 1.0, 1.0)

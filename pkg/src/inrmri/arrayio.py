"""File formats: the array container, checkpoints, CSV reports, image dumps.

The array container is a single self-describing file: an 8-byte
little-endian header length, a JSON header (dtype, shape, byte order,
layout, semantic tag), then the raw row-major little-endian payload.
Round trips are bit-exact for every supported dtype.

Checkpoints use the same framing with a richer JSON header (model
configuration, seed, grid provenance) followed by the raw float64 tables:
grids level-ascending, then per MLP layer weights before biases.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .inr import HashEncoderConfig, ModelConfig, ModelParams
from .nufft import CoilMaps
from .phantom import DynamicImage, KSpaceDataset
from .trajectory import Trajectory

ARRAY_FORMAT = "inrmri-array"
CHECKPOINT_FORMAT = "inrmri-checkpoint"

_DTYPES = {
    "f32": "<f4",
    "f64": "<f8",
    "c64": "<c8",
    "c128": "<c16",
    "bool": "|b1",
}
_DTYPE_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}


def _write_framed(path: Path, header: dict, payload: bytes) -> None:
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        fh.write(payload)


def _read_framed(path: Path) -> tuple[dict, bytes]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with open(path, "rb") as fh:
        prefix = fh.read(8)
        if len(prefix) != 8:
            raise DataError(f"truncated container: {path}")
        (hlen,) = struct.unpack("<Q", prefix)
        raw = fh.read(hlen)
        if len(raw) != hlen:
            raise DataError(f"truncated header: {path}")
        try:
            header = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"invalid container header in {path}: {exc}") from exc
        payload = fh.read()
    return header, payload


def write_array(path: str | Path, arr: np.ndarray, semantic: str = "") -> None:
    """Serialize an array; dtype must map to one of f32/f64/c64/c128/bool."""
    arr = np.ascontiguousarray(arr)
    code = _DTYPE_CODES.get(arr.dtype.newbyteorder("<")) or _DTYPE_CODES.get(arr.dtype)
    if code is None:
        raise DataError(f"unsupported dtype {arr.dtype} for array container")
    payload = arr.astype(_DTYPES[code], copy=False).tobytes(order="C")
    header = {
        "format": ARRAY_FORMAT,
        "version": 1,
        "dtype": code,
        "shape": list(arr.shape),
        "byte_order": "little",
        "layout": "row-major",
        "semantic": semantic,
    }
    _write_framed(Path(path), header, payload)


def read_array(path: str | Path) -> tuple[np.ndarray, dict]:
    header, payload = _read_framed(Path(path))
    if header.get("format") != ARRAY_FORMAT:
        raise DataError(f"not an array container: {path}")
    code = header.get("dtype")
    if code not in _DTYPES:
        raise DataError(f"unknown dtype code {code!r} in {path}")
    dtype = np.dtype(_DTYPES[code])
    shape = tuple(header.get("shape", []))
    if len(payload) != int(np.prod(shape)) * dtype.itemsize:
        raise DataError(
            f"payload length {len(payload)} does not match shape {shape} in {path}"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    return arr, header


def sha256_of(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Trajectory and dataset directories


def save_trajectory(directory: str | Path, traj: Trajectory) -> None:
    """coords container plus a JSON sidecar with the geometry integers."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_array(directory / "traj.arr", traj.coords, semantic="kspace-coords")
    sidecar = {
        "n": traj.n,
        "frames": traj.frames,
        "spokes_per_frame": traj.spokes_per_frame,
        "samples_per_spoke": traj.samples_per_spoke,
    }
    (directory / "traj.json").write_text(json.dumps(sidecar, sort_keys=True, indent=2))


def load_trajectory(directory: str | Path) -> Trajectory:
    directory = Path(directory)
    sidecar_path = directory / "traj.json"
    if not sidecar_path.exists():
        raise DataError(f"missing trajectory sidecar: {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    coords, _ = read_array(directory / "traj.arr")
    t, m, s = sidecar["frames"], sidecar["spokes_per_frame"], sidecar["samples_per_spoke"]
    if coords.shape != (t, m, s, 2):
        raise DataError(
            f"trajectory coords shape {coords.shape} does not match sidecar "
            f"({t}, {m}, {s}, 2)"
        )
    # Spoke angles from the outermost positive-radius sample of each spoke.
    tip = coords[:, :, -1, :].reshape(-1, 2)
    angles = np.arctan2(tip[:, 1], tip[:, 0]) % (2.0 * np.pi)
    return Trajectory(
        n=sidecar["n"],
        spokes_per_frame=m,
        frames=t,
        samples_per_spoke=s,
        angles=angles,
        coords=coords,
    )


def save_dataset(
    directory: str | Path,
    dataset: KSpaceDataset,
    truth: DynamicImage | None = None,
    precision: str = "f64",
) -> None:
    """Write the documented dataset layout: kspace.arr, coils.arr, traj.arr
    + traj.json, optional truth.arr, and meta.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    complex_code = "c128" if precision == "f64" else "c64"

    def cast(a: np.ndarray) -> np.ndarray:
        return a.astype(_DTYPES[complex_code])

    write_array(directory / "kspace.arr", cast(dataset.samples), semantic="kspace")
    write_array(directory / "coils.arr", cast(dataset.coils.maps), semantic="coil-maps")
    save_trajectory(directory, dataset.trajectory)
    if truth is not None:
        write_array(directory / "truth.arr", cast(truth.data), semantic="ground-truth")
    (directory / "meta.json").write_text(
        json.dumps(dataset.meta, sort_keys=True, indent=2)
    )


def load_dataset(directory: str | Path) -> tuple[KSpaceDataset, DynamicImage | None]:
    directory = Path(directory)
    for name in ("kspace.arr", "coils.arr", "traj.arr", "traj.json"):
        if not (directory / name).exists():
            raise DataError(f"dataset is missing {name} in {directory}")
    samples, _ = read_array(directory / "kspace.arr")
    maps, _ = read_array(directory / "coils.arr")
    traj = load_trajectory(directory)
    meta = {}
    if (directory / "meta.json").exists():
        meta = json.loads((directory / "meta.json").read_text())
    coils = CoilMaps(maps=maps.astype(np.complex128))
    dataset = KSpaceDataset(
        samples=samples.astype(np.complex128), trajectory=traj, coils=coils, meta=meta
    )
    expected = (coils.num_coils, traj.frames, traj.spokes_per_frame, traj.samples_per_spoke)
    if dataset.samples.shape != expected:
        raise DataError(
            f"k-space shape {dataset.samples.shape} does not match geometry {expected}"
        )
    truth = None
    if (directory / "truth.arr").exists():
        truth_data, _ = read_array(directory / "truth.arr")
        truth = DynamicImage(data=truth_data.astype(np.complex128))
    return dataset, truth


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    config: ModelConfig,
    seed: int,
    n: int,
    frames: int,
) -> None:
    enc = config.encoder
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": 1,
        "encoder": {
            "levels": enc.levels,
            "log2_table_size": enc.log2_table_size,
            "features_per_level": enc.features_per_level,
            "base_resolution": enc.base_resolution,
            "growth_factor": enc.growth_factor,
        },
        "hidden_layers": config.hidden_layers,
        "hidden_units": config.hidden_units,
        "seed": seed,
        "n": n,
        "frames": frames,
        "grid_shapes": [list(g.shape) for g in params.grids],
        "weight_shapes": [list(w.shape) for w in params.weights],
        "bias_shapes": [list(b.shape) for b in params.biases],
    }
    chunks = [a.astype("<f8").tobytes(order="C") for a in params.arrays()]
    _write_framed(Path(path), header, b"".join(chunks))


def load_checkpoint(path: str | Path) -> tuple[ModelParams, ModelConfig, dict]:
    header, payload = _read_framed(Path(path))
    if header.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"not a checkpoint file: {path}")
    enc = HashEncoderConfig(**header["encoder"])
    config = ModelConfig(
        encoder=enc,
        hidden_layers=header["hidden_layers"],
        hidden_units=header["hidden_units"],
    )
    offset = 0

    def take(shape: list[int]) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        return arr.reshape(shape).astype(np.float64)

    grids = [take(s) for s in header["grid_shapes"]]
    weights = []
    biases = []
    for ws, bs in zip(header["weight_shapes"], header["bias_shapes"]):
        weights.append(take(ws))
        biases.append(take(bs))
    if offset != len(payload):
        raise DataError(f"checkpoint payload size mismatch in {path}")
    params = ModelParams(grids=grids, weights=weights, biases=biases)
    return params, config, header


# ---------------------------------------------------------------------------
# CSV reports (repr formatting keeps round trips and reruns byte-identical)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_loss_csv(path: str | Path, rows) -> None:
    lines = ["epoch,dc,tv,lr_term,total"]
    for r in rows:
        lines.append(
            f"{r.epoch},{_fmt(r.dc)},{_fmt(r.tv)},{_fmt(r.lr_term)},{_fmt(r.total)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_metrics_csv(path: str | Path, report) -> None:
    lines = ["kind,index,psnr,ssim,nrmse"]
    for t, (p, s) in enumerate(zip(report.frame_psnr, report.frame_ssim)):
        lines.append(f"frame,{t},{_fmt(p)},{_fmt(s)},")
    for c, v in enumerate(report.coil_nrmse):
        lines.append(f"coil,{c},,,{_fmt(v)}")
    agg = report.summary()
    lines.append(
        "aggregate_mean,,"
        f"{_fmt(agg['psnr_mean'])},{_fmt(agg['ssim_mean'])},{_fmt(agg['nrmse_mean'])}"
    )
    lines.append(
        "aggregate_std,,"
        f"{_fmt(agg['psnr_std'])},{_fmt(agg['ssim_std'])},{_fmt(agg['nrmse_std'])}"
    )
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# 8-bit grayscale dumps (binary PGM)


def to_uint8(frame: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Window a real frame into 8-bit gray with the given limits."""
    if hi <= lo:
        raise DataError("invalid window: hi must exceed lo")
    scaled = np.clip((frame - lo) / (hi - lo), 0.0, 1.0)
    return np.round(scaled * 255.0).astype(np.uint8)


def write_pgm(path: str | Path, img: np.ndarray) -> None:
    if img.ndim != 2 or img.dtype != np.uint8:
        raise DataError("write_pgm expects a 2D uint8 array")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes(order="C"))


def write_manifest(path: str | Path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")

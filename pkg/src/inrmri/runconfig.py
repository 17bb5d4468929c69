"""Run configuration: a sectioned key = value text format with strict keys.

Example::

    [phantom]
    n = 64
    frames = 16
    coils = 8

    [recon]
    lambda_s = 0.05
    lambda_l = 0.05

Unknown sections or keys are rejected with the offending name and line
number; there are no silent defaults for misspelled keys. ``lambda_s`` and
``lambda_l`` are mandatory, all other keys have documented defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .inr import HashEncoderConfig, ModelConfig
from .nufft import DEFAULT_KERNEL_WIDTH, DEFAULT_OVERSAMPLING
from .training import ReconConfig

_REQUIRED = object()

# section -> key -> (type tag, default)
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "phantom": {
        "n": ("int", 64),
        "frames": ("int", 16),
        "coils": ("int", 8),
        "noise_std": ("float", 0.0),
        "data_dir": ("str", ""),
    },
    "trajectory": {
        "spokes_per_frame": ("int", 13),
        # 0 means the default 2n readout oversampling
        "samples_per_spoke": ("int", 0),
    },
    "encoder": {
        "levels": ("int", 12),
        "log2_table_size": ("int", 17),
        "features_per_level": ("int", 2),
        "base_resolution": ("int", 4),
        "growth_factor": ("float", 1.32),
        "hidden_layers": ("int", 5),
        "hidden_units": ("int", 64),
    },
    "recon": {
        "lambda_s": ("float", _REQUIRED),
        "lambda_l": ("float", _REQUIRED),
        "eps_dc": ("float", 1e-4),
        "lr": ("float", 1e-3),
        "beta1": ("float", 0.9),
        "beta2": ("float", 0.999),
        "eps_adam": ("float", 1e-8),
        "epochs": ("int", 500),
        "seed": ("int", 0),
        "deterministic": ("bool", True),
        "kernel_width": ("int", DEFAULT_KERNEL_WIDTH),
        "oversampling": ("float", DEFAULT_OVERSAMPLING),
    },
    "output": {
        "dir": ("str", "out"),
        "save_images": ("bool", True),
        "save_yt": ("bool", True),
        # -1 means the center column n/2
        "yt_column": ("int", -1),
        "save_metrics": ("bool", True),
        "save_loss": ("bool", True),
        "save_checkpoint": ("bool", True),
    },
}


@dataclass
class RunConfig:
    """Typed view of a parsed configuration file."""

    values: dict[str, dict[str, object]] = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values[section][key]

    def encoder_config(self) -> HashEncoderConfig:
        e = self.values["encoder"]
        return HashEncoderConfig(
            levels=e["levels"],
            log2_table_size=e["log2_table_size"],
            features_per_level=e["features_per_level"],
            base_resolution=e["base_resolution"],
            growth_factor=e["growth_factor"],
        )

    def model_config(self) -> ModelConfig:
        e = self.values["encoder"]
        return ModelConfig(
            encoder=self.encoder_config(),
            hidden_layers=e["hidden_layers"],
            hidden_units=e["hidden_units"],
        )

    def recon_config(self) -> ReconConfig:
        r = self.values["recon"]
        return ReconConfig(
            lambda_s=r["lambda_s"],
            lambda_l=r["lambda_l"],
            eps_dc=r["eps_dc"],
            lr=r["lr"],
            beta1=r["beta1"],
            beta2=r["beta2"],
            eps_adam=r["eps_adam"],
            epochs=r["epochs"],
            seed=r["seed"],
            deterministic=r["deterministic"],
        )

    def samples_per_spoke(self) -> int:
        s = self.values["trajectory"]["samples_per_spoke"]
        return s if s > 0 else 2 * self.values["phantom"]["n"]

    def yt_column(self) -> int:
        col = self.values["output"]["yt_column"]
        return col if col >= 0 else self.values["phantom"]["n"] // 2

    def to_dict(self) -> dict:
        return {s: dict(kv) for s, kv in self.values.items()}


def _convert(tag: str, text: str, key: str, line_no: int):
    try:
        if tag == "int":
            return int(text)
        if tag == "float":
            return float(text)
        if tag == "str":
            return text
        if tag == "bool":
            low = text.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
    except ValueError as exc:
        raise ConfigError(f"bad value for '{key}' at line {line_no}: {exc}") from exc
    raise ConfigError(f"unknown type tag {tag}")


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, dict[str, object]] = {
        section: {} for section in SCHEMA
    }
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in SCHEMA:
                raise ConfigError(f"unknown section '{name}' at line {line_no} in {source}")
            section = name
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' at line {line_no} in {source}")
        if section is None:
            raise ConfigError(
                f"key outside of any section at line {line_no} in {source}"
            )
        key, text_value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(
                f"unknown key '{key}' in section [{section}] at line {line_no} in {source}"
            )
        if key in values[section]:
            raise ConfigError(
                f"duplicate key '{key}' at line {line_no} in {source}"
            )
        tag, _default = SCHEMA[section][key]
        values[section][key] = _convert(tag, text_value, key, line_no)

    for sec, keys in SCHEMA.items():
        for key, (tag, default) in keys.items():
            if key not in values[sec]:
                if default is _REQUIRED:
                    raise ConfigError(
                        f"missing required key '{key}' in section [{sec}] of {source}"
                    )
                values[sec][key] = default
    return RunConfig(values=values)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), source=str(path))


def default_config_text() -> str:
    """Render the schema with its defaults as a commented template."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (tag, default) in keys.items():
            if default is _REQUIRED:
                lines.append(f"{key} = <required {tag}>")
            elif isinstance(default, bool):
                lines.append(f"{key} = {'true' if default else 'false'}")
            else:
                lines.append(f"{key} = {default}")
        lines.append("")
    return "\n".join(lines)

"""Run configuration: every pipeline tunable with its stock default.

Defaults follow the published operating point of the method (k sized for
~1000 cubes per cluster, 10 clustering restarts, clusters under 500 cubes
pruned, nu = 0.01, features for one in every two test frames); the
remaining knobs are implementation defaults. Configs round-trip through
INI-style ``key = value`` files; the CLI layers flags over a config file
over these defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass

_SECTION = "nnc"


@dataclass
class RunConfig:
    # First stage: clustering.
    cubes_per_cluster: int = 1000
    restarts: int = 10
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-4
    min_cluster_size: int = 500
    # Second stage: per-cluster one-class SVM.
    nu: float = 0.01
    ocsvm_tol: float = 1e-4
    ocsvm_max_iter: int = 100_000
    # Features.
    tau_static: float = 0.1
    normalize_blocks: bool = True
    train_temporal_stride: int = 1
    appearance_missing: str = "error"  # or "zeros" (scoring only)
    # Scoring / evaluation.
    test_frame_stride: int = 2
    sigma_t: float = 10.0
    sigma_s: float = 20.0
    # Run control.
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must be in (0, 1], got {self.nu}")
        if self.appearance_missing not in ("error", "zeros"):
            raise ValueError("appearance_missing must be 'error' or 'zeros'")
        for name in ("cubes_per_cluster", "restarts", "min_cluster_size",
                     "train_temporal_stride", "test_frame_stride", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def replace(self, **updates) -> "RunConfig":
        return dataclasses.replace(self, **updates)

    def save(self, path: str) -> None:
        parser = configparser.ConfigParser()
        parser[_SECTION] = {
            f.name: repr(getattr(self, f.name)) for f in dataclasses.fields(self)
        }
        with open(path, "w") as fh:
            parser.write(fh)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise FileNotFoundError(f"no such config file: {path}")
        if not parser.has_section(_SECTION):
            raise ValueError(f"{path}: missing [{_SECTION}] section")
        values = {}
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        for key, raw in parser[_SECTION].items():
            if key not in known:
                raise ValueError(f"{path}: unknown config key {key!r}")
            values[key] = _parse_value(known[key], raw)
        return cls(**values)


def _parse_value(type_name, raw: str):
    raw = raw.strip()
    if type_name in (bool, "bool"):
        if raw in ("True", "true", "1", "yes"):
            return True
        if raw in ("False", "false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if type_name in (int, "int"):
        return int(raw)
    if type_name in (float, "float"):
        return float(raw)
    return raw.strip("'\"")

"""Experiment configuration, presets and JSON loading."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    T_grid: tuple[int, ...] = (2_500, 5_000, 10_000, 20_000, 40_000, 80_000)
    sigma2: float = 0.5
    path_seeds: int = 20
    noise_seeds_per_path: int = 10
    truth_depth: int = 20
    delta_override: float | None = None
    parallelism: int = 1
    output_dir: str = "out/experiment"
    seed: int = 0
    # opt-in; timing makes the CSV nondeterministic
    record_wall_time: bool = False
    # multiplies eta + alpha in the confidence bounds; 1 is the stated algorithm
    slack_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "T_grid", tuple(int(t) for t in self.T_grid))
        if not self.T_grid:
            raise ConfigError("T_grid is empty")
        if any(b <= a for a, b in zip(self.T_grid, self.T_grid[1:])):
            raise ConfigError("T_grid must be strictly increasing")
        if self.T_grid[0] < 1:
            raise ConfigError("budgets must be >= 1")
        if self.path_seeds < 1 or self.noise_seeds_per_path < 1 or self.parallelism < 1:
            raise ConfigError("path_seeds, noise_seeds_per_path and parallelism must be >= 1")
        if self.sigma2 < 0:
            raise ConfigError("sigma2 must be >= 0")
        if not 1 <= self.truth_depth <= 24:
            raise ConfigError("truth_depth must lie in [1, 24]")
        if self.delta_override is not None and not 0 < self.delta_override < 1:
            raise ConfigError("delta_override must lie in (0, 1)")
        if self.delta_override is None and self.T_grid[0] < 2:
            raise ConfigError("the default delta needs budgets of at least 2")
        if not self.slack_scale > 0:
            raise ConfigError("slack_scale must be positive")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def result_fields(self) -> dict:
        """Fields that can change results (worker count and output location cannot)."""
        d = dataclasses.asdict(self)
        d.pop("parallelism")
        d.pop("output_dir")
        d["T_grid"] = list(d["T_grid"])
        return d

    def digest(self) -> str:
        blob = json.dumps(self.result_fields(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


PRESETS = {
    "desk": ExperimentConfig(),
    "paper-scale": ExperimentConfig(
        T_grid=(100_000, 250_000, 500_000, 750_000, 1_000_000, 1_250_000),
        output_dir="out/paper-scale",
    ),
    "smoke": ExperimentConfig(T_grid=(500, 1_000, 2_000), path_seeds=2, noise_seeds_per_path=2, truth_depth=14, output_dir="out/smoke"),
}


@dataclass(frozen=True)
class RunRecord:
    T: int
    path_seed: int
    noise_seed: int
    R_T: float
    r_T: float
    epochs: int
    truncated: bool
    disc_bound: float
    wall_ms: float | None = None

    COLUMNS = ("T", "path_seed", "noise_seed", "R_T", "r_T", "RT_over_sqrtT", "epochs", "truncated", "disc_bound", "wall_ms")

    @property
    def key(self) -> tuple[int, int, int]:
        return self.T, self.path_seed, self.noise_seed

    def row(self) -> list[str]:
        return [
            str(self.T),
            str(self.path_seed),
            str(self.noise_seed),
            repr(self.R_T),
            repr(self.r_T),
            repr(self.R_T / self.T**0.5),
            str(self.epochs),
            str(int(self.truncated)),
            repr(self.disc_bound),
            "" if self.wall_ms is None else f"{self.wall_ms:.3f}",
        ]


def _field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def from_mapping(cls, data: dict, base=None):
    """Build ``cls`` from a dict whose keys must be field names of ``cls``."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _field_names(cls)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return dataclasses.replace(base, **data) if base is not None else cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_json(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc


@dataclass(frozen=True)
class SuiteConfig:
    """Sample sizes and seeds of the lemma verification suite."""

    checks: tuple[str, ...] = (
        "event_M",
        "near_optimal",
        "running_max_ks",
        "bridge_max",
        "running_max_excess",
        "meander_max",
        "meander_min",
        "event_T",
        "fano",
        "gap_bound",
    )
    seed: int = 0
    output_dir: str = "out/verify"
    event_m_reps: int = 10_000
    event_m_T: int = 20_000
    near_optimal_seeds: int = 100_000
    ks_seeds: int = 100_000
    bridge_seeds: int = 20_000
    excess_seeds: int = 10_000
    meander_samples: int = 10_000
    event_t_seeds: int = 10_000
    fano_batches: int = 20
    fano_batch_size: int = 500
    fano_T: int = 1_000
    gap_samples: int = 20_000
    depth: int = 14

    def __post_init__(self):
        object.__setattr__(self, "checks", tuple(self.checks))
        for k in ("event_m_reps", "near_optimal_seeds", "ks_seeds", "bridge_seeds", "excess_seeds", "meander_samples", "event_t_seeds", "fano_batches", "fano_batch_size", "gap_samples"):
            if getattr(self, k) < 1:
                raise ConfigError(f"{k} must be >= 1")


SUITE_PRESETS = {
    "full": SuiteConfig(),
    # the KS threshold is only meaningful near 10^5 samples, so quick skips it
    "quick": SuiteConfig(
        checks=tuple(c for c in SuiteConfig.checks if c != "running_max_ks"),
        event_m_reps=300,
        near_optimal_seeds=10_000,
        ks_seeds=5_000,
        bridge_seeds=2_000,
        excess_seeds=2_000,
        meander_samples=1_000,
        event_t_seeds=500,
        fano_batches=2,
        fano_batch_size=100,
        gap_samples=5_000,
        depth=12,
        output_dir="out/verify-quick",
    ),
}

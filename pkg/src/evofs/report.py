"""Run and sweep result containers plus JSON/CSV emission.

Emitted files have stable field ordering, floats rounded to 6 significant
digits and a ``schema_version`` field; writes are atomic (temp file +
rename). Wall-clock duration is kept on the in-memory objects only so that
identical seeds reproduce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field

from .errors import ConfigError

SCHEMA_VERSION = 1


def _sig6(x: float) -> float:
    return float(f"{float(x):.6g}")


def _rounded(obj):
    if isinstance(obj, float):
        return _sig6(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


@dataclass
class GenerationStats:
    """One trajectory row: a generation (single GA) or an outer round."""

    step: int
    best_fitness: float
    best_score: float
    best_n_selected: int
    mean_fitness: float
    mean_score: float
    mean_n_selected: float


@dataclass
class IslandStats:
    """Per-round, per-island summary for the fast/slow architecture."""

    round: int
    island: str
    mu: float
    best_fitness: float
    best_score: float
    mean_fitness: float


@dataclass
class RunReport:
    """Full record of one evolutionary run."""

    algorithm: str                      # "ga" | "fastslow"
    config: dict
    seed: int
    n_features: int
    trajectory: list[GenerationStats]
    best_mask: str
    selected_features: list[str]
    best_score: float
    best_fitness: float
    best_n_selected: int
    cache: dict
    islands: list[IslandStats] = field(default_factory=list)
    class_labels: list[str] | None = None
    duration_seconds: float = 0.0       # volatile; not emitted
    schema_version: int = SCHEMA_VERSION

    def to_dict(self, include_volatile: bool = False) -> dict:
        out = {
            "schema_version": self.schema_version,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "config": self.config,
            "n_features": self.n_features,
            "best_mask": self.best_mask,
            "best_score": self.best_score,
            "best_fitness": self.best_fitness,
            "best_n_selected": self.best_n_selected,
            "selected_features": list(self.selected_features),
            "trajectory": [asdict(g) for g in self.trajectory],
            "islands": [asdict(i) for i in self.islands],
            "cache": dict(self.cache),
        }
        if self.class_labels is not None:
            out["class_labels"] = list(self.class_labels)
        if include_volatile:
            out["duration_seconds"] = self.duration_seconds
        return _rounded(out)


@dataclass
class SweepPoint:
    value: float
    mean_score: float
    std_score: float
    mean_n_selected: float
    std_n_selected: float


@dataclass
class SweepSummary:
    """Mean +/- std of final best score and feature count per axis value."""

    axis: str                           # "mu" | "alpha"
    points: list[SweepPoint]
    runs_per_value: int
    baseline_score: float
    base_seed: int
    config: dict
    duration_seconds: float = 0.0       # volatile; not emitted
    schema_version: int = SCHEMA_VERSION

    def to_dict(self, include_volatile: bool = False) -> dict:
        out = {
            "schema_version": self.schema_version,
            "axis": self.axis,
            "runs_per_value": self.runs_per_value,
            "base_seed": self.base_seed,
            "baseline_score": self.baseline_score,
            "config": self.config,
            "points": [asdict(p) for p in self.points],
        }
        if include_volatile:
            out["duration_seconds"] = self.duration_seconds
        return _rounded(out)

    def values(self) -> list[float]:
        return [p.value for p in self.points]


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".evofs-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(obj: RunReport | SweepSummary, fmt: str, path: str) -> str:
    """Write a report or sweep summary as JSON or CSV and return the path."""
    if fmt == "json":
        text = json.dumps(obj.to_dict(), indent=2) + "\n"
    elif fmt == "csv":
        text = _to_csv(obj)
    else:
        raise ConfigError(f"unknown report format {fmt!r} (expected json or csv)")
    _atomic_write(path, text)
    return path


def _to_csv(obj: RunReport | SweepSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(obj, SweepSummary):
        writer.writerow([obj.axis, "mean_score", "std_score",
                         "mean_n_selected", "std_n_selected",
                         "runs_per_value", "baseline_score"])
        for p in obj.points:
            writer.writerow([_sig6(p.value), _sig6(p.mean_score), _sig6(p.std_score),
                             _sig6(p.mean_n_selected), _sig6(p.std_n_selected),
                             obj.runs_per_value, _sig6(obj.baseline_score)])
    else:
        writer.writerow(["step", "best_fitness", "best_score", "best_n_selected",
                         "mean_fitness", "mean_score", "mean_n_selected"])
        for g in obj.trajectory:
            writer.writerow([g.step, _sig6(g.best_fitness), _sig6(g.best_score),
                             g.best_n_selected, _sig6(g.mean_fitness),
                             _sig6(g.mean_score), _sig6(g.mean_n_selected)])
    return buf.getvalue()

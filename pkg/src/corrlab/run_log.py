"""
Run log for experiments: one JSONL line per experiment stage, appended to the output directory.
"""
from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

from . import __version__

# Schema version for each JSONL line (run log entry)
RUN_LOG_SCHEMA_VERSION = 1
RUN_LOG_FILE = "run_log.jsonl"


def _jsonable(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):
        return _jsonable(value.item())
    return value


def build_run_log_entry(
    kind: str,
    stage: str,
    metrics: Dict[str, Any],
    *,
    config_hash: str = "none",
    seed: Optional[int] = None,
    timestamp: Optional[datetime] = None,
) -> Dict[str, Any]:
    """
    Build one run log entry (one JSONL line).

    Args:
        kind: Experiment kind (pair, equilibrium, periodic, ...).
        stage: Stage within the experiment, e.g. "n=3" or "summary".
        metrics: Numbers describing the stage; complex values become [re, im].
        config_hash: Hash of the experiment configuration.
        seed: Random seed of the run.
        timestamp: Optional UTC time; default now.
    """
    ts = timestamp or datetime.now(timezone.utc)
    return {
        "schema_version": RUN_LOG_SCHEMA_VERSION,
        "timestamp_utc": ts.isoformat(),
        "tool_version": __version__,
        "kind": kind,
        "stage": stage,
        "config_hash": config_hash,
        "seed": seed,
        "metrics": _jsonable(metrics),
    }


class RunLogManager:
    """Appends the stages of one run to its JSONL file as they arrive."""

    def __init__(
        self,
        path: str,
        *,
        kind: str = "experiment",
        config_hash: str = "none",
        seed: Optional[int] = None,
    ) -> None:
        self._path = Path(path)
        self.kind = kind
        self.config_hash = config_hash
        self.seed = seed

    @classmethod
    def for_directory(cls, out_dir: str, **kwargs: Any) -> "RunLogManager":
        return cls(str(Path(out_dir) / RUN_LOG_FILE), **kwargs)

    @property
    def path(self) -> Path:
        return self._path

    def append(self, stage: str, metrics: Dict[str, Any]) -> Dict[str, Any]:
        """Write one stage through to the log file and return the entry."""
        entry = build_run_log_entry(
            self.kind, stage, metrics, config_hash=self.config_hash, seed=self.seed
        )
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return entry


__all__ = [
    "RUN_LOG_SCHEMA_VERSION",
    "RUN_LOG_FILE",
    "build_run_log_entry",
    "RunLogManager",
]

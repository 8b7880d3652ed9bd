"""
Reading and writing corrlab artifacts.

Correspondences use the polynomial text format with a ``name`` header. Numeric
results go to CSV files whose first line is a ``# config_hash=...,tool_version=...``
comment; summaries go to JSON documents carrying schema version, tool version, config
hash and seed. Floats are written with 17 significant digits, so numeric content is
reproducible byte for byte.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .catalog import BUILTINS, builtin
from .correspondence import Correspondence, PeriodicPointRecord
from .measures import WeightedPointCloud
from .polynomial import format_polynomial, parse_polynomial
from .projective import from_chart, to_chart

SCHEMA_VERSION = 1
TOOL_VERSION = __version__

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ArtifactHeader:
    """Provenance stamped on every output file."""

    config_hash: str = "none"
    seed: Optional[int] = None
    tool_version: str = TOOL_VERSION

    def comment_line(self) -> str:
        return f"# config_hash={self.config_hash},tool_version={self.tool_version}\n"

    def envelope(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "seed": self.seed,
        }


def _num(x: float) -> str:
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# Correspondences
# ---------------------------------------------------------------------------


def correspondence_to_text(f: Correspondence) -> str:
    return format_polynomial(f.graph, name=f.name)


def correspondence_from_text(text: str, default_name: str = "anonymous") -> Correspondence:
    graph, name = parse_polynomial(text)
    return Correspondence(graph, name=name or default_name)


def write_correspondence(f: Correspondence, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(correspondence_to_text(f), encoding="utf-8")
    return path


def read_correspondence(path: PathLike) -> Correspondence:
    path = Path(path)
    return correspondence_from_text(path.read_text(encoding="utf-8"), default_name=path.stem)


def load_correspondence(source: str) -> Correspondence:
    """A builtin name, or the path of a correspondence spec file."""
    if source in BUILTINS:
        return builtin(source)
    path = Path(source)
    if not path.is_file():
        raise ValueError(
            f"{source!r} is neither a builtin ({', '.join(sorted(BUILTINS))}) nor a file"
        )
    return read_correspondence(path)


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------


def _write_csv(
    path: PathLike, header: ArtifactHeader, columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(header.comment_line())
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    return path


def read_csv(path: PathLike) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """(provenance from the comment line, rows keyed by column)."""
    provenance: Dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        first = f.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing '# config_hash=...' provenance line")
        for item in first[1:].strip().split(","):
            key, _, value = item.partition("=")
            provenance[key.strip()] = value.strip()
        rows = list(csv.DictReader(f))
    return provenance, rows


def write_json(path: PathLike, header: ArtifactHeader, payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {**header.envelope(), **payload}
    with path.open("w", encoding="utf-8") as f:
        json.dump(document, f, indent=2)
        f.write("\n")
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    with Path(path).open("r", encoding="utf-8") as f:
        document = json.load(f)
    if document.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"{path}: unsupported schema_version {document.get('schema_version')!r}"
        )
    return document


# ---------------------------------------------------------------------------
# Clouds and moments
# ---------------------------------------------------------------------------

CLOUD_COLUMNS = ("re", "im", "weight", "chart")


def write_cloud_csv(
    nu: WeightedPointCloud, path: PathLike, header: ArtifactHeader = ArtifactHeader()
) -> Path:
    """Atoms in the chart containing them (chart 1 holds w = 1/z), so infinity is (0, 0, 1)."""
    coords, charts = to_chart(nu.atoms)
    rows = (
        (_num(c.real), _num(c.imag), _num(w), int(k))
        for c, w, k in zip(coords, nu.weights, charts)
    )
    return _write_csv(path, header, CLOUD_COLUMNS, rows)


def read_cloud_csv(path: PathLike) -> WeightedPointCloud:
    _, rows = read_csv(path)
    if rows and set(CLOUD_COLUMNS) - set(rows[0]):
        raise ValueError(f"{path}: expected columns {CLOUD_COLUMNS}")
    coords = np.array([complex(float(r["re"]), float(r["im"])) for r in rows], dtype=complex)
    charts = np.array([int(r["chart"]) for r in rows], dtype=int)
    weights = np.array([float(r["weight"]) for r in rows], dtype=float)
    return WeightedPointCloud(from_chart(coords, charts), weights)


def write_moments_json(
    moments: Dict[int, complex], path: PathLike, header: ArtifactHeader = ArtifactHeader()
) -> Path:
    payload = {"moments": {str(k): [v.real, v.imag] for k, v in sorted(moments.items())}}
    return write_json(path, header, payload)


# ---------------------------------------------------------------------------
# Pairing reports
# ---------------------------------------------------------------------------

PAIRING_COLUMNS = (
    "n",
    "pairing_re",
    "pairing_im",
    "limit_re",
    "limit_im",
    "abs_error",
    "noise",
    "standard_error",
    "mass",
)


def write_pairing_csv(report: Any, path: PathLike, header: ArtifactHeader = ArtifactHeader()) -> Path:
    rows = (
        (
            row.n,
            _num(row.pairing.real),
            _num(row.pairing.imag),
            _num(row.limit.real),
            _num(row.limit.imag),
            _num(row.abs_error),
            _num(row.noise),
            _num(row.standard_error),
            _num(row.mass),
        )
        for row in report.rows
    )
    return _write_csv(path, header, PAIRING_COLUMNS, rows)


def pairing_summary(report: Any) -> Dict[str, Any]:
    return {
        "form_id": report.form_id,
        "fitted_rate": report.fitted_rate,
        "fit_quality": report.fit_quality,
        "noise_floor": report.noise_floor,
        "predicted_rate": report.predicted_rate,
        "strategy": report.strategy,
        "mass_bound_holds": report.mass_bound_holds(),
        "warnings": list(report.warnings),
    }


def write_pairing_summary(
    reports: Sequence[Any], path: PathLike, header: ArtifactHeader = ArtifactHeader(), **extra: Any
) -> Path:
    return write_json(path, header, {**extra, "forms": [pairing_summary(r) for r in reports]})


# ---------------------------------------------------------------------------
# Periodic points, contraction, Fourier, bench
# ---------------------------------------------------------------------------

PERIODIC_COLUMNS = (
    "re",
    "im",
    "chart",
    "period",
    "multiplicity",
    "multiplier_modulus",
    "classification",
)


def write_periodic_csv(
    records: Sequence[PeriodicPointRecord], path: PathLike, header: ArtifactHeader = ArtifactHeader()
) -> Path:
    rows = []
    for rec in records:
        coord, chart = to_chart(rec.point)
        modulus = "" if rec.multiplier_modulus is None else _num(rec.multiplier_modulus)
        rows.append(
            (
                _num(complex(coord).real),
                _num(complex(coord).imag),
                int(chart),
                rec.period,
                rec.multiplicity,
                modulus,
                rec.classification,
            )
        )
    return _write_csv(path, header, PERIODIC_COLUMNS, rows)


def write_contraction_json(
    report: Any, path: PathLike, header: ArtifactHeader = ArtifactHeader()
) -> Path:
    return write_json(path, header, report.to_dict())


def write_fourier_json(
    payload: Dict[str, Any], path: PathLike, header: ArtifactHeader = ArtifactHeader()
) -> Path:
    return write_json(path, header, payload)


BENCH_COLUMNS = ("kind", "operation", "size", "seconds")


def write_bench_csv(
    rows: Sequence[Tuple[str, str, int, float]],
    path: PathLike,
    header: ArtifactHeader = ArtifactHeader(),
) -> Path:
    return _write_csv(
        path, header, BENCH_COLUMNS, ((k, op, size, f"{secs:.6f}") for k, op, size, secs in rows)
    )


__all__ = [
    "SCHEMA_VERSION",
    "TOOL_VERSION",
    "ArtifactHeader",
    "correspondence_to_text",
    "correspondence_from_text",
    "write_correspondence",
    "read_correspondence",
    "load_correspondence",
    "read_csv",
    "write_json",
    "read_json",
    "write_cloud_csv",
    "read_cloud_csv",
    "write_moments_json",
    "write_pairing_csv",
    "pairing_summary",
    "write_pairing_summary",
    "write_periodic_csv",
    "write_contraction_json",
    "write_fourier_json",
    "write_bench_csv",
]

"""
Configuration-driven experiments.

An ExperimentConfig names a correspondence (builtin or spec file), an experiment kind and
its parameters. ``run`` validates the config, executes the experiment and writes its
artifacts (CSV, JSON, run log, optional SVG) into ``out_dir``. Identical configs give
identical numeric files; only the run log carries timestamps.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .contraction import DIRECTIONS, contraction_estimate
from .correspondence import Correspondence, periodic_points, PeriodicPointRecord
from .errors import ConfigValidationError
from .forms import DEFAULT_FORMS
from .fourier import (
    bump_function,
    cutoff_c2_norm,
    cutoff_defect,
    decay_ratio,
    fourier_coefficients,
    index_count,
    index_count_bound,
    partial_sum_error,
    shell_count,
    truncation_error_bound,
)
from .measures import equilibrium_measure, invariance_defect, modulus_ratio_function, moments
from .pairing import COVERINGS, STRATEGIES, convergence_experiment
from .persistence import (
    ArtifactHeader,
    load_correspondence,
    write_bench_csv,
    write_cloud_csv,
    write_contraction_json,
    write_fourier_json,
    write_json,
    write_moments_json,
    write_pairing_csv,
    write_pairing_summary,
    write_periodic_csv,
)
from .projective import parse_point
from .run_log import RunLogManager
from .sphere import QuadratureSpec

KINDS = ("pair", "equilibrium", "periodic", "contraction", "fourier", "bench")

# Caps enforced by validation
MAX_N = 64
MAX_GRID = 1024
MAX_DEPTH = 40
MAX_PERIOD = 12
MAX_FOURIER_N = 15


@dataclass
class ExperimentConfig:
    source: str = "square"  # builtin name or correspondence spec file
    kind: str = "pair"
    n_max: int = 8
    strategy: str = "tree"  # "tree" or "symbolic"
    tree_samples: Optional[int] = None  # paths per node; None enumerates full trees
    covering: str = "split"
    grid: int = 96
    coarse_grid: int = 48
    rule: str = "gauss"
    forms: List[str] = field(default_factory=lambda: ["Omega", "horizontal", "vertical"])
    limit_depth: int = 12
    limit_seed: Optional[str] = None  # point like "0.76+0.64j"; None draws a generic seed
    seed: int = 0
    out_dir: str = "runs/corrlab"
    # equilibrium
    depth: int = 12
    mode: str = "full"  # "full" or "sampled"
    samples: Optional[int] = None  # k for sampled clouds
    direction: str = "backward"
    moments_k: int = 7
    # periodic
    period: int = 1
    # contraction
    contraction_trials: int = 64
    contraction_iterations: int = 200
    contraction_grid: int = 64
    contraction_coarse_grid: int = 32
    contraction_direction: str = "push"
    # fourier
    fourier_n: int = 8
    fourier_grid: int = 32
    svg: bool = False

    @property
    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(grid=self.grid, coarse_grid=self.coarse_grid, rule=self.rule)


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def flatten_config(data: Dict[str, Any]) -> Dict[str, Any]:
    """
    Flatten nested sections onto ExperimentConfig field names.

    ``{"quadrature": {"grid": 64}}`` sets ``grid``; ``{"contraction": {"trials": 8}}`` sets
    ``contraction_trials``. Unknown keys are kept so that validation can report them.
    """
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            for sub, sub_value in value.items():
                prefixed = f"{key}_{sub}"
                flat[prefixed if prefixed in _FIELDS else sub] = sub_value
        else:
            flat[key] = value
    return flat


def _check_int(errors: List[str], name: str, value: Any, lo: int, hi: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{name}: expected an integer, got {value!r}")
    elif not lo <= value <= hi:
        errors.append(f"{name}: {value} outside [{lo}, {hi}]")


def validate_config(config: ExperimentConfig) -> None:
    """Collect every field problem and raise them together."""
    errors: List[str] = []
    if not isinstance(config.source, str) or not config.source:
        errors.append("source: expected a builtin name or a file path")
    if config.kind not in KINDS:
        errors.append(f"kind: {config.kind!r} not in {KINDS}")
    _check_int(errors, "n_max", config.n_max, 1, MAX_N)
    if config.strategy not in STRATEGIES:
        errors.append(f"strategy: {config.strategy!r} not in {STRATEGIES}")
    if config.tree_samples is not None:
        _check_int(errors, "tree_samples", config.tree_samples, 2, 1 << 20)
    if config.covering not in COVERINGS:
        errors.append(f"covering: {config.covering!r} not in {COVERINGS}")
    _check_int(errors, "grid", config.grid, 4, MAX_GRID)
    _check_int(errors, "coarse_grid", config.coarse_grid, 2, MAX_GRID)
    if isinstance(config.grid, int) and isinstance(config.coarse_grid, int):
        if config.coarse_grid >= config.grid:
            errors.append("coarse_grid: must be smaller than grid")
    if config.rule not in ("gauss", "midpoint"):
        errors.append(f"rule: {config.rule!r} not in ('gauss', 'midpoint')")
    unknown_forms = [name for name in config.forms if name not in DEFAULT_FORMS]
    if unknown_forms or not config.forms:
        errors.append(f"forms: unknown or empty {unknown_forms}; known {sorted(DEFAULT_FORMS)}")
    _check_int(errors, "limit_depth", config.limit_depth, 1, MAX_DEPTH)
    if config.limit_seed is not None:
        try:
            parse_point(config.limit_seed)
        except ValueError as exc:
            errors.append(f"limit_seed: {exc}")
    _check_int(errors, "seed", config.seed, 0, 2**63 - 1)
    _check_int(errors, "depth", config.depth, 1, MAX_DEPTH)
    if config.mode not in ("full", "sampled"):
        errors.append(f"mode: {config.mode!r} not in ('full', 'sampled')")
    if config.mode == "sampled" and config.samples is None:
        errors.append("samples: sampled mode needs a path count")
    if config.samples is not None:
        _check_int(errors, "samples", config.samples, 1, 1 << 24)
    if config.direction not in ("backward", "forward"):
        errors.append(f"direction: {config.direction!r} not in ('backward', 'forward')")
    _check_int(errors, "moments_k", config.moments_k, 1, 64)
    _check_int(errors, "period", config.period, 1, MAX_PERIOD)
    _check_int(errors, "contraction_trials", config.contraction_trials, 0, 1 << 16)
    _check_int(errors, "contraction_iterations", config.contraction_iterations, 1, 100_000)
    _check_int(errors, "contraction_grid", config.contraction_grid, 4, MAX_GRID)
    _check_int(errors, "contraction_coarse_grid", config.contraction_coarse_grid, 2, MAX_GRID)
    if config.contraction_direction not in DIRECTIONS:
        errors.append(f"contraction_direction: {config.contraction_direction!r} not in {DIRECTIONS}")
    _check_int(errors, "fourier_n", config.fourier_n, 1, MAX_FOURIER_N)
    _check_int(errors, "fourier_grid", config.fourier_grid, 4, 128)
    if isinstance(config.fourier_n, int) and isinstance(config.fourier_grid, int):
        if 2 * config.fourier_n >= config.fourier_grid:
            errors.append("fourier_grid: must exceed 2 * fourier_n")
    if errors:
        raise ConfigValidationError(errors)


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    flat = flatten_config(data)
    unknown = sorted(set(flat) - _FIELDS)
    if unknown:
        raise ConfigValidationError([f"{key}: unknown field" for key in unknown])
    config = ExperimentConfig(**flat)
    validate_config(config)
    return config


def load_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Read a JSON config file; ``overrides`` (CLI flags) win over file values."""
    try:
        with Path(path).open("r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"{path}: invalid JSON ({exc})"]) from exc
    if not isinstance(data, dict):
        raise ConfigValidationError([f"{path}: top level must be an object"])
    flat = flatten_config(data)
    flat.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_dict(flat)


def config_hash(config: ExperimentConfig) -> str:
    """First 12 hex digits of SHA-256 over the canonical JSON (output directory excluded)."""
    data = asdict(config)
    data.pop("out_dir", None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Periodic classification
# ---------------------------------------------------------------------------


@dataclass
class PeriodicSummary:
    records: List[PeriodicPointRecord]
    repelling: int = 0
    attracting: int = 0
    indifferent: int = 0
    undefined: int = 0

    @property
    def distinct(self) -> int:
        return len(self.records)

    @property
    def total_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.records)

    def to_dict(self) -> Dict[str, int]:
        return {
            "repelling": self.repelling,
            "attracting": self.attracting,
            "indifferent": self.indifferent,
            "undefined": self.undefined,
            "distinct": self.distinct,
            "total_multiplicity": self.total_multiplicity,
        }


def classify_periodic_experiment(f: Correspondence, n: int) -> PeriodicSummary:
    records = periodic_points(f, n)
    summary = PeriodicSummary(records=records)
    for record in records:
        label = record.classification
        setattr(summary, label, getattr(summary, label) + 1)
    return summary


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    kind: str
    config_hash: str
    files: List[Path] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


Progress = Optional[Callable[[str], None]]


def _say(progress: Progress, message: str) -> None:
    if progress is not None:
        progress(message)


def _limit_seed(config: ExperimentConfig) -> Optional[complex]:
    return None if config.limit_seed is None else parse_point(config.limit_seed)


def _run_pair(
    f: Correspondence, config: ExperimentConfig, header: ArtifactHeader, log: RunLogManager,
    out: Path, progress: Progress,
) -> ExperimentResult:
    forms = [DEFAULT_FORMS[name]() for name in config.forms]

    def on_step(n: int, rows: List[Any]) -> None:
        errors = {form.name: row.abs_error for form, row in zip(forms, rows)}
        log.append(f"n={n}", {"abs_error": errors, "mass": rows[0].mass})
        _say(progress, f"[n {n}/{config.n_max}] " + " ".join(
            f"{name}={err:.3e}" for name, err in errors.items()
        ))

    reports = convergence_experiment(
        f,
        forms,
        config.n_max,
        strategy=config.strategy,
        quadrature=config.quadrature,
        samples=config.tree_samples,
        covering=config.covering,
        limit_depth=config.limit_depth,
        seed_point=_limit_seed(config),
        rng=np.random.default_rng(config.seed),
        on_step=on_step,
    )
    result = ExperimentResult("pair", header.config_hash)
    for report in reports:
        result.files.append(write_pairing_csv(report, out / f"pairing_{report.form_id}.csv", header))
        if config.svg:
            from .plotting import plot_pairing_report

            result.files.append(plot_pairing_report(report, out / f"pairing_{report.form_id}.svg"))
    result.files.append(
        write_pairing_summary(reports, out / "pairing_summary.json", header, correspondence=f.name)
    )
    result.summary = {r.form_id: {"fitted_rate": r.fitted_rate, "fit_quality": r.fit_quality}
                      for r in reports}
    return result


def _run_equilibrium(
    f: Correspondence, config: ExperimentConfig, header: ArtifactHeader, log: RunLogManager,
    out: Path, progress: Progress,
) -> ExperimentResult:
    rng = np.random.default_rng(config.seed)
    mu = equilibrium_measure(
        f,
        seed=_limit_seed(config),
        depth=config.depth,
        mode=config.mode,
        k=config.samples,
        direction=config.direction,
        rng=rng,
    )
    result = ExperimentResult("equilibrium", header.config_hash)
    result.files.append(write_cloud_csv(mu, out / "cloud.csv", header))
    summary: Dict[str, Any] = {"atoms": mu.size, "total_mass": mu.total_mass}
    if not np.any(np.isinf(mu.atoms)):
        mom = moments(mu, config.moments_k)
        result.files.append(write_moments_json(mom, out / "moments.json", header))
        summary["moments"] = mom
    if config.direction == "backward":
        summary["invariance_defect"] = invariance_defect(f, mu, modulus_ratio_function())
    log.append("cloud", summary)
    _say(progress, f"[equilibrium] {mu.size} atoms, mass {mu.total_mass:.12f}")
    if config.svg:
        from .plotting import plot_cloud

        result.files.append(plot_cloud(mu, out / "cloud.svg"))
    result.summary = summary
    return result


def _run_periodic(
    f: Correspondence, config: ExperimentConfig, header: ArtifactHeader, log: RunLogManager,
    out: Path, progress: Progress,
) -> ExperimentResult:
    summary = classify_periodic_experiment(f, config.period)
    result = ExperimentResult("periodic", header.config_hash)
    result.files.append(write_periodic_csv(summary.records, out / "periodic.csv", header))
    result.files.append(
        write_json(out / "periodic_summary.json", header, {"period": config.period, **summary.to_dict()})
    )
    log.append("summary", summary.to_dict())
    _say(
        progress,
        f"[periodic n={config.period}] {summary.distinct} points, multiplicity "
        f"{summary.total_multiplicity}: {summary.repelling} repelling, "
        f"{summary.attracting} attracting",
    )
    result.summary = summary.to_dict()
    return result


def _run_contraction(
    f: Correspondence, config: ExperimentConfig, header: ArtifactHeader, log: RunLogManager,
    out: Path, progress: Progress,
) -> ExperimentResult:
    report = contraction_estimate(
        f,
        trials=config.contraction_trials,
        iterations=config.contraction_iterations,
        seed=config.seed,
        grid=config.contraction_grid,
        coarse_grid=config.contraction_coarse_grid,
        direction=config.contraction_direction,
    )
    result = ExperimentResult("contraction", header.config_hash)
    result.files.append(write_contraction_json(report, out / "contraction.json", header))
    log.append("estimate", report.to_dict())
    _say(
        progress,
        f"[contraction] lower={report.lower_bound:.6f} heuristic={report.heuristic_estimate:.6f} "
        f"grid_error={report.grid_error:.2e} flags={report.flags}",
    )
    result.summary = report.to_dict()
    return result


def fourier_summary(N: int, grid: int) -> Dict[str, Any]:
    """Decay of bump coefficients, tail bounds and the index-count identities."""
    bump = bump_function()
    coeffs = fourier_coefficients(bump, N, grid)
    reconstruction = truncation_error_bound(N)
    tails = {}
    for n in (4, 8, 16):
        bound = truncation_error_bound(n)
        tails[str(n)] = {"bound": bound.bound, "direct_tail": bound.direct_tail}
    shells = {str(m): shell_count(m) for m in range(1, N + 1)}
    return {
        "N": N,
        "grid": grid,
        "decay_ratio": decay_ratio(coeffs, order=5, n_min=1),
        "cutoff_c2_norm": cutoff_c2_norm(),
        "cutoff_defect": cutoff_defect(bump),
        "partial_sum_error": partial_sum_error(bump, coeffs),
        "partial_sum_tail": reconstruction.direct_tail,
        "partial_sum_bound": reconstruction.bound,
        "truncation": tails,
        "shell_counts": shells,
        "index_count": index_count(N),
        "index_count_bound": index_count_bound(N),
    }


def _run_fourier(
    f: Optional[Correspondence], config: ExperimentConfig, header: ArtifactHeader,
    log: RunLogManager, out: Path, progress: Progress,
) -> ExperimentResult:
    payload = fourier_summary(config.fourier_n, config.fourier_grid)
    result = ExperimentResult("fourier", header.config_hash, summary=payload)
    result.files.append(write_fourier_json(payload, out / "fourier.json", header))
    log.append("coefficients", {"decay_ratio": payload["decay_ratio"]})
    _say(progress, f"[fourier N={config.fourier_n}] max |a_I| |I|^5 = {payload['decay_ratio']:.4f}")
    return result


def bench(config: ExperimentConfig) -> List[Tuple[str, str, int, float]]:
    """Wall-clock seconds for one representative operation of every experiment kind."""
    from .catalog import builtin

    rows: List[Tuple[str, str, int, float]] = []
    square = builtin("square")
    balanced = builtin("moebius-pair")
    start_all = time.perf_counter()

    def timed(kind: str, operation: str, size: int, fn: Callable[[], Any]) -> None:
        start = time.perf_counter()
        fn()
        rows.append((kind, operation, size, time.perf_counter() - start))

    timed(
        "pair",
        "convergence_experiment square n=6",
        config.grid,
        lambda: convergence_experiment(
            square,
            [DEFAULT_FORMS["Omega"]()],
            6,
            quadrature=config.quadrature,
            rng=np.random.default_rng(config.seed),
        ),
    )
    timed("equilibrium", "backward cloud square depth=12", 12,
          lambda: equilibrium_measure(square, depth=12, rng=np.random.default_rng(config.seed)))
    timed("periodic", "periodic_points square n=3", 3, lambda: periodic_points(square, 3))
    timed("contraction", "contraction_estimate moebius-pair", config.contraction_grid,
          lambda: contraction_estimate(balanced, trials=8, iterations=50,
                                       grid=config.contraction_grid,
                                       coarse_grid=config.contraction_coarse_grid))
    timed("fourier", "bump coefficients", config.fourier_n,
          lambda: fourier_summary(config.fourier_n, config.fourier_grid))
    rows.append(("bench", "total", len(rows), time.perf_counter() - start_all))
    return rows


def _run_bench(
    f: Optional[Correspondence], config: ExperimentConfig, header: ArtifactHeader,
    log: RunLogManager, out: Path, progress: Progress,
) -> ExperimentResult:
    rows = bench(config)
    result = ExperimentResult("bench", header.config_hash)
    result.files.append(write_bench_csv(rows, out / "bench.csv", header))
    for kind, operation, size, seconds in rows:
        log.append(kind, {"operation": operation, "size": size, "seconds": seconds})
        _say(progress, f"[bench] {kind:<12} {operation:<40} {seconds:8.3f}s")
    result.summary = {kind: seconds for kind, _, _, seconds in rows}
    return result


_RUNNERS = {
    "pair": _run_pair,
    "equilibrium": _run_equilibrium,
    "periodic": _run_periodic,
    "contraction": _run_contraction,
    "fourier": _run_fourier,
    "bench": _run_bench,
}


def run(config: ExperimentConfig, progress: Progress = None) -> ExperimentResult:
    """
    Validate and execute one experiment, writing its artifacts into ``config.out_dir``.

    Nothing is written when validation fails.
    """
    validate_config(config)
    f = None if config.kind in ("fourier", "bench") else load_correspondence(config.source)
    digest = config_hash(config)
    header = ArtifactHeader(config_hash=digest, seed=config.seed)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = RunLogManager.for_directory(
        str(out), kind=config.kind, config_hash=digest, seed=config.seed
    )
    log.append("config", asdict(config))
    result = _RUNNERS[config.kind](f, config, header, log, out, progress)
    log.append("done", {"files": [p.name for p in result.files]})
    result.files.append(log.path)
    return result


__all__ = [
    "KINDS",
    "ExperimentConfig",
    "flatten_config",
    "validate_config",
    "config_from_dict",
    "load_config",
    "config_hash",
    "PeriodicSummary",
    "classify_periodic_experiment",
    "ExperimentResult",
    "fourier_summary",
    "bench",
    "run",
]

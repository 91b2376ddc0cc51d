"""
Dunkl Hardy Space Experiments - Command-Line Entry Point

Runs one experiment command against a JSON configuration and writes
report.json, CSV tables, report.xlsx and a row in the run ledger under
`<outdir>/<command>/<experiment-id>/`.

Exit codes: 0 every check passed, 1 a check failed or the command aborted,
2 the configuration is invalid.
"""

import argparse
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import dawsn, gamma

from src.cli.config import ExperimentConfig
from src.cli.reports import Check, make_check, write_run
from src.harmonic_analysis.algebra import RootSystem, WeightedGrid, growth_report, weight
from src.harmonic_analysis.atoms import tent_indicator_atom, validate_tent_atom
from src.harmonic_analysis.decomposition import (
    CalderonPair,
    atomic_decompose,
    calderon_check,
    segment_identity,
)
from src.harmonic_analysis.exceptions import CheckFailed, ConfigInvalid, DunklError
from src.harmonic_analysis.hardy import (
    Q_GRID,
    atom_ensemble_bounds,
    classical_reference,
    conjugate_system,
    cr_convergence,
    default_suite,
    h1_norm_table,
    q_sweep,
    ratio_stability,
    riesz_transform,
    subharmonicity_test,
)
from src.harmonic_analysis.kernel import KernelEvaluator, kernel_bound_report, rank1_series
from src.harmonic_analysis.operators import GridFunction
from src.harmonic_analysis.semigroups import (
    HeatEvaluator,
    PoissonEvaluator,
    heat_bound_report,
    poisson_bound_report,
    poisson_mass_outside,
    poisson_profile,
    qt_energy,
)
from src.harmonic_analysis.special import adaptive_quad
from src.harmonic_analysis.transform import dunkl_transform, inverse_transform

# Configure logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_INVALID = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Acceptance thresholds per check
ACCEPTANCE = {
    "euclidean_pointwise": 1e-8,
    "rank1_series": 1e-8,
    "rosler_log_ratio": 1e-8,
    "invariance": 1e-6,
    "heat_normalization": 1e-6,
    "heat_normalization_grid": 1e-4,
    "heat_semigroup": 1e-5,
    "heat_symmetry": 1e-10,
    "poisson_normalization": 1e-5,
    "poisson_subordination": 1e-6,
    "poisson_mass_outside": 1e-2,
    "plancherel": 1e-6,
    "inversion": 1e-6,
    "laplacian_symbol": 1e-5,
    "lp_energy": 1e-4,
    "riesz_dawson_window": 2e-2,
    "cr_order": 1.9,
    "subharmonic_q": 0.99,
    "norm_stability": 0.10,
    "classical_agreement": 0.10,
    "atom_stability": 0.15,
    "reconstruction": 0.05,
    "segment_identity": 1e-4,
    "calderon": 1e-3,
}

SWEEP_TIMES = (0.1, 0.5, 1.0, 2.0)
SWEEP_POINTS = 6
SWEEP_RADIUS = 2.0
POISSON_MASS_TIME = 1e-2
POISSON_MASS_RADIUS = 4.0
POISSON_FAR_RADIUS = 2.0 ** 22
MIN_POSITIVE = 1e-300


@dataclass
class CommandResult:
    """Checks, summary and tables produced by one command."""

    checks: List[Check] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)


def finite_check(name: str, value: float) -> Check:
    """Passes when value is finite."""
    return make_check(name, value if math.isfinite(value) else math.inf, sys.float_info.max)


def _sweep(rs: RootSystem, count: int, radius: float, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-radius, radius, size=(count, rs.dimension))


def _triples(rs: RootSystem, seed: int) -> List[tuple]:
    xs = _sweep(rs, SWEEP_POINTS, SWEEP_RADIUS, seed)
    ys = _sweep(rs, SWEEP_POINTS, SWEEP_RADIUS, seed + 1)
    return [(t, x, y) for t in SWEEP_TIMES for x, y in zip(xs, ys)]


def _gaussian(grid: WeightedGrid, variance: float = 1.0) -> GridFunction:
    return GridFunction(grid, np.exp(-np.sum(grid.points ** 2, axis=-1) / (2.0 * variance)).reshape(grid.shape))


def _relative_max(values: np.ndarray, reference: np.ndarray) -> float:
    scale = float(np.max(np.abs(reference)))
    return float(np.max(np.abs(values - reference))) / scale if scale > 0 else float(np.max(np.abs(values)))


def _rank1_integral(rs: RootSystem, integrand: Callable[[np.ndarray], np.ndarray], center: float,
                    radius: float, tol: float) -> float:
    """int integrand(y) w(y) dy over [center - radius, center + radius] for rank-one systems."""
    return float(adaptive_quad(lambda y: integrand(y[:, None]) * weight(rs, y[:, None]),
                               center - radius, center + radius, tol=tol, rtol=tol,
                               breakpoints=[0.0, center], max_level=14))


def kernel_bounds(cfg: ExperimentConfig) -> CommandResult:
    """Envelope ratios, Rosler bound, G-invariance and the rank-one series oracle for E(x, y)."""
    rs = cfg.root_system()
    spec = cfg["kernel"]
    evaluator = KernelEvaluator.for_root_system(rs, mode=spec["mode"], nmax=spec["nmax"], radius=spec["radius"],
                                                tol=cfg["tolerances"]["series"])
    xs = _sweep(rs, SWEEP_POINTS, SWEEP_RADIUS, cfg.seed)
    ys = _sweep(rs, SWEEP_POINTS, SWEEP_RADIUS, cfg.seed + 1)
    table, summary = kernel_bound_report(evaluator, xs, ys)
    checks = [
        make_check("kernel_positive_finite", float(summary["all_positive_finite"]), 1.0, ">="),
        make_check("rosler_bound", summary["max_log_rosler_ratio"], ACCEPTANCE["rosler_log_ratio"]),
        make_check("oscillatory_bound", summary["max_abs_E_ix_y"], 1.0 + ACCEPTANCE["rosler_log_ratio"]),
        make_check("group_invariance", summary["max_invariance_defect"], ACCEPTANCE["invariance"]),
        finite_check("envelope_lower_ratio", summary["min_log_lower_ratio"]),
        finite_check("envelope_upper_ratio", summary["max_log_upper_ratio"]),
    ]
    if rs.dimension == 1:
        k = float(rs.axis_multiplicities()[0])
        oracle = rank1_series(k, 1.0)
        value = complex(np.asarray(evaluator.evaluate(np.ones(1), np.ones(1))).reshape(-1)[0])
        checks.append(make_check("rank1_series_oracle", abs(value - oracle) / abs(oracle), ACCEPTANCE["rank1_series"]))
        summary["E_1_1"] = value.real
    growth = growth_report(rs, [np.zeros(rs.dimension), xs[0]], [0.5, 1.0])
    return CommandResult(checks, summary, {"kernel_bounds": table, "growth": growth})


def heat_bounds(cfg: ExperimentConfig) -> CommandResult:
    """Gaussian envelope sweeps, normalization, symmetry and the semigroup law of h_t."""
    rs = cfg.root_system()
    heat = HeatEvaluator.build(rs, KernelEvaluator.for_root_system(rs, mode=cfg["kernel"]["mode"]))
    triples = _triples(rs, cfg.seed)
    table, summary = heat_bound_report(rs, triples, heat)
    checks = [finite_check(f"{name}_ratio", stats["max_ratio"]) for name, stats in summary.items()]
    checks.append(make_check("heat_lower_positive", summary["h_lower"]["min_ratio"], MIN_POSITIVE, ">="))

    symmetry = max(abs(float(heat.kernel(t, x, y)) - float(heat.kernel(t, y, x))) / float(heat.kernel(t, x, y))
                   for t, x, y in triples)
    checks.append(make_check("heat_symmetry", symmetry, ACCEPTANCE["heat_symmetry"]))

    tol = cfg["tolerances"]["quadrature"]
    if rs.dimension == 1:
        mass = max(abs(_rank1_integral(rs, lambda z: heat.kernel(t, x, z), float(x[0]), 20.0 * math.sqrt(t), tol)
                       - 1.0) for t, x, _ in triples[::SWEEP_POINTS])
        checks.append(make_check("heat_normalization", mass, ACCEPTANCE["heat_normalization"]))
        law = 0.0
        for t, x, y in triples[::SWEEP_POINTS]:
            s = 0.5 * t
            composed = _rank1_integral(rs, lambda z: heat.kernel(t, x, z) * heat.kernel(s, z, y),
                                       0.5 * float(x[0] + y[0]), 20.0 * math.sqrt(t + s) + abs(float(x[0] - y[0])),
                                       tol)
            direct = float(heat.kernel(t + s, x, y))
            law = max(law, abs(composed - direct) / direct)
        checks.append(make_check("heat_semigroup", law, ACCEPTANCE["heat_semigroup"]))
    else:
        grid = cfg.grid(rs)
        center = np.zeros(rs.dimension)
        mass = max(abs(float(np.sum(heat.kernel(t, center, grid.points) * grid.quad_weights.ravel())) - 1.0)
                   for t in SWEEP_TIMES)
        checks.append(make_check("heat_normalization_grid", mass, ACCEPTANCE["heat_normalization_grid"]))
    return CommandResult(checks, summary, {"heat_bounds": table})


def poisson_bounds(cfg: ExperimentConfig) -> CommandResult:
    """Poisson envelope sweeps, normalization, subordination against the closed profile, approximate identity."""
    rs = cfg.root_system()
    poisson = PoissonEvaluator.build(rs)
    triples = _triples(rs, cfg.seed)
    table, summary = poisson_bound_report(rs, triples, poisson)
    checks = [finite_check(f"{name}_ratio", stats["max_ratio"]) for name, stats in summary.items()]
    checks.append(make_check("poisson_lower_positive", summary["p_lower"]["min_ratio"], MIN_POSITIVE, ">="))

    origin = np.zeros(rs.dimension)
    subordination = 0.0
    rows = []
    for t, x, _ in triples:
        value = float(poisson.kernel(t, x, origin))
        closed = float(poisson_profile(rs, t, np.linalg.norm(x)))
        subordination = max(subordination, abs(value - closed) / closed)
        rows.append({"t": t, "r": float(np.linalg.norm(x)), "subordinated": value, "closed": closed})
    checks.append(make_check("poisson_subordination", subordination, ACCEPTANCE["poisson_subordination"]))
    checks.append(make_check("poisson_normalization", abs(poisson_mass_outside(rs, 1.0, POISSON_FAR_RADIUS)),
                             ACCEPTANCE["poisson_normalization"]))
    outside = poisson_mass_outside(rs, POISSON_MASS_TIME, POISSON_MASS_RADIUS)
    checks.append(make_check("poisson_mass_outside", outside, ACCEPTANCE["poisson_mass_outside"]))
    summary["mass_outside"] = outside
    return CommandResult(checks, summary, {"poisson_bounds": table, "subordination": pd.DataFrame(rows)})


def norm_table(cfg: ExperimentConfig) -> CommandResult:
    """H^1 norm-equivalence table over the default suite, with refinement stability and the classical route."""
    rs = cfg.root_system()
    grid = cfg.grid(rs)
    ladder = cfg.ladder()
    table, summary = h1_norm_table(rs, default_suite(rs, grid, cfg.seed), ladder, cfg.transformer(rs, grid),
                                   workers=cfg.workers)
    checks = [finite_check("equivalence_constant", summary["equivalence_constant"])]
    tables = {"norms": table}
    if cfg["suite"]["refine"]:
        fine_grid = grid.refined()
        fine, fine_summary = h1_norm_table(rs, default_suite(rs, fine_grid, cfg.seed), ladder,
                                           cfg.transformer(rs, fine_grid), workers=cfg.workers)
        stability = ratio_stability(table, fine)
        checks.append(make_check("ratio_stability", stability, ACCEPTANCE["norm_stability"]))
        drift = abs(fine_summary["equivalence_constant"] / summary["equivalence_constant"] - 1.0)
        checks.append(make_check("constant_stability", drift, ACCEPTANCE["norm_stability"]))
        summary["refined_equivalence_constant"] = fine_summary["equivalence_constant"]
        tables["norms_refined"] = fine
    if rs.is_euclidean and rs.dimension == 1:
        suite = default_suite(rs, grid, cfg.seed)
        rows = []
        for _, row in table.iterrows():
            reference = classical_reference(suite[row["name"]], ladder)
            rows.append({"name": row["name"], **{f"classical_{k}": v for k, v in reference.items()},
                         "poisson_maximal": row["poisson_maximal"], "riesz": row["riesz"]})
        classical = pd.DataFrame(rows)
        agreement = max(float(np.max(np.abs(classical[f"classical_{c}"] / classical[c] - 1.0)))
                        for c in ("poisson_maximal", "riesz"))
        checks.append(make_check("classical_agreement", agreement, ACCEPTANCE["classical_agreement"]))
        tables["classical"] = classical
    return CommandResult(checks, summary, tables)


def _sample_callable(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.sum(np.asarray(x) ** 2, axis=-1))


def cr_check(cfg: ExperimentConfig) -> CommandResult:
    """Observed order of the Cauchy-Riemann residuals and of L-harmonicity under refinement."""
    rs = cfg.root_system()
    spec = cfg["grid"]
    result = cr_convergence(rs, _sample_callable, float(spec["extent"]), int(spec["points"]))
    checks = [
        make_check("cr_order", result["order"], ACCEPTANCE["cr_order"], ">="),
        make_check("harmonic_order", result["harmonic_order"], ACCEPTANCE["cr_order"], ">="),
    ]
    table = pd.DataFrame([{"level": "coarse", **result["coarse"]}, {"level": "fine", **result["fine"]}])
    return CommandResult(checks, {"order": result["order"], "harmonic_order": result["harmonic_order"]},
                         {"residuals": table})


def subharmonicity_sweep(cfg: ExperimentConfig) -> CommandResult:
    """Minimum of the discrete L|F|^q at q = 0.99 and the q-sweep."""
    rs = cfg.root_system()
    grid = cfg.grid(rs)
    sys_ = conjugate_system(rs, _gaussian(grid, 0.5))
    result = subharmonicity_test(sys_, ACCEPTANCE["subharmonic_q"])
    sweep, smallest = q_sweep(sys_, Q_GRID)
    checks = [make_check("subharmonic_min", result["min"], result["floor"], ">=")]
    return CommandResult(checks, {**result, "smallest_passing_q": smallest}, {"q_sweep": sweep})


def _atom_ensemble(cfg: ExperimentConfig, columns: Sequence[str]) -> CommandResult:
    rs = cfg.root_system()
    grid = cfg.grid(rs)
    spec = cfg["atoms"]
    options = dict(count=int(spec["count"]), seed=cfg.seed, q=float(spec["q"]), M=int(spec["M"]),
                   ladder=cfg.ladder(), workers=cfg.workers,
                   radius_range=(float(spec["radius_min"]), float(spec["radius_max"])))
    table, summary = atom_ensemble_bounds(rs, grid, **options)
    fine_table, fine_summary = atom_ensemble_bounds(rs, grid.refined(), **options)
    checks = []
    for column in columns:
        coarse, fine = summary[f"sup_{column}"], fine_summary[f"sup_{column}"]
        checks.append(finite_check(f"sup_{column}", coarse))
        checks.append(make_check(f"{column}_stability", abs(fine / coarse - 1.0) if coarse > 0 else math.inf,
                                 ACCEPTANCE["atom_stability"]))
    summary.update({f"refined_{k}": v for k, v in fine_summary.items()})
    return CommandResult(checks, summary, {"atoms": table, "atoms_refined": fine_table})


def riesz_atom_bounds(cfg: ExperimentConfig) -> CommandResult:
    """Uniform bounds of |R_j a|_1 and |M_H a|_1 over seeded random atoms."""
    result = _atom_ensemble(cfg, ("riesz_l1", "heat_maximal_l1"))
    result.checks.append(finite_check("far_field_envelope", result.summary["sup_far_field_envelope"]))
    return result


def square_atom_bounds(cfg: ExperimentConfig) -> CommandResult:
    """Uniform T^1_2 bound of Q_t a over seeded random atoms, plus a saturated tent atom."""
    result = _atom_ensemble(cfg, ("square_tent_l1",))
    rs = cfg.root_system()
    grid = cfg.grid(rs)
    times = cfg.ladder().times
    center = np.zeros(rs.dimension)
    tent = tent_indicator_atom(rs, grid, times, center, 2.0)
    passed, report = validate_tent_atom(tent, rs, center, 2.0)
    result.checks.append(make_check("tent_atom_valid", float(passed), 1.0, ">="))
    result.summary["tent_atom"] = report
    return result


def atomic_decompose_command(cfg: ExperimentConfig) -> CommandResult:
    """Atomic decomposition of a mean-zero Gaussian difference, with the Calderon segment identity."""
    rs = cfg.root_system()
    grid = cfg.decomposition_grid(rs)
    spec = cfg["decomposition"]
    M = int(spec["M"])
    f = default_suite(rs, grid, cfg.seed)["gaussian_difference"]
    transformer = cfg.transformer(rs, grid)
    pair = CalderonPair.build(rs, power=M)
    result = atomic_decompose(rs, f, M=M, transformer=transformer, pair=pair, j_floor=float(spec["j_floor"]),
                              slack=float(spec["slack"]), workers=cfg.workers)
    report = result.report
    segment = segment_identity(rs, f, 4.0 * grid.spacing, 1.0, pair, transformer)
    checks = [
        make_check("reconstruction", report["rel_l2_full"], ACCEPTANCE["reconstruction"]),
        make_check("atoms_valid", float(report["all_atoms_valid"]), 1.0, ">="),
        finite_check("lambda_constant", report["lambda_constant"]),
        make_check("segment_identity", segment["rel_l2"], ACCEPTANCE["segment_identity"]),
    ]
    records = pd.DataFrame([{k: v for k, v in r.items() if k != "validation"} for r in result.to_records()])
    return CommandResult(checks, {**report, "segment": segment},
                         {"coefficients": records, "atom_values": result.atom_frame()})


def calderon_check_command(cfg: ExperimentConfig) -> CommandResult:
    """Calderon reproducing formula with both generators and the segment identity."""
    rs = cfg.root_system()
    grid = cfg.grid(rs)
    f = default_suite(rs, grid, cfg.seed)["gaussian_difference"]
    transformer = cfg.transformer(rs, grid)
    pair = CalderonPair.build(rs)
    rows = [calderon_check(rs, f, pair, transformer=transformer, generator=g) for g in ("heat", "phi")]
    segment = segment_identity(rs, f, 0.1, 1.0, pair, transformer)
    checks = [make_check(f"calderon_{row['generator']}", row["rel_l2"], ACCEPTANCE["calderon"]) for row in rows]
    checks.append(make_check("segment_identity", segment["rel_l2"], ACCEPTANCE["segment_identity"]))
    return CommandResult(checks, {"pair": pair.describe(), "segment": segment}, {"calderon": pd.DataFrame(rows)})


def _euclidean_checks(rs: RootSystem, grid: WeightedGrid, seed: int) -> List[Check]:
    """k = 0 reductions: exponential kernel, Gaussian heat kernel, Cauchy-Poisson kernel, Hilbert transform."""
    n = rs.dimension
    xs = _sweep(rs, SWEEP_POINTS, SWEEP_RADIUS, seed)
    ys = _sweep(rs, SWEEP_POINTS, SWEEP_RADIUS, seed + 1)
    evaluator = KernelEvaluator.for_root_system(rs)
    kernel = np.asarray(evaluator.evaluate(xs, ys), dtype=complex).real
    exact = np.exp(np.sum(xs * ys, axis=-1))
    checks = [make_check("euclidean_kernel", float(np.max(np.abs(kernel / exact - 1.0))),
                         ACCEPTANCE["euclidean_pointwise"])]

    heat = HeatEvaluator.build(rs, evaluator)
    poisson = PoissonEvaluator.build(rs, heat)
    heat_error = poisson_error = 0.0
    for t in SWEEP_TIMES:
        d2 = np.sum((xs - ys) ** 2, axis=-1)
        gaussian = (4.0 * math.pi * t) ** (-n / 2.0) * np.exp(-d2 / (4.0 * t))
        cauchy = gamma((n + 1) / 2.0) / math.pi ** ((n + 1) / 2.0) * t * (t * t + d2) ** (-(n + 1) / 2.0)
        heat_error = max(heat_error, float(np.max(np.abs(heat.kernel(t, xs, ys) / gaussian - 1.0))))
        poisson_error = max(poisson_error, float(np.max(np.abs(poisson.kernel(t, xs, ys) / cauchy - 1.0))))
    checks.append(make_check("euclidean_heat", heat_error, ACCEPTANCE["euclidean_pointwise"]))
    checks.append(make_check("euclidean_poisson", poisson_error, ACCEPTANCE["euclidean_pointwise"]))

    if n == 1:
        f = _gaussian(grid, 0.5)
        riesz = riesz_transform(rs, f, 0)
        x = grid.axis
        window = np.abs(x) <= 1.0
        # Hilbert transform of exp(-x^2)
        oracle = 2.0 / math.sqrt(math.pi) * dawsn(x)
        checks.append(make_check("euclidean_riesz", _relative_max(riesz.values[window], oracle[window]),
                                 ACCEPTANCE["riesz_dawson_window"]))
    return checks


def selftest(cfg: ExperimentConfig) -> CommandResult:
    """Transform identities, Littlewood-Paley energy, the rank-one oracle and, for k = 0, the Euclidean reductions."""
    rs = cfg.root_system()
    grid = cfg.grid(rs)
    transformer = cfg.transformer(rs, grid)
    f = _gaussian(grid)
    spectral = dunkl_transform(rs, f, transformer=transformer)
    back = inverse_transform(rs, spectral, transformer=transformer)
    checks = [
        make_check("plancherel", abs(spectral.l2_norm() / f.l2_norm() - 1.0), ACCEPTANCE["plancherel"]),
        make_check("inversion", (back.real() - f).l2_norm() / f.l2_norm(), ACCEPTANCE["inversion"]),
    ]
    # Delta exp(-|x|^2/2) = (|x|^2 - N) exp(-|x|^2/2), N the homogeneous dimension
    r2 = np.sum(grid.points ** 2, axis=-1).reshape(grid.shape)
    laplacian = f.with_values((r2 - rs.homogeneous_dimension) * f.values)
    xi2 = np.sum(transformer.xi_grid.points ** 2, axis=-1).reshape(transformer.xi_grid.shape)
    symbol = dunkl_transform(rs, laplacian, transformer=transformer)
    target = spectral.with_values(-xi2 * spectral.values)
    checks.append(make_check("laplacian_symbol", (symbol - target).l2_norm() / target.l2_norm(),
                             ACCEPTANCE["laplacian_symbol"]))
    energy, reference = qt_energy(rs, f, transformer)
    checks.append(make_check("lp_energy", abs(energy / reference - 1.0), ACCEPTANCE["lp_energy"]))
    summary = {"energy": energy, "energy_reference": reference, "euclidean": rs.is_euclidean}
    if rs.dimension == 1:
        k = float(rs.axis_multiplicities()[0])
        oracle = rank1_series(k, 1.0)
        value = complex(np.asarray(KernelEvaluator.for_root_system(rs).evaluate(np.ones(1), np.ones(1))).reshape(-1)[0])
        checks.append(make_check("rank1_series_oracle", abs(value - oracle) / abs(oracle), ACCEPTANCE["rank1_series"]))
    if rs.is_euclidean:
        checks.extend(_euclidean_checks(rs, grid, cfg.seed))
    table = pd.DataFrame([{"name": c.name, "measured": c.measured, "tolerance": c.tolerance} for c in checks])
    return CommandResult(checks, summary, {"selftest": table})


COMMANDS: Dict[str, Callable[[ExperimentConfig], CommandResult]] = {
    "kernel-bounds": kernel_bounds,
    "heat-bounds": heat_bounds,
    "poisson-bounds": poisson_bounds,
    "norm-table": norm_table,
    "cr-check": cr_check,
    "subharmonicity-sweep": subharmonicity_sweep,
    "riesz-atom-bounds": riesz_atom_bounds,
    "square-atom-bounds": square_atom_bounds,
    "atomic-decompose": atomic_decompose_command,
    "calderon-check": calderon_check_command,
    "selftest": selftest,
}


def enforce(result: CommandResult) -> None:
    """
    Raise CheckFailed naming the first failing check.

    Raises:
        CheckFailed: If any check of the result failed
    """
    for check in result.checks:
        if not check.passed:
            raise CheckFailed(f"Check {check.name} failed: {check.measured:.6g} {check.relation} "
                              f"{check.tolerance:.6g} does not hold", check=check.name)


def run(cfg: ExperimentConfig, command: str, outdir: Optional[str] = None) -> int:
    """
    Run one command and persist its artifacts.

    Args:
        cfg (ExperimentConfig): Merged configuration
        command (str): Command name (a key of COMMANDS)
        outdir (str, optional): Output root (defaults to the configured output_dir)

    Returns:
        int: Exit status
    """
    if command not in COMMANDS:
        raise ValueError(f"Unknown command: {command}. Available commands: {list(COMMANDS)}")
    outdir = outdir or cfg["output_dir"]
    started = time.perf_counter()
    logger.info(f"Running {command} for experiment '{cfg.experiment_id}'")
    error = None
    try:
        result = COMMANDS[command](cfg)
    except DunklError as e:
        logger.error(f"Command {command} aborted: {type(e).__name__}: {str(e)}")
        result = CommandResult()
        error = f"{type(e).__name__}: {str(e)}"
    write_run(outdir, command, cfg.values, result.checks, result.summary, result.tables, error)
    logger.info(f"{command} finished in {time.perf_counter() - started:.1f}s")
    if error is not None:
        return EXIT_CHECK_FAILED
    try:
        enforce(result)
    except CheckFailed as e:
        logger.error(str(e))
        return EXIT_CHECK_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dunkl-hardy",
                                     description="Numerical experiments in rational Dunkl harmonic analysis")
    parser.add_argument("command", choices=list(COMMANDS), help="Experiment to run")
    parser.add_argument("--config", required=True, help="Path to the JSON experiment configuration")
    parser.add_argument("--outdir", default=None, help="Output root (overrides output_dir)")
    parser.add_argument("--workers", type=int, default=None, help="Worker threads (overrides workers)")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (overrides seed)")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-file", default=None, help="Also write the log to this file")
    return parser


def configure_logging(level: str, log_file: Optional[str] = None) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, handlers=handlers, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Command-line entry point.

    Args:
        argv (Sequence[str], optional): Arguments (defaults to sys.argv[1:])

    Returns:
        int: Exit status (0 pass, 1 check failed, 2 invalid configuration)
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_file)
    overrides = {"seed": args.seed, "workers": args.workers, "output_dir": args.outdir}
    try:
        cfg = ExperimentConfig.from_file(args.config, overrides)
        cfg.root_system()
    except ConfigInvalid as e:
        print(f"ConfigInvalid at {e.path}: {str(e)}", file=sys.stderr)
        return EXIT_CONFIG_INVALID
    return run(cfg, args.command)


if __name__ == "__main__":
    sys.exit(main())

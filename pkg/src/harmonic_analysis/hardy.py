"""
Hardy Space Module

This module provides the objects that characterize the Hardy space H^1 in
the Dunkl setting: heat and Poisson maximal functions, Riesz transforms
(multiplier and heat-integral routes), the area square function, conjugate
harmonic systems with their Cauchy-Riemann residuals and the subharmonicity
test, the nontangential and grand maximal functions of a (t, x) sample, and
the H^1 norm-equivalence table over a suite of test functions.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import signal
from scipy.special import erfc

from .algebra import RootSystem, Vector, WeightedGrid, ball_volume
from .atoms import AtomCandidate, random_atom, smooth_bump, tent_norms
from .cones import cone_functional, cone_sup, weighted_sup
from .exceptions import AllPointsDegenerate, TailTooLarge
from .kernel import KernelEvaluator
from .operators import (
    GridFunction,
    TimeGridFunction,
    dunkl_apply_grid,
    dunkl_apply_slices,
    operator_L_grid,
    time_derivative,
)
from .semigroups import TimeLadder, heat_ladder, poisson_ladder, qt_ladder
from .special import composite_quad
from .transform import DunklTransformer, spectral_multiplier_apply

RIESZ_ROUTES = ("multiplier", "integral")
RIESZ_EPS = 1e-4
RIESZ_UPPER = 1e3
TAIL_FRACTION = 0.1
DEGENERACY = 1e-6
FLOOR_FACTOR = 5.0
Q_GRID = tuple(np.round(np.arange(0.05, 1.0001, 0.05), 2))
NAB_APERTURES = (0.5, 1.0, 2.0, 4.0)
NORM_COLUMNS = ["l1", "heat_maximal", "poisson_maximal", "square", "riesz", "hardy_sup"]
# l1 alone is not an H^1 norm
EQUIVALENT_NORMS = NORM_COLUMNS[1:]
FAR_FIELD_FACTOR = 8.0


def _rho(transformer: DunklTransformer) -> np.ndarray:
    return np.linalg.norm(transformer.xi_grid.points, axis=-1).reshape(transformer.xi_grid.shape)


def _default_ladder() -> TimeLadder:
    return TimeLadder.geometric()


def maximal_heat(rs: RootSystem, f: GridFunction, ladder: Optional[TimeLadder] = None,
                 transformer: Optional[DunklTransformer] = None) -> GridFunction:
    """M_H f(x) = sup over ladder t and |x - y| < sqrt(t) of |e^{t Delta} f(y)|."""
    ladder = ladder or _default_ladder()
    u = heat_ladder(rs, f, ladder.times, transformer)
    return cone_sup(u, np.sqrt(ladder.times))


def maximal_poisson(rs: RootSystem, f: GridFunction, ladder: Optional[TimeLadder] = None,
                    transformer: Optional[DunklTransformer] = None) -> GridFunction:
    """M_P f(x) = sup over ladder t and |x - y| < t of |P_t f(y)|."""
    ladder = ladder or _default_ladder()
    u = poisson_ladder(rs, f, ladder.times, transformer)
    return cone_sup(u, ladder.times)


def riesz_multiplier(j: int) -> Callable[[np.ndarray], np.ndarray]:
    """-i xi_j / |xi|, zero at the origin."""
    def m(xi: np.ndarray) -> np.ndarray:
        rho = np.linalg.norm(xi, axis=-1)
        return np.where(rho > 0, -1j * xi[..., j] / np.where(rho > 0, rho, 1.0), 0.0)
    return m


def riesz_transform(rs: RootSystem, f: GridFunction, j: int, route: str = "multiplier",
                    transformer: Optional[DunklTransformer] = None, eps: float = RIESZ_EPS,
                    upper: float = RIESZ_UPPER, scheme: str = "central4",
                    with_tails: bool = False) -> Union[GridFunction, Tuple[GridFunction, Dict[str, float]]]:
    """
    Riesz transform R_j f.

    The multiplier route applies -i xi_j/|xi|. The integral route evaluates
    -pi^{-1/2} int_eps^upper T_j e^{t Delta} f dt/sqrt(t): the heat integral is
    accumulated by Gauss quadrature in log t, T_j is applied once by grid
    stencils, and the piece below eps is added to first order as
    -2 sqrt(eps/pi) T_j f.

    Args:
        rs (RootSystem): Root system
        f (GridFunction): Samples
        j (int): Coordinate index
        route (str): 'multiplier' or 'integral'
        transformer (DunklTransformer, optional): Kernel matrices
        eps (float): Lower truncation of the integral route
        upper (float): Upper truncation of the integral route
        scheme (str): Stencil scheme of T_j
        with_tails (bool): Also return the tail estimates

    Returns:
        GridFunction: R_j f (and the tail report when with_tails is set)

    Raises:
        TailTooLarge: If a tail estimate exceeds 10% of the norm of R_j f
    """
    if route not in RIESZ_ROUTES:
        raise ValueError(f"Unknown Riesz route: {route}. Available routes: {list(RIESZ_ROUTES)}")
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    if route == "multiplier":
        result = spectral_multiplier_apply(f, riesz_multiplier(j), transformer)
        return (result, {"lower_tail": 0.0, "upper_tail": 0.0}) if with_tails else result

    rho = _rho(transformer)
    spectral = transformer.forward(f.values)

    def integrand(u: np.ndarray) -> np.ndarray:
        t = np.exp(u)
        return np.sqrt(t)[:, None] * np.exp(-np.multiply.outer(t, rho.ravel() ** 2))

    span = math.log(upper / eps)
    edges = np.linspace(math.log(eps), math.log(upper), int(math.ceil(span)) + 1)
    symbol = np.asarray(composite_quad(integrand, edges)).reshape(rho.shape)
    accumulated = f.with_values(np.real(transformer.inverse(symbol * spectral, check=False)))
    direction = np.eye(rs.dimension)[j]
    dunkl_f = dunkl_apply_grid(rs, direction, f, scheme)
    body = dunkl_apply_grid(rs, direction, accumulated, scheme)
    lower = 2.0 * math.sqrt(eps / math.pi)
    result = GridFunction(f.grid, -(body.values / math.sqrt(math.pi) + lower * dunkl_f.values),
                          body.valid & dunkl_f.valid)

    upper_tail = spectral_multiplier_apply(
        f, lambda xi: riesz_multiplier(j)(xi) * erfc(math.sqrt(upper) * np.linalg.norm(xi, axis=-1)),
        transformer, check=False)
    norm = result.l2_norm()
    tails = {"lower_tail": lower * dunkl_f.l2_norm(), "upper_tail": upper_tail.l2_norm(), "norm": norm}
    for name in ("lower_tail", "upper_tail"):
        if norm > 0 and tails[name] > TAIL_FRACTION * norm:
            logging.error(f"Riesz integral route: {name} {tails[name]:.3g} against norm {norm:.3g}")
            raise TailTooLarge(f"Riesz {name} estimate {tails[name]:.3g} exceeds {TAIL_FRACTION:.0%} of {norm:.3g}")
    return (result, tails) if with_tails else result


def square_function(rs: RootSystem, f: GridFunction, ladder: Optional[TimeLadder] = None,
                    transformer: Optional[DunklTransformer] = None, aperture: float = 1.0) -> GridFunction:
    """
    S f(x) = ( int int_{|x-y| < t} |Q_t f(y)|^2 dw(y) dt / (t w(B(x,t))) )^{1/2}.

    Args:
        rs (RootSystem): Root system
        f (GridFunction): Samples
        ladder (TimeLadder, optional): Ladder for the t-integral
        transformer (DunklTransformer, optional): Kernel matrices
        aperture (float): Cone aperture

    Returns:
        GridFunction: S f on the grid
    """
    ladder = ladder or _default_ladder()
    u = qt_ladder(rs, f, ladder.times, transformer)
    return cone_functional(u, ladder.dt_weights, aperture)


@dataclass
class ConjugateSystem:
    """u_0 = P_t f and u_j = P_t R_j f on a uniform ladder."""

    rs: RootSystem
    ladder: TimeLadder
    components: List[TimeGridFunction]
    source: GridFunction

    @property
    def grid(self) -> WeightedGrid:
        return self.source.grid

    def magnitude(self) -> np.ndarray:
        return np.sqrt(sum(np.abs(u.values) ** 2 for u in self.components))

    def u_sigma(self, element: int) -> List[TimeGridFunction]:
        """u_{sigma,0}(t,x) = u_0(t, sigma x), u_{sigma,j}(t,x) = sum_i sigma_ij u_i(t, sigma x)."""
        sigma = self.rs.group_elements[element]
        grid = self.grid
        moved = [np.stack([grid.compose(s, element) for s in u.values]) for u in self.components]
        rebuilt = [moved[0]]
        for j in range(self.rs.dimension):
            rebuilt.append(sum(sigma[i, j] * moved[i + 1] for i in range(self.rs.dimension)))
        return [self.components[0].with_values(values) for values in rebuilt]


def conjugate_system(rs: RootSystem, f: GridFunction, ladder: Optional[TimeLadder] = None,
                     transformer: Optional[DunklTransformer] = None) -> ConjugateSystem:
    """
    Build the conjugate harmonic system of f on the spectral side.

    The ladder must be uniform (time stencils); by default it runs from h to
    1 + h with step h.
    """
    grid = f.grid
    if ladder is None:
        h = grid.spacing
        ladder = TimeLadder.uniform(h, 1.0 + h, int(round(1.0 / h)) + 1)
    transformer = transformer or DunklTransformer.build(rs, grid)
    rho = _rho(transformer)
    spectral = transformer.forward(f.values)
    symbols = [np.ones_like(rho, dtype=complex)] + [transformer.multiplier_values(riesz_multiplier(j))
                                                    for j in range(rs.dimension)]
    components = []
    for symbol in symbols:
        slices = [np.real(transformer.inverse(symbol * np.exp(-t * rho) * spectral, check=False))
                  for t in ladder.times]
        components.append(TimeGridFunction(grid, ladder.times, np.stack(slices)))
    logging.info(f"Conjugate system on {len(ladder)} slices with {len(components)} components")
    return ConjugateSystem(rs=rs, ladder=ladder, components=components, source=f)


def _masked_norms(values: np.ndarray, mask: np.ndarray, weights: np.ndarray) -> Tuple[float, float]:
    magnitude = np.abs(np.where(mask, values, 0.0))
    return float(magnitude.max()), float(np.sqrt(np.sum(magnitude ** 2 * weights)))


def cr_residual(sys: ConjugateSystem, scheme: str = "central2") -> Dict[str, float]:
    """
    Cauchy-Riemann residuals T_i u_j - T_j u_i (0 <= i < j <= N), the divergence
    sum_j T_j u_j and L u_j, measured on the interior of the (t, x) grid.

    Returns:
        Dict[str, float]: max and L^2 norms of each residual family
    """
    rs = sys.rs
    grid = sys.grid

    def apply(i: int, u: TimeGridFunction) -> TimeGridFunction:
        if i == 0:
            return time_derivative(u, scheme)
        return dunkl_apply_slices(rs, np.eye(rs.dimension)[i - 1], u, scheme)

    weights = np.broadcast_to(grid.quad_weights, sys.components[0].values.shape) * \
        np.gradient(sys.ladder.times).reshape((-1,) + (1,) * grid.dimension)
    derivatives = {(i, j): apply(i, u) for i in range(rs.dimension + 1) for j, u in enumerate(sys.components)}
    mask = np.ones(sys.components[0].values.shape, dtype=bool)
    for d in derivatives.values():
        mask &= d.valid
    swap_max, swap_l2 = 0.0, 0.0
    for i in range(rs.dimension + 1):
        for j in range(i + 1, rs.dimension + 1):
            m, l2 = _masked_norms(derivatives[(i, j)].values - derivatives[(j, i)].values, mask, weights)
            swap_max, swap_l2 = max(swap_max, m), max(swap_l2, l2)
    divergence = sum(derivatives[(j, j)].values for j in range(rs.dimension + 1))
    div_max, div_l2 = _masked_norms(divergence, mask, weights)
    harmonic_max = 0.0
    for u in sys.components:
        lu = operator_L_grid(rs, u, scheme)
        harmonic_max = max(harmonic_max, float(np.max(np.abs(np.where(lu.valid, lu.values, 0.0)))))
    scale = max(float(np.max(np.abs(u.values))) for u in sys.components)
    return {"swap_max": swap_max, "swap_l2": swap_l2, "divergence_max": div_max, "divergence_l2": div_l2,
            "harmonic_max": harmonic_max, "max_residual": max(swap_max, div_max), "scale": scale,
            "spacing": grid.spacing}


def cr_convergence(rs: RootSystem, f: Callable[[np.ndarray], np.ndarray], extent: float, points: int,
                   t_range: Tuple[float, float] = (0.25, 1.25), scheme: str = "central2") -> Dict[str, float]:
    """
    Observed order of the Cauchy-Riemann residuals between spacing h and h/2.

    The time step follows the space step so both discretizations refine together.
    """
    reports = []
    grid = WeightedGrid.build(rs, extent, points)
    for _ in range(2):
        h = grid.spacing
        count = int(round((t_range[1] - t_range[0]) / h)) + 1
        ladder = TimeLadder.uniform(t_range[0], t_range[0] + (count - 1) * h, count)
        sys = conjugate_system(rs, GridFunction.from_callable(grid, f), ladder)
        reports.append(cr_residual(sys, scheme))
        grid = grid.refined()
    coarse, fine = reports
    order = {}
    for key in ("max_residual", "harmonic_max"):
        ratio = coarse[key] / fine[key] if fine[key] > 0 else float("inf")
        order[key] = math.log2(ratio) if ratio > 0 else float("nan")
    result = {"coarse": coarse, "fine": fine, "order": order["max_residual"], "harmonic_order": order["harmonic_max"]}
    logging.info(f"Cauchy-Riemann residual order {result['order']:.3f}")
    return result


def subharmonicity_test(sys: ConjugateSystem, q: float, scheme: str = "central2",
                        floor: Optional[float] = None) -> Dict[str, float]:
    """
    Apply the discrete L to |F|^q, F = {u_sigma} over the group, and report the minimum.

    Args:
        sys (ConjugateSystem): Conjugate system
        q (float): Exponent in (0, 1]
        scheme (str): Stencil scheme
        floor (float, optional): Numerical zero floor; -5 h^2 by default

    Returns:
        Dict[str, float]: Minimum of L|F|^q on non-degenerate interior points, the floor,
            the verdict and the |u_sigma| = |u o sigma| defect

    Raises:
        AllPointsDegenerate: If |F| is below 1e-6 max|F| everywhere
    """
    if not 0 < q <= 1:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    rs = sys.rs
    grid = sys.grid
    floor = -FLOOR_FACTOR * grid.spacing ** 2 if floor is None else floor
    base = sys.magnitude()
    squared = np.zeros_like(base)
    defect = 0.0
    for g in range(rs.order):
        parts = sys.u_sigma(g)
        size = np.sqrt(sum(np.abs(p.values) ** 2 for p in parts))
        moved = np.stack([grid.compose(s, g) for s in base])
        defect = max(defect, float(np.max(np.abs(size - moved))))
        squared += size ** 2
    magnitude = np.sqrt(squared)
    threshold = DEGENERACY * float(magnitude.max())
    lu = operator_L_grid(rs, sys.components[0].with_values(magnitude ** q), scheme)
    tested = lu.valid & (magnitude > threshold)
    if not np.any(tested):
        raise AllPointsDegenerate(f"|F| is below {threshold:.3g} on every interior point")
    minimum = float(np.min(lu.values[tested]))
    return {"q": q, "min": minimum, "floor": floor, "passed": minimum >= floor, "points": int(tested.sum()),
            "u_sigma_defect": defect}


def q_sweep(sys: ConjugateSystem, qs: Sequence[float] = Q_GRID, scheme: str = "central2",
            floor: Optional[float] = None) -> Tuple[pd.DataFrame, Optional[float]]:
    """
    Subharmonicity test over a q-grid.

    Returns:
        Tuple[pd.DataFrame, Optional[float]]: One row per q and the smallest q
            from which every larger grid value passes (None if q=1 fails)
    """
    rows = [subharmonicity_test(sys, float(q), scheme, floor) for q in qs]
    table = pd.DataFrame(rows)
    smallest = None
    for row in sorted(rows, key=lambda r: -r["q"]):
        if not row["passed"]:
            break
        smallest = row["q"]
    return table, smallest


def barrier_function(rs: RootSystem, grid: WeightedGrid, times: Sequence[float], v: Vector, eps: float,
                     bound: float, evaluator: Optional[KernelEvaluator] = None) -> TimeGridFunction:
    """
    V(t, x) = 2 M eps t + eps E(eps pi x / 4, v) cos(eps pi t / 4) with |v| = 1, an L-harmonic barrier.

    Args:
        rs (RootSystem): Root system
        grid (WeightedGrid): Grid
        times (Sequence[float]): Uniform times
        v (Vector): Unit vector
        eps (float): Scale
        bound (float): The constant M
        evaluator (KernelEvaluator, optional): Kernel evaluator

    Returns:
        TimeGridFunction: Samples of V
    """
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("The barrier direction must be a unit vector")
    evaluator = evaluator or KernelEvaluator.for_root_system(rs)
    lam = eps * math.pi / 4.0
    spatial = np.real(evaluator.evaluate(grid.points * lam, v)).reshape(grid.shape)
    times = np.asarray(times, dtype=float)
    values = 2.0 * bound * eps * times.reshape((-1,) + (1,) * grid.dimension) + \
        eps * spatial[None, ...] * np.cos(lam * times).reshape((-1,) + (1,) * grid.dimension)
    return TimeGridFunction(grid, times, values)


def nontangential_max(u: TimeGridFunction, aperture: float = 1.0) -> GridFunction:
    """u*_a(x) = sup over |x - y| < a t of |u(t, y)|."""
    return cone_sup(u, aperture * u.times)


def grand_maximal(u: TimeGridFunction, lam: float) -> GridFunction:
    """u**_lambda(x) = sup |u(t, y)| (t / (t + |x - y|))^lambda."""
    return weighted_sup(u, lam)


def nab_report(rs: RootSystem, u: TimeGridFunction, lam: Optional[float] = None,
               apertures: Sequence[float] = NAB_APERTURES) -> Dict[str, object]:
    """
    Fitted constants of the aperture and grand-maximal comparisons.

    Reports C in |u*_a|_1 <= C ((a+b)/b)^N |u*_b|_1 for every pair a > b, the
    sandwich c |u*|_1 <= |u**_lambda|_1 <= C |u*|_1 and the pointwise check
    u*_a <= (1+a)^lambda u**_lambda.
    """
    big_n = rs.homogeneous_dimension
    lam = lam if lam is not None else big_n + 1.0
    star = {a: nontangential_max(u, a) for a in apertures}
    norms = {a: star[a].l1_norm() for a in apertures}
    grand = grand_maximal(u, lam)
    aperture_constants = []
    for a in apertures:
        for b in apertures:
            if a > b and norms[b] > 0:
                aperture_constants.append(norms[a] / (((a + b) / b) ** big_n * norms[b]))
    pointwise = max(float(np.max(star[a].values - (1.0 + a) ** lam * grand.values)) for a in apertures)
    reference = norms[1.0] if 1.0 in norms else norms[apertures[0]]
    return {
        "lambda": lam,
        "aperture_norms": {str(a): n for a, n in norms.items()},
        "aperture_constant": max(aperture_constants) if aperture_constants else float("nan"),
        "grand_norm": grand.l1_norm(),
        "sandwich_lower": grand.l1_norm() / reference if reference > 0 else float("nan"),
        "pointwise_excess": pointwise,
    }


def hardy_sup_norm(sys: ConjugateSystem) -> float:
    """sup over the ladder of || |u(t, .)| ||_{L^1(dw)}."""
    magnitude = sys.magnitude()
    weights = sys.grid.quad_weights
    return float(max(np.sum(magnitude[i] * weights) for i in range(len(sys.ladder))))


@dataclass
class NormReport:
    """The H^1 norms of one test function."""

    name: str
    l1: float
    heat_maximal: float
    poisson_maximal: float
    square: float
    riesz: float
    hardy_sup: float

    def ratios(self) -> Dict[str, float]:
        """Every pairwise ratio among the H^1 norms, one column per unordered pair."""
        ratios = {}
        for i, a in enumerate(EQUIVALENT_NORMS):
            for b in EQUIVALENT_NORMS[i + 1:]:
                denominator = getattr(self, b)
                ratios[f"{a}/{b}"] = getattr(self, a) / denominator if denominator > 0 else float("nan")
        return ratios


def _gaussian(grid: WeightedGrid, center: np.ndarray, width: float) -> np.ndarray:
    return np.exp(-grid.distances_from(center) ** 2 / (2.0 * width ** 2))


def default_suite(rs: RootSystem, grid: WeightedGrid, seed: int = 0) -> Dict[str, GridFunction]:
    """
    Six mean-zero test functions: Gaussian difference, Gaussian derivative,
    random atom, dilated atom, odd bump and two-bump.
    """
    origin = np.zeros(rs.dimension)
    first = np.eye(rs.dimension)[0]
    weights = grid.quad_weights

    def balanced(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a / np.sum(a * weights) - b / np.sum(b * weights)

    narrow, wide = _gaussian(grid, origin, 1.0 / math.sqrt(2.0)), _gaussian(grid, origin, 1.0)
    coordinate = (grid.points @ first).reshape(grid.shape)
    bump = lambda c, r: smooth_bump(grid.distances_from(c) / r)
    atom = random_atom(rs, grid, seed=seed)
    dilated = random_atom(rs, grid, seed=seed, radius_range=(1.0, 3.0))
    suite = {
        "gaussian_difference": balanced(narrow, wide),
        "gaussian_derivative": coordinate * wide,
        "atom": np.real(atom.a.values),
        "dilated_atom": np.real(dilated.a.values),
        "odd_bump": bump(1.5 * first, 1.0) - bump(-1.5 * first, 1.0),
        "two_bump": balanced(bump(1.5 * first, 1.0), bump(-0.5 * first + 0.5 * np.ones(rs.dimension), 1.5)),
    }
    return {name: GridFunction(grid, values) for name, values in suite.items()}


def norm_report(rs: RootSystem, name: str, f: GridFunction, ladder: Optional[TimeLadder] = None,
                transformer: Optional[DunklTransformer] = None) -> NormReport:
    """Compute every H^1 norm of one function."""
    ladder = ladder or _default_ladder()
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    if f.max_abs() == 0.0:
        return NormReport(name, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    riesz = sum(riesz_transform(rs, f, j, transformer=transformer).l1_norm() for j in range(rs.dimension))
    sys = conjugate_system(rs, f, TimeLadder.uniform(ladder.times[0], ladder.times[-1], len(ladder)), transformer)
    return NormReport(
        name=name,
        l1=f.l1_norm(),
        heat_maximal=maximal_heat(rs, f, ladder, transformer).l1_norm(),
        poisson_maximal=maximal_poisson(rs, f, ladder, transformer).l1_norm(),
        square=square_function(rs, f, ladder, transformer).l1_norm(),
        riesz=f.l1_norm() + riesz,
        hardy_sup=hardy_sup_norm(sys),
    )


def h1_norm_table(rs: RootSystem, suite: Dict[str, GridFunction], ladder: Optional[TimeLadder] = None,
                  transformer: Optional[DunklTransformer] = None, workers: int = 1) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """
    Norm-equivalence table over a suite of test functions.

    Args:
        rs (RootSystem): Root system
        suite (Dict[str, GridFunction]): Named test functions on one grid
        ladder (TimeLadder, optional): Ladder shared by every norm
        transformer (DunklTransformer, optional): Kernel matrices for the suite grid
        workers (int): Threads across suite members

    Returns:
        Tuple[pd.DataFrame, Dict[str, float]]: One row per member (norms and
            ratios) and the summary with the equivalence constant C*
    """
    if not suite:
        return pd.DataFrame(columns=["name"] + NORM_COLUMNS), {"equivalence_constant": float("nan")}
    grid = next(iter(suite.values())).grid
    transformer = transformer or DunklTransformer.build(rs, grid)
    ladder = ladder or _default_ladder()
    jobs = list(suite.items())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda item: norm_report(rs, item[0], item[1], ladder, transformer), jobs))
    else:
        reports = [norm_report(rs, name, f, ladder, transformer) for name, f in jobs]
    rows = [{**asdict(report), **report.ratios()} for report in reports]
    table = pd.DataFrame(rows)
    constant = equivalence_constant(table)
    logging.info(f"H1 norm table over {len(rows)} functions: equivalence constant {constant:.4g}")
    return table, {"equivalence_constant": constant, "members": len(rows)}


def equivalence_constant(table: pd.DataFrame) -> float:
    """
    Smallest C with every pair of H^1 norms within a factor C of each other,
    taken over every row of a norm table. The plain L^1 norm does not enter.
    """
    ratio_columns = [c for c in table.columns if "/" in c]
    values = table[ratio_columns].to_numpy(dtype=float)
    finite = values[np.isfinite(values) & (values > 0)]
    return float(np.max(np.maximum(finite, 1.0 / finite))) if finite.size else float("nan")


def ratio_stability(coarse: pd.DataFrame, fine: pd.DataFrame) -> float:
    """Largest relative change of any ratio between two norm tables of the same suite."""
    ratio_columns = [c for c in coarse.columns if "/" in c]
    a = coarse.set_index("name")[ratio_columns]
    b = fine.set_index("name")[ratio_columns].reindex(a.index)
    change = np.abs(b.to_numpy(dtype=float) - a.to_numpy(dtype=float)) / np.abs(a.to_numpy(dtype=float))
    return float(np.nanmax(change)) if change.size else 0.0


def classical_reference(f: GridFunction, ladder: Optional[TimeLadder] = None) -> Dict[str, float]:
    """
    Classical H^1(R) norms for k = 0, N = 1 from explicit formulas: the
    Cauchy kernel t / (pi (t^2 + x^2)) by direct summation and the Hilbert
    transform through scipy.signal.hilbert.
    """
    grid = f.grid
    if grid.dimension != 1 or not grid.rs.is_euclidean:
        raise ValueError("The classical reference needs k = 0 in dimension 1")
    ladder = ladder or _default_ladder()
    x = grid.axis
    h = grid.spacing
    diff = x[:, None] - x[None, :]
    slices = [(t / (math.pi * (t * t + diff ** 2))) @ f.values * h for t in ladder.times]
    poisson = cone_sup(TimeGridFunction(grid, ladder.times, np.stack(slices)), ladder.times)
    hilbert = np.imag(signal.hilbert(f.values))
    return {"l1": f.l1_norm(), "poisson_maximal": poisson.l1_norm(),
            "riesz": f.l1_norm() + float(np.sum(np.abs(hilbert)) * h)}


def poisson_approximation_check(rs: RootSystem, f: GridFunction, ladder: Optional[TimeLadder] = None,
                                transformer: Optional[DunklTransformer] = None) -> pd.DataFrame:
    """|M_P(P_t f - f)|_1 along the ladder, the discrete approach of P_t f to f in H^1_{max,P}."""
    ladder = ladder or _default_ladder()
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    u = poisson_ladder(rs, f, ladder.times, transformer)
    rows = []
    for i, t in enumerate(ladder.times):
        difference = f.with_values(u.values[i] - f.values)
        rows.append({"t": float(t), "maximal_l1": maximal_poisson(rs, difference, ladder, transformer).l1_norm(),
                     "l1": difference.l1_norm()})
    return pd.DataFrame(rows)


def atom_operator_bounds(rs: RootSystem, cand: AtomCandidate, ladder: Optional[TimeLadder] = None,
                         transformer: Optional[DunklTransformer] = None) -> Dict[str, float]:
    """
    L^1 norms of R_j a, M_H a and the T^1_2 norm of Q_t a for one atom, with the
    far-field envelope |R_j a(x)| w(B(y0, d)) (d / r) over d(x, y0) > 8 r.
    """
    ladder = ladder or _default_ladder()
    grid = cand.grid
    transformer = transformer or DunklTransformer.build(rs, grid)
    a = cand.a.with_values(np.where(cand.a.valid, np.real(cand.a.values), 0.0), np.ones(grid.shape, dtype=bool))
    riesz = [riesz_transform(rs, a, j, transformer=transformer) for j in range(rs.dimension)]
    heat_max = maximal_heat(rs, a, ladder, transformer)
    tent = tent_norms(qt_ladder(rs, a, ladder.times, transformer), p=1)
    distances = grid.orbit_distances_from(cand.center)
    far = distances > FAR_FIELD_FACTOR * cand.radius
    envelope = 0.0
    if np.any(far):
        magnitude = np.sqrt(sum(np.abs(r.values) ** 2 for r in riesz))
        sample = np.flatnonzero(far.ravel())[:: max(1, int(far.sum()) // 64)]
        for index in sample:
            d = float(distances.ravel()[index])
            envelope = max(envelope, float(magnitude.ravel()[index]) * ball_volume(rs, cand.center, d) * d / cand.radius)
    near = distances <= FAR_FIELD_FACTOR * cand.radius
    return {
        "riesz_l1": float(sum(r.l1_norm() for r in riesz)),
        "heat_maximal_l1": heat_max.l1_norm(),
        "heat_maximal_near_l1": float(np.sum(np.where(near, heat_max.values, 0.0) * grid.quad_weights)),
        "square_tent_l1": tent,
        "far_field_envelope": envelope,
        "atom_l1": a.l1_norm(),
    }


def atom_ensemble_bounds(rs: RootSystem, grid: WeightedGrid, count: int = 50, seed: int = 0, q: float = 2.0,
                         M: int = 1, ladder: Optional[TimeLadder] = None, workers: int = 1,
                         radius_range: Tuple[float, float] = (0.5, 1.5)) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """atom_operator_bounds over `count` seeded random atoms; the summary holds the sup of each column."""
    transformer = DunklTransformer.build(rs, grid)
    ladder = ladder or _default_ladder()

    def one(offset: int) -> Dict[str, float]:
        cand = random_atom(rs, grid, q=q, M=M, seed=seed + offset, radius_range=radius_range)
        row = atom_operator_bounds(rs, cand, ladder, transformer)
        row.update({"seed": seed + offset, "radius": cand.radius})
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(count)))
    else:
        rows = [one(offset) for offset in range(count)]
    table = pd.DataFrame(rows)
    summary = {f"sup_{c}": float(table[c].max()) for c in
               ("riesz_l1", "heat_maximal_l1", "square_tent_l1", "far_field_envelope")}
    return table, summary

"""Heralded temporal shaping of a single photon.

Detecting one photon of an output pair at time ``t_dec`` projects its partner
onto the conditional amplitude ``F(t_dec, tau)``. For the ``|1,1>`` outcome
that is ``t^2 f1(t_dec) f2(tau) - r^2 f2(t_dec) f1(tau)``; for ``|2,0>`` it
is ``f1(t_dec) f2(tau) + f2(t_dec) f1(tau)``.

A detector with finite resolution ``t_R`` only localizes the click inside a
window around ``t_dec``. The heralded photon is then an incoherent mixture of
the pure conditional shapes at the sub-times covered by the window, weighted
by their detection probability.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .beamsplitter import BeamSplitter, Outcome
from .errors import CoverageError, CoverageWarning, ImpossibleHeraldError, NoFeasibleStartError
from .waveforms import (
    ExpDecaySine,
    Gaussian,
    Sampled,
    TemporalShape,
    TimeGrid,
    _sample_scaled,
    sample,
    shape_from_dict,
)

HERALD_THRESHOLD = 1e-12
DEFAULT_GRID = TimeGrid(-10.0, 30.0, 2001)


@dataclass(frozen=True)
class HeraldSpec:
    """Detection of one photon in output port 1 at ``t_dec``.

    ``resolution`` is the detector window width ``t_R``; the click is known to
    lie in ``(t_dec - t_R/2, t_dec + t_R/2)``. Zero means ideal detection.
    """

    outcome: Outcome = Outcome.OUT11
    t_dec: float = 0.0
    resolution: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "outcome", Outcome.parse(self.outcome))
        if self.outcome is Outcome.OUT02:
            raise ValueError("heralding detects in port 1; use outcome 11 or 20")
        if not self.resolution >= 0.0:
            raise ValueError(f"resolution must be >= 0, got {self.resolution}")


@dataclass(frozen=True, eq=False)
class HeraldResult:
    spec: HeraldSpec
    shape: Sampled | None = None
    ensemble: tuple[tuple[float, Sampled], ...] = ()
    sub_times: np.ndarray | None = field(default=None, repr=False)
    success_density: float | None = None
    success_probability: float | None = None
    fidelity: float | None = None

    @property
    def is_mixed(self) -> bool:
        return self.shape is None


def _conditional(f1, f2, bs: BeamSplitter, outcome: Outcome, t_sub, grid: TimeGrid):
    """Unnormalized conditional amplitudes (one row per sub-time) and their densities."""
    s1, c1 = _sample_scaled(f1, grid)
    s2, c2 = _sample_scaled(f2, grid)
    t_sub = np.atleast_1d(np.asarray(t_sub, dtype=float))
    a = np.asarray(f1(t_sub), dtype=complex) * c1
    b = np.asarray(f2(t_sub), dtype=complex) * c2
    if outcome is Outcome.OUT11:
        h = bs.t_sq * np.outer(a, s2.values) - bs.r_sq * np.outer(b, s1.values)
        dens = grid.integrate(np.abs(h) ** 2)
    else:
        h = np.outer(a, s2.values) + np.outer(b, s1.values)
        # 2 P20 |F20(t, tau)|^2 with F20 of unit norm: either photon in
        # port 1 may fire the detector, so this integrates to 2 P20
        dens = bs.t_sq * bs.r_sq * grid.integrate(np.abs(h) ** 2)
    return h, np.asarray(dens, dtype=float)


def shaping_fidelity(shape: TemporalShape, target: TemporalShape, grid: TimeGrid) -> float:
    """Squared overlap ``|integral conj(target) shape dtau|^2`` on ``grid``."""
    s = sample(shape, grid).values
    g = sample(target, grid).values
    return float(abs(grid.integrate(np.conj(g) * s)) ** 2)


def _fidelities(rows: np.ndarray, target: TemporalShape, grid: TimeGrid) -> np.ndarray:
    g = sample(target, grid).values
    return np.abs(grid.integrate(np.conj(g)[None, :] * rows)) ** 2


def herald_shape(
    f1: TemporalShape,
    f2: TemporalShape,
    bs: BeamSplitter,
    spec: HeraldSpec,
    grid: TimeGrid,
    target: TemporalShape | None = None,
) -> HeraldResult:
    """Heralded single-photon shape for an ideal detector click at ``spec.t_dec``.

    ``success_density`` is the probability density (per unit detection time)
    of the heralding click; integrated over ``t_dec`` it gives the branch
    probability.

    Raises
    ------
    ImpossibleHeraldError
        If the click density at ``t_dec`` is at most ``1e-12``.
    """
    h, dens = _conditional(f1, f2, bs, spec.outcome, spec.t_dec, grid)
    nor = float(grid.integrate(np.abs(h[0]) ** 2))
    if dens[0] <= HERALD_THRESHOLD or nor <= 0.0:
        raise ImpossibleHeraldError(f"no detection amplitude at t_dec={spec.t_dec}")
    shape = Sampled(grid, h[0] / math.sqrt(nor))
    fid = None
    if target is not None:
        fid = float(_fidelities(shape.values[None, :], target, grid)[0])
    return HeraldResult(spec, shape=shape, success_density=float(dens[0]), fidelity=fid)


def ed_to_edsine_closed_form(gamma: float, detuning: float) -> ExpDecaySine:
    """Exact herald of two ED photons on a balanced splitter, clicked at ``t_dec = 0``.

    Photons with linewidth ``gamma`` and relative detuning ``detuning`` yield
    the ED-sine shape with frequency ``detuning / 2`` (up to a global phase
    of ``i`` that is dropped here).
    """
    if detuning == 0:
        raise ValueError("detuning must be nonzero; equal photons give no |1,1> herald")
    return ExpDecaySine(gamma, detuning / 2.0)


def window_cells(t_dec: float, width: float, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Sub-times ``t_dec + k*spacing`` and the length of each cell inside the window.

    Cell ``k`` spans ``t_k +- spacing/2``; only its part inside
    ``(t_dec - width/2, t_dec + width/2)`` counts. Widening the window never
    shrinks any cell, so total weight grows monotonically with ``width``.
    """
    half = 0.5 * width
    kmax = int(math.floor(half / spacing + 0.5))
    k = np.arange(-kmax, kmax + 1)
    lo = np.maximum(k * spacing - 0.5 * spacing, -half)
    hi = np.minimum(k * spacing + 0.5 * spacing, half)
    length = np.clip(hi - lo, 0.0, None)
    keep = length > 1e-9 * spacing  # drop slivers left by rounding at the edges
    return t_dec + k[keep] * spacing, length[keep]


def herald_windowed(
    f1: TemporalShape,
    f2: TemporalShape,
    bs: BeamSplitter,
    spec: HeraldSpec,
    grid: TimeGrid,
    target: TemporalShape | None = None,
) -> HeraldResult:
    """Heralded state for a detector window of width ``spec.resolution``.

    Returns an ensemble of ``(weight, shape)`` pairs. ``success_probability``
    is the click probability inside the window and ``fidelity`` the
    mixed-state fidelity ``sum_k p_k |<target|shape_k>|^2``.
    """
    if spec.resolution == 0.0:
        pure = herald_shape(f1, f2, bs, spec, grid, target)
        return HeraldResult(
            spec,
            ensemble=((1.0, pure.shape),),
            sub_times=np.array([spec.t_dec]),
            success_density=pure.success_density,
            success_probability=0.0,
            fidelity=pure.fidelity,
        )
    t_sub, length = window_cells(spec.t_dec, spec.resolution, grid.spacing)
    h, dens = _conditional(f1, f2, bs, spec.outcome, t_sub, grid)
    w = dens * length
    total = float(w.sum())
    if total <= HERALD_THRESHOLD:
        raise ImpossibleHeraldError(f"no detection probability inside the window around t_dec={spec.t_dec}")
    live = dens > HERALD_THRESHOLD
    nor = grid.integrate(np.abs(h[live]) ** 2)
    rows = h[live] / np.sqrt(nor)[:, None]
    p = w[live] / w[live].sum()
    ensemble = tuple((float(pk), Sampled(grid, row)) for pk, row in zip(p, rows))
    fid = None
    if target is not None:
        fid = float(np.dot(p, _fidelities(rows, target, grid)))
    return HeraldResult(spec, ensemble=ensemble, sub_times=t_sub[live], success_probability=total, fidelity=fid)


# --- optimization -----------------------------------------------------------

PARAM_NAMES = ("gamma1", "gamma2", "omega1", "omega2", "t", "tau0", "t_dec")
OMEGA_GAP = 0.05


def default_bounds(grid: TimeGrid = DEFAULT_GRID) -> dict[str, tuple[float, float]]:
    return {
        "gamma1": (0.05, 20.0),
        "gamma2": (0.05, 20.0),
        "omega1": (-20.0, 20.0),
        "omega2": (-20.0, 20.0),
        "t": (0.05, 0.95),
        "tau0": (-10.0, 10.0),
        "t_dec": (grid.t_min, grid.t_max),
    }


def edsine_pair(x: Mapping[str, float]) -> tuple[TemporalShape, TemporalShape]:
    """Two damped-sinusoid photons emitted at ``tau = 0``."""
    for key in ("omega1", "omega2"):
        if abs(x[key]) < OMEGA_GAP:
            raise ValueError(f"|{key}| below {OMEGA_GAP}")
    return ExpDecaySine(x["gamma1"], x["omega1"]), ExpDecaySine(x["gamma2"], x["omega2"])


@dataclass(frozen=True)
class ShapingProblem:
    """Maximize the fidelity of the heralded photon with a target shape.

    The target is a Gaussian of width ``target_gamma`` centred at the
    optimized delay ``tau0``, unless a fixed ``target`` is given. ``family``
    maps a parameter dict to the two input photons.

    The fidelity alone rewards clicks where the herald amplitude nearly
    vanishes, so an unconstrained optimum may come with a click density of
    order ``1e-10``. ``min_success_density`` treats such points as
    infeasible; it is off by default.
    """

    target_gamma: float = 1.0
    bounds: Mapping[str, tuple[float, float]] | None = None
    grid: TimeGrid = DEFAULT_GRID
    family: Callable[[Mapping[str, float]], tuple[TemporalShape, TemporalShape]] = edsine_pair
    target: TemporalShape | None = None
    outcome: Outcome = Outcome.OUT11
    min_success_density: float = 0.0

    def __post_init__(self):
        merged = default_bounds(self.grid)
        merged.update({k: tuple(map(float, v)) for k, v in (self.bounds or {}).items()})
        unknown = set(merged) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown parameters in bounds: {sorted(unknown)}")
        for name, (lo, hi) in merged.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bad bounds for {name}: ({lo}, {hi})")
        if not (0.0 < merged["t"][0] and merged["t"][1] < 1.0):
            raise ValueError("t must stay inside the open interval (0, 1)")
        if merged["gamma1"][0] <= 0 or merged["gamma2"][0] <= 0:
            raise ValueError("linewidth bounds must be positive")
        if not self.min_success_density >= 0.0:
            raise ValueError("min_success_density must be >= 0")
        object.__setattr__(self, "bounds", merged)
        object.__setattr__(self, "outcome", Outcome.parse(self.outcome))

    def as_dict(self, x) -> dict[str, float]:
        if isinstance(x, Mapping):
            return {k: float(x[k]) for k in PARAM_NAMES}
        return dict(zip(PARAM_NAMES, map(float, x)))

    def target_for(self, x: Mapping[str, float]) -> TemporalShape:
        if self.target is not None:
            return self.target
        return Gaussian(self.target_gamma, x["tau0"])

    def evaluate(self, x) -> HeraldResult:
        x = self.as_dict(x)
        f1, f2 = self.family(x)
        spec = HeraldSpec(self.outcome, x["t_dec"])
        return herald_shape(f1, f2, BeamSplitter(x["t"]), spec, self.grid, self.target_for(x))

    def fidelity(self, x) -> float:
        return self.evaluate(x).fidelity


@dataclass(frozen=True, eq=False)
class ShapingResult:
    x_best: dict[str, float]
    fidelity: float
    evaluations: int
    herald: HeraldResult
    restart_fidelities: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "x_best": dict(self.x_best),
            "fidelity": self.fidelity,
            "evaluations": self.evaluations,
            "success_density": self.herald.success_density,
        }


def _unit_map(bounds: Mapping[str, tuple[float, float]]) -> Callable[[np.ndarray], np.ndarray]:
    """Map the unit cube onto the parameter box.

    Positive ranges spanning more than a decade are searched on a log scale.
    Ranges straddling zero for the frequencies use a signed log scale that
    skips the excluded ``(-OMEGA_GAP, OMEGA_GAP)`` gap; everything else is
    linear.
    """
    maps = []
    for name in PARAM_NAMES:
        lo, hi = bounds[name]
        if name.startswith("omega") and lo < -OMEGA_GAP and hi > OMEGA_GAP:
            a, b = math.log(OMEGA_GAP), math.log(max(-lo, hi))
            neg = (math.log(-lo) - a) / ((math.log(-lo) - a) + (math.log(hi) - a))

            def m(u, a=a, lo=lo, hi=hi, neg=neg):
                if u < neg:
                    return -math.exp(a + (1 - u / neg) * (math.log(-lo) - a))
                return math.exp(a + (u - neg) / (1 - neg) * (math.log(hi) - a))

        elif lo > 0 and hi / lo > 10:

            def m(u, a=math.log(lo), b=math.log(hi)):
                return math.exp(a + u * (b - a))

        else:

            def m(u, lo=lo, hi=hi):
                return lo + u * (hi - lo)

        maps.append(m)

    def to_x(u):
        u = np.clip(u, 0.0, 1.0)
        return np.array([m(float(v)) for m, v in zip(maps, u)])

    return to_x


def _simplex(u0: np.ndarray, step: float) -> np.ndarray:
    """Axis-aligned simplex in the unit cube, stepping inward from ``u0``."""
    pts = [u0]
    for i in range(len(u0)):
        v = u0.copy()
        v[i] += step if u0[i] + step <= 1.0 else -step
        pts.append(v)
    return np.array(pts)


def optimize_shaping(
    problem: ShapingProblem,
    budget: int = 5000,
    restarts: int = 8,
    seed: int = 0,
    screen: int = 16,
    step: float = 0.2,
) -> ShapingResult:
    """Bounded Nelder-Mead with quasi-random restarts.

    The search runs in coordinates rescaled to the unit cube (see
    :func:`_unit_map`). ``restarts * screen`` scrambled Sobol points are
    scored and the best ``restarts`` of them seed independent simplex runs.
    The remaining budget is spent by successive halving: each round splits an
    equal share among the surviving runs, then the better half goes on. A run
    that converges inside its allowance restarts with a halved simplex at its
    incumbent.

    Infeasible points (impossible herald, shapes the grid cannot hold,
    frequency inside the excluded gap) score zero fidelity. Results are fully
    determined by ``seed``; ties go to the lower restart index.

    Raises
    ------
    NoFeasibleStartError
        If no screened point yields a possible herald.
    """
    if restarts < 1 or budget < 2 * restarts:
        raise ValueError("need restarts >= 1 and budget >= 2 * restarts")
    to_x = _unit_map(problem.bounds)
    unit = [(0.0, 1.0)] * len(PARAM_NAMES)
    evals = 0

    def objective(u):
        nonlocal evals
        evals += 1
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", CoverageWarning)
                r = problem.evaluate(to_x(u))
        except (ImpossibleHeraldError, CoverageError, ValueError):
            return 0.0
        if r.success_density < problem.min_success_density:
            return 0.0
        return -r.fidelity

    n_screen = min(restarts * max(screen, 1), budget // 2)
    starts = qmc.Sobol(len(PARAM_NAMES), scramble=True, seed=seed).random(n_screen)
    scores = np.array([objective(u) for u in starts])
    if not np.any(scores < 0.0):
        raise NoFeasibleStartError(f"none of {n_screen} screened start points gives a possible herald")
    order = np.argsort(scores, kind="stable")[:restarts]
    runs = [{"index": k, "u": starts[i], "f": -scores[i], "h": step, "done": False} for k, i in enumerate(order)]

    def advance(run, allowance):
        used = 0
        while used < allowance and not run["done"]:
            before = evals
            res = minimize(
                objective,
                run["u"],
                method="Nelder-Mead",
                bounds=unit,
                options={
                    "maxfev": allowance - used,
                    "initial_simplex": _simplex(run["u"], run["h"]),
                    "xatol": 1e-10,
                    "fatol": 1e-13,
                    "adaptive": True,
                },
            )
            used += evals - before
            if -res.fun > run["f"] + 1e-12:
                run["u"], run["f"] = np.clip(res.x, 0.0, 1.0), -float(res.fun)
            elif run["h"] < 1e-6:
                run["done"] = True
            if res.status != 1:  # converged before the allowance ran out
                run["h"] *= 0.5

    alive = list(runs)
    rounds = math.ceil(math.log2(restarts)) + 1
    for rnd in range(rounds):
        share = (budget - evals) // (rounds - rnd)
        for run in alive:
            advance(run, max(share // len(alive), 1))
        alive.sort(key=lambda r: (-r["f"], r["index"]))
        alive = alive[: max(1, len(alive) // 2)]

    best = max(runs, key=lambda r: (r["f"], -r["index"]))
    x_best = problem.as_dict(to_x(best["u"]))
    herald = problem.evaluate(x_best)
    return ShapingResult(x_best, float(herald.fidelity), evals, herald, tuple(r["f"] for r in runs))


def problem_from_dict(d: Mapping) -> tuple[ShapingProblem, dict]:
    """Parse ``{"target": shape-spec, "bounds": {...}, "seed": int, "budget": int}``.

    A Gaussian target whose delay appears in ``bounds`` (or is omitted from the
    target) has that delay optimized; any other target is held fixed. Returns
    the problem and the optimizer settings found in ``d``.
    """
    if not isinstance(d.get("bounds"), Mapping) or not d["bounds"]:
        raise ValueError("problem needs a non-empty 'bounds' object")
    grid = TimeGrid.from_dict(d["grid"]) if "grid" in d else DEFAULT_GRID
    tgt = dict(d.get("target") or {"kind": "gaussian", "gamma": 1.0})
    fixed = None
    if tgt.get("kind") != "gaussian" or ("tau0" in tgt and "tau0" not in d["bounds"]):
        fixed = shape_from_dict(tgt)
    problem = ShapingProblem(
        target_gamma=float(tgt.get("gamma", 1.0)),
        bounds={k: tuple(v) for k, v in d["bounds"].items()},
        grid=grid,
        target=fixed,
        outcome=d.get("outcome", "11"),
        min_success_density=float(d.get("min_success_density", 0.0)),
    )
    settings = {k: int(d[k]) for k in ("seed", "budget", "restarts") if k in d}
    return problem, settings

"""Search temporal-mode shapes that minimize the Duan sum for given EPR
spectra, against the analytic quadrature oracle (noiseless objective, so
golden-section search is valid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

from .modes import TemporalMode
from .spectra import EprSpectra, duan_sum, filtered_variance

__all__ = [
    "ModeFamily",
    "OptResult",
    "NonUnimodalError",
    "mode_duan",
    "make_mode",
    "brute_force",
    "optimize",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_REL_TOL_LOG = math.log(1.001)  # parameter interval < 1e-3 relative
_FAMILY_PARAMS = {
    "square": ("duration",),
    "one_sided_exp": ("rate", "support"),
    "double_exp": ("rate", "support"),
}


class NonUnimodalError(RuntimeError):
    """Objective not unimodal over the bounds; carries the evaluation trace."""

    def __init__(self, message: str, trace):
        super().__init__(message)
        self.trace = list(trace)


@dataclass(frozen=True)
class ModeFamily:
    """A parametric mode family with per-parameter search bounds.

    square takes a duration bound; the exponential families take decay
    rate (1/s) and support (s) bounds.
    """

    kind: str
    param_bounds: Dict[str, Tuple[float, float]]

    def __post_init__(self):
        names = _FAMILY_PARAMS.get(self.kind)
        if names is None:
            raise ValueError(f"unknown mode family {self.kind!r}")
        if tuple(self.param_bounds) != names:
            raise ValueError(
                f"{self.kind} family requires bounds for {names}, got "
                f"{tuple(self.param_bounds)}")
        for name, (lo, hi) in self.param_bounds.items():
            if not (0.0 < lo < hi and math.isfinite(hi)):
                raise ValueError(
                    f"bounds for {name} must be finite, positive and ordered; "
                    f"got ({lo}, {hi})")

    @property
    def param_names(self) -> Tuple[str, ...]:
        return _FAMILY_PARAMS[self.kind]


@dataclass(frozen=True)
class OptResult:
    best_mode: TemporalMode
    best_duan: float
    trace: List[Tuple[Dict[str, float], float]]
    oracle: str = "analytic-quadrature"
    converged: bool = True


def make_mode(kind: str, params: Dict[str, float]) -> TemporalMode:
    if kind == "square":
        return TemporalMode.square(params["duration"])
    if kind == "one_sided_exp":
        return TemporalMode.one_sided_exp(params["rate"], params["support"])
    if kind == "double_exp":
        return TemporalMode.double_exp(params["rate"], params["support"])
    raise ValueError(f"unknown mode family {kind!r}")


def mode_duan(spectra: EprSpectra, mode: TemporalMode) -> float:
    """Duan sum of the mode-filtered EPR variances (analytic path)."""
    return duan_sum(filtered_variance(spectra.diff_x, mode),
                    filtered_variance(spectra.sum_p, mode))


def _log_grid(lo: float, hi: float, n: int) -> List[float]:
    la, lb = math.log(lo), math.log(hi)
    grid = [math.exp(la + (lb - la) * i / (n - 1)) for i in range(n)]
    grid[0], grid[-1] = lo, hi  # exp/log round trip must not leave the bounds
    return grid


def brute_force(spectra: EprSpectra, family: ModeFamily,
                n_points: int = 200) -> List[Tuple[Dict[str, float], float]]:
    """Exhaustive log-grid reference: n_points for one parameter, an
    approximately n_points (m x m) grid for two."""
    names = family.param_names
    if len(names) == 1:
        lo, hi = family.param_bounds[names[0]]
        grid = [{names[0]: v} for v in _log_grid(lo, hi, n_points)]
    else:
        m = max(2, int(math.sqrt(n_points)))
        g0 = _log_grid(*family.param_bounds[names[0]], m)
        g1 = _log_grid(*family.param_bounds[names[1]], m)
        grid = [{names[0]: a, names[1]: b} for a in g0 for b in g1]
    return [(p, mode_duan(spectra, make_mode(family.kind, p))) for p in grid]


class _BudgetExhausted(Exception):
    pass


class _Objective:
    """Caching, budget-counted objective over named parameters."""

    def __init__(self, spectra, family, budget):
        self.spectra = spectra
        self.family = family
        self.budget = budget
        self.cache: Dict[Tuple[float, ...], float] = {}
        self.trace: List[Tuple[Dict[str, float], float]] = []

    def __call__(self, params: Dict[str, float]) -> float:
        key = tuple(params[n] for n in self.family.param_names)
        if key in self.cache:
            return self.cache[key]
        if len(self.cache) >= self.budget:
            raise _BudgetExhausted
        val = mode_duan(self.spectra, make_mode(self.family.kind, dict(params)))
        self.cache[key] = val
        self.trace.append((dict(params), val))
        return val

    def best(self) -> Tuple[Dict[str, float], float]:
        params, val = min(self.trace, key=lambda pv: pv[1])
        return dict(params), val


def _count_interior_minima(values: List[float]) -> int:
    eps = 1e-12
    return sum(
        1 for i in range(1, len(values) - 1)
        if values[i] < values[i - 1] - eps and values[i] < values[i + 1] - eps)


def _prescan(obj: _Objective, fixed: Dict[str, float], name: str,
             n_scan: int) -> Tuple[float, float, float]:
    """Coarse log grid along one axis: returns (bracket_lo, bracket_hi,
    best grid value) and rejects multi-minimum slices."""
    lo, hi = obj.family.param_bounds[name]
    grid = _log_grid(lo, hi, n_scan)
    vals = []
    for v in grid:
        p = dict(fixed)
        p[name] = v
        vals.append(obj(p))
    if _count_interior_minima(vals) > 1:
        raise NonUnimodalError(
            f"objective along {name} shows multiple local minima over "
            f"[{lo:g}, {hi:g}]; refusing golden-section refinement", obj.trace)
    i = min(range(n_scan), key=lambda j: vals[j])
    return grid[max(i - 1, 0)], grid[min(i + 1, n_scan - 1)], grid[i]


def _gss_log(obj: _Objective, fixed: Dict[str, float], name: str,
             lo: float, hi: float) -> float:
    """Golden-section on log(param) within [lo, hi]; returns the best
    evaluated parameter value. Raises _BudgetExhausted when out of budget."""

    def ex(x):
        return min(max(math.exp(x), lo), hi)

    def f(x):
        p = dict(fixed)
        p[name] = ex(x)
        return obj(p)

    a, b = math.log(lo), math.log(hi)
    candidates = [(f(a), a), (f(b), b)]  # cache hits when prescan visited them
    h = b - a
    if h > _REL_TOL_LOG:
        c = b - _INV_PHI * h
        d = a + _INV_PHI * h
        fc, fd = f(c), f(d)
        candidates += [(fc, c), (fd, d)]
        while h > _REL_TOL_LOG:
            if fc < fd:
                b, d, fd = d, c, fc
                h = b - a
                c = b - _INV_PHI * h
                fc = f(c)
                candidates.append((fc, c))
            else:
                a, c, fc = c, d, fd
                h = b - a
                d = a + _INV_PHI * h
                fd = f(d)
                candidates.append((fd, d))
    return ex(min(candidates)[1])


def optimize(spectra: EprSpectra, family: ModeFamily,
             budget: int = 160) -> OptResult:
    """Minimize the Duan sum over the family within an evaluation budget.

    A coarse log-grid prescan detects non-unimodal objectives (raising
    NonUnimodalError with the trace) and brackets a golden-section search;
    two-parameter families run coordinate descent, re-bracketing each axis
    every pass so the optimum may migrate as the other parameter moves.
    Convergence means no parameter moved by more than 1e-3 relative over a
    full cycle; if the budget runs out first the best evaluation so far is
    returned with converged=False.
    """
    if budget < 16:
        raise ValueError(f"budget must be at least 16 evaluations, got {budget}")
    obj = _Objective(spectra, family, budget)
    names = family.param_names
    converged = False
    try:
        if len(names) == 1:
            lo, hi, _ = _prescan(obj, {}, names[0], n_scan=9)
            _gss_log(obj, {}, names[0], lo, hi)
            converged = True
        else:
            current = {n: math.sqrt(family.param_bounds[n][0] *
                                    family.param_bounds[n][1]) for n in names}
            for _ in range(8):
                start = dict(current)
                for n in names:
                    fixed = {m: current[m] for m in names if m != n}
                    lo, hi, _ = _prescan(obj, fixed, n, n_scan=7)
                    current[n] = _gss_log(obj, fixed, n, lo, hi)
                if all(abs(math.log(current[n] / start[n])) <= _REL_TOL_LOG
                       for n in names):
                    converged = True
                    break
    except _BudgetExhausted:
        converged = False
    if not obj.trace:
        raise ValueError("optimization budget exhausted before any evaluation")
    best_params, best_val = obj.best()
    return OptResult(best_mode=make_mode(family.kind, best_params),
                     best_duan=best_val, trace=obj.trace, converged=converged)

"""Fixed points, periodic orbits, and basins of the scalar maps.

Fixed points are located by bisection on the strictly decreasing auxiliary
function h(x) = sum_z q_z sum_{j<z} (1-(k-1)x)^{z-1-j} (1-kx)^j - 1, whose
unique zero on (0, 1/k] is the fixed point of f.  Orbit search is a sign scan
of f^p(x) - x on a fine grid followed by bisection, excluding roots that
coincide with lower-period points.  Basin classification iterates f^2 and
watches which candidate the even-index subsequence settles on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .dynamics import DynamicsError, ScalarMapSpec, scalar_deriv, scalar_eval, zary_map
from .offspring import OffspringDistribution

BISECT_ITERS = 200
CLASSIFY_DEADZONE = 1e-9
ORBIT_GRID_CELLS = 10_000
ORBIT_EXCLUSION = 1e-8


class AnalysisError(RuntimeError):
    """Internal failure of a root bracket that valid specs cannot trigger."""


@dataclass(frozen=True)
class FixedPointReport:
    x_bar: float
    multiplier: float
    classification: str  # attracting | repelling | indeterminate
    residual: float
    lower_bound: float | None = None
    upper_bound: float | None = None

    def to_json_obj(self) -> dict:
        return {
            "x_bar": self.x_bar,
            "multiplier": self.multiplier,
            "classification": self.classification,
            "residual": self.residual,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
        }


@dataclass(frozen=True)
class CriticalPointReport:
    x_hat: float
    f_at_x_hat: float
    x_star: float | None  # inflection point; undefined for z=2

    def to_json_obj(self) -> dict:
        return {"x_hat": self.x_hat, "f_at_x_hat": self.f_at_x_hat, "x_star": self.x_star}


@dataclass(frozen=True)
class OrbitReport:
    period: int
    points: tuple[float, ...]  # ascending
    multiplier: float
    stable: bool

    def to_json_obj(self) -> dict:
        return {
            "period": self.period,
            "points": list(self.points),
            "multiplier": self.multiplier,
            "stable": self.stable,
        }


@dataclass
class BasinReport:
    starts: list[float]
    verdicts: list[str]  # orbit_left | orbit_right | fixed_point | unresolved
    iterations: list[int]
    fractions: dict[str, float] = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {"fractions": self.fractions, "n_starts": len(self.starts)}

    def to_csv(self) -> str:
        lines = ["start,verdict,iterations"]
        for s, v, n in zip(self.starts, self.verdicts, self.iterations):
            lines.append(f"{s:.17g},{v},{n}")
        return "\n".join(lines) + "\n"


def _h(dist: OffspringDistribution, k: int, x: float) -> float:
    a = 1.0 - (k - 1) * x
    b = 1.0 - k * x
    total = 0.0
    for z, q in dist.support:
        s = 0.0
        for j in range(z):
            s += a ** (z - 1 - j) * b**j
        total += q * s
    return total - 1.0


def _bisect(g, lo: float, hi: float, iters: int = BISECT_ITERS) -> float:
    glo = g(lo)
    ghi = g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if (glo > 0) == (ghi > 0):
        raise AnalysisError(f"no sign change on [{lo}, {hi}]")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (g(mid) > 0) == (glo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _classify(multiplier: float) -> str:
    if abs(multiplier) < 1.0 - CLASSIFY_DEADZONE:
        return "attracting"
    if abs(multiplier) > 1.0 + CLASSIFY_DEADZONE:
        return "repelling"
    return "indeterminate"


def find_fixed_point(spec: ScalarMapSpec) -> FixedPointReport:
    """Unique fixed point of f on (0, 1/k], by bisection on the monotone h."""
    if spec.variant_alpha is not None:
        raise DynamicsError("fixed-point search applies to the standard map only")
    dist, k = spec.dist, spec.k
    hi = 1.0 / k
    h_hi = _h(dist, k, hi)
    if h_hi >= 0.0:
        # h(1/k) = sum q_z k^{-(z-1)} - 1, which is 0 exactly when k = 1
        x_bar = hi
    else:
        x_bar = _bisect(lambda x: _h(dist, k, x), 1e-300, hi)
    mult = scalar_deriv(spec, x_bar, 1)
    lower = upper = None
    if spec.is_zary and k >= 2:
        lower, upper = framing_bounds(dist.z_value, k)
    return FixedPointReport(
        x_bar=x_bar,
        multiplier=mult,
        classification=_classify(mult),
        residual=abs(scalar_eval(spec, x_bar) - x_bar),
        lower_bound=lower,
        upper_bound=upper,
    )


def framing_bounds(z: int, k: int) -> tuple[float, float]:
    """Closed-form bracket (x_tilde_{z,k}, x_tilde_{z,k-1}) around the z-ary fixed point."""
    if z < 2 or k < 2:
        raise DynamicsError(f"framing bounds need z >= 2 and k >= 2, got ({z}, {k})")
    return (x_tilde(z, k), x_tilde(z, k - 1))


def x_tilde(z: int, k: int) -> float:
    """(1/k)(1 - z^(-1/(z-1))), the value where z(1-kx)^(z-1) = 1."""
    return (1.0 - z ** (-1.0 / (z - 1))) / k


def critical_points(z: int, k: int) -> CriticalPointReport:
    """Closed-form maximum x_hat and (for z >= 3) inflection point x_star of f_{z,k}."""
    if z < 2 or k < 1:
        raise DynamicsError(f"need z >= 2 and k >= 1, got ({z}, {k})")
    e1 = 1.0 / (z - 1)
    x_hat = (k**e1 - (k - 1) ** e1) / (k ** (z * e1) - (k - 1) ** (z * e1))
    x_star = None
    if z >= 3:
        e2 = 2.0 / (z - 2)
        x_star = (k**e2 - (k - 1) ** e2) / (k ** (z * e2 / 2) - (k - 1) ** (z * e2 / 2))
    spec = zary_map(z, k)
    return CriticalPointReport(x_hat=x_hat, f_at_x_hat=scalar_eval(spec, x_hat), x_star=x_star)


def classify_uniform(z: int, k: int) -> FixedPointReport:
    """Fixed point of f_{z,k} with its stability verdict."""
    return find_fixed_point(zary_map(z, k))


def asymptotic_multiplier(z: int) -> float:
    """Limit of f'_{z,k} at the fixed point as k -> infinity."""
    if z < 2:
        raise DynamicsError(f"need z >= 2, got {z}")
    a = z ** (1.0 / (z - 1))
    return 1.0 - (z - 1) * a * (1.0 - 1.0 / a)


def nonuniform_spectrum(z: int, k: int, i: int) -> list[float]:
    """Eigenvalues of the linearised truncated recursion at the i-dominant fixed point.

    The first value is the scalar multiplier of f_{z,i}; the second, repeated
    k-i times, governs the decay of the minor diseases.
    """
    if not 1 <= i <= k:
        raise DynamicsError(f"dominant count {i} outside [1, {k}]")
    x_bar = classify_uniform(z, i).x_bar
    lam1 = -z * (i - 1) * (1 - (i - 1) * x_bar) ** (z - 1) + z * i * (1 - i * x_bar) ** (z - 1)
    lam2 = z * (1 - i * x_bar) ** (z - 1)
    return [lam1] + [lam2] * (k - i)


def _x_hat_right(spec: ScalarMapSpec, x_hat: float) -> float:
    """sup{x : f(x) = x_hat}; equals 1/k when f(1/k) >= x_hat."""
    hi = 1.0 / spec.k
    if scalar_eval(spec, hi) >= x_hat:
        return hi
    # f is decreasing right of x_hat, so f(x) - x_hat changes sign once there
    return _bisect(lambda x: scalar_eval(spec, x) - x_hat, x_hat, hi)


def _iter_map(spec: ScalarMapSpec, x: float, times: int) -> float:
    for _ in range(times):
        x = scalar_eval(spec, x)
    return x


def _grid_roots(g, lo: float, hi: float, cells: int) -> list[float]:
    roots = []
    prev_x = lo
    prev_v = g(lo)
    for c in range(1, cells + 1):
        x = lo + (hi - lo) * c / cells
        v = g(x)
        if v == 0.0:
            roots.append(x)
        elif (v > 0) != (prev_v > 0):
            roots.append(_bisect(g, prev_x, x))
        prev_x, prev_v = x, v
    return roots


def find_orbit(spec: ScalarMapSpec, period: int, cells: int = ORBIT_GRID_CELLS) -> OrbitReport | None:
    """Locate a period-2 or period-4 orbit of the scalar map, or None if absent.

    Period 2 is searched on (x_hat, x_hat_r), where all fixed points of f^2
    live; period 4 falls outside that bracket in the observed cases, so the
    scan covers the whole domain, excluding period-1 and period-2 points.
    """
    if period not in (2, 4):
        raise DynamicsError(f"orbit period must be 2 or 4, got {period}")
    if not spec.is_zary:
        raise DynamicsError("orbit search is implemented for z-ary maps")
    z, k = spec.dist.z_value, spec.k
    x_bar = find_fixed_point(spec).x_bar
    exclude = [x_bar]

    if period == 2:
        x_hat = critical_points(z, k).x_hat
        lo, hi = x_hat, _x_hat_right(spec, x_hat)
    else:
        lo, hi = 1e-12, 1.0 / k
        # fixed points of f^2 (including any 2-cycle) are excluded from the f^4 scan
        exclude += _grid_roots(lambda x: _iter_map(spec, x, 2) - x, lo, hi, cells)

    roots = _grid_roots(lambda x: _iter_map(spec, x, period) - x, lo, hi, cells)
    candidates = [r for r in roots if all(abs(r - e) > ORBIT_EXCLUSION for e in exclude)]
    if not candidates:
        return None

    # group candidates into cycles and prefer a stable one
    remaining = sorted(candidates)
    cycles = []
    while remaining:
        y = remaining[0]
        cycle = [y]
        for _ in range(period - 1):
            cycle.append(scalar_eval(spec, cycle[-1]))
        remaining = [r for r in remaining if all(abs(r - c) > ORBIT_EXCLUSION for c in cycle)]
        mult = 1.0
        for c in cycle:
            mult *= scalar_deriv(spec, c, 1)
        cycles.append(OrbitReport(period, tuple(sorted(cycle)), mult, abs(mult) < 1.0))
    stable = [c for c in cycles if c.stable]
    return stable[0] if stable else cycles[0]


def check_orbit_conditions(z: int, i: int) -> tuple[bool, bool, bool]:
    """The three numeric conditions under which the period-2 attracting-orbit result applies.

    (1) the fixed point is repelling, f'(x_bar) < -1;
    (2) the second iterate of the maximum stays above it, f(f(x_hat)) > x_hat;
    (3) the right endpoint maps below the maximum, f(1/i) < x_hat.
    """
    spec = zary_map(z, i)
    x_bar = find_fixed_point(spec).x_bar
    x_hat = critical_points(z, i).x_hat
    cond1 = scalar_deriv(spec, x_bar, 1) < -1.0
    cond2 = _iter_map(spec, x_hat, 2) > x_hat
    cond3 = scalar_eval(spec, 1.0 / i) < x_hat
    return (cond1, cond2, cond3)


BASIN_BALL = 1e-8
BASIN_CONFIRM_STEPS = 10


def basin_classify(
    spec: ScalarMapSpec,
    starts,
    max_iters: int = 100_000,
    tol: float = BASIN_BALL,
    orbit: OrbitReport | None = None,
) -> BasinReport:
    """Classify starts by the limit of the even-index subsequence of iterates.

    Membership requires staying within tol of a candidate (orbit point or the
    fixed point) for BASIN_CONFIRM_STEPS consecutive even steps, which guards
    against slow transit past the repelling fixed point.
    """
    if orbit is None:
        orbit = find_orbit(spec, 2)
    if orbit is None:
        raise DynamicsError("basin classification needs a period-2 orbit; none found")
    x_left, x_right = orbit.points[0], orbit.points[-1]
    x_bar = find_fixed_point(spec).x_bar
    candidates = [(x_left, "orbit_left"), (x_right, "orbit_right"), (x_bar, "fixed_point")]

    starts = [float(s) for s in starts]
    verdicts, iters = [], []
    for x0 in starts:
        x = x0
        verdict = "unresolved"
        streak_label = None
        streak = 0
        n = 0
        while n < max_iters:
            label = None
            for cand, name in candidates:
                if abs(x - cand) < tol:
                    label = name
                    break
            if label is not None and label == streak_label:
                streak += 1
                if streak >= BASIN_CONFIRM_STEPS:
                    verdict = label
                    break
            else:
                streak_label = label
                streak = 1 if label is not None else 0
            x = _iter_map(spec, x, 2)
            n += 1
        verdicts.append(verdict)
        iters.append(n)

    fractions = {}
    for v in ("orbit_left", "orbit_right", "fixed_point", "unresolved"):
        fractions[v] = verdicts.count(v) / len(starts) if starts else 0.0
    return BasinReport(starts, verdicts, iters, fractions)


def analysis_bundle(spec: ScalarMapSpec, i: int | None = None) -> dict:
    """One JSON-ready report combining every analysis product for a spec."""
    report = {"fixed_point": find_fixed_point(spec).to_json_obj()}
    if spec.is_zary:
        z, k = spec.dist.z_value, spec.k
        if k >= 2:
            lo, hi = framing_bounds(z, k)
            report["framing_bounds"] = {"lower": lo, "upper": hi}
        report["critical_points"] = critical_points(z, k).to_json_obj()
        report["asymptotic_multiplier"] = asymptotic_multiplier(z)
        if z >= 3:
            c1, c2, c3 = check_orbit_conditions(z, i if i is not None else k)
            report["orbit_conditions"] = [c1, c2, c3]
        if i is not None:
            report["nonuniform_spectrum"] = nonuniform_spectrum(z, k, i)
    return report

"""Root-distribution recursion and the scalar maps it reduces to.

The state of the root of a height-n tree has distribution p(n) = F^n(p) where

    F_i(p) = G(p_sane + p_i) - G(p_sane)        for disease coordinates,
    F_sane = 1 - sum of the others.

In the uniform case (all k disease masses equal to x) this collapses to the
scalar map f(x) = G(1-(k-1)x) - G(1-kx) on (0, 1/k].  The retention variant
replaces the disease coordinate update by a three-term formula parametrised by
alpha in (0,1], with alpha=1 recovering the standard rule exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .offspring import OffspringDistribution, pgf, pgf_deriv

PROB_TOL = 1e-12
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 100_000


class DynamicsError(ValueError):
    """Invalid profile, map parameter, or evaluation outside the domain."""


@dataclass(frozen=True)
class DiseaseProfile:
    """Point of the simplex: k disease masses (non-increasing) plus the sane mass."""

    masses: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.masses) - 1

    @property
    def sane(self) -> float:
        return self.masses[-1]

    @property
    def dominant_count(self) -> int:
        """Number of leading disease masses exactly equal to the largest."""
        i = 1
        while i < self.k and self.masses[i] == self.masses[0]:
            i += 1
        return i


def make_profile(masses, strict: bool = True) -> DiseaseProfile:
    """Validate a profile vector (p_1..p_k, p_sane).

    strict=True enforces the user-facing contract: every entry positive.
    strict=False admits boundary points with zero disease mass, which show up
    as embeddings of lower-dimensional dynamics and along trajectories.
    """
    masses = tuple(float(m) for m in masses)
    if len(masses) < 2:
        raise DynamicsError("profile needs at least one disease mass and the sane mass")
    lo = 0.0 if strict else -PROB_TOL
    for m in masses:
        if (strict and m <= lo) or (not strict and m < lo):
            raise DynamicsError(f"profile entry {m!r} violates positivity")
    total = sum(masses)
    if abs(total - 1.0) > PROB_TOL:
        raise DynamicsError(f"profile sums to {total!r}, not 1 within {PROB_TOL}")
    for a, b in zip(masses[:-2], masses[1:-1]):
        if b > a:
            raise DynamicsError("disease masses must be non-increasing (canonical ordering)")
    return DiseaseProfile(masses)


def uniform_profile(k: int) -> DiseaseProfile:
    """All k+1 coordinates equal."""
    if k < 1:
        raise DynamicsError(f"need k >= 1 diseases, got {k}")
    return make_profile([1.0 / (k + 1)] * (k + 1))


def dominant_profile(k: int, i: int) -> DiseaseProfile:
    """Profile with i strictly dominant diseases, k-i smaller ones, sane mass 0.2."""
    if not 1 <= i <= k:
        raise DynamicsError(f"dominant count {i} outside [1, {k}]")
    lead = 0.8 / (i + 0.5 * (k - i))
    masses = [lead] * i + [lead / 2] * (k - i) + [0.2]
    masses[-1] = 1.0 - sum(masses[:-1])
    return make_profile(masses)


@dataclass(frozen=True)
class ScalarMapSpec:
    """The scalar map f_k (general law) or f_{z,k} (z-ary), optionally the variant."""

    dist: OffspringDistribution
    k: int
    variant_alpha: float | None = None

    def __post_init__(self):
        if self.k < 1:
            raise DynamicsError(f"need k >= 1, got {self.k}")
        if self.variant_alpha is not None and not 0.0 < self.variant_alpha <= 1.0:
            raise DynamicsError(f"alpha {self.variant_alpha!r} outside (0,1]")

    @property
    def is_zary(self) -> bool:
        return self.dist.is_deterministic


def zary_map(z: int, k: int) -> ScalarMapSpec:
    from .offspring import zary

    return ScalarMapSpec(zary(z), k)


def _check_x(x: float, k: int) -> float:
    if x < -PROB_TOL or x > 1.0 / k + PROB_TOL:
        raise DynamicsError(f"x={x!r} outside the map domain (0, 1/{k}]")
    return min(max(x, 0.0), 1.0 / k)


def scalar_eval(spec: ScalarMapSpec, x: float) -> float:
    """f(x) on (0, 1/k]; x=0 is accepted and maps to 0."""
    x = _check_x(x, spec.k)
    k, dist, alpha = spec.k, spec.dist, spec.variant_alpha
    if alpha is None:
        return pgf(dist, 1 - (k - 1) * x) - pgf(dist, 1 - k * x)
    return (
        pgf(dist, 1 - (k - 1) * x)
        - pgf(dist, 1 - (k - 1) * x - alpha * x)
        + pgf(dist, (1 - alpha) * x)
    )


def scalar_deriv(spec: ScalarMapSpec, x: float, order: int = 1) -> float:
    """Analytic derivative of f at x, order 1 or 2."""
    x = _check_x(x, spec.k)
    k, dist, alpha = spec.k, spec.dist, spec.variant_alpha
    if order not in (1, 2):
        raise DynamicsError(f"derivative order must be 1 or 2, got {order}")
    if alpha is None:
        sgn = 1.0 if order == 1 else -1.0
        return sgn * (
            k**order * pgf_deriv(dist, 1 - k * x, order)
            - (k - 1) ** order * pgf_deriv(dist, 1 - (k - 1) * x, order)
        )
    a = k - 1 + alpha
    sgn = -1.0 if order == 1 else 1.0
    return (
        sgn * (k - 1) ** order * pgf_deriv(dist, 1 - (k - 1) * x, order)
        - sgn * a**order * pgf_deriv(dist, 1 - a * x, order)
        + (1 - alpha) ** order * pgf_deriv(dist, (1 - alpha) * x, order)
    )


def _check_vector(p, context: str) -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise DynamicsError(f"{context}: expected a flat vector of length k+1")
    if np.any(v < -PROB_TOL):
        raise DynamicsError(f"{context}: negative mass in {v.tolist()}")
    if abs(v.sum() - 1.0) > PROB_TOL:
        raise DynamicsError(f"{context}: masses sum to {v.sum()!r}, not 1")
    return v


def step_full(dist: OffspringDistribution, p) -> np.ndarray:
    """One step of the exact recursion: p_i -> G(p_sane + p_i) - G(p_sane)."""
    v = _check_vector(p, "step_full")
    sane = v[-1]
    g_sane = pgf(dist, sane)
    out = np.empty_like(v)
    for i in range(v.size - 1):
        out[i] = pgf(dist, min(sane + v[i], 1.0)) - g_sane
    out[-1] = 1.0 - out[:-1].sum()
    return out


def step_variant(dist: OffspringDistribution, p, alpha: float) -> np.ndarray:
    """One step of the retention-variant recursion with shared alpha in (0,1]."""
    if not 0.0 < alpha <= 1.0:
        raise DynamicsError(f"alpha {alpha!r} outside (0,1]")
    v = _check_vector(p, "step_variant")
    sane = v[-1]
    out = np.empty_like(v)
    for i in range(v.size - 1):
        out[i] = (
            pgf(dist, min(sane + v[i], 1.0))
            - pgf(dist, sane + v[i] * (1 - alpha))
            + pgf(dist, (1 - alpha) * v[i])
        )
    out[-1] = 1.0 - out[:-1].sum()
    return out


@dataclass
class Trajectory:
    """Iterates of a stepper, with the reason iteration stopped."""

    states: list
    stop_reason: str  # converged | period2 | max_iters
    iterations: int
    tol: float = DEFAULT_TOL

    @property
    def final(self):
        return self.states[-1]


def full_stepper(dist: OffspringDistribution):
    return lambda p: step_full(dist, p)


def variant_stepper(dist: OffspringDistribution, alpha: float):
    return lambda p: step_variant(dist, p, alpha)


def scalar_stepper(spec: ScalarMapSpec):
    return lambda x: scalar_eval(spec, x)


def _dist_inf(a, b) -> float:
    if np.isscalar(a) or isinstance(a, float):
        return abs(a - b)
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def iterate(step, start, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> Trajectory:
    """Iterate a stepper until successive states settle.

    Stops with 'converged' when the sup distance of consecutive states drops
    below tol, with 'period2' when states two apart agree below tol while
    consecutive ones do not, and with 'max_iters' otherwise.  Longer periods
    are deliberately not detected here; use analysis.find_orbit.
    """
    if isinstance(start, DiseaseProfile):
        start = np.asarray(start.masses)
    states = [start]
    for n in range(max_iters):
        nxt = step(states[-1])
        states.append(nxt)
        if _dist_inf(nxt, states[-2]) < tol:
            return Trajectory(states, "converged", n + 1, tol)
        if len(states) >= 3 and _dist_inf(nxt, states[-3]) < tol:
            return Trajectory(states, "period2", n + 1, tol)
    return Trajectory(states, "max_iters", max_iters, tol)


def trajectory_to_csv(traj: Trajectory) -> str:
    """CSV with columns n, p_1..p_{k+1} (or n, x for scalar trajectories)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    first = traj.states[0]
    if np.isscalar(first) or isinstance(first, float):
        writer.writerow(["n", "x"])
        for n, x in enumerate(traj.states):
            writer.writerow([n, f"{float(x):.17g}"])
    else:
        width = len(first)
        writer.writerow(["n"] + [f"p_{i + 1}" for i in range(width)])
        for n, state in enumerate(traj.states):
            writer.writerow([n] + [f"{float(v):.17g}" for v in state])
    return buf.getvalue()


def trajectory_to_json_obj(traj: Trajectory) -> dict:
    def conv(s):
        return float(s) if (np.isscalar(s) or isinstance(s, float)) else [float(v) for v in s]

    return {
        "stop_reason": traj.stop_reason,
        "iterations": traj.iterations,
        "tol": traj.tol,
        "states": [conv(s) for s in traj.states],
    }


def trajectory_to_json(traj: Trajectory) -> str:
    return json.dumps(trajectory_to_json_obj(traj), sort_keys=True)

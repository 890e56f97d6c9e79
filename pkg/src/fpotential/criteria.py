"""Convexity criteria for f-potentials via h = f'/f'' and H(f(x)) = f'^2/f''.

An f-potential is convex exactly when h is positive and concave, and concave
exactly when h is negative and convex.  Together with the monotonicity of f
this gives four types:

====  ==========  ==========  ========  ==========
type  f           f           h         potential
====  ==========  ==========  ========  ==========
a     increasing  convex      concave   convex
b     decreasing  concave     concave   convex
c     decreasing  convex      convex    concave
d     increasing  concave     convex    concave
====  ==========  ==========  ========  ==========

An affine f (f'' = 0 everywhere) has h = +-inf and a linear potential.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import MonotonicityError, NotApplicableError
from .means import DECREASING, INCREASING, GeneratorFunction
from .numerics import DEFAULT_TOL, Interval, Tolerance, differentiate_fd

CONVEX = "convex"
CONCAVE = "concave"
AFFINE = "affine"
NEITHER = "neither"
INCONCLUSIVE = "inconclusive"
LINEAR = "linear"

POTENTIAL_OF_TYPE = {"a": CONVEX, "b": CONVEX, "c": CONCAVE, "d": CONCAVE, LINEAR: LINEAR}
# Inverse-function pairing of potential types.
DUAL_PAIRS = {("a", "d"), ("d", "a"), ("b", "b"), ("c", "c"), (LINEAR, LINEAR)}


@dataclass(frozen=True)
class Witness:
    """Triple with ``theta*fn(x0) + (1-theta)*fn(x1) - fn(theta*x0 + (1-theta)*x1) = gap``.

    ``gap > 0`` violates concavity, ``gap < 0`` violates convexity.
    """

    x0: float
    x1: float
    theta: float
    gap: float

    def recheck(self, fn: Callable[[float], float]) -> float:
        m = self.theta * self.x0 + (1 - self.theta) * self.x1
        return self.theta * fn(self.x0) + (1 - self.theta) * fn(self.x1) - fn(m)


@dataclass(frozen=True)
class Curvature:
    tag: str
    # keyed by the direction that fails: "convex" and/or "concave"
    witnesses: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"tag": self.tag, "witnesses": {k: asdict(w) for k, w in self.witnesses.items()}}


def _jensen_gap(values: Callable[[float], float], x0: float, x1: float, theta: float) -> tuple[float, float]:
    """(gap, local scale) for one Jensen triple."""
    m = theta * x0 + (1 - theta) * x1
    a, b, c = values(x0), values(x1), values(m)
    gap = theta * a + (1 - theta) * b - c
    with np.errstate(invalid="ignore"):
        scale = abs(theta * a) + abs((1 - theta) * b) + abs(c)
    return gap, scale


def curvature_classify(
    fn: Callable[[float], float],
    domain: Interval,
    grid_n: int = 64,
    tol: Tolerance = DEFAULT_TOL,
    seed: int = 0,
) -> Curvature:
    """Numerical convex/concave/affine verdict for ``fn`` on ``domain``.

    Uses second differences on a uniform grid plus ``4*grid_n`` random Jensen
    triples.  A gap counts as evidence only outside the decision band
    ``max(abs_tol, decision_band * local scale)``.  Infinite values are
    allowed and compare as extended reals; an identically ``+inf`` function
    is concave and an identically ``-inf`` one convex.
    """
    grid = domain.grid(grid_n)
    cache: dict[float, float] = {}

    def values(x):
        x = float(x)
        v = cache.get(x)
        if v is None:
            v = cache[x] = float(fn(x))
        return v

    grid_vals = [values(x) for x in grid]
    if all(v == math.inf for v in grid_vals):
        return Curvature(CONCAVE)
    if all(v == -math.inf for v in grid_vals):
        return Curvature(CONVEX)

    triples = [(grid[i - 1], grid[i + 1], 0.5) for i in range(1, len(grid) - 1)]
    rng = np.random.default_rng(seed)
    lo, hi = float(grid[0]), float(grid[-1])
    for _ in range(4 * grid_n):
        x0, x1 = rng.uniform(lo, hi, size=2)
        triples.append((float(x0), float(x1), float(rng.uniform(0.05, 0.95))))

    best_pos: Optional[Witness] = None
    best_neg: Optional[Witness] = None
    finite_count = 0
    for x0, x1, theta in triples:
        if x0 == x1:
            continue
        with np.errstate(invalid="ignore"):
            gap, scale = _jensen_gap(values, x0, x1, theta)
        if math.isnan(gap):
            continue
        finite_count += 1
        band = max(tol.abs_tol, tol.decision_band * scale) if math.isfinite(scale) else tol.abs_tol
        if gap > band and (best_pos is None or gap > best_pos.gap):
            best_pos = Witness(x0, x1, theta, gap)
        elif gap < -band and (best_neg is None or gap < best_neg.gap):
            best_neg = Witness(x0, x1, theta, gap)

    if finite_count < 3:
        return Curvature(INCONCLUSIVE)
    if best_pos and best_neg:
        return Curvature(NEITHER, {CONCAVE: best_pos, CONVEX: best_neg})
    if best_pos:
        return Curvature(CONVEX)
    if best_neg:
        return Curvature(CONCAVE)
    return Curvature(AFFINE)


# --- h and H -----------------------------------------------------------------


def h_from_jet(d1: float, d2: float, tol: Tolerance = DEFAULT_TOL, scale: float = 1.0) -> float:
    """``d1/d2``, or ``+-inf`` (sign of d1) once ``|h|`` exceeds ``scale / decision_band``."""
    if d1 == 0 or not math.isfinite(d1):
        raise MonotonicityError("f' vanishes; f is not strictly monotone here")
    if abs(d2) * scale <= tol.decision_band * abs(d1):
        return math.copysign(math.inf, d1)
    return d1 / d2


def compute_h(f: GeneratorFunction, x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """``h(x) = f'(x)/f''(x)``; ``+-inf`` (sign of f') where f'' vanishes."""
    _, d1, d2 = f.jet(x)
    try:
        return h_from_jet(d1, d2, tol, max(1.0, abs(x)))
    except MonotonicityError:
        raise MonotonicityError(f"f'({x!r}) vanishes for {f.name}") from None


def compute_H(f: GeneratorFunction, y: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """``H(y) = f'(x)^2 / f''(x)`` at ``x = f^{-1}(y)``."""
    x = f.inverse(y, tol=tol)
    _, d1, d2 = f.jet(x)
    return h_from_jet(d1, d2, tol, max(1.0, abs(x))) * d1


# --- classification ------------------------------------------------------------


@dataclass
class ClassificationReport:
    f_name: str
    domain: list
    f_direction: str
    f_curvature: Curvature
    h_sign: str
    h_curvature: Curvature
    potential_type: str
    grid: list
    counterexamples: list = field(default_factory=list)

    @property
    def potential(self) -> str:
        return POTENTIAL_OF_TYPE.get(self.potential_type, self.potential_type)

    @property
    def definite(self) -> bool:
        return self.potential_type != INCONCLUSIVE

    def to_dict(self) -> dict:
        return {
            "f": self.f_name,
            "domain": self.domain,
            "f_direction": self.f_direction,
            "f_curvature": self.f_curvature.to_dict(),
            "h_sign": self.h_sign,
            "h_curvature": self.h_curvature.to_dict(),
            "potential_type": self.potential_type,
            "potential": self.potential,
            "grid": self.grid,
            "counterexamples": self.counterexamples,
        }


def _h_sign(hs: list[float]) -> str:
    if all(math.isinf(v) for v in hs):
        return "zero(affine)"
    if all(v > 0 for v in hs):
        return "positive"
    if all(v < 0 for v in hs):
        return "negative"
    return "mixed"


def potential_type_of(direction: str, h_sign: str, h_curv: str) -> str:
    if h_sign == "zero(affine)":
        return LINEAR
    if h_sign == "mixed":
        return NEITHER
    if h_curv == INCONCLUSIVE:
        return INCONCLUSIVE
    if h_sign == "positive":
        if h_curv in (CONCAVE, AFFINE):
            return "a" if direction == INCREASING else "b"
        return NEITHER
    if h_curv in (CONVEX, AFFINE):
        return "d" if direction == INCREASING else "c"
    return NEITHER


def classify_potential(
    f: GeneratorFunction, grid_n: int = 64, tol: Tolerance = DEFAULT_TOL, seed: int = 0
) -> ClassificationReport:
    """Classify the potential of ``f`` from its direction and the sign/curvature of h."""
    grid = f.domain.grid(grid_n)
    vals = [f.value(float(x)) for x in grid]
    s = 1.0 if f.direction == INCREASING else -1.0
    if any(s * (b - a) < 0 for a, b in zip(vals, vals[1:])):
        raise MonotonicityError(f"{f.name} is not monotone on the classification grid")
    f_curv = curvature_classify(f.value, f.domain, grid_n, tol, seed)
    hs = [compute_h(f, float(x), tol) for x in grid]
    sign = _h_sign(hs)
    h_curv = curvature_classify(lambda x: compute_h(f, x, tol), f.domain, grid_n, tol, seed + 1)
    ptype = potential_type_of(f.direction, sign, h_curv.tag)
    return ClassificationReport(
        f_name=f.name,
        domain=f.domain.to_list(),
        f_direction=f.direction,
        f_curvature=f_curv,
        h_sign=sign,
        h_curvature=h_curv,
        potential_type=ptype,
        grid=[float(x) for x in grid],
    )


def _interior_grid(domain: Interval, n: int) -> np.ndarray:
    lo, hi = domain.clamped()
    w = (hi - lo) / n
    return lo + w * (np.arange(n) + 0.5)


def _fd_step(x: float, lo: float, hi: float) -> float:
    base = np.finfo(float).eps ** (1.0 / 3.0) * max(1.0, abs(x))
    return min(base, 0.25 * (x - lo), 0.25 * (hi - x))


def check_derivative_identity(f: GeneratorFunction, grid_n: int = 64, tol: Tolerance = DEFAULT_TOL) -> float:
    """Max ``|H'(f(x)) - h'(x) - 1|`` over an interior grid (finite differences)."""
    lo, hi = f.domain.clamped()
    xs = _interior_grid(f.domain, grid_n)
    if all(math.isinf(compute_h(f, float(x), tol)) for x in xs):
        raise NotApplicableError("affine generator: h and H are identically infinite")
    ylo, yhi = sorted((f.value(lo), f.value(hi)))
    worst = 0.0
    for x in xs:
        x = float(x)
        dh = differentiate_fd(lambda t: compute_h(f, t, tol), x, 1, _fd_step(x, lo, hi))
        y = f.value(x)
        dH = differentiate_fd(lambda t: compute_H(f, t, tol), y, 1, _fd_step(y, ylo, yhi))
        worst = max(worst, abs(dH - dh - 1.0))
    return worst


@dataclass
class DualReport:
    type_f: str
    type_g: str
    pairing_ok: Optional[bool]
    duality_residual: float
    report_f: ClassificationReport
    report_g: ClassificationReport

    def to_dict(self) -> dict:
        return {
            "type_f": self.type_f,
            "type_g": self.type_g,
            "pairing_ok": self.pairing_ok,
            "duality_residual": self.duality_residual,
        }


def duality_residual(f: GeneratorFunction, g: GeneratorFunction, grid_n: int = 64, tol: Tolerance = DEFAULT_TOL) -> float:
    """Max ``|H_f(y) + g'(y)/g''(y)|`` on the image ``y = f(x)`` of an interior x-grid."""
    worst = 0.0
    for x in _interior_grid(f.domain, grid_n):
        y = f.value(float(x))
        H = compute_H(f, y, tol)
        _, g1, g2 = g.jet(y)
        if not math.isfinite(H):
            continue
        worst = max(worst, abs(H + g1 / g2))
    return worst


def dual_classify(f: GeneratorFunction, grid_n: int = 64, tol: Tolerance = DEFAULT_TOL) -> DualReport:
    """Classify ``lambda_f`` and ``lambda_g`` for ``g = f^{-1}`` and check their pairing."""
    g = f.inverted()
    rf = classify_potential(f, grid_n, tol)
    rg = classify_potential(g, grid_n, tol)
    pair = (rf.potential_type, rg.potential_type)
    if INCONCLUSIVE in pair:
        ok = None
    else:
        ok = pair in DUAL_PAIRS
    return DualReport(rf.potential_type, rg.potential_type, ok, duality_residual(f, g, grid_n, tol), rf, rg)

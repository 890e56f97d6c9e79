"""Golden table reproduction, Jensen counterexample search and property suites."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

import numpy as np

from . import criteria as cr
from .errors import FPotentialError, NotApplicableError
from .expr import Expression
from .means import (
    GeneratorFunction,
    WeightedDistribution,
    cgf,
    derivative_density,
    directional_derivatives,
    eval_potential,
)
from .numerics import DEFAULT_TOL, Interval, Tolerance, _parse_bound, differentiate_fd

# tolerances of the documented invariants
INTERNALITY_SLACK = 1e-9
AFFINE_INVARIANCE_TOL = 1e-8
MONOTONICITY_SLACK = 1e-9
FIRST_DERIVATIVE_TOL = 1e-6
SECOND_DERIVATIVE_TOL = 1e-4
GIBBS_TOL = 1e-12
CGF_SLACK = 1e-9
SOUNDNESS_SLACK = 1e-7
SECOND_SIGN_SLACK = 1e-8
SUPERADDITIVITY_SLACK = 1e-7
IDENTITY_TOL = 1e-4
DUALITY_TOL = 1e-5
H_REL_TOL = 1e-6
RECHECK_TOL = 1e-10


# --- catalog -------------------------------------------------------------------


@dataclass(frozen=True)
class TableRow:
    label: str
    f_source: str
    interval: Interval
    domain: Interval
    expected_f_type: str
    expected_h_source: str
    expected_h_signcurv: str
    expected_potential: str

    def generator(self) -> GeneratorFunction:
        return GeneratorFunction.from_expr(self.f_source, self.domain)


def _load_catalog() -> dict:
    text = resources.files("fpotential").joinpath("data/table.json").read_text()
    return json.loads(text)


def _bound(v) -> float:
    return _parse_bound(v) if isinstance(v, str) else float(v)


def load_table() -> list[TableRow]:
    rows = []
    for r in _load_catalog()["rows"]:
        rows.append(
            TableRow(
                label=r["label"],
                f_source=r["f"],
                interval=Interval(*(_bound(v) for v in r["interval"])),
                domain=Interval(*(_bound(v) for v in r["window"])),
                expected_f_type=r["f_type"],
                expected_h_source=r["h"],
                expected_h_signcurv=r["h_signcurv"],
                expected_potential=r["potential"],
            )
        )
    return rows


def load_unclassifiable() -> list[tuple[str, Interval]]:
    return [(r["f"], Interval(*(_bound(v) for v in r["window"]))) for r in _load_catalog()["unclassifiable"]]


# --- table reproduction ----------------------------------------------------------


@dataclass
class RowResult:
    row: TableRow
    report: Optional[cr.ClassificationReport]
    passed: bool
    h_max_rel_error: float = math.nan
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.row.label,
            "f": self.row.f_source,
            "window": self.row.domain.to_list(),
            "expected": {
                "f_type": self.row.expected_f_type,
                "h": self.row.expected_h_source,
                "h_signcurv": self.row.expected_h_signcurv,
                "potential": self.row.expected_potential,
            },
            "found": None
            if self.report is None
            else {
                "f_type": self.report.potential_type,
                "f_direction": self.report.f_direction,
                "f_curvature": self.report.f_curvature.tag,
                "h_sign": self.report.h_sign,
                "h_curvature": self.report.h_curvature.tag,
                "potential": self.report.potential,
            },
            "h_max_rel_error": self.h_max_rel_error,
            "pass": self.passed,
            "diagnostics": self.diagnostics,
        }


_SIGNCURV = {"+concave": ("positive", {cr.CONCAVE, cr.AFFINE}), "-convex": ("negative", {cr.CONVEX, cr.AFFINE})}
_F_SHAPE = {
    "a": (cr.CONVEX,),
    "b": (cr.CONCAVE,),
    "c": (cr.CONVEX,),
    "d": (cr.CONCAVE,),
}


def check_row(row: TableRow, grid_n: int = 64, tol: Tolerance = DEFAULT_TOL) -> RowResult:
    diags = []
    try:
        f = row.generator()
        report = cr.classify_potential(f, grid_n, tol)
        expected_h = Expression(row.expected_h_source)
        worst = 0.0
        for x in f.domain.grid(grid_n):
            x = float(x)
            want = expected_h(x)
            worst = max(worst, abs(cr.compute_h(f, x, tol) - want) / abs(want))
    except FPotentialError as exc:
        return RowResult(row, None, False, diagnostics=[f"{type(exc).__name__}: {exc}"])
    if report.potential_type != row.expected_f_type:
        diags.append(f"type {report.potential_type} != {row.expected_f_type}")
    if report.potential != row.expected_potential:
        diags.append(f"potential {report.potential} != {row.expected_potential}")
    sign, curvs = _SIGNCURV[row.expected_h_signcurv]
    if report.h_sign != sign or report.h_curvature.tag not in curvs:
        diags.append(f"h is {report.h_sign}/{report.h_curvature.tag}, expected {row.expected_h_signcurv}")
    if report.f_curvature.tag not in _F_SHAPE[row.expected_f_type]:
        diags.append(f"f curvature {report.f_curvature.tag} inconsistent with type {row.expected_f_type}")
    if not worst <= H_REL_TOL:
        diags.append(f"h deviates from {row.expected_h_source} by {worst:.3g} (relative)")
    return RowResult(row, report, not diags, worst, diags)


def reproduce_table(grid_n: int = 64, tol: Tolerance = DEFAULT_TOL) -> list[RowResult]:
    return [check_row(row, grid_n, tol) for row in load_table()]


# --- Jensen counterexamples --------------------------------------------------------

VIOLATES_CONVEXITY = "violates-convexity"
VIOLATES_CONCAVITY = "violates-concavity"


@dataclass(frozen=True)
class CounterexampleRecord:
    """``lhs = lambda(theta*a + (1-theta)*b)`` vs ``rhs = theta*lambda(a) + (1-theta)*lambda(b)``."""

    dist_a: WeightedDistribution
    dist_b: WeightedDistribution
    theta: float
    lhs: float
    rhs: float
    direction: str

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    def to_dict(self) -> dict:
        return {
            "dist_a": self.dist_a.to_json(),
            "dist_b": self.dist_b.to_json(),
            "theta": self.theta,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "direction": self.direction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CounterexampleRecord":
        return cls(
            WeightedDistribution.from_json(d["dist_a"]),
            WeightedDistribution.from_json(d["dist_b"]),
            float(d["theta"]),
            float(d["lhs"]),
            float(d["rhs"]),
            d["direction"],
        )

    def recheck(self, f: GeneratorFunction, tol: Tolerance = DEFAULT_TOL) -> bool:
        """Re-evaluate and confirm the stored strict violation."""
        lhs, rhs = _jensen_sides(f, self.dist_a, self.dist_b, self.theta)
        if abs(lhs - self.lhs) > RECHECK_TOL or abs(rhs - self.rhs) > RECHECK_TOL:
            return False
        margin = 10 * tol.abs_tol
        if self.direction == VIOLATES_CONVEXITY:
            return lhs - rhs > margin
        return rhs - lhs > margin


def _mix(a: WeightedDistribution, b: WeightedDistribution, theta: float) -> WeightedDistribution:
    return WeightedDistribution(tuple(theta * x + (1 - theta) * y for x, y in zip(a.xs, b.xs)), a.ps)


def _jensen_sides(f, a, b, theta) -> tuple[float, float]:
    lhs = eval_potential(f, _mix(a, b, theta))
    rhs = theta * eval_potential(f, a) + (1 - theta) * eval_potential(f, b)
    return lhs, rhs


@dataclass
class JensenResult:
    trials: int
    seed: int
    convexity: Optional[CounterexampleRecord]
    concavity: Optional[CounterexampleRecord]

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            VIOLATES_CONVEXITY: None if self.convexity is None else self.convexity.to_dict(),
            VIOLATES_CONCAVITY: None if self.concavity is None else self.concavity.to_dict(),
        }


def jensen_search(
    f: GeneratorFunction, trials: int = 10_000, seed: int = 0, tol: Tolerance = DEFAULT_TOL
) -> JensenResult:
    """Strongest violations of midpoint-free Jensen in each direction.

    Two-atom distributions ``(p, 1-p)`` with ``p`` in ``[0.1, 0.9]``; atoms in
    the central 80% of the domain.
    """
    rng = np.random.default_rng(seed)
    lo, hi = f.domain.inner(0.8)
    margin = 10 * tol.abs_tol
    best_cvx = best_ccv = None
    for _ in range(trials):
        p = float(rng.uniform(0.1, 0.9))
        xa = rng.uniform(lo, hi, 2)
        xb = rng.uniform(lo, hi, 2)
        theta = float(rng.uniform(0.0, 1.0))
        a = WeightedDistribution((float(xa[0]), float(xa[1])), (p, 1 - p))
        b = WeightedDistribution((float(xb[0]), float(xb[1])), (p, 1 - p))
        lhs, rhs = _jensen_sides(f, a, b, theta)
        gap = lhs - rhs
        if gap > margin and (best_cvx is None or gap > best_cvx.gap):
            best_cvx = CounterexampleRecord(a, b, theta, lhs, rhs, VIOLATES_CONVEXITY)
        elif gap < -margin and (best_ccv is None or gap < best_ccv.gap):
            best_ccv = CounterexampleRecord(a, b, theta, lhs, rhs, VIOLATES_CONCAVITY)
    return JensenResult(trials, seed, best_cvx, best_ccv)


# --- property suite ----------------------------------------------------------------


@dataclass
class PropertyResult:
    name: str
    passed: bool
    worst_residual: float = 0.0
    witness: Optional[dict] = None
    skipped: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        d = {"name": self.name, "pass": self.passed, "worst_residual": _json_float(self.worst_residual)}
        if self.witness is not None:
            d["witness"] = self.witness
        if self.skipped:
            d["skipped"] = True
        if self.note:
            d["note"] = self.note
        return d


def _json_float(v: float):
    return v if math.isfinite(v) else str(v)


@dataclass
class SuiteReport:
    suite: str
    seed: int
    tolerances: dict
    classification: str
    properties: list

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties)

    def get(self, name: str) -> PropertyResult:
        for p in self.properties:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "classification": self.classification,
            "pass": self.passed,
            "properties": [p.to_dict() for p in self.properties],
        }


def random_distribution(rng: np.random.Generator, lo: float, hi: float, min_atoms=2, max_atoms=5) -> WeightedDistribution:
    n = int(rng.integers(min_atoms, max_atoms + 1))
    return WeightedDistribution.normalized(rng.uniform(lo, hi, n).tolist(), rng.uniform(0.1, 1.0, n).tolist())


class _Tracker:
    """Worst residual of a check ``value <= limit`` over many trials."""

    def __init__(self, name):
        self.name = name
        self.worst = 0.0
        self.failed = False
        self.witness = None
        self._worst_excess = -math.inf

    def add(self, value: float, limit: float, witness: Callable[[], dict]):
        self.worst = max(self.worst, value)
        excess = value - limit
        if excess > self._worst_excess:
            self._worst_excess = excess
            if excess > 0 or math.isnan(value):
                self.failed = True
                self.witness = witness()
        if math.isnan(value):
            self.failed = True

    def result(self, note: str = "") -> PropertyResult:
        return PropertyResult(self.name, not self.failed, self.worst, self.witness, note=note)


def check_internality(f, rng, trials, lo, hi) -> PropertyResult:
    t = _Tracker("internality")
    for _ in range(trials):
        d = random_distribution(rng, lo, hi)
        lam = eval_potential(f, d)
        t.add(max(min(d.xs) - lam, lam - max(d.xs), 0.0), INTERNALITY_SLACK, lambda: {"dist": d.to_json(), "lambda": lam})
    return t.result()


def check_affine_invariance(f, rng, trials, lo, hi) -> PropertyResult:
    t = _Tracker("affine_invariance")
    gauges = []
    for _ in range(8):
        A = float(rng.uniform(0.1, 10.0)) * (1 if rng.uniform() < 0.5 else -1)
        B = float(rng.uniform(-10.0, 10.0))
        gauges.append((A, B, f.affine(A, B)))
    for i in range(trials):
        A, B, g = gauges[i % len(gauges)]
        d = random_distribution(rng, lo, hi)
        la, lb = eval_potential(f, d), eval_potential(g, d)
        t.add(abs(la - lb), AFFINE_INVARIANCE_TOL, lambda: {"A": A, "B": B, "dist": d.to_json()})
    return t.result()


def check_monotonicity(f, rng, trials, lo, hi) -> PropertyResult:
    t = _Tracker("monotonicity")
    for _ in range(trials):
        d = random_distribution(rng, lo, hi)
        bumped = WeightedDistribution(
            tuple(min(x + float(rng.uniform(0, 0.5)) * (hi - x), hi) for x in d.xs), d.ps
        )
        l0, l1 = eval_potential(f, d), eval_potential(f, bumped)
        t.add(max(l0 - l1, 0.0), MONOTONICITY_SLACK, lambda: {"phi": d.to_json(), "psi": bumped.to_json()})
    return t.result()


def _fd_directional(f, d, psi, order):
    scale = max(1.0, max(abs(x) for x in d.xs))
    step = (1e-4 if order == 1 else 1e-3) * scale
    return differentiate_fd(lambda t: eval_potential(f, d.shifted(psi, t)), 0.0, order, step)


def check_derivatives(f, rng, trials, lo, hi) -> tuple[PropertyResult, PropertyResult]:
    """Analytic directional derivatives vs finite differences, and the density identity."""
    t = _Tracker("derivative_consistency")
    dens = _Tracker("density_identity")
    room = 0.1 * (hi - lo)
    for _ in range(trials):
        d = random_distribution(rng, lo, hi)
        psi = rng.uniform(-1.0, 1.0, len(d)).tolist()
        scale = max(1.0, max(abs(x) for x in d.xs))
        # keep the widest stencil (2 * 1e-3 * scale) inside the domain
        psi = [v * min(1.0, room / (2e-3 * scale) / 2) for v in psi]
        first, second = directional_derivatives(f, d, psi)
        fd1 = _fd_directional(f, d, psi, 1)
        fd2 = _fd_directional(f, d, psi, 2)
        r = max(
            abs(first - fd1) / max(1.0, abs(fd1)) / FIRST_DERIVATIVE_TOL,
            abs(second - fd2) / max(1.0, abs(fd2)) / SECOND_DERIVATIVE_TOL,
        )
        t.add(r, 1.0, lambda: {"dist": d.to_json(), "psi": psi, "analytic": [first, second], "fd": [fd1, fd2]})
        rho = derivative_density(f, d)
        via_rho = math.fsum(p * q * v for p, q, v in zip(d.ps, rho, psi))
        dens.add(abs(via_rho - first) / max(1.0, abs(first)), 1e-12, lambda: {"dist": d.to_json(), "psi": psi})
    res = t.result()
    res.note = "residual is in units of the tolerance (1e-6 first, 1e-4 second, relative to max(1, |fd|))"
    return res, dens.result()


def _is_exponential(f: GeneratorFunction) -> bool:
    """h == 1 on a grid, i.e. f = A exp(x) + B."""
    return all(abs(cr.compute_h(f, float(x)) - 1.0) <= 1e-12 for x in f.domain.grid(16))


def check_gibbs(f, rng, trials, lo, hi) -> PropertyResult:
    if not _is_exponential(f):
        return PropertyResult("gibbs_normalization", True, skipped=True, note="applies to exponential generators only")
    t = _Tracker("gibbs_normalization")
    for _ in range(trials):
        d = random_distribution(rng, lo, hi)
        rho = derivative_density(f, d)
        s = math.fsum(p * r for p, r in zip(d.ps, rho))
        t.add(abs(s - 1.0), GIBBS_TOL, lambda: {"dist": d.to_json(), "sum": s})
    return t.result()


def check_cgf_convexity(rng, trials, lo, hi) -> PropertyResult:
    t = _Tracker("cgf_convexity")
    for _ in range(trials):
        d = random_distribution(rng, lo, hi)
        tt = float(rng.uniform(-2.0, 2.0))
        delta = float(rng.uniform(1e-3, 0.5))
        d2 = cgf(d, tt - delta) - 2 * cgf(d, tt) + cgf(d, tt + delta)
        t.add(max(-d2, 0.0), CGF_SLACK, lambda: {"dist": d.to_json(), "t": tt, "delta": delta})
    return t.result()


def check_soundness(f, report, rng, trials, lo, hi) -> PropertyResult:
    """Midpoint Jensen on lambda_f in the classified direction."""
    pot = report.potential
    if pot not in (cr.CONVEX, cr.CONCAVE, cr.LINEAR):
        return PropertyResult("classifier_soundness", True, skipped=True, note=f"potential is {pot}")
    t = _Tracker("classifier_soundness")
    for _ in range(trials):
        a = random_distribution(rng, lo, hi)
        b = WeightedDistribution(tuple(rng.uniform(lo, hi, len(a)).tolist()), a.ps)
        lhs, rhs = _jensen_sides(f, a, b, 0.5)
        if pot == cr.CONVEX:
            r = lhs - rhs
        elif pot == cr.CONCAVE:
            r = rhs - lhs
        else:
            r = abs(lhs - rhs)
        t.add(max(r, 0.0), SOUNDNESS_SLACK, lambda: {"dist_a": a.to_json(), "dist_b": b.to_json(), "lhs": lhs, "rhs": rhs})
    return t.result()


def check_second_sign(f, report, rng, trials, lo, hi) -> PropertyResult:
    pot = report.potential
    if pot not in (cr.CONVEX, cr.CONCAVE, cr.LINEAR):
        return PropertyResult("second_derivative_sign", True, skipped=True, note=f"potential is {pot}")
    t = _Tracker("second_derivative_sign")
    for _ in range(trials):
        d = random_distribution(rng, lo, hi)
        psi = rng.uniform(-1.0, 1.0, len(d)).tolist()
        _, second = directional_derivatives(f, d, psi)
        if pot == cr.CONVEX:
            r = -second
        elif pot == cr.CONCAVE:
            r = second
        else:
            r = abs(second)
        t.add(max(r, 0.0), SECOND_SIGN_SLACK, lambda: {"dist": d.to_json(), "psi": psi, "second": second})
    return t.result()


def check_superadditivity(f, report, rng, trials, lo, hi, tol=DEFAULT_TOL) -> PropertyResult:
    """``H(p0 y0 + p1 y1) >= p0 H(y0) + p1 H(y1)`` for convex potentials."""
    if report.potential != cr.CONVEX:
        return PropertyResult("h_superadditivity", True, skipped=True, note=f"potential is {report.potential}")
    ya, yb = sorted((f.value(lo), f.value(hi)))
    if not math.isfinite(cr.compute_H(f, 0.5 * (ya + yb), tol)):
        return PropertyResult("h_superadditivity", True, skipped=True, note="H is infinite (affine f)")
    t = _Tracker("h_superadditivity")
    for _ in range(trials):
        y0, y1 = (float(v) for v in rng.uniform(ya, yb, 2))
        p0 = float(rng.uniform(0.0, 1.0))
        y = p0 * y0 + (1 - p0) * y1
        lhs = cr.compute_H(f, y, tol)
        rhs = p0 * cr.compute_H(f, y0, tol) + (1 - p0) * cr.compute_H(f, y1, tol)
        t.add(max(rhs - lhs, 0.0), SUPERADDITIVITY_SLACK, lambda: {"y0": y0, "y1": y1, "p0": p0, "lhs": lhs, "rhs": rhs})
    return t.result()


_SWAP = {"a": "b", "b": "a", "c": "d", "d": "c"}


def check_affine_classification(f, report, rng, grid_n, tol) -> PropertyResult:
    bad = []
    for A in (float(rng.uniform(0.1, 10)), -float(rng.uniform(0.1, 10))):
        B = float(rng.uniform(-10, 10))
        t = cr.classify_potential(f.affine(A, B), grid_n, tol).potential_type
        want = report.potential_type if A > 0 else _SWAP.get(report.potential_type, report.potential_type)
        if t != want:
            bad.append({"A": A, "B": B, "type": t, "expected": want})
    return PropertyResult("affine_classification", not bad, float(len(bad)), bad[0] if bad else None)


def check_identity(f, grid_n, tol) -> PropertyResult:
    try:
        res = cr.check_derivative_identity(f, grid_n, tol)
    except NotApplicableError as exc:
        return PropertyResult("derivative_identity", True, skipped=True, note=str(exc))
    return PropertyResult("derivative_identity", res <= IDENTITY_TOL, res)


def check_duality(f, report, grid_n, tol) -> PropertyResult:
    if report.potential not in (cr.CONVEX, cr.CONCAVE, cr.LINEAR):
        return PropertyResult("inverse_duality", True, skipped=True, note=f"potential is {report.potential}")
    dual = cr.dual_classify(f, grid_n, tol)
    ok = dual.pairing_ok is True and dual.duality_residual <= DUALITY_TOL
    return PropertyResult("inverse_duality", ok, dual.duality_residual, None if ok else dual.to_dict(), note=f"types {dual.type_f}/{dual.type_g}")


def check_jensen(f, report, trials, seed, tol) -> PropertyResult:
    res = jensen_search(f, trials, seed, tol)
    found = {k: v for k, v in ((VIOLATES_CONVEXITY, res.convexity), (VIOLATES_CONCAVITY, res.concavity)) if v}
    certified = all(rec.recheck(f, tol) for rec in found.values())
    pot = report.potential
    if pot == cr.CONVEX:
        ok = VIOLATES_CONVEXITY not in found
    elif pot == cr.CONCAVE:
        ok = VIOLATES_CONCAVITY not in found
    elif pot == cr.LINEAR:
        ok = not found
    else:
        ok = len(found) == 2
    worst = max((abs(r.gap) for r in found.values()), default=0.0)
    return PropertyResult(
        "jensen_search",
        ok and certified,
        worst,
        {k: v.to_dict() for k, v in found.items()} or None,
        note=f"potential is {pot}; witnesses {'re-verified' if certified else 'FAILED re-verification'}",
    )


def consistency_suite(
    f: GeneratorFunction,
    trials: int = 1000,
    seed: int = 0,
    tol: Tolerance = DEFAULT_TOL,
    grid_n: int = 64,
    jensen_trials: Optional[int] = None,
) -> SuiteReport:
    """Run every cross-module invariant against ``f``; failures are recorded, not raised."""
    rng = np.random.default_rng(seed)
    lo, hi = f.domain.inner(0.8)
    report = cr.classify_potential(f, grid_n, tol)
    checks: list[Callable[[], object]] = [
        lambda: check_internality(f, rng, trials, lo, hi),
        lambda: check_affine_invariance(f, rng, trials, lo, hi),
        lambda: check_monotonicity(f, rng, trials, lo, hi),
        lambda: check_derivatives(f, rng, trials, lo, hi),
        lambda: check_gibbs(f, rng, trials, lo, hi),
        lambda: check_cgf_convexity(rng, trials, lo, hi),
        lambda: check_soundness(f, report, rng, trials, lo, hi),
        lambda: check_second_sign(f, report, rng, trials, lo, hi),
        lambda: check_superadditivity(f, report, rng, trials, lo, hi, tol),
        lambda: check_affine_classification(f, report, rng, grid_n, tol),
        lambda: check_identity(f, grid_n, tol),
        lambda: check_duality(f, report, grid_n, tol),
        lambda: check_jensen(f, report, jensen_trials or trials, seed, tol),
    ]
    names = [
        "internality", "affine_invariance", "monotonicity", "derivative_consistency",
        "gibbs_normalization", "cgf_convexity", "classifier_soundness", "second_derivative_sign",
        "h_superadditivity", "affine_classification", "derivative_identity", "inverse_duality",
        "jensen_search",
    ]
    results: list[PropertyResult] = []
    for name, check in zip(names, checks):
        try:
            out = check()
        except FPotentialError as exc:
            out = PropertyResult(name, False, math.inf, note=f"{type(exc).__name__}: {exc}")
        results.extend(out if isinstance(out, tuple) else [out])
    return SuiteReport("consistency", seed, tol.to_dict(), report.potential_type, results)

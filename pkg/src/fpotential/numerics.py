"""Quadrature, finite differences and inversion of monotone functions."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    AccuracyError,
    EvaluationError,
    MonotonicityError,
    OutOfRangeError,
)

ScalarFn = Callable[[float], float]

EPS = np.finfo(float).eps
DEFAULT_WINDOW = 50.0


def endpoint_margin(endpoint: float) -> float:
    return max(1e-9, 1e-9 * abs(endpoint))


@dataclass(frozen=True)
class Interval:
    """Open interval ``(lo, hi)``; either end may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise ValueError(f"invalid interval ({self.lo}, {self.hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __contains__(self, x: float) -> bool:
        return self.lo < x < self.hi

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def clamped(self, window: float = DEFAULT_WINDOW) -> tuple[float, float]:
        """Finite closed range used for sweeps.

        Finite ends are pulled inward by the endpoint margin; infinite ends are
        replaced by ``-window`` / ``window`` (intersected with the interval).
        """
        lo = self.lo + endpoint_margin(self.lo) if math.isfinite(self.lo) else -window
        hi = self.hi - endpoint_margin(self.hi) if math.isfinite(self.hi) else window
        if math.isfinite(self.lo) and not math.isfinite(self.hi) and hi <= lo:
            hi = lo + window
        if math.isfinite(self.hi) and not math.isfinite(self.lo) and lo >= hi:
            lo = hi - window
        if not lo < hi:
            raise ValueError(f"interval {self} is too narrow to clamp")
        return lo, hi

    def grid(self, n: int, window: float = DEFAULT_WINDOW) -> np.ndarray:
        lo, hi = self.clamped(window)
        return np.linspace(lo, hi, n)

    def inner(self, fraction: float = 0.8, window: float = DEFAULT_WINDOW) -> tuple[float, float]:
        """Central ``fraction`` of the clamped range."""
        lo, hi = self.clamped(window)
        pad = 0.5 * (1.0 - fraction) * (hi - lo)
        return lo + pad, hi - pad

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``"lo,hi"``; accepts ``inf``, ``-inf`` and ``pi`` multiples like ``pi/2``."""
        parts = [p.strip() for p in text.strip().strip("()[]").split(",")]
        if len(parts) != 2:
            raise ValueError(f"interval must be 'lo,hi', got {text!r}")
        return cls(_parse_bound(parts[0]), _parse_bound(parts[1]))

    def to_list(self) -> list:
        return [_bound_json(self.lo), _bound_json(self.hi)]


def _parse_bound(token: str) -> float:
    t = token.lower().replace(" ", "")
    sign = 1.0
    if t.startswith("-"):
        sign, t = -1.0, t[1:]
    elif t.startswith("+"):
        t = t[1:]
    if t in ("inf", "infinity", "oo"):
        return sign * math.inf
    if t.startswith("pi"):
        rest = t[2:]
        value = math.pi
        if rest.startswith("/"):
            value /= float(rest[1:])
        elif rest.startswith("*"):
            value *= float(rest[1:])
        elif rest:
            raise ValueError(f"cannot parse interval bound {token!r}")
        return sign * value
    return sign * float(t)


def _bound_json(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    decision_band: float = 1e-7

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "decision_band"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v!r}")
        if not self.decision_band > self.abs_tol:
            raise ValueError("decision_band must exceed abs_tol")

    def target(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))

    def to_dict(self) -> dict:
        return {"abs_tol": self.abs_tol, "rel_tol": self.rel_tol, "decision_band": self.decision_band}


DEFAULT_TOL = Tolerance()


def _checked(fn: ScalarFn, x: float) -> float:
    try:
        y = float(fn(x))
    except (OverflowError, ZeroDivisionError, ValueError) as exc:
        if isinstance(exc, EvaluationError):
            raise
        raise EvaluationError(f"evaluation failed: {exc}", x=x) from exc
    if not math.isfinite(y):
        raise EvaluationError("non-finite function value", x=x)
    return y


# --- quadrature -------------------------------------------------------------

_GL_ORDER = 10
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


def gauss_legendre(fn: ScalarFn, a: float, b: float, order: int = _GL_ORDER) -> float:
    """Single fixed-order Gauss-Legendre panel on ``[a, b]``."""
    if order == _GL_ORDER:
        nodes, weights = _GL_NODES, _GL_WEIGHTS
    else:
        nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * math.fsum(w * _checked(fn, mid + half * t) for t, w in zip(nodes, weights))


def integrate_adaptive(
    fn: ScalarFn,
    a: float,
    b: float,
    tol: Tolerance = DEFAULT_TOL,
    max_evals: int = 200_000,
) -> float:
    """Globally adaptive Gauss-Legendre quadrature of ``fn`` over ``[a, b]``.

    Each panel's error is estimated by comparing it with the sum of its two
    halves; the worst panel is split until the summed estimate meets
    ``max(abs_tol, rel_tol * |result|)``.
    """
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integration limits must be finite")
    if a > b:
        return -integrate_adaptive(fn, b, a, tol, max_evals)

    def panel(lo, hi, whole):
        mid = 0.5 * (lo + hi)
        left = gauss_legendre(fn, lo, mid)
        right = gauss_legendre(fn, mid, hi)
        return left, right, abs(left + right - whole)

    evals = _GL_ORDER
    whole = gauss_legendre(fn, a, b)
    left, right, err = panel(a, b, whole)
    evals += 2 * _GL_ORDER
    # heap of (-err, lo, hi, left, right)
    heap = [(-err, a, b, left, right)]
    total_err = err
    while True:
        result = math.fsum(l + r for _, _, _, l, r in heap)
        if total_err <= tol.target(result):
            return result
        if evals + 4 * _GL_ORDER > max_evals:
            raise AccuracyError("quadrature did not converge", result, total_err)
        neg_err, lo, hi, l, r = heapq.heappop(heap)
        total_err += neg_err
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise AccuracyError("quadrature panel collapsed", result, total_err - neg_err)
        for sub_lo, sub_hi, sub_whole in ((lo, mid, l), (mid, hi, r)):
            sl, sr, se = panel(sub_lo, sub_hi, sub_whole)
            evals += 2 * _GL_ORDER
            heapq.heappush(heap, (-se, sub_lo, sub_hi, sl, sr))
            total_err += se


# --- differentiation --------------------------------------------------------


def default_step(x: float, order: int) -> float:
    scale = max(1.0, abs(x))
    if order == 1:
        return EPS ** (1.0 / 3.0) * scale
    return EPS ** 0.25 * scale


def differentiate_fd(fn: ScalarFn, x: float, order: int = 1, step: Optional[float] = None) -> float:
    """Central difference at steps ``step`` and ``2*step``, Richardson-extrapolated.

    All samples lie in ``[x - 2*step, x + 2*step]``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    h = default_step(x, order) if step is None else float(step)
    if not h > 0:
        raise ValueError("step must be positive")
    fp1, fm1 = _checked(fn, x + h), _checked(fn, x - h)
    fp2, fm2 = _checked(fn, x + 2 * h), _checked(fn, x - 2 * h)
    if order == 1:
        d_h = (fp1 - fm1) / (2 * h)
        d_2h = (fp2 - fm2) / (4 * h)
    else:
        f0 = _checked(fn, x)
        d_h = (fp1 - 2 * f0 + fm1) / (h * h)
        d_2h = (fp2 - 2 * f0 + fm2) / (4 * h * h)
    return (4.0 * d_h - d_2h) / 3.0


# --- inversion ----------------------------------------------------------------


def _expand_bracket(fn: ScalarFn, y: float, domain: Interval) -> tuple[float, float]:
    """Finite bracket inside ``domain`` whose image contains ``y`` if possible."""
    lo, hi = domain.clamped()
    if domain.finite:
        return lo, hi
    flo, fhi = _checked(fn, lo), _checked(fn, hi)
    increasing = fhi > flo
    # grow infinite ends geometrically until y is enclosed or values stop being finite
    for _ in range(64):
        below = (y < flo) if increasing else (y > flo)
        above = (y > fhi) if increasing else (y < fhi)
        if not (below and math.isinf(domain.lo)) and not (above and math.isinf(domain.hi)):
            break
        try:
            if below and math.isinf(domain.lo):
                new = lo - 2.0 * max(1.0, hi - lo)
                flo, lo = _checked(fn, new), new
            if above and math.isinf(domain.hi):
                new = hi + 2.0 * max(1.0, hi - lo)
                fhi, hi = _checked(fn, new), new
        except EvaluationError:
            break
    return lo, hi


def invert_monotone(
    fn: ScalarFn,
    y: float,
    domain: Interval,
    tol: Tolerance = DEFAULT_TOL,
    fprime: Optional[ScalarFn] = None,
    bracket: Optional[tuple[float, float]] = None,
) -> float:
    """Solve ``fn(x) = y`` for strictly monotone ``fn``.

    Bisection on a bracket, accelerated by Newton steps when ``fprime`` is
    given; a Newton step leaving the current bracket is replaced by bisection.
    Iterates to machine resolution, so the result is as accurate as ``fn``
    allows.
    """
    y = float(y)
    a, b = bracket if bracket is not None else _expand_bracket(fn, y, domain)
    a, b = float(a), float(b)
    if a > b:
        a, b = b, a
    fa, fb = _checked(fn, a), _checked(fn, b)
    if a == b or fa == fb:
        if abs(fa - y) <= tol.target(y):
            return a
        if a == b:
            raise OutOfRangeError(f"y={y!r} is not attained on the degenerate bracket [{a}, {b}]")
        raise MonotonicityError(f"function is constant on bracket [{a}, {b}]")
    s = 1.0 if fb > fa else -1.0
    slack = tol.target(y)
    if s * (y - fa) < 0:
        if abs(y - fa) <= slack:
            return a
        raise OutOfRangeError(f"y={y!r} is outside the range [{min(fa, fb)!r}, {max(fa, fb)!r}]")
    if s * (fb - y) < 0:
        if abs(y - fb) <= slack:
            return b
        raise OutOfRangeError(f"y={y!r} is outside the range [{min(fa, fb)!r}, {max(fa, fb)!r}]")
    if fa == y:
        return a
    if fb == y:
        return b

    x = 0.5 * (a + b)
    best_x, best_r = a if abs(fa - y) < abs(fb - y) else b, min(abs(fa - y), abs(fb - y))
    for _ in range(400):
        fx = _checked(fn, x)
        if s * (fx - fa) < 0 or s * (fb - fx) < 0:
            # reversals at the rounding level of fn are noise, not non-monotonicity
            noise = max(slack, 8 * EPS * max(abs(fa), abs(fb), abs(fx)))
            if max(s * (fa - fx), s * (fx - fb)) > noise:
                raise MonotonicityError(f"non-monotone sample at x={x!r} inside [{a!r}, {b!r}]")
            if abs(fx - y) < best_r:
                best_x, best_r = x, abs(fx - y)
            break
        r = fx - y
        if abs(r) < best_r:
            best_x, best_r = x, abs(r)
        if r == 0:
            return x
        if s * r < 0:
            a, fa = x, fx
        else:
            b, fb = x, fx
        if not math.nextafter(a, b) < b:
            break
        x_new = None
        if fprime is not None:
            try:
                d = float(fprime(x))
            except (ArithmeticError, ValueError):
                d = 0.0
            if d != 0 and math.isfinite(d):
                cand = x - r / d
                if a < cand < b:
                    x_new = cand
        if x_new is None:
            x_new = 0.5 * (a + b)
            if not a < x_new < b:
                break
        elif x_new == x:
            break
        x = x_new
    if best_r > slack and math.nextafter(a, b) < b:
        raise AccuracyError("inversion did not converge", best_x, best_r)
    return best_x

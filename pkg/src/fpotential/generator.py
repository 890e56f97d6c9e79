"""Reconstruct a generator f from a prescribed h = f'/f''.

    f(x) = A * int_{x0}^{x} exp( int_{x0}^{s} du / h(u) ) ds + B

The inner integral ``I(s)`` is tabulated once on adaptively refined nodes and
interpolated by a monotone cubic Hermite spline whose node slopes are the
exact values ``1/h``.  The outer integral is accumulated per panel, and a
fixed-order Gauss-Legendre rule covers the partial panel at evaluation time,
so ``f`` is a smooth function of ``x`` between nodes.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EvaluationError, InputError, SingularHError
from .expr import Expression, Jet2
from .means import GeneratorFunction
from .numerics import (
    DEFAULT_TOL,
    Interval,
    Tolerance,
    differentiate_fd,
    gauss_legendre,
    integrate_adaptive,
)

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class HSpec:
    """Prescribed h on an interval; its sign must be constant."""

    body: Expression
    domain: Interval
    expected_sign: Optional[str] = None
    check_points: int = 64

    def __post_init__(self):
        if isinstance(self.body, str):
            object.__setattr__(self, "body", Expression(self.body))
        signs = set()
        for x in self.domain.grid(self.check_points):
            x = float(x)
            try:
                v = self.body(x)
            except EvaluationError as exc:
                raise SingularHError(f"h cannot be evaluated: {exc}", x) from None
            if v == 0:
                raise SingularHError("h vanishes", x)
            signs.add(POSITIVE if v > 0 else NEGATIVE)
            if len(signs) > 1:
                raise SingularHError("h changes sign", x)
        sign = signs.pop()
        if self.expected_sign is None:
            object.__setattr__(self, "expected_sign", sign)
        elif self.expected_sign != sign:
            raise SingularHError(f"h is {sign}, expected {self.expected_sign}")

    def __call__(self, x: float) -> float:
        v = self.body(x)
        if v == 0 or (v > 0) != (self.expected_sign == POSITIVE):
            raise SingularHError("h vanishes or changes sign", x)
        return v


def _hermite(x0, x1, y0, y1, m0, m1, x):
    """Cubic Hermite value and derivative on ``[x0, x1]``."""
    w = x1 - x0
    t = (x - x0) / w
    t2, t3 = t * t, t * t * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    val = h00 * y0 + h10 * w * m0 + h01 * y1 + h11 * w * m1
    dh00 = (6 * t2 - 6 * t) / w
    dh10 = 3 * t2 - 4 * t + 1
    dh01 = (-6 * t2 + 6 * t) / w
    dh11 = 3 * t2 - 2 * t
    der = dh00 * y0 + dh10 * m0 + dh01 * y1 + dh11 * m1
    return val, der


def _limit_slopes(xs, ys, ms):
    """Fritsch-Carlson limiter: keep each Hermite piece monotone."""
    ms = list(ms)
    for k in range(len(xs) - 1):
        delta = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])
        if delta == 0:
            ms[k] = ms[k + 1] = 0.0
            continue
        if ms[k] * delta < 0:
            ms[k] = 0.0
        if ms[k + 1] * delta < 0:
            ms[k + 1] = 0.0
        # (m0/delta)^2 + (m1/delta)^2 <= 9, written without dividing by delta
        norm = math.hypot(ms[k], ms[k + 1])
        if norm > 3 * abs(delta):
            scale = 3 * abs(delta) / norm
            ms[k] *= scale
            ms[k + 1] *= scale
    return ms


class GeneratedF:
    """Generator built from ``h`` with gauge ``f(x0) = B``, ``f'(x0) = A``."""

    def __init__(
        self,
        h: HSpec,
        x0: Optional[float] = None,
        A: float = 1.0,
        B: float = 0.0,
        tol: Tolerance = DEFAULT_TOL,
        initial_nodes: int = 16,
        max_nodes: int = 20000,
    ):
        if A == 0 or not math.isfinite(A) or not math.isfinite(B):
            raise InputError("A must be finite and nonzero, B finite")
        self.h = h
        self.A, self.B = float(A), float(B)
        self.tol = tol
        lo, hi = h.domain.clamped()
        self.lo, self.hi = lo, hi
        self.domain = Interval(lo, hi)
        if x0 is None:
            x0 = 0.5 * (lo + hi) if h.domain.finite else min(max(0.0, lo), hi)
        x0 = float(x0)
        if not lo <= x0 <= hi:
            raise InputError(f"x0={x0!r} is outside the clamped domain [{lo!r}, {hi!r}]")
        self.x0 = x0

        recip = lambda u: 1.0 / h(u)
        nodes = sorted(set(np.linspace(lo, hi, initial_nodes).tolist()) | {x0})
        # inner integral from x0 to each node, accumulated panel by panel
        inner = {x0: 0.0}
        k0 = nodes.index(x0)
        for k in range(k0 + 1, len(nodes)):
            inner[nodes[k]] = inner[nodes[k - 1]] + integrate_adaptive(recip, nodes[k - 1], nodes[k], tol)
        for k in range(k0 - 1, -1, -1):
            inner[nodes[k]] = inner[nodes[k + 1]] - integrate_adaptive(recip, nodes[k], nodes[k + 1], tol)

        # refine panels until the Hermite midpoint matches direct quadrature
        pending = list(zip(nodes[:-1], nodes[1:]))
        while pending:
            a, b = pending.pop()
            m = 0.5 * (a + b)
            exact = inner[a] + integrate_adaptive(recip, a, m, tol)
            approx, _ = _hermite(a, b, inner[a], inner[b], recip(a), recip(b), m)
            if abs(approx - exact) > tol.target(exact) and len(inner) < max_nodes and a < m < b:
                inner[m] = exact
                pending.append((a, m))
                pending.append((m, b))
        self.xs = sorted(inner)
        self.inner = [inner[x] for x in self.xs]
        self.slopes = _limit_slopes(self.xs, self.inner, [recip(x) for x in self.xs])

        # cumulative outer integral at nodes, anchored at x0
        k0 = self.xs.index(x0)
        outer = [0.0] * len(self.xs)
        for k in range(k0 + 1, len(self.xs)):
            outer[k] = outer[k - 1] + self._panel_outer(k - 1, self.xs[k - 1], self.xs[k])
        for k in range(k0 - 1, -1, -1):
            outer[k] = outer[k + 1] - self._panel_outer(k, self.xs[k], self.xs[k + 1])
        self.outer = outer

    def _panel(self, x: float) -> int:
        k = bisect.bisect_right(self.xs, x) - 1
        return min(max(k, 0), len(self.xs) - 2)

    def inner_jet(self, x: float) -> tuple[float, float]:
        """Interpolated ``I(x)`` and its derivative."""
        k = self._panel(x)
        return _hermite(
            self.xs[k], self.xs[k + 1], self.inner[k], self.inner[k + 1], self.slopes[k], self.slopes[k + 1], x
        )

    def _panel_outer(self, k: int, a: float, b: float) -> float:
        xs, ys, ms = self.xs, self.inner, self.slopes

        def integrand(s):
            return math.exp(_hermite(xs[k], xs[k + 1], ys[k], ys[k + 1], ms[k], ms[k + 1], s)[0])

        return gauss_legendre(integrand, a, b, order=20)

    def _check(self, x: float):
        if not self.lo <= x <= self.hi:
            raise EvaluationError("outside the generated domain", x=x)

    def value(self, x: float) -> float:
        self._check(x)
        k = self._panel(x)
        return self.A * (self.outer[k] + self._panel_outer(k, self.xs[k], x)) + self.B

    __call__ = value

    def jet(self, x: float) -> Jet2:
        """``(f, f', f'')`` with ``f' = A exp(I(x))`` and ``f'' = f'/h(x)``."""
        self._check(x)
        d1 = self.A * math.exp(self.inner_jet(x)[0])
        return Jet2(self.value(x), d1, d1 / self.h(x))

    def as_generator(self) -> GeneratorFunction:
        return GeneratorFunction(self.jet, self.domain, name=f"generated[h={self.h.body.source}]")

    def sample_table(self, n: int = 64) -> list[tuple[float, float, float, float]]:
        return [(float(x), *self.jet(float(x))) for x in np.linspace(self.lo, self.hi, n)]

    def to_csv(self, n: int = 64, residual: Optional[float] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "f", "df", "d2f"])
        for row in self.sample_table(n):
            w.writerow([repr(v) for v in row])
        if residual is not None:
            buf.write(f"# roundtrip_h_max_rel_error={residual!r}\n")
        return buf.getvalue()


def generate_f(
    h: HSpec, x0: Optional[float] = None, A: float = 1.0, B: float = 0.0, tol: Tolerance = DEFAULT_TOL
) -> GeneratedF:
    return GeneratedF(h, x0, A, B, tol)


def roundtrip_h(
    h: HSpec,
    x0: Optional[float] = None,
    A: float = 1.0,
    B: float = 0.0,
    grid_n: int = 64,
    tol: Tolerance = DEFAULT_TOL,
    generated: Optional[GeneratedF] = None,
) -> float:
    """Max relative deviation of ``f'/f''`` from ``h`` on a grid.

    ``f'`` and ``f''`` are finite differences of the generated values, so the
    check covers the tabulated inner integral and the outer quadrature.
    """
    g = generated if generated is not None else generate_f(h, x0, A, B, tol)
    lo, hi = g.lo, g.hi
    span = hi - lo
    worst = 0.0
    for x in lo + span * (np.arange(grid_n) + 0.5) / grid_n:
        x = float(x)
        step = min(1e-3 * max(1.0, abs(x)), 0.2 * (x - lo), 0.2 * (hi - x))
        d1 = differentiate_fd(g.value, x, 1, step)
        d2 = differentiate_fd(g.value, x, 2, step)
        target = h(x)
        worst = max(worst, abs(d1 / d2 - target) / abs(target))
    return worst

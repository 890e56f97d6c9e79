"""f-potentials (weighted quasi-arithmetic means) on finite distributions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DerivativeDegenerateError,
    DomainError,
    EvaluationError,
    InputError,
    MonotonicityError,
)
from .expr import Expression, Jet2
from .numerics import DEFAULT_TOL, Interval, Tolerance, invert_monotone

JetFn = Callable[[float], Jet2]

INCREASING = "increasing"
DECREASING = "decreasing"


@dataclass(frozen=True)
class WeightedDistribution:
    """Finite distribution: atom values ``xs`` with probabilities ``ps``."""

    xs: tuple
    ps: tuple

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        ps = tuple(float(v) for v in self.ps)
        if not xs or len(xs) != len(ps):
            raise InputError("distribution needs equally many values and probabilities (at least one)")
        if not all(math.isfinite(v) for v in xs):
            raise InputError("atom values must be finite")
        if not all(p > 0 and math.isfinite(p) for p in ps):
            raise InputError("probabilities must be positive")
        if abs(math.fsum(ps) - 1.0) > 1e-12:
            raise InputError(f"probabilities sum to {math.fsum(ps)!r}, not 1")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ps", ps)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]) -> "WeightedDistribution":
        atoms = list(atoms)
        return cls(tuple(a[0] for a in atoms), tuple(a[1] for a in atoms))

    @classmethod
    def normalized(cls, xs: Sequence[float], weights: Sequence[float]) -> "WeightedDistribution":
        w = [float(v) for v in weights]
        total = math.fsum(w)
        return cls(tuple(xs), tuple(v / total for v in w))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.xs, self.ps))

    def __len__(self):
        return len(self.xs)

    @property
    def nondegenerate(self) -> bool:
        return len(set(self.xs)) >= 2

    def shifted(self, psi: Sequence[float], t: float) -> "WeightedDistribution":
        """Atomwise ``phi + t*psi`` with the same probabilities."""
        if len(psi) != len(self.xs):
            raise InputError("psi needs one value per atom")
        return WeightedDistribution(tuple(x + t * d for x, d in zip(self.xs, psi)), self.ps)

    def to_json(self) -> list[dict]:
        return [{"x": x, "p": p} for x, p in self.atoms]

    @classmethod
    def from_json(cls, data) -> "WeightedDistribution":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, list):
            raise InputError("distribution JSON must be an array of {\"x\", \"p\"} objects")
        try:
            return cls.from_atoms((float(a["x"]), float(a["p"])) for a in data)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad distribution entry: {exc}") from None

    @classmethod
    def parse_atoms(cls, text: str) -> "WeightedDistribution":
        """Parse inline ``"x:p,x:p,..."``."""
        atoms = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            try:
                x, p = chunk.split(":")
                atoms.append((float(x), float(p)))
            except ValueError:
                raise InputError(f"bad atom {chunk!r}; expected 'x:p'") from None
        return cls.from_atoms(atoms)


class GeneratorFunction:
    """Strictly monotone ``f`` on an open interval, evaluable with jets.

    ``jet`` returns ``(f, f', f'')``.  ``inverse`` may supply an exact
    inverse; otherwise values are inverted numerically.
    """

    def __init__(
        self,
        jet: JetFn,
        domain: Interval,
        name: str = "f",
        inverse: Optional[Callable[[float], float]] = None,
        check_points: int = 64,
    ):
        self._jet = jet
        self.domain = domain
        self.name = name
        self._inverse = inverse
        grid = domain.grid(max(check_points, 2))
        vals = [self.value(float(x)) for x in grid]
        diffs = np.diff(vals)
        if np.all(diffs >= 0) and vals[-1] > vals[0]:
            self.direction = INCREASING
        elif np.all(diffs <= 0) and vals[-1] < vals[0]:
            self.direction = DECREASING
        else:
            bad = int(np.argmax((diffs < 0) if vals[-1] > vals[0] else (diffs > 0)))
            raise MonotonicityError(f"{name} is not strictly monotone on {domain} (near x={grid[bad]!r})")
        self.image = (min(vals[0], vals[-1]), max(vals[0], vals[-1]))

    @classmethod
    def from_expr(cls, source: str, domain: Interval, **kw) -> "GeneratorFunction":
        e = Expression(source)
        return cls(e.jet, domain, name=e.source, **kw)

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == INCREASING else -1.0

    def jet(self, x: float) -> Jet2:
        j = self._jet(x)
        if not isinstance(j, Jet2):
            j = Jet2(*j)
        if not j.isfinite():
            raise EvaluationError(f"non-finite jet of {self.name}", x=x)
        return j

    def value(self, x: float) -> float:
        return self.jet(x).value

    __call__ = value

    def derivative(self, x: float) -> float:
        return self.jet(x).d1

    def inverse(self, y: float, bracket: Optional[tuple[float, float]] = None, tol: Tolerance = DEFAULT_TOL) -> float:
        if self._inverse is not None:
            return self._inverse(y)
        return invert_monotone(self.value, y, self.domain, tol, fprime=self.derivative, bracket=bracket)

    def image_interval(self) -> Interval:
        """Open interval ``f(I)`` over the clamped sweep range."""
        lo, hi = self.domain.clamped()
        a, b = self.value(lo), self.value(hi)
        return Interval(min(a, b), max(a, b))

    def affine(self, A: float, B: float) -> "GeneratorFunction":
        """The gauge-equivalent generator ``A f + B``."""
        if A == 0:
            raise InputError("A must be nonzero")
        base = self._jet

        def jet(x):
            v, d1, d2 = base(x)
            return Jet2(A * v + B, A * d1, A * d2)

        return GeneratorFunction(jet, self.domain, name=f"{A!r}*({self.name})+{B!r}")

    def inverted(self) -> "GeneratorFunction":
        """``g = f^{-1}`` on ``f(I)``, with jets ``g' = 1/f'``, ``g'' = -f''/f'^3``."""
        f = self
        lo, hi = self.domain.clamped()

        def jet(y):
            x = f.inverse(y, bracket=(lo, hi))
            _, d1, d2 = f.jet(x)
            return Jet2(x, 1.0 / d1, -d2 / (d1 * d1 * d1))

        return GeneratorFunction(jet, self.image_interval(), name=f"inverse({self.name})", inverse=f.value)

    def __repr__(self):
        return f"GeneratorFunction({self.name!r}, {self.domain})"


def _check_domain(f: GeneratorFunction, dist: WeightedDistribution):
    for x in dist.xs:
        if x not in f.domain:
            raise DomainError(f"atom {x!r} is outside the domain {f.domain} of {f.name}")


def mean_of_f(f: GeneratorFunction, dist: WeightedDistribution) -> float:
    """``sum p_i f(x_i)``, exactly rounded."""
    return math.fsum(p * f.value(x) for x, p in dist.atoms)


def eval_potential(f: GeneratorFunction, dist: WeightedDistribution, tol: Tolerance = DEFAULT_TOL) -> float:
    """``f^{-1}(sum p_i f(x_i))``, searched on ``[min x_i, max x_i]``."""
    _check_domain(f, dist)
    lo, hi = min(dist.xs), max(dist.xs)
    if lo == hi:
        return lo
    y = mean_of_f(f, dist)
    flo, fhi = f.value(lo), f.value(hi)
    ymin, ymax = min(flo, fhi), max(flo, fhi)
    # rounding in the weighted sum can push y a hair outside the bracket image
    y = min(max(y, ymin), ymax)
    x = f.inverse(y, bracket=(lo, hi), tol=tol)
    return min(max(x, lo), hi)


def _nonzero_d1(f: GeneratorFunction, x: float) -> Jet2:
    j = f.jet(x)
    if j.d1 == 0:
        raise DerivativeDegenerateError(f"f'({x!r}) vanishes for {f.name}")
    return j


def derivative_density(f: GeneratorFunction, dist: WeightedDistribution) -> list[float]:
    """``rho_i = f'(x_i) / f'(lambda_f)``."""
    lam = eval_potential(f, dist)
    d_lam = _nonzero_d1(f, lam).d1
    return [_nonzero_d1(f, x).d1 / d_lam for x in dist.xs]


def directional_derivatives(
    f: GeneratorFunction, dist: WeightedDistribution, psi: Sequence[float]
) -> tuple[float, float]:
    """First and second derivative of ``t -> lambda_f(phi + t psi)`` at 0."""
    if len(psi) != len(dist):
        raise InputError("psi needs one value per atom")
    lam = eval_potential(f, dist)
    jl = _nonzero_d1(f, lam)
    jets = [f.jet(x) for x in dist.xs]
    s1 = math.fsum(p * j.d1 * d for p, j, d in zip(dist.ps, jets, psi))
    s2 = math.fsum(p * j.d2 * d * d for p, j, d in zip(dist.ps, jets, psi))
    first = s1 / jl.d1
    second = s2 / jl.d1 - jl.d2 * s1 * s1 / jl.d1 ** 3
    return first, second


def cgf(dist: WeightedDistribution, t: float) -> float:
    """Cumulant generating function ``ln sum p_i exp(t x_i)`` (max-shifted)."""
    exps = [t * x for x in dist.xs]
    m = max(exps)
    return m + math.log(math.fsum(p * math.exp(e - m) for p, e in zip(dist.ps, exps)))

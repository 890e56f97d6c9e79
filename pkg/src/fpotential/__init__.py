"""f-potentials: weighted quasi-arithmetic means, their convexity and generators."""

__version__ = "0.1.0"

from .criteria import ClassificationReport, classify_potential, compute_H, compute_h, dual_classify
from .errors import FPotentialError, InputError, NumericError
from .expr import Expression, Jet2, parse
from .generator import HSpec, generate_f, roundtrip_h
from .means import GeneratorFunction, WeightedDistribution, eval_potential
from .numerics import Interval, Tolerance

__all__ = [
    "ClassificationReport",
    "Expression",
    "FPotentialError",
    "GeneratorFunction",
    "HSpec",
    "InputError",
    "Interval",
    "Jet2",
    "NumericError",
    "Tolerance",
    "WeightedDistribution",
    "classify_potential",
    "compute_H",
    "compute_h",
    "dual_classify",
    "eval_potential",
    "generate_f",
    "parse",
    "roundtrip_h",
]

"""Dynamic contagious point processes: simulation, exact oracles and limit-theorem checks."""
from .displacement import CommonCopy, FiniteDiscrete, Gaussian, Independent, MixtureLaw, PointMass, UniformBox
from .env import (Constant, DisplacementSpec, Explicit, Exponential, IidFiniteSupport, Initial, Periodic, PowerLaw,
                  StepSpec, TwoStateMarkov, materialize, scalar_series)
from .process import backward_sample_mother, exact_enumerate, init, run, simulate_replicates, step
from .wsampler import PrefixWeightIndex

__version__ = "0.1.0"

__all__ = [
    "CommonCopy", "FiniteDiscrete", "Gaussian", "Independent", "MixtureLaw", "PointMass", "UniformBox",
    "Constant", "DisplacementSpec", "Explicit", "Exponential", "IidFiniteSupport", "Initial", "Periodic", "PowerLaw",
    "StepSpec", "TwoStateMarkov", "materialize", "scalar_series",
    "backward_sample_mother", "exact_enumerate", "init", "run", "simulate_replicates", "step",
    "PrefixWeightIndex",
]

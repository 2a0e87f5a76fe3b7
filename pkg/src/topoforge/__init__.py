"""topoforge: random patch-antenna topologies, screened by size rescaling and refined by trust-region search."""
from .geometry import DesignVector, FixedParams, build_layout, is_feasible, random_design
from .simbackend import EvalCounter, Fidelity, FrequencyGrid, MockBackend, ResponseCurve, evaluate, make_backend

__version__ = "0.1.0"

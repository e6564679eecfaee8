"""Exact solver for the quantum master equation on polynomial BV models."""

__version__ = "0.1.0"

from .super_algebra import Element, HbarPoly, Variable, VariableTable, bv_bracket, bv_delta, k_operator, q_operator
from .bv_model import GAUGED, ISOLATED, GaugeData, ModelSpec, build_model
from .master_solver import solve
from .errors import BVError

"""Wave cones, symbols and singular-part checks for A-free measures.

Submodules are imported on first attribute access so that the command line
can set thread limits before numpy loads.
"""
from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "PdeOperator": "operator_core",
    "principal_symbol": "operator_core",
    "full_symbol": "operator_core",
    "order": "operator_core",
    "augment_with_rhs": "operator_core",
    "load_operator": "operator_core",
    "save_operator": "operator_core",
    "in_wave_cone": "wavecone",
    "kernel_basis": "wavecone",
    "constant_rank_check": "wavecone",
    "SphereSampling": "wavecone",
    "KVector": "exterior",
    "KCovector": "exterior",
    "wedge": "exterior",
    "interior_product": "exterior",
    "is_simple": "exterior",
    "annihilator_covector": "exterior",
    "GridMeasure": "grid",
    "verify_polar_in_cone": "grid_measure",
    "build_regularizer": "multiplier",
    "apply_multiplier": "multiplier",
    "PeriodicField": "multiplier",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

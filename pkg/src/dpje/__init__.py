"""Approximate John ellipsoids of symmetric polytopes by a sketched
fixed-point iteration, with an optional differentially private mode.

Submodules load on first attribute access so that ``dpje.cli`` can cap
thread pools before numpy is imported.
"""
import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "Polytope": "polytope", "NeighborPerturbation": "polytope",
    "load_polytope": "polytope", "save_polytope": "polytope",
    "make_neighbor": "polytope", "spectral_stats": "polytope",
    "gram": "numerics", "leverage": "numerics", "inv_sqrt": "numerics",
    "perturb_bounds": "numerics",
    "exact_iterate": "exact_je", "dual_objective": "exact_je",
    "check_optimality": "exact_je",
    "NoiseSpec": "noise",
    "PrivacySpec": "accountant", "calibrate_sigma": "accountant",
    "lipschitz_bound": "lipschitz", "audit_lipschitz": "lipschitz",
    "RunConfig": "solver", "run": "solver", "containment_check": "solver",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

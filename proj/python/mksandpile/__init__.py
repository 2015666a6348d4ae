"""Monge-Kantorovich sandpile solver bindings.

The compiled module exposes the core operations: convex gauges (Body),
polygonal domains with visibility and geodesics (Domain), and the full
solve/diagnose pipeline (run_scenario, solve_fields).
"""

try:
    from ._mksandpile import *  # noqa: F401,F403
    from ._mksandpile import __doc__ as _core_doc  # noqa: F401
except ImportError:  # development layout: extension on sys.path
    from _mksandpile import *  # noqa: F401,F403

__version__ = "0.1.0"

"""Scalar potentials for non-vanishing vector fields on boxes.

Thin re-export of the compiled extension: field specs, integrability checks,
local solution charts, level-set traces, quasi-convexity classification and
KKT certificates.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __doc__ as _core_doc
except ImportError:  # built extension next to the sources, not installed
    from _core import *  # type: ignore # noqa: F401,F403
    from _core import __doc__ as _core_doc

__all__ = [
    "Field",
    "Chart",
    "build_chart",
    "check_integrability",
    "qc_classify",
    "brute_force_qc",
    "trace_level_set",
    "compare_values",
    "kkt_verify",
    "kkt_search",
    "grid_minimum",
    "example_names",
    "verify_example",
]

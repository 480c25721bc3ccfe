"""Embedded operator-splitting solver for zero / nonnegative / SOC cone programs.

The compiled kernels are used when available; setting ``MCVX_PURE_PYTHON=1``
forces the numpy fallback.
"""

import os

if os.environ.get("MCVX_PURE_PYTHON"):
    from . import _fallback as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        from . import _fallback as kernels

BACKEND = "compiled" if kernels.__name__.endswith("_kernels") else "python"

from .solver import ConeSolution, ConeSpec, project_cone, solve_cone  # noqa: E402

__all__ = ["BACKEND", "ConeSolution", "ConeSpec", "kernels", "project_cone", "solve_cone"]

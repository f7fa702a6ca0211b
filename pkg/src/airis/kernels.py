"""Kernel dispatch: the compiled ``_core`` extension when built, else ``_fallback``.

Set ``AIRIS_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
implementation in use.
"""

import os

from . import _fallback

if os.environ.get("AIRIS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

exp_series_coeffs = _impl.exp_series_coeffs
markov_trace = _impl.markov_trace

__all__ = ["BACKEND", "exp_series_coeffs", "markov_trace"]

"""Hot-loop kernels with import-time backend selection.

The compiled Cython extension is used when it is available; otherwise the
pure-numpy fallback in :mod:`.pure` takes over (same semantics, slower).
Set ``CHANNEL_ERGODICS_BACKEND=pure`` or ``=compiled`` to force a choice;
forcing ``compiled`` raises if the extension was not built.
"""

from __future__ import annotations

import os

from . import pure

_requested = os.environ.get("CHANNEL_ERGODICS_BACKEND", "").strip().lower()
_compiled = None
if _requested in ("", "compiled", "cython", "c"):
    try:
        from . import _core as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None
        if _requested:
            raise ImportError(
                "CHANNEL_ERGODICS_BACKEND requested the compiled backend, "
                "but the extension is not built; install with `pip install -e .`"
            )
elif _requested in ("pure", "python", "py"):
    _compiled = None
else:
    raise ImportError(f"unknown CHANNEL_ERGODICS_BACKEND value {_requested!r}")

BACKEND = "compiled" if _compiled is not None else "pure"
_impl = _compiled if _compiled is not None else pure

trajectory_path = _impl.trajectory_path
x_process_path = _impl.x_process_path
lyapunov_path = _impl.lyapunov_path
theorem_b_path = _impl.theorem_b_path
qr_accumulate = _impl.qr_accumulate

PROB_TOL = pure.PROB_TOL
MIN_PROB = pure.MIN_PROB
COLLAPSE_REL_TOL = pure.COLLAPSE_REL_TOL


def available_backends() -> dict:
    """Name -> module map of the kernel backends importable in this build."""
    out = {"pure": pure}
    if _compiled is not None:
        out["compiled"] = _compiled
    else:
        try:
            from . import _core  # type: ignore[attr-defined]

            out["compiled"] = _core
        except ImportError:
            pass
    return out

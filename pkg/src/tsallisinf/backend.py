"""Episode-kernel selection.

The compiled Cython kernel is preferred; the pure-numpy loop is the
fallback when the extension was not built. Both expose the same
run_episode contract and produce the same action sequences.
"""

from __future__ import annotations

import numpy as np

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

ESTIMATOR_CODES = {"reduced-variance": 0, "importance-weighted": 1}

_BACKENDS = {"python": _kernel_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

DEFAULT_BACKEND = "cython" if _compiled is not None else "python"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return DEFAULT_BACKEND


def run_episode(
    losses: np.ndarray,
    uniforms: np.ndarray,
    estimator: str = "reduced-variance",
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Play one full episode against a loss matrix.

    Args:
        losses: (rounds, arms) matrix of observed losses in [0, 1].
        uniforms: one uniform draw per round, used for arm sampling.
        estimator: "reduced-variance" or "importance-weighted".
        backend: force "cython" or "python"; default picks the compiled
            kernel when available.

    Returns:
        (actions, incurred losses, per-round weight rows).
    """
    if estimator not in ESTIMATOR_CODES:
        raise ValueError(
            f"unknown estimator {estimator!r}, expected one of "
            f"{tuple(ESTIMATOR_CODES)}"
        )
    name = backend if backend is not None else DEFAULT_BACKEND
    try:
        kernel = _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} not available, have {available_backends()}"
        ) from None
    losses = np.ascontiguousarray(losses, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    return kernel.run_episode(losses, uniforms, ESTIMATOR_CODES[estimator])

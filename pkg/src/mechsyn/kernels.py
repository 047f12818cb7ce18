"""Backend selection for the batched four-bar kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded. Set ``MECHSYN_PURE_PYTHON=1`` to force the
fallback. The two backends agree to rounding, but not bit for bit, so a
seeded run is reproducible only within one backend.
"""
import os

BACKEND = "python"

if os.environ.get("MECHSYN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from mechsyn._ckernels import coupler_states, path_fob  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from mechsyn._kernels_py import coupler_states, path_fob  # noqa: F401


def available_backends():
    """Names of the importable kernel modules, compiled first."""
    names = []
    try:
        import mechsyn._ckernels  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def load_backend(name):
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name == "cython":
        from mechsyn import _ckernels

        return _ckernels
    if name == "python":
        from mechsyn import _kernels_py

        return _kernels_py
    raise ValueError(f"unknown kernel backend {name!r}")

"""Hot numerical kernels with a compiled core and a NumPy fallback.

The compiled extension (Cython) is preferred when importable; otherwise
the pure NumPy reference implementation is used.  `BACKEND` reports the
active choice and `use_backend` switches it explicitly (used by tests and
the kernel benchmark).
"""

from . import _ref

try:  # pragma: no cover - depends on build environment
    from . import _core

    _impl = _core
    BACKEND = "cython"
except ImportError:  # pragma: no cover
    _impl = _ref
    BACKEND = "numpy"

_BACKENDS = {"numpy": _ref}
if _impl is not _ref:
    _BACKENDS["cython"] = _impl


def available_backends():
    """Names of the importable kernel backends."""
    return sorted(_BACKENDS)


def use_backend(name):
    """Switch the active kernel backend ('numpy' or 'cython')."""
    global _impl, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    _impl = _BACKENDS[name]
    BACKEND = name


def poisson_value(g, counts, t, hd, sigma):
    return _impl.poisson_value(g, counts, t, hd, sigma)


def poisson_grad(g, dens, sigma, out):
    return _impl.poisson_grad(g, dens, sigma, out)


def kl_value(g, gdag, sigma, hd):
    return _impl.kl_value(g, gdag, sigma, hd)


def entropy_prox(v, step, lo, hi, out):
    return _impl.entropy_prox(v, step, lo, hi, out)

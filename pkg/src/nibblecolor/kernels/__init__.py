"""Hot-loop kernels with two interchangeable backends.

The numba backend jit-compiles plain loops; the numpy backend is a vectorized
twin used when numba is unavailable or when ``NIBBLECOLOR_KERNELS=numpy`` is
set.  Both operate on integers only and return bit-identical arrays, which the
test suite asserts.  ``nibblecolor bench`` compares their throughput.
"""

from __future__ import annotations

import os

from . import backend_numpy

_FORCED = os.environ.get("NIBBLECOLOR_KERNELS", "").strip().lower()
_backend_name = "numpy"
_backend_mod = backend_numpy

if _FORCED not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"NIBBLECOLOR_KERNELS={_FORCED!r} not understood; use 'numba' or 'numpy'"
    )


def _try_numba():
    from . import backend_numba  # deferred: importing numba is slow

    return backend_numba


if _FORCED != "numpy":
    try:
        _backend_mod = _try_numba()
        _backend_name = "numba"
    except ImportError:
        if _FORCED == "numba":
            raise
        _backend_mod = backend_numpy
        _backend_name = "numpy"


def get_backend() -> str:
    return _backend_name


def set_backend(name: str) -> str:
    """Switch backends at runtime (used by tests and the benchmark)."""
    global _backend_name, _backend_mod
    if name == "numpy":
        _backend_mod, _backend_name = backend_numpy, "numpy"
    elif name == "numba":
        _backend_mod, _backend_name = _try_numba(), "numba"
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return _backend_name


def available_backends() -> tuple[str, ...]:
    out = ["numpy"]
    try:
        _try_numba()
        out.insert(0, "numba")
    except ImportError:
        pass
    return tuple(out)


def round_kernel(ci, active, psi_pos):
    """One nibble round on a compiled instance.

    Returns (acthit, excl, in_x, ell, t, a, k, d):
      acthit[vc]  bitmask over membership slots: an activated neighbor in that
                  member graph tentatively took a conflicting color
      excl[vc]    bitmask: slot s set when some activated vertex outside that
                  member graph knocked this (vertex, color) out
      in_x[v]     1 when v is activated and keeps its tentative color
      ell[v]      surviving list size
      t,a,k,d     per-triple statistics
    """
    return _backend_mod.round_kernel(
        len(ci.vertex_ids),
        int(ci.list_indptr[-1]),
        ci.n_triples,
        ci.list_indptr,
        ci.pair_u,
        ci.pair_v,
        ci.pair_pu,
        ci.pair_pv,
        ci.pair_vc_u,
        ci.pair_vc_v,
        ci.pair_tri_u,
        ci.pair_tri_v,
        ci.pair_uslot,
        ci.pair_vslot,
        ci.pair_kmask_u,
        ci.pair_kmask_v,
        ci.pair_sbit_u,
        ci.pair_sbit_v,
        active,
        psi_pos,
    )


def conflict_kernel(ci, psi_pos):
    """Conflicted-vertex mask and conflict count for a total tentative coloring."""
    return _backend_mod.conflict_kernel(
        len(ci.vertex_ids), ci.pair_u, ci.pair_v, ci.pair_pu, ci.pair_pv, psi_pos
    )

"""The array kernels against the definitional oracle and each other."""

import numpy as np
import pytest

from nibblecolor import kernels
from nibblecolor.compiled import compile_instance, is_uniformly_normalized
from nibblecolor.lab import block_design_instance, outcome_statistics
from nibblecolor.nibble import derive_rng, sample_arrays

from conftest import random_family


def _run_both(ci, active, psi_pos):
    outs = {}
    previous = kernels.get_backend()
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        outs[backend] = kernels.round_kernel(ci, active, psi_pos)
    kernels.set_backend(previous)
    return outs


@pytest.mark.parametrize("seed", range(80))
def test_kernels_match_definitions_and_each_other(seed):
    made = random_family(seed)
    if made is None:
        pytest.skip("random gluing broke near-disjointness")
    inst, asgn = made
    ci = compile_instance(inst, asgn)
    for trial, p in enumerate((0.0, 0.35, 0.8, 1.0)):
        active, psi_pos = sample_arrays(ci, p, derive_rng(seed, trial))
        outs = _run_both(ci, active, psi_pos)
        if len(outs) == 2:
            for a, b in zip(outs["numba"], outs["numpy"]):
                assert np.array_equal(a, b)
        acthit, excl, in_x, ell, t, a, k, d = next(iter(outs.values()))

        tentative = {
            ci.vertex_ids[v]: int(ci.colors_of(v)[psi_pos[v]]) for v in range(ci.n)
        }
        activated = frozenset(ci.vertex_ids[v] for v in range(ci.n) if active[v])
        oracle = outcome_statistics(inst, asgn, activated, tentative)

        for v in inst.vertex_registry:
            assert oracle["ell"][v] == ell[ci.vid[v]]
        assert oracle["kept"] == frozenset(
            ci.vertex_ids[v] for v in range(ci.n) if in_x[v]
        )
        for key, val in oracle["a"].items():
            idx = ci.triple_index(*key)
            assert val == a[idx]
            assert oracle["k"][key] == k[idx]
            assert oracle["d"][key] == d[idx]
            assert oracle["t"][key] == t[idx]
        assert np.all(d <= a + k)


def test_p_zero_and_one_extremes():
    inst, asgn = block_design_instance(2, 2, 3)
    ci = compile_instance(inst, asgn)
    active, psi_pos = sample_arrays(ci, 0.0, derive_rng(0))
    assert active.sum() == 0
    acthit, excl, in_x, ell, t, a, k, d = kernels.round_kernel(ci, active, psi_pos)
    assert np.all(ell == 3)       # nothing removed
    assert np.all(a == 0)
    assert in_x.sum() == 0
    active, psi_pos = sample_arrays(ci, 1.0, derive_rng(0))
    assert active.sum() == ci.n
    _, _, _, _, _, _, k1, _ = kernels.round_kernel(ci, active, psi_pos)
    assert np.all(k1 == 0)        # no unactivated neighbors remain


def test_block_design_is_normalized():
    for c, d, lam in ((1, 2, 2), (2, 1, 2), (2, 2, 4), (3, 2, 2)):
        inst, asgn = block_design_instance(c, d, lam)
        assert inst.validate().ok
        ci = compile_instance(inst, asgn)
        assert is_uniformly_normalized(ci, d)


def test_compile_rejects_invalid_instance():
    from nibblecolor import ListAssignment, MemberGraph, UnionInstance

    bad = UnionInstance(
        [
            MemberGraph.build("g1", ["x", "y", "z"], [("x", "y")]),
            MemberGraph.build("g2", ["x", "y"], []),
        ],
        2,
    )
    with pytest.raises(ValueError, match="invalid instance"):
        compile_instance(bad, ListAssignment({v: [1] for v in "xyz"}))


def test_backend_env_and_switch():
    assert kernels.get_backend() in ("numba", "numpy")
    prev = kernels.get_backend()
    assert kernels.set_backend("numpy") == "numpy"
    kernels.set_backend(prev)
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")

"""Throughput comparison of the two kernel backends on one workload."""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .compiled import compile_instance
from .instance import ListAssignment
from .lab import random_linear_hypergraph
from .nibble import derive_rng, sample_arrays
from .pipeline import line_graph_union


def build_workload(n_vertices: int = 200, k: int = 3, degree: int = 20, seed: int = 0):
    h = random_linear_hypergraph(n_vertices, k, degree, seed)
    instance, _ = line_graph_union(h)
    n_colors = int(np.ceil(1.5 * h.max_degree()))
    lists = ListAssignment({v: range(n_colors) for v in instance.vertex_registry})
    return compile_instance(instance, lists)


def time_backend(ci, backend: str, rounds: int, p: float = 0.1, seed: int = 1) -> float:
    previous = kernels.get_backend()
    kernels.set_backend(backend)
    try:
        # warm-up pass compiles jitted code before the clock starts
        active, psi_pos = sample_arrays(ci, p, derive_rng(seed, 0))
        kernels.round_kernel(ci, active, psi_pos)
        t0 = time.perf_counter()
        for r in range(rounds):
            active, psi_pos = sample_arrays(ci, p, derive_rng(seed, r + 1))
            kernels.round_kernel(ci, active, psi_pos)
        return time.perf_counter() - t0
    finally:
        kernels.set_backend(previous)


def run_benchmark(n_vertices=200, k=3, degree=20, rounds=200, seed=0) -> str:
    ci = build_workload(n_vertices, k, degree, seed)
    lines = [
        f"workload: {ci.n} vertices, {ci.n_pairs} conflict pairs, "
        f"{ci.n_triples} statistic triples, {rounds} rounds",
        f"{'backend':<8} {'total_s':>9} {'rounds/s':>10} {'pairs/s':>12}",
    ]
    results = {}
    for backend in kernels.available_backends():
        total = time_backend(ci, backend, rounds)
        results[backend] = total
        lines.append(
            f"{backend:<8} {total:>9.3f} {rounds / total:>10.1f} "
            f"{rounds * 2 * ci.n_pairs / total:>12.3e}"
        )
    if len(results) == 2:
        lines.append(
            f"speedup numba over numpy: {results['numpy'] / results['numba']:.2f}x"
        )
    # the two backends must agree exactly on a fresh sample
    active, psi_pos = sample_arrays(ci, 0.1, derive_rng(seed, 999))
    outs = {}
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        outs[backend] = kernels.round_kernel(ci, active, psi_pos)
    if len(outs) == 2:
        agree = all(
            np.array_equal(a, b) for a, b in zip(outs["numba"], outs["numpy"])
        )
        lines.append(f"bit-identical outputs: {agree}")
    return "\n".join(lines)

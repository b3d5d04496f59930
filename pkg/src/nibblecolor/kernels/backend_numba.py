"""Jit-compiled backend: straightforward loops over the conflict pairs."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _round_impl(
    n,
    total_list,
    n_triples,
    list_indptr,
    pair_u,
    pair_v,
    pair_pu,
    pair_pv,
    pair_vc_u,
    pair_vc_v,
    pair_tri_u,
    pair_tri_v,
    pair_uslot,
    pair_vslot,
    pair_kmask_u,
    pair_kmask_v,
    pair_sbit_u,
    pair_sbit_v,
    active,
    psi_pos,
):
    acthit = np.zeros(total_list, dtype=np.int64)
    excl = np.zeros(total_list, dtype=np.int64)
    n_pairs = len(pair_u)

    for p in range(n_pairs):
        u = pair_u[p]
        v = pair_v[p]
        if active[u] != 0 and psi_pos[u] == pair_pu[p]:
            acthit[pair_vc_v[p]] |= pair_sbit_v[p]
            excl[pair_vc_v[p]] |= pair_kmask_v[p]
        if active[v] != 0 and psi_pos[v] == pair_pv[p]:
            acthit[pair_vc_u[p]] |= pair_sbit_u[p]
            excl[pair_vc_u[p]] |= pair_kmask_u[p]

    in_x = np.zeros(n, dtype=np.uint8)
    for w in range(n):
        if active[w] != 0 and acthit[list_indptr[w] + psi_pos[w]] == 0:
            in_x[w] = 1

    ell = np.zeros(n, dtype=np.int64)
    for w in range(n):
        cnt = 0
        for j in range(list_indptr[w], list_indptr[w + 1]):
            if acthit[j] == 0:
                cnt += 1
        ell[w] = cnt

    t = np.zeros(n_triples, dtype=np.int64)
    a = np.zeros(n_triples, dtype=np.int64)
    k = np.zeros(n_triples, dtype=np.int64)
    d = np.zeros(n_triples, dtype=np.int64)
    for p in range(n_pairs):
        u = pair_u[p]
        v = pair_v[p]
        # contributions of the u endpoint to the statistics of (v, pv)
        if psi_pos[u] == pair_pu[p]:
            t[pair_tri_v[p]] += 1
        if active[u] != 0:
            if in_x[u] == 0:
                a[pair_tri_v[p]] += 1
        elif (excl[pair_vc_u[p]] >> pair_uslot[p]) & 1 == 0:
            k[pair_tri_v[p]] += 1
        if in_x[u] == 0 and acthit[pair_vc_u[p]] == 0:
            d[pair_tri_v[p]] += 1
        # and symmetrically of the v endpoint to (u, pu)
        if psi_pos[v] == pair_pv[p]:
            t[pair_tri_u[p]] += 1
        if active[v] != 0:
            if in_x[v] == 0:
                a[pair_tri_u[p]] += 1
        elif (excl[pair_vc_v[p]] >> pair_vslot[p]) & 1 == 0:
            k[pair_tri_u[p]] += 1
        if in_x[v] == 0 and acthit[pair_vc_v[p]] == 0:
            d[pair_tri_u[p]] += 1

    return acthit, excl, in_x, ell, t, a, k, d


def round_kernel(*args):
    return _round_impl(*args)


@njit(cache=True)
def _conflict_impl(n, pair_u, pair_v, pair_pu, pair_pv, psi_pos):
    conflicted = np.zeros(n, dtype=np.uint8)
    count = 0
    for p in range(len(pair_u)):
        if psi_pos[pair_u[p]] == pair_pu[p] and psi_pos[pair_v[p]] == pair_pv[p]:
            conflicted[pair_u[p]] = 1
            conflicted[pair_v[p]] = 1
            count += 1
    return count, conflicted


def conflict_kernel(*args):
    return _conflict_impl(*args)

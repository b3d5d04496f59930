"""Vectorized fallback backend. Integer scatter ops only, so results match
the numba backend bit for bit."""

from __future__ import annotations

import numpy as np


def round_kernel(
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
    act = active.astype(bool)

    if len(pair_u):
        hit_u = act[pair_u] & (psi_pos[pair_u] == pair_pu)   # u kills (v, pv)
        hit_v = act[pair_v] & (psi_pos[pair_v] == pair_pv)   # v kills (u, pu)
        np.bitwise_or.at(acthit, pair_vc_v[hit_u], pair_sbit_v[hit_u])
        np.bitwise_or.at(excl, pair_vc_v[hit_u], pair_kmask_v[hit_u])
        np.bitwise_or.at(acthit, pair_vc_u[hit_v], pair_sbit_u[hit_v])
        np.bitwise_or.at(excl, pair_vc_u[hit_v], pair_kmask_u[hit_v])

    survived = acthit == 0
    in_x = np.zeros(n, dtype=np.uint8)
    if n:
        own_vc = list_indptr[:-1] + psi_pos
        in_x[act & survived[own_vc]] = 1

    cum = np.zeros(total_list + 1, dtype=np.int64)
    np.cumsum(survived, out=cum[1:])
    ell = cum[list_indptr[1:]] - cum[list_indptr[:-1]]

    t = np.zeros(n_triples, dtype=np.int64)
    a = np.zeros(n_triples, dtype=np.int64)
    k = np.zeros(n_triples, dtype=np.int64)
    d = np.zeros(n_triples, dtype=np.int64)
    if len(pair_u):
        inx = in_x.astype(bool)
        psi_match_u = psi_pos[pair_u] == pair_pu
        psi_match_v = psi_pos[pair_v] == pair_pv
        np.add.at(t, pair_tri_v[psi_match_u], 1)
        np.add.at(t, pair_tri_u[psi_match_v], 1)

        np.add.at(a, pair_tri_v[act[pair_u] & ~inx[pair_u]], 1)
        np.add.at(a, pair_tri_u[act[pair_v] & ~inx[pair_v]], 1)

        free_u = ((excl[pair_vc_u] >> pair_uslot) & 1) == 0
        free_v = ((excl[pair_vc_v] >> pair_vslot) & 1) == 0
        np.add.at(k, pair_tri_v[~act[pair_u] & free_u], 1)
        np.add.at(k, pair_tri_u[~act[pair_v] & free_v], 1)

        np.add.at(d, pair_tri_v[~inx[pair_u] & survived[pair_vc_u]], 1)
        np.add.at(d, pair_tri_u[~inx[pair_v] & survived[pair_vc_v]], 1)

    return acthit, excl, in_x, ell, t, a, k, d


def conflict_kernel(n, pair_u, pair_v, pair_pu, pair_pv, psi_pos):
    conflicted = np.zeros(n, dtype=np.uint8)
    if not len(pair_u):
        return 0, conflicted
    hit = (psi_pos[pair_u] == pair_pu) & (psi_pos[pair_v] == pair_pv)
    conflicted[pair_u[hit]] = 1
    conflicted[pair_v[hit]] = 1
    return int(hit.sum()), conflicted

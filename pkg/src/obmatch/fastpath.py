"""Batched Monte-Carlo evaluation of the randomized engines.

The harness needs tens of thousands of independent runs; doing them in
the traced pure-Python engines is too slow.  This module compiles one
numba kernel that replays the shared engine semantics (strict-greater
comparison over id-sorted adjacency, unit or budget charging) over a
whole batch of price draws, returning per-trial utilities, revenues and
money totals.

The kernel is differential-tested against the reference engines; any
divergence is a bug here, not there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .instance import Instance, ProblemClass


@dataclass(frozen=True)
class CompiledInstance:
    """CSR adjacency plus capacities, ready for the batch kernel."""

    n: int
    m: int
    indptr: np.ndarray  # (n+1,) int64
    eidx: np.ndarray  # bidder *index* per edge, id-sorted within a query
    ebid: np.ndarray  # integer bid per edge
    cap: np.ndarray  # (m,) capacity in units (OBM/SV) or money (general)
    unit_charge: bool
    bidder_ids: tuple[int, ...]


def compile_instance(instance: Instance) -> CompiledInstance:
    idx = {b.id: t for t, b in enumerate(instance.bidders)}
    n, m = instance.num_queries, instance.num_bidders
    indptr = np.zeros(n + 1, dtype=np.int64)
    eidx = []
    ebid = []
    for i in range(n):
        for j, bid in instance.edges[i]:  # already sorted by bidder id
            eidx.append(idx[j])
            ebid.append(bid)
        indptr[i + 1] = len(eidx)
    if instance.problem_class is ProblemClass.OBM:
        cap = np.ones(m, dtype=np.int64)
        unit = True
    elif instance.problem_class is ProblemClass.SINGLE_VALUED:
        cap = np.array([b.k for b in instance.bidders], dtype=np.int64)
        unit = True
    else:
        cap = np.array([b.budget for b in instance.bidders], dtype=np.int64)
        unit = False
    return CompiledInstance(
        n,
        m,
        indptr,
        np.array(eidx, dtype=np.int64),
        np.array(ebid, dtype=np.int64),
        cap,
        unit,
        tuple(b.id for b in instance.bidders),
    )


@njit(cache=True)
def _batch_kernel(indptr, eidx, ebid, cap, unit_charge, prices, U, R, W, Wf):
    trials = prices.shape[0]
    n = indptr.shape[0] - 1
    m = cap.shape[0]
    for t in range(trials):
        used = np.zeros(m, dtype=np.int64)
        w_real = 0
        w_fake = 0
        for i in range(n):
            best = -1
            best_val = 0.0
            best_bid = 0
            for e in range(indptr[i], indptr[i + 1]):
                j = eidx[e]
                if used[j] < cap[j]:
                    val = ebid[e] * (1.0 - prices[t, j])
                    if best < 0 or val > best_val:
                        best = j
                        best_val = val
                        best_bid = ebid[e]
            if best >= 0:
                p = prices[t, best]
                U[t, i] = best_bid * (1.0 - p)
                R[t, best] += best_bid * p
                if unit_charge:
                    used[best] += 1
                    w_real += best_bid
                else:
                    left = cap[best] - used[best]
                    pay = left if left < best_bid else best_bid
                    w_real += pay
                    w_fake += best_bid - pay
                    used[best] += pay
        W[t] = w_real
        Wf[t] = w_fake


@dataclass
class BatchResult:
    """Per-trial outcomes: U[t, i] query utilities, R[t, j] bidder
    revenues (bidder order = instance bidder order), integer W and Wf."""

    U: np.ndarray
    R: np.ndarray
    W: np.ndarray
    Wf: np.ndarray
    bidder_ids: tuple[int, ...]

    def r_column(self, bidder_id: int) -> np.ndarray:
        return self.R[:, self.bidder_ids.index(bidder_id)]


def trial_prices(instance: Instance, trials: int, seed: int) -> np.ndarray:
    """Price matrix (trials, m); row t matches draw_ranks(instance,
    (seed, t)) exactly, so batched and single runs agree bit for bit."""
    m = instance.num_bidders
    prices = np.empty((trials, m), dtype=np.float64)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        prices[t] = np.exp(rng.random(m) - 1.0)
    return prices


def run_batch(
    instance: Instance, trials: int, seed: int, prices: np.ndarray | None = None
) -> BatchResult:
    comp = compile_instance(instance)
    if prices is None:
        prices = trial_prices(instance, trials, seed)
    U = np.zeros((trials, comp.n), dtype=np.float64)
    R = np.zeros((trials, comp.m), dtype=np.float64)
    W = np.zeros(trials, dtype=np.int64)
    Wf = np.zeros(trials, dtype=np.int64)
    _batch_kernel(
        comp.indptr, comp.eidx, comp.ebid, comp.cap, comp.unit_charge, prices, U, R, W, Wf
    )
    return BatchResult(U, R, W, Wf, comp.bidder_ids)

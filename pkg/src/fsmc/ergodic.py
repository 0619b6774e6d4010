"""Irreducibility checks and stationary measures for finite chains."""
from __future__ import annotations

import itertools

import numpy as np

from .channel import ChannelError, s_marginal

RESIDUAL_TOL = 1e-10     # ||mu Q - mu||_inf enforced on every solve
ASSUMPTION1_CAP = 10**6  # refuse to enumerate more deterministic maps


def _sccs(adj):
    """Strongly connected components, iterative Kosaraju (no recursion)."""
    n = len(adj)
    radj = [[] for _ in range(n)]
    for i, row in enumerate(adj):
        for j in row:
            radj[j].append(i)
    order, seen = [], [False] * n
    for start in range(n):
        if seen[start]:
            continue
        stack = [(start, iter(adj[start]))]
        seen[start] = True
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if not seen[nxt]:
                    seen[nxt] = True
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()
    comp, labeled = [], [False] * n
    for start in reversed(order):
        if labeled[start]:
            continue
        members, stack = [], [start]
        labeled[start] = True
        while stack:
            node = stack.pop()
            members.append(node)
            for nxt in radj[node]:
                if not labeled[nxt]:
                    labeled[nxt] = True
                    stack.append(nxt)
        comp.append(members)
    return comp


def is_irreducible(q) -> bool:
    """True iff the support graph of the transition matrix is one SCC."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ChannelError("transition matrix must be square")
    n = q.shape[0]
    adj = [list(np.nonzero(q[i] > 0.0)[0]) for i in range(n)]
    return len(_sccs(adj)) == 1


def check_assumption1(ch, cap: int = ASSUMPTION1_CAP):
    """Check irreducibility of Q_f for every deterministic state-feedback map.

    Returns (ok, violators) where violators lists the maps f (tuples of input
    indices, one per state) whose induced chain is reducible.  By linearity of
    the transition law in the per-state input distribution, irreducibility for
    all deterministic maps extends to all stationary policies.
    """
    S, X = ch.n_states, ch.n_inputs
    if X**S > cap:
        raise ChannelError(f"{X}**{S} deterministic maps exceeds cap {cap}")
    ps = s_marginal(ch)
    violators = []
    for f in itertools.product(range(X), repeat=S):
        q = ps[np.arange(S), f, :]
        if not is_irreducible(q):
            violators.append(f)
    return (not violators), violators


def stationary_measure(q) -> np.ndarray:
    """Stationary distribution of an irreducible transition matrix.

    Direct sparse-free solve of mu (Q - I) = 0 with one row swapped for the
    normalization; falls back to power iteration on (Q + I)/2 if the linear
    system is numerically singular.  The residual ||mu Q - mu||_inf <= 1e-10
    is asserted on every call.
    """
    q = np.asarray(q, dtype=np.float64)
    n = q.shape[0]
    a = q.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    mu = None
    try:
        cand = np.linalg.solve(a, b)
        if np.all(np.isfinite(cand)) and cand.min() > -1e-9:
            mu = np.clip(cand, 0.0, None)
            mu /= mu.sum()
    except np.linalg.LinAlgError:
        mu = None
    if mu is None or float(np.max(np.abs(mu @ q - mu))) > RESIDUAL_TOL:
        # lazy chain has the same stationary law and no periodicity
        half = 0.5 * (q + np.eye(n))
        mu = np.full(n, 1.0 / n)
        for _ in range(10**5):
            nxt = mu @ half
            if float(np.max(np.abs(nxt - mu))) < 1e-13:
                mu = nxt
                break
            mu = nxt
        mu = np.clip(mu, 0.0, None)
        mu /= mu.sum()
    resid = float(np.max(np.abs(mu @ q - mu)))
    if resid > RESIDUAL_TOL:
        raise ChannelError(f"stationary solve residual {resid:.3g} > {RESIDUAL_TOL}")
    return mu

"""Irreducibility checks and stationary distributions."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fsmc
from fsmc import ChannelError
from conftest import make_random_channel


def test_is_irreducible_basics():
    assert fsmc.is_irreducible(np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert not fsmc.is_irreducible(np.array([[1.0, 0.0], [0.5, 0.5]]))
    # periodic but irreducible
    assert fsmc.is_irreducible(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_check_assumption_holds_on_positive_kernels():
    ch = make_random_channel(3)
    ok, violators = fsmc.check_assumption1(ch)
    assert ok and not violators


def test_check_assumption_reports_violating_map():
    # under input 0 state 0 is absorbing; under input 1 the chain mixes
    k = np.zeros((2, 2, 2, 2))
    k[0, 0, 0, :] = 0.5          # stay in state 0
    k[0, 1, :, 0] = 0.5          # mix
    k[1, 0, :, 1] = 0.5
    k[1, 1, :, 0] = 0.5
    ch = fsmc.channel_from_arrays(("a", "b"), ("0", "1"), ("u", "v"), k,
                                  [0.5, 0.5])
    ok, violators = fsmc.check_assumption1(ch)
    assert not ok
    assert violators
    f = violators[0]
    assert f[0] == 0             # the absorbing choice at state 0
    # the reported map really induces a reducible chain
    q = fsmc.induced_matrix(ch, fsmc.StationaryPolicy.deterministic(f, 2))
    assert not fsmc.is_irreducible(q)


def test_stationary_measure_two_state_closed_form():
    # leave probabilities a and b give weights (b, a) / (a + b)
    a, b = 0.7, 0.3
    q = np.array([[1 - a, a], [b, 1 - b]])
    mu = fsmc.stationary_measure(q)
    assert np.max(np.abs(mu - np.array([b, a]) / (a + b))) < 1e-12


def test_stationary_measure_always_returns_stationary_vector():
    # irreducibility is the caller's precondition; even degenerate input must
    # yield some vector with mu Q = mu (residual asserted inside)
    q = np.array([[1.0, 0.0], [0.0, 1.0]])
    mu = fsmc.stationary_measure(q)
    assert np.max(np.abs(mu @ q - mu)) < 1e-10
    assert abs(mu.sum() - 1.0) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000),
       st.integers(min_value=2, max_value=5))
def test_stationary_measure_properties(seed, n):
    gen = np.random.default_rng(seed)
    q = gen.random((n, n)) + 0.01
    q /= q.sum(axis=1, keepdims=True)
    mu = fsmc.stationary_measure(q)
    assert np.all(mu >= 0.0)
    assert abs(mu.sum() - 1.0) < 1e-12
    assert np.max(np.abs(mu @ q - mu)) < 1e-10


def test_stationary_measure_periodic_chain():
    # the alternating chain has stationary law (1/2, 1/2) (power iteration
    # on the raw matrix would not converge; the solver must still work)
    q = np.array([[0.0, 1.0], [1.0, 0.0]])
    mu = fsmc.stationary_measure(q)
    assert np.max(np.abs(mu - 0.5)) < 1e-12

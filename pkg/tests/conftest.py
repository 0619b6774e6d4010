"""Shared builders for the test suite.

Everything here constructs channels directly from probability arrays so that
tests exercise the library against independently written inputs.
"""

from __future__ import annotations

import numpy as np
import pytest

import fsmc


def make_bsc(p: float, initial=(1.0,)) -> fsmc.ChannelSpec:
    """Single-state binary symmetric channel with crossover p."""
    return fsmc.channel_from_arrays(
        ("s",), ("0", "1"), ("0", "1"),
        [[[[1.0 - p, p]], [[p, 1.0 - p]]]],
        list(initial),
    )


def make_z() -> fsmc.ChannelSpec:
    """Single-state channel where input 0 produces output 0 with certainty.

    KL(P(.|1) || P(.|0)) is infinite, so the divergence coefficient is +inf.
    """
    return fsmc.channel_from_arrays(
        ("s",), ("0", "1"), ("0", "1"),
        [[[[1.0, 0.0]], [[0.3, 0.7]]]],
        [1.0],
    )


def make_iid_state(mu=(0.4, 0.6), ps=(0.05, 0.2)) -> fsmc.ChannelSpec:
    """Two-state channel whose state sequence is i.i.d. mu and whose output is
    a state-dependent binary symmetric channel; no ISI by construction."""
    mu = np.asarray(mu, dtype=np.float64)
    k = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for x in range(2):
            for s2 in range(2):
                for y in range(2):
                    k[s, x, s2, y] = mu[s2] * ((1.0 - ps[s]) if y == x else ps[s])
    return fsmc.channel_from_arrays(("a", "b"), ("0", "1"), ("0", "1"), k, mu)


def make_random_channel(seed: int, n_states: int = 2, n_inputs: int = 2,
                        n_outputs: int = 2, floor: float = 0.05) -> fsmc.ChannelSpec:
    """Random fully supported channel; floor > 0 keeps every divergence finite
    and every deterministic-policy chain irreducible."""
    gen = np.random.default_rng(seed)
    k = gen.random((n_states, n_inputs, n_states, n_outputs)) + floor
    k /= k.sum(axis=(2, 3), keepdims=True)
    init = gen.random(n_states) + floor
    init /= init.sum()
    labels = lambda pre, m: tuple(f"{pre}{i}" for i in range(m))
    return fsmc.channel_from_arrays(labels("s", n_states), labels("x", n_inputs),
                                    labels("y", n_outputs), k, init)


@pytest.fixture()
def bsc() -> fsmc.ChannelSpec:
    return make_bsc(0.1)


@pytest.fixture()
def zchan() -> fsmc.ChannelSpec:
    return make_z()


@pytest.fixture()
def sym_example() -> fsmc.ChannelSpec:
    return fsmc.make_example(fsmc.symmetric_params())


def write_channel(tmp_path, ch, name="chan.json"):
    path = tmp_path / name
    fsmc.save_channel(ch, path)
    return path

"""Shared fixtures for decoder, harness and acceptance tests."""

import itertools

import numpy as np

import oracle
from ramac.channel import collision_channel, noiseless_channel, sample_outputs
from ramac.coding import CodebookLibrary, InputProfile, constant_profile, draw_theta
from ramac.regions import MIOracle


def idle(q):
    return np.eye(q)[0]


def uniform_on(q, support):
    p = np.zeros(q)
    p[list(support)] = 1.0 / len(support)
    return p


def two_level(q, low, high, split, r_max):
    return InputProfile(r_max, (split, r_max), (low, high), idle(q))


# noiseless 4-ary: uniform up to rate 0.5, a law skewed onto a busy symbol above it
NOISELESS_PROFILE = two_level(4, uniform_on(4, range(4)),
                              np.array([0.05 / 3, 0.95, 0.05 / 3, 0.05 / 3]), 0.5, 0.75)


def noiseless_oracle():
    return MIOracle(noiseless_channel(4), [NOISELESS_PROFILE])


def split_oracle():
    """Two users on the order-2 collision channel with equiprobable laws.

    User 1 sends 0 or 1; user 2 sends 0 or 2 below rate 0.5 and always 2
    above it, so its rate then exceeds what the channel carries for it.
    """
    p1 = constant_profile(uniform_on(5, [0, 1]), 0.5)
    p2 = two_level(5, uniform_on(5, [0, 2]), uniform_on(5, [2]), 0.5, 0.75)
    return MIOracle(collision_channel(2, 2), [p1, p2])


def transmit(orc, N, W, rng, seed=0):
    libs = [CodebookLibrary(seed, i, N, p) for i, p in enumerate(orc.profiles)]
    thetas = [draw_theta(rng) for _ in libs]
    xs = np.stack([lib.codewords(t, [w])[0] for lib, t, w in zip(libs, thetas, W)])
    y = sample_outputs(orc.channel, xs, rng)
    return libs, thetas, xs, y


def brute_candidates(y, libs, thetas, orc, member, eps):
    """Literal candidate set: every tuple, scalar region test, pure-Python typicality."""
    rows = oracle.channel_rows(orc.channel.transition.tolist(), orc.channel.input_sizes)
    out = []
    ranges = [range(1, lib.num_messages + 1) for lib in libs]
    cw = [lib.codewords(t, np.arange(1, lib.num_messages + 1)) for lib, t in zip(libs, thetas)]
    for W in itertools.product(*ranges):
        r = tuple(float(np.log2(w) / lib.N) for w, lib in zip(W, libs))
        if not member(r):
            continue
        xs = [cw[i][w - 1].tolist() for i, w in enumerate(W)]
        pmfs = [list(p) for p in orc.distribution(r)]
        if oracle.typical(rows, pmfs, xs, list(y), eps):
            out.append(W)
    return out

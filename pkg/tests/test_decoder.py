import numpy as np
import pytest

import oracle
from helpers import (NOISELESS_PROFILE, brute_candidates, noiseless_oracle, split_oracle,
                     transmit, uniform_on)
from ramac.channel import build_dmc, collision_channel, noiseless_channel
from ramac.coding import CodebookLibrary, InputProfile, collision_pmf, message_for_rate
from ramac.decoder import (DecodeOutcome, TypicalityParams, candidate_set, decode_all,
                           decode_subset, decode_user, is_jointly_typical)
from ramac.errors import BudgetExceeded, GuardrailError
from ramac.regions import (MIOracle, SubsetRegion, contains_all, contains_subset,
                           contains_user)


def test_params_and_outcome_invariants():
    with pytest.raises(ValueError):
        TypicalityParams(0.0)
    with pytest.raises(ValueError):
        DecodeOutcome("decoded", (0,), None)
    with pytest.raises(ValueError):
        DecodeOutcome("collision", (0,), (3,))
    assert not DecodeOutcome.collision((0,)).decoded


def test_typical_noiseless_examples():
    ch = noiseless_channel(2)
    x = np.array([0, 1, 1, 0, 1, 0, 0, 0])
    for eps in (1e-9, 0.1, TypicalityParams(0.5)):
        assert is_jointly_typical([x], x, [[0.5, 0.5]], ch, eps)
    y = x.copy()
    y[3] ^= 1
    assert not is_jointly_typical([x], y, [[0.5, 0.5]], ch, 10.0)


def test_typical_length_mismatch():
    ch = collision_channel(1, 2)
    d = [collision_pmf(0.5, 1)] * 2
    with pytest.raises(ValueError):
        is_jointly_typical([np.zeros(4, int), np.zeros(5, int)], np.zeros(4, int), d, ch, 0.1)
    with pytest.raises(ValueError):
        is_jointly_typical([np.zeros(4, int)], np.zeros(4, int), d, ch, 0.1)


def test_typical_matches_bruteforce(rng):
    g = np.random.default_rng(5)
    t = g.dirichlet(np.ones(3), size=(2, 3))
    t = t / t.sum(-1, keepdims=True)
    ch = build_dmc(2, [2, 3], 3, t)
    rows = oracle.channel_rows(ch.transition.tolist(), ch.input_sizes)
    agree = typ = 0
    for _ in range(300):
        d = [g.dirichlet(np.ones(2)), g.dirichlet(np.ones(3))]
        N = int(rng.integers(3, 12))
        xs = [rng.choice(2, N, p=d[0]), rng.choice(3, N, p=d[1])]
        y = np.array([rng.choice(3, p=t[a, b]) for a, b in zip(*xs)])
        eps = float(rng.choice([0.2, 0.5, 1.0]))
        got = is_jointly_typical(xs, y, d, ch, eps)
        assert got == oracle.typical(rows, [list(p) for p in d],
                                     [list(x) for x in xs], list(y), eps)
        typ += got
    assert typ > 10


def test_noiseless_candidate_set_contains_sent_message(rng):
    orc = noiseless_oracle()
    libs, thetas, xs, y = transmit(orc, 8, [5], rng)
    cands = candidate_set(y, orc.channel, libs, thetas, SubsetRegion(orc, [0]), 0.1)
    assert (5,) in cands
    for (w,) in cands:
        assert np.array_equal(libs[0].codewords(thetas[0], [w])[0], y)


def test_empty_region_gives_empty_set(rng):
    orc = noiseless_oracle()
    libs, thetas, _, y = transmit(orc, 8, [5], rng)
    assert candidate_set(y, orc.channel, libs, thetas,
                         lambda r: np.zeros(len(r), bool), 0.1) == []


def _random_instance(g):
    """Small two-user collision-channel instance with mixed equiprobable and skewed laws."""
    q = 5
    laws = [uniform_on(q, [0, 1]), uniform_on(q, [0, 2]), uniform_on(q, [1, 2, 3, 4]),
            uniform_on(q, [3]), collision_pmf(0.5, 2)]
    profs = []
    for _ in range(2):
        a, b = g.choice(len(laws), 2)
        r_max = float(g.choice([0.25, 0.5]))
        profs.append(InputProfile(r_max, (r_max / 2, r_max), (laws[a], laws[b]), np.eye(q)[0]))
    return MIOracle(collision_channel(2, 2), profs)


@pytest.mark.parametrize("seed", range(8))
def test_candidate_set_matches_literal_enumeration(seed):
    g = np.random.default_rng(seed)
    orc = _random_instance(g)
    N = int(g.choice([4, 6, 8]))
    libs = [CodebookLibrary(seed, i, N, p) for i, p in enumerate(orc.profiles)]
    W = [int(g.integers(1, lib.num_messages + 1)) for lib in libs]
    _, thetas, _, y = transmit(orc, N, W, g, seed=seed)
    eps = float(g.choice([0.3, 0.7, 1.5]))
    for S0 in ([0], [1], [0, 1]):
        region = SubsetRegion(orc, S0)
        want = brute_candidates(y, libs, thetas, orc,
                                lambda r: contains_subset(r, S0, orc), eps)
        for pre in (True, False):
            assert candidate_set(y, orc.channel, libs, thetas, region, eps,
                                 prefilter=pre) == want


def test_prefilter_does_not_change_results():
    nonempty = 0
    for seed in range(30):
        g = np.random.default_rng(1000 + seed)
        orc = _random_instance(g)
        N = int(g.choice([8, 10, 12]))
        libs = [CodebookLibrary(seed, i, N, p) for i, p in enumerate(orc.profiles)]
        W = [int(g.integers(1, lib.num_messages + 1)) for lib in libs]
        _, thetas, _, y = transmit(orc, N, W, g, seed=seed)
        eps = float(g.choice([0.1, 0.3, 0.6]))
        region = SubsetRegion(orc, [0, 1])
        a = candidate_set(y, orc.channel, libs, thetas, region, eps, prefilter=True)
        b = candidate_set(y, orc.channel, libs, thetas, region, eps, prefilter=False)
        assert a == b
        nonempty += bool(a)
    assert nonempty >= 5


def test_candidates_are_sorted_and_region_feasible(rng):
    orc = split_oracle()
    libs, thetas, _, y = transmit(orc, 8, [3, 20], rng)
    cands = candidate_set(y, orc.channel, libs, thetas, SubsetRegion(orc, [0]), 0.5)
    assert cands == sorted(cands)
    for W in cands:
        r = tuple(np.log2(w) / 8 for w in W)
        assert contains_user(r, 0, orc)


def test_budget_and_guardrails(rng):
    orc = split_oracle()
    libs, thetas, _, y = transmit(orc, 8, [3, 3], rng)
    everything = lambda r: np.ones(len(r), bool)  # noqa: E731
    with pytest.raises(BudgetExceeded):
        candidate_set(y, orc.channel, libs, thetas, everything, 0.1, prefilter=False, budget=100)
    big = [CodebookLibrary(0, i, 25, p) for i, p in enumerate(orc.profiles)]
    with pytest.raises(GuardrailError):
        candidate_set(np.zeros(25, int), orc.channel, big, thetas, everything, 0.1)
    wide = [CodebookLibrary(0, i, 20, p) for i, p in enumerate(orc.profiles)]
    with pytest.raises(GuardrailError, match="messages"):
        candidate_set(np.zeros(20, int), orc.channel, wide, thetas, everything, 0.1)
    with pytest.raises(ValueError):
        candidate_set(y[:-1], orc.channel, libs, thetas, everything, 0.1)


def test_guardrail_on_user_count():
    ch = collision_channel(1, 5)
    prof = InputProfile(0.25, (0.25,), (collision_pmf(0.5, 1),), np.eye(3)[0])
    libs = [CodebookLibrary(0, i, 4, prof) for i in range(5)]
    with pytest.raises(GuardrailError):
        candidate_set(np.zeros(4, int), ch, libs, [0] * 5, lambda r: np.ones(len(r), bool))


def test_decode_user_noiseless_in_region():
    orc = noiseless_oracle()
    N, trials = 12, 500
    rng = np.random.default_rng(21)
    W = message_for_rate(0.35, N)
    ok = 0
    for _ in range(trials):
        libs, thetas, _, y = transmit(orc, N, [W], rng)
        out = decode_user(y, libs, thetas, 0, orc)
        ok += out.decoded and out.messages == (W,)
        if out.decoded:
            r = np.log2(out.messages[0]) / N
            assert contains_user((r,), 0, orc)
    assert ok / trials >= 0.99


def test_decode_user_noiseless_out_of_region():
    orc = noiseless_oracle()
    assert orc.mi((0.7,), [0], []) < 0.4
    N, trials = 16, 500
    rng = np.random.default_rng(22)
    W = message_for_rate(0.7, N)
    collisions = 0
    for _ in range(trials):
        libs, thetas, _, y = transmit(orc, N, [W], rng)
        collisions += not decode_user(y, libs, thetas, 0, orc).decoded
    assert collisions / trials >= 0.9


def test_empty_candidates_report_collision(rng):
    orc = noiseless_oracle()
    libs, thetas, _, _ = transmit(orc, 8, [5], rng)
    # a noiseless output that no codeword in the region can produce exactly
    y = np.array([0, 1, 2, 3, 0, 1, 2, 3])
    book = libs[0].codewords(thetas[0], np.arange(1, libs[0].num_messages + 1))
    assert not (book == y).all(axis=1).any()
    assert candidate_set(y, orc.channel, libs, thetas, SubsetRegion(orc, [0]), 0.1) == []
    assert decode_user(y, libs, thetas, 0, orc) == DecodeOutcome.collision((0,))
    assert decode_subset(np.zeros(8, int), libs, thetas, [0], orc).messages == (1,)


def test_decode_all_in_region():
    orc = split_oracle()
    r = (0.25, 0.25)
    assert contains_all(r, orc)
    N, trials = 12, 300
    rng = np.random.default_rng(31)
    W = [message_for_rate(x, N) for x in r]
    ok = 0
    for _ in range(trials):
        libs, thetas, _, y = transmit(orc, N, W, rng)
        out = decode_all(y, libs, thetas, orc)
        ok += out.decoded and out.messages == tuple(W)
    assert ok / trials >= 0.95


def test_decode_all_outside_closure():
    orc = split_oracle()
    r = (0.25, 0.7)
    assert not contains_all(r, orc) and contains_user(r, 0, orc)
    N, trials = 16, 300
    rng = np.random.default_rng(32)
    W = [message_for_rate(x, N) for x in r]
    coll = 0
    for _ in range(trials):
        libs, thetas, _, y = transmit(orc, N, W, rng)
        coll += not decode_all(y, libs, thetas, orc).decoded
    assert coll / trials >= 0.9


def test_single_user_all_equals_user(rng):
    orc = noiseless_oracle()
    for _ in range(20):
        W = int(rng.integers(1, 2 ** 6))
        libs, thetas, _, y = transmit(orc, 8, [W], rng)
        assert decode_all(y, libs, thetas, orc) == decode_user(y, libs, thetas, 0, orc)


def test_decode_is_deterministic():
    orc = split_oracle()
    a = transmit(orc, 10, [4, 9], np.random.default_rng(3))
    b = transmit(orc, 10, [4, 9], np.random.default_rng(3))
    assert np.array_equal(a[3], b[3])
    assert decode_all(a[3], a[0], a[1], orc) == decode_all(b[3], b[0], b[1], orc)

"""
Typical-sequence decoding with collision reporting.

The receiver regenerates every codeword from the shared seeds, keeps the
message tuples whose standard-rate vector lies in the target region and
whose codewords are jointly typical with the channel output (under the law
at the candidate's own rate vector), then outputs a message only if every
surviving tuple agrees on it.
"""

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BudgetExceeded, GuardrailError
from .information import entropy, joint_law, marginal, sequence_information_rate
from .regions import SubsetRegion, subsets

DEFAULT_EPSILON = 0.1
MAX_USERS = 4
MAX_BLOCKLENGTH = 24
MAX_MESSAGES = 2 ** 12
DEFAULT_BUDGET = 10 ** 7
_CHUNK = 1 << 15


@dataclass(frozen=True)
class TypicalityParams:
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


DECODED = "decoded"
COLLISION = "collision"


@dataclass(frozen=True)
class DecodeOutcome:
    kind: str
    users: tuple = ()
    messages: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in (DECODED, COLLISION):
            raise ValueError(f"unknown outcome kind {self.kind!r}")
        if (self.kind == DECODED) != (self.messages is not None):
            raise ValueError("messages must be present exactly when decoded")

    @property
    def decoded(self):
        return self.kind == DECODED

    @classmethod
    def collision(cls, users=()):
        return cls(COLLISION, tuple(users), None)


def _eps(eps):
    return eps.epsilon if isinstance(eps, TypicalityParams) else float(eps)


def is_jointly_typical(xs, y, dist, channel, eps):
    """Joint typicality of ``(x_1, ..., x_K, y)`` under ``dist`` times the channel.

    Checks, for every nonempty user set ``S``, the normalized log-probability
    of ``x_S`` and of ``(x_S, y)`` against the matching entropy, plus the
    same check for ``y`` alone; all deviations must be below epsilon.
    """
    eps = _eps(eps)
    xs = [np.asarray(x) for x in xs]
    y = np.asarray(y)
    K = channel.num_users
    if len(xs) != K:
        raise ValueError(f"expected {K} input sequences, got {len(xs)}")
    if any(x.shape != y.shape for x in xs) or y.ndim != 1:
        raise ValueError("all sequences must have the same length")
    law = joint_law(channel, dist)

    def close(axes, seqs):
        table = marginal(law, axes)
        return abs(sequence_information_rate(table, seqs) - entropy(table)) < eps

    if not close([K], [y]):
        return False
    for S in subsets(range(K)):
        if not close(list(S), [xs[i] for i in S]):
            return False
        if not close(list(S) + [K], [xs[i] for i in S] + [y]):
            return False
    return True


class _Tables:
    """Log-probability tables and entropies of one joint law."""

    def __init__(self, law, K):
        self.K = K
        with np.errstate(divide="ignore"):
            self.logy = np.log2(marginal(law, [K]))
            self.hy = entropy(marginal(law, [K]))
            self.logx, self.hx, self.logxy, self.hxy = {}, {}, {}, {}
            for S in subsets(range(K)):
                tx = marginal(law, S)
                txy = marginal(law, S + (K,))
                self.logx[S], self.hx[S] = np.log2(tx), entropy(tx)
                self.logxy[S], self.hxy[S] = np.log2(txy), entropy(txy)


class LawCache:
    """Per-segment-tuple law tables; reusable across decodes with the same codebooks."""

    def __init__(self, channel, profiles):
        self.channel = channel
        self.profiles = tuple(profiles)
        self._tables = {}

    def tables(self, segs):
        t = self._tables.get(segs)
        if t is None:
            dist = [p.pmf(s) for p, s in zip(self.profiles, segs)]
            t = self._tables[segs] = _Tables(joint_law(self.channel, dist), self.channel.num_users)
        return t


def _rate(logp):
    # -(1/N) sum log2 p over the last axis; -inf entries give +inf
    return -logp.mean(axis=-1)


def check_guardrails(channel, libs):
    K = channel.num_users
    if K > MAX_USERS:
        raise GuardrailError(f"{K} users exceeds the limit of {MAX_USERS}")
    for lib in libs:
        if lib.N > MAX_BLOCKLENGTH:
            raise GuardrailError(f"blocklength {lib.N} exceeds {MAX_BLOCKLENGTH}")
        if lib.num_messages > MAX_MESSAGES:
            raise GuardrailError(
                f"user {lib.user_id}: {lib.num_messages} messages exceeds {MAX_MESSAGES}"
                f" (N={lib.N}, r_max={lib.r_max})")


class _UserCandidates:
    def __init__(self, lib, theta, y):
        self.W = np.arange(1, lib.num_messages + 1)
        self.rates = lib.rates(self.W)
        self.segs = lib.profile.segment_indices(self.rates)
        self.cw = lib.codewords(theta, self.W)
        pmfs = np.stack([lib.profile.zero_rate_pmf, *lib.profile.segment_pmfs])
        with np.errstate(divide="ignore"):
            logp = np.log2(pmfs)
        self.own_rate = _rate(logp[self.segs + 1][np.arange(len(self.W))[:, None], self.cw])
        self.own_entropy = np.array([entropy(p) for p in pmfs])[self.segs + 1]

    def take(self, mask):
        for name in ("W", "rates", "segs", "cw", "own_rate", "own_entropy"):
            setattr(self, name, getattr(self, name)[mask])


def _prefilter(users, y, cache, eps):
    """Drop per-user candidates failing the ``S = {k}`` checks under every law they could meet."""
    K = len(users)
    for u in users:
        u.take(np.abs(u.own_rate - u.own_entropy) < eps)
    seg_sets = [np.unique(u.segs) for u in users]
    for k, u in enumerate(users):
        keep = np.zeros(len(u.W), dtype=bool)
        others = [seg_sets[i] if i != k else None for i in range(K)]
        for own in np.unique(u.segs):
            sel = u.segs == own
            rows = u.cw[sel]
            ok = np.zeros(len(rows), dtype=bool)
            choices = [[own] if i == k else others[i] for i in range(K)]
            for segs in itertools.product(*choices):
                t = cache.tables(tuple(int(s) for s in segs))
                r = _rate(t.logxy[(k,)][rows, y[None, :]])
                ok |= np.abs(r - t.hxy[(k,)]) < eps
                if ok.all():
                    break
            keep[sel] = ok
        u.take(keep)


def _feasible(users, region, budget):
    sizes = [len(u.W) for u in users]
    total = int(np.prod(sizes))
    found = []
    count = 0
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.stack(np.unravel_index(flat, sizes), axis=1)
        rates = np.stack([u.rates[idx[:, i]] for i, u in enumerate(users)], axis=1)
        mask = np.asarray(region(rates), dtype=bool)
        count += int(mask.sum())
        if count > budget:
            raise BudgetExceeded(f"more than {budget} region-feasible message tuples")
        found.append(idx[mask])
    if not found:
        return np.zeros((0, len(users)), dtype=np.int64)
    return np.concatenate(found)


def _typical(users, idx, y, cache, eps):
    K = len(users)
    segs = np.stack([u.segs[idx[:, i]] for i, u in enumerate(users)], axis=1)
    keep = np.zeros(len(idx), dtype=bool)
    if not len(idx):
        return keep
    groups, inverse = np.unique(segs, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    for g, row in enumerate(groups):
        t = cache.tables(tuple(int(s) for s in row))
        if not abs(_rate(t.logy[y]) - t.hy) < eps:
            continue
        members = np.flatnonzero(inverse == g)
        for start in range(0, len(members), _CHUNK):
            sel = members[start:start + _CHUNK]
            sub = idx[sel]
            cws = [u.cw[sub[:, i]] for i, u in enumerate(users)]
            ok = np.ones(len(sel), dtype=bool)
            for S in subsets(range(K)):
                rx = sum(users[i].own_rate[sub[:, i]] for i in S)
                ok &= np.abs(rx - t.hx[S]) < eps
                rxy = _rate(t.logxy[S][tuple(cws[i] for i in S) + (y[None, :],)])
                ok &= np.abs(rxy - t.hxy[S]) < eps
            keep[sel] = ok
    return keep


def candidate_set(y, channel, libs, thetas, region, eps=DEFAULT_EPSILON, prefilter=True,
                  budget=DEFAULT_BUDGET, cache=None):
    """Message tuples inside ``region`` whose codewords are jointly typical with ``y``.

    ``region`` maps an array of rate vectors (shape ``(T, K)``) to a boolean
    mask. The result is a list of 1-based message-index tuples in ascending
    order. ``prefilter`` prunes per-user candidates early without changing
    the result.
    """
    eps = _eps(eps)
    y = np.asarray(y, dtype=np.int64)
    K = channel.num_users
    if len(libs) != K or len(thetas) != K:
        raise ValueError(f"need {K} libraries and codebook indices")
    if any(lib.N != len(y) for lib in libs):
        raise ValueError("library blocklength does not match the output length")
    check_guardrails(channel, libs)
    if cache is None:
        cache = LawCache(channel, [lib.profile for lib in libs])
    users = [_UserCandidates(lib, th, y) for lib, th in zip(libs, thetas)]
    if prefilter:
        _prefilter(users, y, cache, eps)
    idx = _feasible(users, region, budget)
    idx = idx[_typical(users, idx, y, cache, eps)]
    out = [tuple(int(users[i].W[j]) for i, j in enumerate(row)) for row in idx]
    return sorted(out)


def decide(cands, users):
    """Decision rule: a unique projection onto ``users`` is decoded, anything else collides."""
    if not cands:
        return DecodeOutcome.collision(users)
    picked = {tuple(c[i] for i in users) for c in cands}
    if len(picked) != 1:
        return DecodeOutcome.collision(users)
    return DecodeOutcome(DECODED, tuple(users), picked.pop())


def decode_subset(y, libs, thetas, S0, oracle, eps=DEFAULT_EPSILON, **kw):
    """Recover the users in ``S0`` or report a collision."""
    S0 = tuple(sorted(set(S0)))
    region = SubsetRegion(oracle, S0)
    cands = candidate_set(y, oracle.channel, libs, thetas, region, eps, **kw)
    return decide(cands, S0)


def decode_user(y, libs, thetas, k, oracle, eps=DEFAULT_EPSILON, **kw):
    return decode_subset(y, libs, thetas, (k,), oracle, eps, **kw)


def decode_all(y, libs, thetas, oracle, eps=DEFAULT_EPSILON, **kw):
    return decode_subset(y, libs, thetas, range(oracle.K), oracle, eps, **kw)

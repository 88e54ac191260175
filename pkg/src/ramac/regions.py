"""
Achievable-rate-region membership.

Scalar predicates (``contains_all``, ``contains_user``, ``contains_subset``,
``shrunk_contains_user``) follow the region definitions literally by
exhaustive subset enumeration. :class:`SubsetRegion` evaluates the same
regions over whole arrays of rate vectors for the decoder.

User indices are 0-based. Strict inequalities have zero tolerance, so a
rate vector on the boundary is outside the open region.
"""

import itertools
import math

import numpy as np

from .coding import load_profile
from .errors import ConfigError
from .information import _cmi, joint_law

MAX_USERS = 8
CLOSURE_TOL = 1e-9


def subsets(items, nonempty=True):
    """All subsets of ``items`` as sorted tuples, smallest first."""
    items = sorted(items)
    start = 1 if nonempty else 0
    for size in range(start, len(items) + 1):
        yield from itertools.combinations(items, size)


def _complement(K, S):
    return tuple(i for i in range(K) if i not in S)


class MIOracle:
    """Binds a channel to per-user input profiles: ``r -> I_r(X_A; Y | X_C)``.

    Mutual informations depend on ``r`` only through the profile segment
    of each coordinate, so values are cached per segment tuple.
    """

    def __init__(self, channel, profiles):
        profiles = [load_profile(p) for p in profiles]
        if len(profiles) != channel.num_users:
            raise ConfigError(f"{channel.num_users} users but {len(profiles)} profiles")
        if channel.num_users > MAX_USERS:
            raise ConfigError(f"at most {MAX_USERS} users supported")
        for i, (prof, size) in enumerate(zip(profiles, channel.input_sizes)):
            if prof.alphabet_size != size:
                raise ConfigError(
                    f"profile {i} has alphabet {prof.alphabet_size}, channel input has {size}")
        self.channel = channel
        self.profiles = tuple(profiles)
        self.K = channel.num_users
        self._laws = {}
        self._mi = {}

    def segments(self, r):
        if len(r) != self.K:
            raise ValueError(f"rate vector has {len(r)} entries, expected {self.K}")
        return tuple(p.segment_index(float(x)) for p, x in zip(self.profiles, r))

    def distribution(self, r):
        return [p.pmf(s) for p, s in zip(self.profiles, self.segments(r))]

    def law(self, segs):
        law = self._laws.get(segs)
        if law is None:
            dist = [p.pmf(s) for p, s in zip(self.profiles, segs)]
            law = self._laws[segs] = joint_law(self.channel, dist)
        return law

    def mi_at(self, segs, A, C):
        key = (segs, tuple(A), tuple(C))
        val = self._mi.get(key)
        if val is None:
            val = self._mi[key] = _cmi(self.law(segs), self.K, set(A), set(C))
        return val

    def mi(self, r, A, C):
        """``I_r(X_A; Y | X_C)`` with the inputs evaluated at rate vector ``r``."""
        return self.mi_at(self.segments(r), tuple(sorted(A)), tuple(sorted(C)))


def _all_zero(r, S):
    return all(r[i] == 0 for i in S)


def _sum(r, S):
    return sum(r[i] for i in S)


def contains_all(r, oracle):
    """Every user decodable: for each ``S`` either ``r_S = 0`` or
    ``sum r_S < I(X_S; Y | X_{not S})``."""
    K = oracle.K
    for S in subsets(range(K)):
        if _all_zero(r, S):
            continue
        if not _sum(r, S) < oracle.mi(r, S, _complement(K, S)):
            return False
    return True


def contains_user(r, k, oracle):
    """User ``k`` decodable, other users possibly treated as noise."""
    K = oracle.K
    if r[k] == 0:
        return True
    for S in subsets(range(K)):
        if k not in S:
            continue
        rest = _complement(K, S)
        if not any(_sum(r, St) < oracle.mi(r, St, rest)
                   for St in subsets(S) if k in St):
            return False
    return True


def contains_subset(r, S0, oracle):
    """Every user in ``S0`` decodable."""
    K = oracle.K
    S0 = set(S0)
    if not S0:
        raise ValueError("S0 must be nonempty")
    for S in subsets(range(K)):
        core = S0.intersection(S)
        if not core:
            continue
        rest = _complement(K, S)
        found = False
        for St in subsets(S):
            if not core.issubset(St):
                continue
            if _all_zero(r, St) or _sum(r, St) < oracle.mi(r, St, rest):
                found = True
                break
        if not found:
            return False
    return True


def shrunk_contains_user(r, k, sigma, oracle, zero_rate_branch=False):
    """Per-user region with every constraint tightened by ``sigma``.

    The ``r_k = 0`` escape is absent by default; ``zero_rate_branch=True``
    restores it.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if zero_rate_branch and r[k] == 0:
        return True
    K = oracle.K
    for S in subsets(range(K)):
        if k not in S:
            continue
        rest = _complement(K, S)
        if not any(_sum(r, St) < oracle.mi(r, St, rest) - sigma
                   for St in subsets(S) if k in St):
            return False
    return True


def violated_subset(r, k, oracle, tol=CLOSURE_TOL):
    """Smallest ``S`` containing ``k`` whose closure constraint fails, or ``None``."""
    K = oracle.K
    for S in subsets(range(K)):
        if k not in S:
            continue
        rest = _complement(K, S)
        if not any(_sum(r, St) <= oracle.mi(r, St, rest) + tol
                   for St in subsets(S) if k in St):
            return S
    return None


def in_user_closure(r, k, oracle, tol=CLOSURE_TOL):
    """Closure of the per-user region: strict inequalities relaxed to ``<= I + tol``."""
    return violated_subset(r, k, oracle, tol) is None


def blocks(r, k, S1, S, oracle, tol=CLOSURE_TOL):
    """True when every ``S2`` outside ``S | S1`` has ``sum r_S2 + r_k > I(X_{S2+k}; Y | X_S1)``."""
    free = [i for i in range(oracle.K) if i not in S and i not in S1]
    for S2 in subsets(free, nonempty=False):
        lhs = _sum(r, S2) + r[k]
        if not lhs > oracle.mi(r, tuple(S2) + (k,), S1) + tol:
            return False
    return True


def find_blocking_subset(r, k, oracle, within=None, tol=CLOSURE_TOL):
    """Search for a conditioning set certifying that ``r`` is outside the user-``k`` closure.

    ``within`` is the user set ``S`` (containing ``k``) the witness must
    avoid; it defaults to the smallest violated subset. Returns the first
    ``S1`` in size order, or ``None`` when ``r`` lies in the closure.
    """
    violated = violated_subset(r, k, oracle, tol)
    if violated is None:
        return None
    S = frozenset(violated if within is None else within)
    if k not in S:
        raise ValueError("within must contain k")
    others = [i for i in range(oracle.K) if i not in S]
    for S1 in subsets(others, nonempty=False):
        if blocks(r, k, S1, S, oracle, tol):
            return frozenset(S1)
    return None


class SubsetRegion:
    """Vectorized membership for the region of a user set ``S0``.

    ``S0 = {k}`` gives the per-user region and ``S0 = all users`` the
    all-user region. Calling the object on an array of rate vectors of
    shape ``(T, K)`` returns a boolean mask.
    """

    def __init__(self, oracle, S0):
        S0 = tuple(sorted(set(S0)))
        if not S0 or not set(S0).issubset(range(oracle.K)):
            raise ValueError(f"bad user subset {S0}")
        self.oracle = oracle
        self.S0 = S0
        K = oracle.K
        plan = []
        for S in subsets(range(K)):
            core = set(S0).intersection(S)
            if not core:
                continue
            rest = _complement(K, S)
            plan.append([(St, rest) for St in subsets(S) if core.issubset(St)])
        self._plan = plan

    def contains(self, r):
        return bool(self(np.asarray(r, dtype=float)[None, :])[0])

    def __call__(self, rates):
        rates = np.asarray(rates, dtype=float)
        if rates.ndim != 2 or rates.shape[1] != self.oracle.K:
            raise ValueError(f"expected rates of shape (T, {self.oracle.K})")
        segs = np.stack([p.segment_indices(rates[:, i])
                         for i, p in enumerate(self.oracle.profiles)], axis=1)
        out = np.zeros(len(rates), dtype=bool)
        if not len(rates):
            return out
        groups, inverse = np.unique(segs, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        for g, row in enumerate(groups):
            sel = np.flatnonzero(inverse == g)
            out[sel] = self._mask(rates[sel], tuple(int(s) for s in row))
        return out

    def _mask(self, rates, segs):
        ok = np.ones(len(rates), dtype=bool)
        for options in self._plan:
            hit = np.zeros(len(rates), dtype=bool)
            for St, rest in options:
                sub = rates[:, list(St)]
                bound = self.oracle.mi_at(segs, St, rest)
                hit |= np.all(sub == 0, axis=1) | (sub.sum(axis=1) < bound)
            ok &= hit
        return ok


def all_users_region(oracle):
    return SubsetRegion(oracle, range(oracle.K))


def user_region(oracle, k):
    return SubsetRegion(oracle, (k,))


def constraint_table(r, oracle, S0=None):
    """Per-constraint slack rows for the region of ``S0`` (all users when ``None``).

    Each row is ``(S, S_tilde, sum_rate, mutual_information, slack, satisfied)``
    with ``slack = I - sum_rate``; a row counts as satisfied through the
    zero-rate branch as well.
    """
    K = oracle.K
    S0 = set(range(K) if S0 is None else S0)
    rows = []
    for S in subsets(range(K)):
        core = S0.intersection(S)
        if not core:
            continue
        rest = _complement(K, S)
        for St in subsets(S):
            if not core.issubset(St):
                continue
            total = _sum(r, St)
            info = oracle.mi(r, St, rest)
            sat = _all_zero(r, St) or total < info
            rows.append((S, St, total, info, info - total, sat))
    return rows


def grid_quantize(r, M, r_max):
    """Largest grid rate ``m * r_max / M`` not exceeding ``r``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if not 0 <= r <= r_max * (1 + 1e-12):
        raise ValueError(f"rate {r} outside [0, {r_max}]")
    m = math.floor(M * r / r_max + 1e-12)
    return min(m, M) * r_max / M


def min_grid_count(K, r_max, sigma):
    """Smallest ``M`` with ``(K + 1) r_max / M <= sigma / 6``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    # shave rounding noise off the ratio, then step up if that went too far
    M = max(1, math.ceil(6 * (K + 1) * r_max / sigma * (1 - 1e-12)))
    while (K + 1) * r_max / M > sigma / 6:
        M += 1
    return M


def gaussian_subset_bounds(powers, noise):
    """Map each nonempty user subset to ``0.5 log2(1 + sum P_S / N0)``."""
    if noise <= 0:
        raise ValueError("noise variance must be positive")
    if any(p < 0 for p in powers):
        raise ValueError("powers must be nonnegative")
    return {S: 0.5 * math.log2(1 + sum(powers[i] for i in S) / noise)
            for S in subsets(range(len(powers)))}


def gaussian_region_contains(r, powers, noise):
    bounds = gaussian_subset_bounds(powers, noise)
    if len(r) != len(powers):
        raise ValueError("rate vector and powers differ in length")
    return all(_sum(r, S) < b for S, b in bounds.items())


def collision_region_contains(r, n):
    """``sum_i sqrt(r_i / n) < 1``."""
    if n < 1:
        raise ValueError("order n must be >= 1")
    if any(x < 0 for x in r):
        raise ValueError("rates must be nonnegative")
    return sum(math.sqrt(x / n) for x in r) < 1


def collision_information_bounds(r, n, S):
    """Lower-bound chain for the collision channel with ``p_i = sqrt(r_i/n)``.

    Returns ``(product_bound, linear_bound, sum_rate)`` where
    ``product_bound = n * sum_{i in S} p_i prod_{k != i} (1 - p_k)`` and
    ``linear_bound = n * sum_{i in S} p_i (1 - sum_{k != i} p_k)``.
    Inside the square-root region these satisfy
    ``I >= product_bound >= linear_bound > sum_rate``.
    """
    p = [math.sqrt(x / n) for x in r]
    K = len(p)
    prod = n * sum(p[i] * math.prod(1 - p[k] for k in range(K) if k != i) for i in S)
    lin = n * sum(p[i] * (1 - sum(p[k] for k in range(K) if k != i)) for i in S)
    return prod, lin, _sum(r, S)

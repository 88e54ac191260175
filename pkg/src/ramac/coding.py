"""
Standard rates, rate-dependent input profiles and seed-indexed random codebooks.

Codeword symbols are produced by a counter-based pseudorandom function of
``(master_seed, theta, user_id, W, j)``, so any codeword can be regenerated
on demand by a receiver that knows the seed and the codebook index.
"""

import bisect
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .channel import _parse_preset_args, inverse_cdf
from .errors import ConfigError
from .information import as_pmf

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM = np.uint64(0xD1B54A32D192ED03)


def standard_rate(W, N):
    """Rate ``log2(W) / N`` in bits per symbol of message index ``W``."""
    if W < 1:
        raise ValueError(f"message index must be >= 1, got {W}")
    if N < 1:
        raise ValueError(f"blocklength must be >= 1, got {N}")
    return math.log2(W) / N


def message_for_rate(r, N):
    """Largest message index whose standard rate does not exceed ``r`` (at least 1)."""
    if r < 0:
        raise ValueError(f"rate must be nonnegative, got {r}")
    W = int(math.floor(2.0 ** (N * r) * (1 + 1e-12)))
    # guard the floor against 2**(N r) landing a hair below an integer
    while W > 1 and math.log2(W) / N > r + 1e-12:
        W -= 1
    return max(W, 1)


@dataclass(frozen=True, eq=False)
class InputProfile:
    """Piecewise-constant input distribution as a function of the standard rate.

    Segment ``i`` covers ``(breakpoints[i-1], breakpoints[i]]`` with an
    implicit leading breakpoint at 0; ``zero_rate_pmf`` applies at ``r == 0``.
    """

    r_max: float
    breakpoints: tuple
    segment_pmfs: tuple
    zero_rate_pmf: np.ndarray

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        if not bps:
            raise ConfigError("profile needs at least one segment")
        if any(b <= 0 for b in bps) or any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ConfigError("breakpoints must be positive and strictly ascending")
        if not math.isclose(bps[-1], self.r_max, rel_tol=0, abs_tol=1e-12):
            raise ConfigError(f"last breakpoint {bps[-1]} must equal r_max {self.r_max}")
        if len(self.segment_pmfs) != len(bps):
            raise ConfigError(f"{len(bps)} segments but {len(self.segment_pmfs)} pmfs")
        try:
            zero = as_pmf(self.zero_rate_pmf)
            pmfs = tuple(as_pmf(p, zero.size) for p in self.segment_pmfs)
        except ValueError as exc:
            raise ConfigError(f"bad profile pmf: {exc}")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "zero_rate_pmf", zero)
        object.__setattr__(self, "segment_pmfs", pmfs)

    @property
    def alphabet_size(self):
        return self.zero_rate_pmf.size

    @property
    def num_segments(self):
        return len(self.breakpoints)

    def segment_index(self, r):
        """-1 at ``r == 0``, otherwise the index of the segment holding ``r``.

        Rates past ``r_max`` (reachable through the integer-ceiling message
        count) fall in the last segment.
        """
        if r < 0:
            raise ValueError(f"rate must be nonnegative, got {r}")
        if r == 0:
            return -1
        return min(bisect.bisect_left(self.breakpoints, r), self.num_segments - 1)

    def segment_indices(self, rates):
        rates = np.asarray(rates, dtype=float)
        idx = np.searchsorted(np.asarray(self.breakpoints), rates, side="left")
        idx = np.minimum(idx, self.num_segments - 1)
        return np.where(rates == 0, -1, idx)

    def pmf(self, segment):
        return self.zero_rate_pmf if segment < 0 else self.segment_pmfs[segment]

    def to_dict(self):
        return {
            "r_max": self.r_max,
            "breakpoints": list(self.breakpoints),
            "segment_pmfs": [p.tolist() for p in self.segment_pmfs],
            "zero_rate_pmf": self.zero_rate_pmf.tolist(),
        }


def profile_at(profile, r):
    if not 0 <= r <= profile.r_max:
        raise ValueError(f"rate {r} outside [0, {profile.r_max}]")
    return profile.pmf(profile.segment_index(r))


def constant_profile(pmf, r_max, zero_rate_pmf=None):
    """Single segment over ``(0, r_max]``; idles at rate zero unless told otherwise."""
    pmf = as_pmf(pmf)
    if zero_rate_pmf is None:
        zero_rate_pmf = np.eye(pmf.size)[0]
    return InputProfile(float(r_max), (float(r_max),), (pmf,), zero_rate_pmf)


def collision_pmf(p, n):
    """Transmit with probability ``p``, spreading it evenly over the ``2**n`` nonzero symbols."""
    if not 0 <= p <= 1:
        raise ValueError(f"transmit probability {p} outside [0, 1]")
    q = 2 ** n
    return np.concatenate(([1.0 - p], np.full(q, p / q)))


def prop1_pmf(r, n):
    """Pointwise collision-channel input law with transmit probability ``sqrt(r/n)``."""
    if not 0 <= r <= n:
        raise ValueError(f"rate {r} outside [0, {n}]")
    return collision_pmf(math.sqrt(r / n), n)


def prop1_profile(n, segments=64, r_max=None):
    """Piecewise-constant version of ``p(r) = sqrt(r/n)``.

    Segments are uniform in ``r`` over ``(0, r_max]``; each uses the law at
    its midpoint rate.
    """
    r_max = float(n if r_max is None else r_max)
    if not 0 < r_max <= n:
        raise ConfigError(f"prop1 profile needs 0 < r_max <= n, got {r_max}")
    if segments < 1:
        raise ConfigError("segments must be >= 1")
    width = r_max / segments
    bps = tuple(width * (i + 1) for i in range(segments - 1)) + (r_max,)
    pmfs = tuple(prop1_pmf(width * (i + 0.5), n) for i in range(segments))
    return InputProfile(r_max, bps, pmfs, prop1_pmf(0.0, n))


def profile_from_dict(d):
    try:
        return InputProfile(
            float(d["r_max"]),
            tuple(d["breakpoints"]),
            tuple(np.asarray(p, dtype=float) for p in d["segment_pmfs"]),
            np.asarray(d["zero_rate_pmf"], dtype=float),
        )
    except KeyError as exc:
        raise ConfigError(f"profile description is missing field {exc}")


def load_profile(spec):
    """Resolve a preset string, dict or JSON file path into an :class:`InputProfile`.

    Presets: ``prop1:n=<n>[,segments=<m>][,r_max=<r>]`` and
    ``uniform:q=<size>,r_max=<r>`` (uniform over all ``q`` symbols at every
    positive rate, symbol 0 at rate zero).
    """
    if isinstance(spec, InputProfile):
        return spec
    if isinstance(spec, dict):
        return profile_from_dict(spec)
    spec = str(spec)
    name, _, body = spec.partition(":")
    if name in ("prop1", "uniform") and body:
        args = _parse_preset_args(body)
        try:
            if name == "prop1":
                r_max = float(args["r_max"]) if "r_max" in args else None
                return prop1_profile(int(args["n"]), int(args.get("segments", 64)), r_max)
            q = int(args["q"])
            return constant_profile(np.full(q, 1.0 / q), float(args["r_max"]))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad profile preset {spec!r}: {exc}")
    if not os.path.exists(spec):
        raise ConfigError(f"no such profile file or preset: {spec!r}")
    with open(spec, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{spec}: invalid JSON: {exc}")
    return profile_from_dict(d)


def _mix64(z):
    # splitmix64 finalizer; uint64 arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _key(*parts):
    k = np.uint64(0x5851F42D4C957F2D)
    for part in parts:
        k = _mix64(k ^ np.uint64(int(part) & _MASK64))
        k = k + _GOLDEN
    return k


def uniforms(master_seed, theta, user_id, W, N):
    """Counter-based uniforms in ``[0, 1)``, shape ``(len(W), N)``."""
    W = np.atleast_1d(np.asarray(W, dtype=np.uint64))
    j = np.arange(N, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _key(master_seed, theta, user_id)
        row = _mix64(key ^ (W * _GOLDEN))
        z = _mix64(row[:, None] + (j[None, :] + np.uint64(1)) * _STREAM)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True, eq=False)
class CodebookLibrary:
    """The random codebook family of one user at blocklength ``N``."""

    master_seed: int
    user_id: int
    N: int
    profile: InputProfile

    @property
    def r_max(self):
        return self.profile.r_max

    @property
    def num_messages(self):
        # integer ceiling so every rate up to r_max has a message index
        return 2 ** math.ceil(self.N * self.r_max - 1e-9)

    def rates(self, W):
        return np.log2(np.asarray(W, dtype=float)) / self.N

    def codewords(self, theta, W):
        """Codewords for an array of message indices, shape ``(len(W), N)``."""
        W = np.atleast_1d(np.asarray(W, dtype=np.int64))
        if W.size and (W.min() < 1 or W.max() > self.num_messages):
            raise ValueError(f"message index outside [1, {self.num_messages}]")
        segs = self.profile.segment_indices(self.rates(W))
        table = np.stack([self.profile.zero_rate_pmf, *self.profile.segment_pmfs])
        u = uniforms(self.master_seed, theta, self.user_id, W, self.N)
        return inverse_cdf(table[segs + 1][:, None, :], u)


def generate_codeword(lib, theta, W):
    if not 1 <= W <= lib.num_messages:
        raise ValueError(f"message index {W} outside [1, {lib.num_messages}]")
    return lib.codewords(theta, [W])[0]


def draw_theta(rng):
    """Codebook index drawn uniformly from the 64-bit index space."""
    return int(rng.integers(0, 2 ** 64, dtype=np.uint64))

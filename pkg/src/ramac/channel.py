"""
Finite-alphabet memoryless multiple-access channels.

A channel is stored as a dense transition tensor indexed by
``(x_1, ..., x_K, y)``; the last axis is the output symbol. Symbols are
0-based integers. In the symbol collision channel the idle input is 0 and
the collision output ``c`` is the last output index.
"""

import itertools
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ChannelModel:
    num_users: int
    input_sizes: tuple
    output_size: int
    transition: np.ndarray

    @property
    def shape(self):
        return tuple(self.input_sizes) + (self.output_size,)

    def row(self, x):
        return self.transition[tuple(x)]

    def to_dict(self):
        return {
            "num_users": self.num_users,
            "input_sizes": list(self.input_sizes),
            "output_size": self.output_size,
            "transition": self.transition.tolist(),
        }


def build_dmc(num_users, input_sizes, output_size, transition):
    """Validate a transition tensor and wrap it as a :class:`ChannelModel`.

    Rows are checked, never renormalized: a joint input whose output
    probabilities do not sum to one (within 1e-9) is rejected and the
    offending joint input is named in the error.
    """
    num_users = int(num_users)
    input_sizes = tuple(int(s) for s in input_sizes)
    output_size = int(output_size)
    if num_users < 1:
        raise ConfigError(f"num_users must be >= 1, got {num_users}")
    if len(input_sizes) != num_users:
        raise ConfigError(
            f"expected {num_users} input alphabet sizes, got {len(input_sizes)}")
    if any(s < 1 for s in input_sizes) or output_size < 1:
        raise ConfigError("alphabet sizes must be >= 1")
    try:
        t = np.array(transition, dtype=float)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"transition is not a rectangular numeric array: {exc}")
    expected = input_sizes + (output_size,)
    if t.shape != expected:
        raise ConfigError(f"transition shape {t.shape} does not match alphabets {expected}")
    if not np.all(np.isfinite(t)):
        raise ConfigError("transition contains non-finite entries")
    neg = np.argwhere(t < 0)
    if len(neg):
        idx = tuple(int(v) for v in neg[0])
        raise ConfigError(f"negative transition entry at index {idx}")
    sums = t.sum(axis=-1)
    off = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
    if len(off):
        x = tuple(int(v) for v in off[0])
        raise ConfigError(f"row {x} sums to {sums[x]:.12g}, expected 1")
    t.setflags(write=False)
    return ChannelModel(num_users, input_sizes, output_size, t)


def collision_channel(n, K):
    """Order-``n`` symbol collision channel shared by ``K`` users.

    Inputs are ``{0, ..., 2**n}`` with 0 idle. The output is 0 when every
    user idles, ``x_k`` when exactly user ``k`` is active and the collision
    symbol ``2**n + 1`` otherwise.
    """
    n, K = int(n), int(K)
    if n < 1 or K < 1:
        raise ConfigError(f"collision channel needs n >= 1 and K >= 1, got n={n}, K={K}")
    q = 2 ** n + 1
    c = q
    t = np.zeros((q,) * K + (q + 1,))
    for x in itertools.product(range(q), repeat=K):
        active = [v for v in x if v != 0]
        if not active:
            y = 0
        elif len(active) == 1:
            y = active[0]
        else:
            y = c
        t[x + (y,)] = 1.0
    return build_dmc(K, (q,) * K, q + 1, t)


def noiseless_channel(q):
    """Single-user identity channel on ``q`` symbols."""
    return build_dmc(1, (q,), q, np.eye(q))


def transition_prob(model, x, y):
    x = _as_joint_input(model, x)
    if not 0 <= y < model.output_size:
        raise IndexError(f"output symbol {y} out of range [0, {model.output_size})")
    return float(model.transition[x + (int(y),)])


def _as_joint_input(model, x):
    if np.ndim(x) == 0:
        x = (x,)
    x = tuple(int(v) for v in x)
    if len(x) != model.num_users:
        raise IndexError(f"expected {model.num_users} input symbols, got {len(x)}")
    for v, size in zip(x, model.input_sizes):
        if not 0 <= v < size:
            raise IndexError(f"input symbol {v} out of range [0, {size})")
    return x


def inverse_cdf(probs, u):
    """Inverse-transform sampling, one uniform per row of ``probs``.

    ``probs`` has shape ``(..., m)`` and ``u`` the matching leading shape.
    Rows are renormalized through their own cumulative sum so that a
    uniform in ``[0, 1)`` never lands on a zero-probability symbol.
    """
    cdf = np.cumsum(probs, axis=-1)
    cdf = cdf / cdf[..., -1:]
    return (np.asarray(u)[..., None] >= cdf).sum(axis=-1)


def sample_output(model, x, rng):
    x = _as_joint_input(model, x)
    return int(inverse_cdf(model.transition[x], rng.random()))


def sample_outputs(model, xs, rng):
    """Pass a block of joint inputs (shape ``(K, N)``) through the channel."""
    xs = np.asarray(xs)
    rows = model.transition[tuple(xs)]
    return inverse_cdf(rows, rng.random(xs.shape[1]))


def _parse_preset_args(body):
    out = {}
    for item in body.split(","):
        if not item.strip():
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"malformed preset argument {item!r}")
        out[key.strip()] = value.strip()
    return out


def channel_from_dict(d):
    try:
        return build_dmc(d["num_users"], d["input_sizes"], d["output_size"], d["transition"])
    except KeyError as exc:
        raise ConfigError(f"channel description is missing field {exc}")


def load_channel(spec):
    """Resolve a preset string, a dict, or a path to a JSON channel file."""
    if isinstance(spec, ChannelModel):
        return spec
    if isinstance(spec, dict):
        return channel_from_dict(spec)
    spec = str(spec)
    name, _, body = spec.partition(":")
    if name == "collision" and body:
        args = _parse_preset_args(body)
        try:
            return collision_channel(int(args["n"]), int(args["K"]))
        except (KeyError, ValueError):
            raise ConfigError(f"bad collision preset {spec!r}; want collision:n=<n>,K=<K>")
    if name == "noiseless" and body:
        args = _parse_preset_args(body)
        try:
            return noiseless_channel(int(args["q"]))
        except (KeyError, ValueError):
            raise ConfigError(f"bad noiseless preset {spec!r}; want noiseless:q=<size>")
    if not os.path.exists(spec):
        raise ConfigError(f"no such channel file or preset: {spec!r}")
    with open(spec, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{spec}: invalid JSON: {exc}")
    return channel_from_dict(d)

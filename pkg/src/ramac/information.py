"""
Exact information quantities over finite alphabets.

Everything is computed by enumerating the joint law of ``(X_1, ..., X_K, Y)``
as a dense tensor; logs are base 2 throughout.
"""

import numpy as np

PMF_TOL = 1e-12


def as_pmf(p, size=None):
    """Validate a probability vector and return it as a float array."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("pmf must be a non-empty 1-D vector")
    if size is not None and p.size != size:
        raise ValueError(f"pmf has {p.size} entries, alphabet has {size}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("pmf entries must be finite and nonnegative")
    if abs(p.sum() - 1.0) > PMF_TOL:
        raise ValueError(f"pmf sums to {p.sum():.15g}")
    return p


def entropy(p):
    """Shannon entropy in bits of an array of probabilities (any shape)."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def joint_law(model, dist):
    """Tensor ``P(x_1, ..., x_K, y)`` for independent inputs drawn from ``dist``."""
    if len(dist) != model.num_users:
        raise ValueError(f"need {model.num_users} input pmfs, got {len(dist)}")
    law = np.array(model.transition, dtype=float)
    for i, p in enumerate(dist):
        p = as_pmf(p, model.input_sizes[i])
        shape = [1] * law.ndim
        shape[i] = -1
        law = law * p.reshape(shape)
    return law


def marginal(law, keep):
    """Sum out every axis not listed in ``keep``; kept axes stay in order."""
    keep = sorted(keep)
    drop = tuple(a for a in range(law.ndim) if a not in keep)
    return law.sum(axis=drop) if drop else law


def conditional_mutual_information(model, dist, S, C=()):
    """``I(X_S; Y | X_C)`` in bits.

    Users outside ``S`` and ``C`` are summed out, i.e. treated as
    interference drawn from ``dist``.
    """
    S, C = set(S), set(C)
    if S & C:
        raise ValueError(f"subsets overlap: {sorted(S & C)}")
    K = model.num_users
    if not S.issubset(range(K)) or not C.issubset(range(K)):
        raise ValueError("user index out of range")
    if not S:
        return 0.0
    law = joint_law(model, dist)
    return _cmi(law, K, S, C)


def _cmi(law, K, S, C):
    SC = S | C

    def h(axes):
        return entropy(marginal(law, axes)) if axes else 0.0

    # I(X_S; Y | X_C) = H(Y, X_C) - H(X_C) - H(Y, X_SC) + H(X_SC)
    val = h(C | {K}) - h(C) - h(SC | {K}) + h(SC)
    return max(val, 0.0)


def sequence_information_rate(table, seq):
    """``-(1/N) log2`` of a length-``N`` sequence under an i.i.d. product law.

    ``table`` is the per-position probability over symbol tuples (one axis
    per coordinate) and ``seq`` holds one length-``N`` index sequence per
    axis. A zero-probability position gives ``inf``.
    """
    table = np.asarray(table, dtype=float)
    seq = np.asarray(seq)
    if seq.ndim == 1:
        seq = seq[None, :]
    if seq.shape[0] != table.ndim:
        raise ValueError(f"table has {table.ndim} axes, got {seq.shape[0]} sequences")
    N = seq.shape[1]
    if N < 1:
        raise ValueError("sequence length must be >= 1")
    probs = table[tuple(seq)]
    if np.any(probs <= 0):
        return float("inf")
    return float(-np.log2(probs).sum() / N)

"""
Monte Carlo experiments over blocklengths and rate points.

A config file is JSON with these keys (``profiles`` may hold one entry,
which is then shared by every user)::

    {
      "channel": "collision:n=2,K=2",          # preset, inline dict or JSON path
      "profiles": ["prop1:n=2,segments=64"],   # per-user profile specs
      "N": [8, 12, 16],
      "rates": [[0.3, 0.2]],                   # or "messages": [[W1, W2]]
      "grid": null,                            # optional M: snap rates to the M-level grid
      "epsilon": 0.1,
      "trials": 300,
      "seed": 1,
      "mode": "all",                           # all | user:k | subset:i,j (1-based)
      "prefilter": true,
      "budget": 10000000,
      "output": "results.csv",
      "threads": null
    }

Trial ``t`` at every point draws its randomness from ``(seed, t)``, so
results do not depend on the number of workers.
"""

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import binomtest

from .channel import load_channel, sample_outputs
from .coding import CodebookLibrary, draw_theta, load_profile, message_for_rate
from .decoder import (DEFAULT_BUDGET, DEFAULT_EPSILON, LawCache, candidate_set,
                      check_guardrails, decide)
from .errors import ConfigError
from .regions import MIOracle, SubsetRegion, contains_all, contains_user, grid_quantize

THREADS_ENV = "RAMAC_THREADS"
CONFIDENCE = 0.95


def parse_mode(mode, K):
    """Decode mode string to a 0-based user tuple; user numbers in the string are 1-based."""
    mode = str(mode).strip()
    if mode == "all":
        return tuple(range(K))
    name, _, body = mode.partition(":")
    try:
        users = [int(v) - 1 for v in body.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad decode mode {mode!r}")
    if name == "user" and len(users) == 1 or name == "subset" and users:
        if not all(0 <= u < K for u in users):
            raise ConfigError(f"decode mode {mode!r} names a user outside 1..{K}")
        return tuple(sorted(set(users)))
    raise ConfigError(f"bad decode mode {mode!r}; want all, user:k or subset:i,j")


@dataclass
class ExperimentConfig:
    channel: object
    profiles: list
    N: list
    rates: Optional[list] = None
    messages: Optional[list] = None
    grid: Optional[int] = None
    epsilon: float = DEFAULT_EPSILON
    trials: int = 100
    seed: int = 0
    mode: str = "all"
    prefilter: bool = True
    budget: int = DEFAULT_BUDGET
    output: Optional[str] = None
    threads: Optional[int] = None
    K: Optional[int] = None

    def __post_init__(self):
        self.channel_model = load_channel(self.channel)
        K = self.channel_model.num_users
        if self.K is not None and int(self.K) != K:
            raise ConfigError(f"K={self.K} but the channel has {K} users")
        self.K = K
        profs = [load_profile(p) for p in self.profiles]
        if len(profs) == 1 and K > 1:
            profs = profs * K
        if len(profs) != K:
            raise ConfigError(f"{K} users but {len(profs)} profiles")
        self.input_profiles = profs
        self.oracle = MIOracle(self.channel_model, profs)
        self.N = [int(n) for n in np.atleast_1d(self.N)]
        if not self.N or any(n < 1 for n in self.N):
            raise ConfigError("N values must be positive")
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        self.trials = int(self.trials)
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if (self.rates is None) == (self.messages is None):
            raise ConfigError("give exactly one of 'rates' or 'messages'")
        points = self.rates if self.rates is not None else self.messages
        if not points:
            raise ConfigError("no rate points given")
        for pt in points:
            if len(pt) != K:
                raise ConfigError(f"rate point {pt} does not have {K} entries")
        if self.rates is not None:
            for pt in self.rates:
                for r, prof in zip(pt, profs):
                    if not 0 <= r <= prof.r_max:
                        raise ConfigError(f"rate {r} outside [0, {prof.r_max}]")
        else:
            if any(int(w) < 1 for pt in self.messages for w in pt):
                raise ConfigError("message indices must be >= 1")
        self.users = parse_mode(self.mode, K)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        for key in ("channel", "profiles", "N"):
            if key not in d:
                raise ConfigError(f"config is missing {key!r}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}")
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        base = os.path.dirname(os.path.abspath(path))
        # file references inside the config are relative to the config itself
        for key in ("channel",):
            v = d.get(key)
            if isinstance(v, str) and os.path.exists(os.path.join(base, v)):
                d[key] = os.path.join(base, v)
        if isinstance(d.get("profiles"), list):
            d["profiles"] = [os.path.join(base, p)
                             if isinstance(p, str) and os.path.exists(os.path.join(base, p))
                             else p for p in d["profiles"]]
        return cls.from_dict(d)

    def messages_at(self, point_index, N):
        """Transmitted message indices for a point at blocklength ``N``."""
        if self.messages is not None:
            return tuple(int(w) for w in self.messages[point_index])
        out = []
        for r, prof in zip(self.rates[point_index], self.input_profiles):
            if self.grid:
                r = grid_quantize(r, int(self.grid), prof.r_max)
            out.append(message_for_rate(r, N))
        return tuple(out)

    def points(self):
        """``(N, point_index)`` pairs in sweep order."""
        count = len(self.rates if self.rates is not None else self.messages)
        return [(N, i) for N in self.N for i in range(count)]


@dataclass
class TrialRecord:
    N: int
    rates: tuple
    thetas: tuple
    transmitted: tuple
    outcome: str
    decoded: Optional[tuple]
    correct: Optional[bool]
    seconds: float
    trial: int = 0
    candidates: Optional[list] = field(default=None, repr=False)

    def to_json(self, with_candidates=False):
        d = asdict(self)
        if not with_candidates:
            d.pop("candidates")
        d["thetas"] = [str(t) for t in self.thetas]
        return json.dumps(d)


class _Context:
    # per-process state that is expensive to rebuild for every trial
    def __init__(self, cfg):
        self.cfg = cfg
        self.region = SubsetRegion(cfg.oracle, cfg.users)
        self.cache = LawCache(cfg.channel_model, cfg.input_profiles)


def run_trial(cfg, point, trial_seed, context=None, keep_candidates=False):
    """One draw of codebooks, channel noise and decoding at ``point = (N, point_index)``."""
    t0 = time.perf_counter()
    ctx = context or _Context(cfg)
    N, pi = point
    ch = cfg.channel_model
    libs = [CodebookLibrary(cfg.seed, i, N, p) for i, p in enumerate(cfg.input_profiles)]
    check_guardrails(ch, libs)
    W = cfg.messages_at(pi, N)
    for lib, w in zip(libs, W):
        if w > lib.num_messages:
            raise ConfigError(f"message {w} exceeds the {lib.num_messages} of user {lib.user_id + 1}")
    rng = np.random.default_rng([int(cfg.seed), int(trial_seed)])
    thetas = tuple(draw_theta(rng) for _ in libs)
    xs = np.stack([lib.codewords(th, [w])[0] for lib, th, w in zip(libs, thetas, W)])
    y = sample_outputs(ch, xs, rng)
    cands = candidate_set(y, ch, libs, thetas, ctx.region, cfg.epsilon,
                          prefilter=cfg.prefilter, budget=cfg.budget, cache=ctx.cache)
    out = decide(cands, cfg.users)
    want = tuple(W[i] for i in cfg.users)
    return TrialRecord(
        N=N,
        rates=tuple(float(np.log2(w) / N) for w in W),
        thetas=thetas,
        transmitted=W,
        outcome=out.kind,
        decoded=out.messages,
        correct=(out.messages == want) if out.decoded else None,
        seconds=time.perf_counter() - t0,
        trial=int(trial_seed),
        candidates=cands if keep_candidates else None,
    )


def _run_chunk(cfg, point, seeds):
    ctx = _Context(cfg)
    return [run_trial(cfg, point, s, ctx) for s in seeds]


def resolve_threads(flag=None, cfg=None):
    """Worker count: the flag wins, then ``RAMAC_THREADS``, then the config, then 1."""
    if flag is not None:
        n = flag
    elif os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer")
    elif cfg is not None and cfg.threads:
        n = cfg.threads
    else:
        n = 1
    if int(n) < 1:
        raise ConfigError("thread count must be >= 1")
    return int(n)


def run_trials(cfg, point, threads=1):
    """All trials of one point, ordered by trial index whatever the worker count."""
    seeds = list(range(cfg.trials))
    if threads <= 1 or cfg.trials < 2:
        return _run_chunk(cfg, point, seeds)
    chunks = [c.tolist() for c in np.array_split(seeds, min(threads * 4, cfg.trials)) if len(c)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(_run_chunk, [cfg] * len(chunks), [point] * len(chunks), chunks)
        records = [r for part in parts for r in part]
    return sorted(records, key=lambda r: r.trial)


def wilson_interval(k, n, confidence=CONFIDENCE):
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class PointEstimate:
    N: int
    rates: tuple
    p_e: float
    p_e_ci: tuple
    p_c: float
    p_c_ci: tuple
    trials: int
    seconds: float
    records: list = field(default_factory=list, repr=False)


def summarize(records):
    n = len(records)
    errors = sum(1 for r in records if not r.correct)
    collisions = sum(1 for r in records if r.outcome == "collision")
    return errors, collisions, n


def estimate_point(cfg, point, threads=1):
    """Error and collision frequencies with Wilson intervals.

    An error is any trial that does not end in a correct decode, so
    collisions count as errors.
    """
    t0 = time.perf_counter()
    records = run_trials(cfg, point, threads)
    errors, collisions, n = summarize(records)
    return PointEstimate(
        N=point[0],
        rates=records[0].rates,
        p_e=errors / n,
        p_e_ci=wilson_interval(errors, n),
        p_c=collisions / n,
        p_c_ci=wilson_interval(collisions, n),
        trials=n,
        seconds=time.perf_counter() - t0,
        records=records,
    )


def csv_header(K):
    return (["N"] + [f"r_{i + 1}" for i in range(K)] + ["in_region_all"]
            + [f"in_region_user_{i + 1}" for i in range(K)]
            + ["p_e", "p_e_lo", "p_e_hi", "p_c", "p_c_lo", "p_c_hi", "trials", "seconds"])


def _row(est, oracle):
    r = est.rates
    K = len(r)
    flags = [int(contains_all(r, oracle))] + [int(contains_user(r, k, oracle)) for k in range(K)]
    return ([est.N] + [f"{x:.10g}" for x in r] + flags
            + [f"{v:.6f}" for v in (est.p_e, *est.p_e_ci, est.p_c, *est.p_c_ci)]
            + [est.trials, f"{est.seconds:.3f}"])


def sweep(cfg, threads=1):
    """Estimate every ``(N, rate point)`` pair; returns the CSV rows (header first)."""
    rows = [csv_header(cfg.K)]
    for point in cfg.points():
        rows.append(_row(estimate_point(cfg, point, threads), cfg.oracle))
    return rows


def format_csv(rows):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def write_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows))

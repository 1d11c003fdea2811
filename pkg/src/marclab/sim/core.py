"""Shared machinery for the block-Markov simulators."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import __version__
from ..prob import JointPmf, typical_rows

MAX_CODEWORDS = 1 << 20
MAX_CANDIDATES = 1 << 20

# stream ids keep codebook, trial and filler randomness apart
STREAM_CODEBOOK = 1
STREAM_TRIAL = 2
STREAM_FILLER = 3


class CodebookTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class BlockMarkovConfig:
    """Operating point of a block-Markov simulation.

    ``rates`` holds ``R1r, R2r, R1d, R2d`` for the separation scheme or
    ``R1, R2`` for the CPM schemes, in bits per source sample. Tables have
    ``2**ceil(m * R)`` entries.
    """

    m: int = 8
    n: int = 8
    B: int = 3
    rates: dict = field(default_factory=dict)
    epsilon: float = 0.1
    seed: int = 0
    mode: str = "marc"
    workers: int = 1
    max_codewords: int = MAX_CODEWORDS

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.B < 1:
            raise ValueError("m, n and B must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.mode not in ("marc", "mabrc"):
            raise ValueError("mode must be 'marc' or 'mabrc'")
        for k, v in self.rates.items():
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"rate {k} must be finite and non-negative")

    def kappa_ok(self, kappa: float) -> bool:
        return self.n <= math.ceil(kappa * self.m)

    def table_bits(self, rate_name: str) -> int:
        r = self.rates.get(rate_name, 0.0)
        return max(0, math.ceil(self.m * r - 1e-9))

    def table_size(self, rate_name: str) -> int:
        return 1 << self.table_bits(rate_name)

    def to_dict(self) -> dict:
        return asdict(self)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return (lo, hi)


@dataclass
class SimReport:
    scheme: str
    trials: int
    mode: str
    relay_block_errors: int = 0
    dest_block_errors: int = 0
    relay_trial_errors: int = 0
    dest_trial_errors: int = 0
    union_trial_errors: int = 0
    relay_block_histogram: list = field(default_factory=list)
    dest_block_histogram: list = field(default_factory=list)
    first_error_histogram: list = field(default_factory=list)
    wall_clock_s: float = 0.0
    config: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def errors(self) -> int:
        return self.union_trial_errors if self.mode == "mabrc" else self.dest_trial_errors

    @property
    def p_err_estimate(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.trials)

    @property
    def relay_error_rate(self) -> float:
        return self.relay_trial_errors / self.trials if self.trials else 0.0

    @property
    def p_err_marc(self) -> float:
        return self.dest_trial_errors / self.trials if self.trials else 0.0

    @property
    def p_err_mabrc(self) -> float:
        return self.union_trial_errors / self.trials if self.trials else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        lo, hi = self.interval
        d.update(p_err_estimate=self.p_err_estimate, wilson95=[lo, hi],
                 relay_error_rate=self.relay_error_rate, p_err_marc=self.p_err_marc,
                 p_err_mabrc=self.p_err_mabrc, version=__version__)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), default=_json_default, **kw)

    def summary(self) -> str:
        lo, hi = self.interval
        return (f"{self.scheme}: {self.errors} errors in {self.trials} trials ({self.mode}), "
                f"p_err={self.p_err_estimate:.4f} [{lo:.4f}, {hi:.4f}], "
                f"relay errors {self.relay_trial_errors}, {self.wall_clock_s:.2f}s")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


# --------------------------------------------------------------------------
# randomness


def rng_for(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Independent generator per (seed, stream, index); no shared state."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream, int(index)]))


def sample_rows(rng, p_flat: np.ndarray, size) -> np.ndarray:
    cdf = np.cumsum(p_flat)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(size), side="right")


def draw_conditional(rng, kernel: np.ndarray, cond_idx: np.ndarray) -> np.ndarray:
    """Letter-wise draws from ``kernel[cond_idx]`` (kernel rows are distributions)."""
    k = kernel.reshape(-1, kernel.shape[-1])
    cdf = np.cumsum(k, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(np.shape(cond_idx))
    c = cdf[cond_idx]
    return (c < u[..., None]).sum(axis=-1)


class ChannelSampler:
    """Draws (y, y3) blocks from a DM channel; CDFs are built once."""

    def __init__(self, ch):
        self.ch = ch
        a, b, c = ch.input_sizes
        self.b, self.c = b, c
        self.ny3 = ch.output_sizes[1]
        k = ch.kernel.reshape(a * b * c, -1)
        self.lookup = k.argmax(axis=1) if np.all(k.max(axis=1) == 1.0) else None
        self.cdf = np.cumsum(k, axis=1)
        self.cdf[:, -1] = 1.0

    def __call__(self, rng, x1, x2, x3):
        idx = (x1 * self.b + x2) * self.c + x3
        if self.lookup is not None:
            joint = self.lookup[idx]
        else:
            u = rng.random(np.shape(idx))
            joint = (self.cdf[idx] < u[..., None]).sum(axis=-1)
        return joint // self.ny3, joint % self.ny3


def pass_channel(rng, ch, x1, x2, x3):
    """(y, y3) for one block of channel inputs."""
    return ChannelSampler(ch)(rng, x1, x2, x3)


# --------------------------------------------------------------------------
# sequences


def digits(size: int, m: int) -> np.ndarray:
    """All sequences over an alphabet of ``size`` as rows, index order row-major."""
    total = size ** m
    if total > MAX_CANDIDATES:
        raise CodebookTooLarge(f"{size}^{m} = {total} sequences exceeds the enumeration budget {MAX_CANDIDATES}")
    idx = np.arange(total)
    out = np.empty((total, m), dtype=np.int64)
    for j in range(m - 1, -1, -1):
        out[:, j] = idx % size
        idx //= size
    return out


def seq_index(seq: np.ndarray, size: int) -> int:
    v = 0
    for s in seq:
        v = v * size + int(s)
    return v


# --------------------------------------------------------------------------
# typicality


class TypSpace:
    """Strong-typicality tests against one pmf, on batches of candidate tuples."""

    def __init__(self, pmf: JointPmf, epsilon: float):
        self.pmf = pmf
        self.names = pmf.names
        self.p = np.ascontiguousarray(pmf.weights).ravel()
        self.epsilon = epsilon
        strides, acc = [], 1
        for v in reversed(pmf.variables):
            strides.append(acc)
            acc *= v.size
        self.strides = dict(zip(reversed(self.names), strides))

    def marginal(self, names) -> "TypSpace":
        return TypSpace(self.pmf.marginal(names), self.epsilon)

    def atoms(self, seqs: dict) -> np.ndarray:
        out = 0
        for n in self.names:
            out = out + np.asarray(seqs[n], dtype=np.int64) * self.strides[n]
        return np.atleast_2d(out)

    def typical(self, atoms: np.ndarray) -> np.ndarray:
        return typical_rows(atoms, self.p, self.epsilon)


def prune(space: TypSpace, ids: np.ndarray, seqs_of, chunk: int = 1 << 15) -> np.ndarray:
    """Candidates whose own tuple is typical for ``space`` (a marginal test)."""
    keep = []
    for s in range(0, len(ids), chunk):
        c = ids[s:s + chunk]
        keep.append(c[space.typical(space.atoms(seqs_of(c)))])
    return np.concatenate(keep) if keep else ids[:0]


def unique_pair(space: TypSpace, c1: np.ndarray, c2: np.ndarray, seqs_of, n: int,
                chunk: int = 1 << 16):
    """The unique typical pair in ``c1 x c2`` or None (none or several).

    ``seqs_of(i, j, cols)`` returns the sequences of the pair arrays at the
    given positions. Support is checked one position at a time so most
    wrong pairs are discarded after a single letter.
    """
    found = []
    total = len(c1) * len(c2)
    for s in range(0, total, chunk):
        flat = np.arange(s, min(s + chunk, total))
        i, j = c1[flat // len(c2)], c2[flat % len(c2)]
        for t in range(n):
            a = space.atoms(seqs_of(i, j, slice(t, t + 1)))[:, 0] if len(i) else np.zeros(0, np.int64)
            ok = space.p[a] > 0
            i, j = i[ok], j[ok]
            if not len(i):
                break
        if len(i):
            ok = space.typical(space.atoms(seqs_of(i, j, slice(None))))
            for a, b in zip(i[ok], j[ok]):
                found.append((int(a), int(b)))
                if len(found) > 1:
                    return None
    return found[0] if len(found) == 1 else None


def unique_single(space: TypSpace, ids: np.ndarray, seqs_of):
    ok = prune(space, ids, seqs_of)
    return int(ok[0]) if len(ok) == 1 else None


# --------------------------------------------------------------------------
# trial loop


@dataclass
class TrialOutcome:
    relay_errors: list
    dest_errors: list


def run_trials(scheme: str, cfg: BlockMarkovConfig, trials: int, one_trial, notes=None) -> SimReport:
    """Run ``one_trial(rng) -> TrialOutcome`` with per-trial derived seeds and aggregate."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    t0 = time.perf_counter()
    rngs = (rng_for(cfg.seed, STREAM_TRIAL, t) for t in range(trials))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            outcomes = list(ex.map(one_trial, rngs))
    else:
        outcomes = [one_trial(r) for r in rngs]
    B = cfg.B
    rep = SimReport(scheme, trials, cfg.mode, relay_block_histogram=[0] * B,
                    dest_block_histogram=[0] * B, first_error_histogram=[0] * (B + 1),
                    config=cfg.to_dict(), notes=dict(notes or {}))
    for o in outcomes:
        r_any = any(o.relay_errors)
        d_any = any(o.dest_errors)
        for b in range(B):
            rep.relay_block_histogram[b] += int(o.relay_errors[b])
            rep.dest_block_histogram[b] += int(o.dest_errors[b])
        rep.relay_block_errors += int(sum(o.relay_errors))
        rep.dest_block_errors += int(sum(o.dest_errors))
        rep.relay_trial_errors += r_any
        rep.dest_trial_errors += d_any
        rep.union_trial_errors += r_any or d_any
        errs = [b for b in range(B) if o.relay_errors[b] or o.dest_errors[b]]
        # last slot counts error-free trials
        rep.first_error_histogram[errs[0] if errs else B] += 1
    rep.wall_clock_s = time.perf_counter() - t0
    return rep


def sweep_csv(rows, header=("margin_bits", "p_err", "wilson_lo", "wilson_hi", "trials")) -> str:
    """CSV text for a margin sweep; each row is ``(margin, SimReport)``."""
    lines = [",".join(header)]
    for margin, rep in rows:
        lo, hi = rep.interval
        lines.append(f"{margin:.6g},{rep.p_err_estimate:.6g},{lo:.6g},{hi:.6g},{rep.trials}")
    return "\n".join(lines) + "\n"

"""Phase- and Rayleigh-fading Gaussian MARCs: decode-and-forward conditions,
ergodic thresholds and the separation-optimality verdict.

Rayleigh expectations reduce to the kernel ``g(a) = E ln(1 + a X)`` with
``X ~ Exp(1)``, which equals ``exp(1/a) E1(1/a)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__

EULER_GAMMA = 0.57721566490153286061
LN2 = math.log(2.0)
STRICTNESS = 1e-9
ZERO_ENTROPY = 1e-12


# --------------------------------------------------------------------------
# exponential integral


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    total, term, k = 0.0, 1.0, 0
    while True:
        k += 1
        term *= -x / k
        add = term / k
        total += add
        if abs(add) < 1e-17 * max(abs(total), 1e-300) or k > 200:
            break
    return -EULER_GAMMA - math.log(x) - total


def _e1_scaled_cf(x: float) -> float:
    # exp(x) E1(x) by modified Lentz on 1/(x+1- 1^2/(x+3- 2^2/(x+5- ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def exp_integral_e1(x: float) -> float:
    """E1(x) = integral from x to infinity of exp(-q)/q dq, for x > 0."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"E1 is defined for x > 0, got {x}")
    if x <= 1.0:
        return _e1_series(x)
    return math.exp(-x) * _e1_scaled_cf(x)


def exp_integral_e1_scaled(x: float) -> float:
    """exp(x) E1(x), finite for large x where exp(x) alone overflows."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"E1 is defined for x > 0, got {x}")
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _e1_scaled_cf(x)


def log_gain(a: float) -> float:
    """E ln(1 + a X), X ~ Exp(1), in nats; equals exp(1/a) E1(1/a)."""
    if a < 0:
        raise ValueError("scale must be non-negative")
    if a == 0:
        return 0.0
    return exp_integral_e1_scaled(1.0 / a)


def _h(a: float) -> float:
    return a * log_gain(a)


def _dh(a: float) -> float:
    # derivative of a g(a); uses g'(a) = (a - g(a)) / a^2
    return log_gain(a) * (1.0 - 1.0 / a) + 1.0


# --------------------------------------------------------------------------
# expectations


@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 1_000_000
    seed: int = 0
    chunk: int = 1 << 18
    workers: int = 1


@dataclass(frozen=True)
class Expectation:
    value: float
    std_error: float
    method: str
    samples: int = 0


def _mc_chunk(scales, n_pairs, seed):
    rng = np.random.default_rng(seed)
    u = rng.random((len(scales), n_pairs))
    x = -np.log(u)
    xa = -np.log1p(-u)  # antithetic partner of each exponential draw
    s = np.asarray(scales)[:, None]
    v = 0.5 * (np.log2(1 + (s * x).sum(0)) + np.log2(1 + (s * xa).sum(0)))
    return float(v.sum()), float((v * v).sum())


def expected_log2_capacity(scales, mc: MonteCarlo | None = None, method: str = "auto") -> Expectation:
    """E log2(1 + sum_i scales[i] X_i) with X_i iid Exp(1).

    ``method="auto"`` uses the closed forms for one or two scales and Monte
    Carlo otherwise; ``"mc"`` forces Monte Carlo; ``"exact"`` refuses to
    sample. Monte Carlo pairs each exponential with its antithetic partner,
    splits the pairs into chunks with seeds spawned from ``mc.seed`` and
    adds chunk sums in chunk order, so the result does not depend on
    ``mc.workers``.
    """
    scales = [float(a) for a in scales]
    if not scales:
        raise ValueError("need at least one scale")
    if any(not a > 0 for a in scales):
        raise ValueError(f"scales must be positive, got {scales}")
    if method not in ("auto", "mc", "exact"):
        raise ValueError(f"unknown method {method!r}")
    if method != "mc" and len(scales) <= 2:
        if len(scales) == 1:
            return Expectation(log_gain(scales[0]) / LN2, 0.0, "exact")
        a, b = scales
        if abs(a - b) <= 1e-4 * max(a, b):
            # divided difference of h(a) = a g(a); trapezoid of h' is O((a-b)^2)
            v = 0.5 * (_dh(a) + _dh(b)) if a != b else _dh(a)
        else:
            v = (_h(a) - _h(b)) / (a - b)
        return Expectation(v / LN2, 0.0, "exact")
    if method == "exact":
        raise ValueError(f"no closed form for {len(scales)} scales")
    mc = mc or MonteCarlo()
    pairs = max(mc.samples // 2, 2)
    sizes = [mc.chunk] * (pairs // mc.chunk) + ([pairs % mc.chunk] if pairs % mc.chunk else [])
    seeds = np.random.SeedSequence(mc.seed).spawn(len(sizes))
    jobs = [(scales, n, s) for n, s in zip(sizes, seeds)]
    if mc.workers > 1:
        with ThreadPoolExecutor(mc.workers) as ex:
            parts = list(ex.map(lambda j: _mc_chunk(*j), jobs))
    else:
        parts = [_mc_chunk(*j) for j in jobs]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / pairs
    var = max(s2 / pairs - mean * mean, 0.0) * pairs / (pairs - 1)
    return Expectation(mean, math.sqrt(var / pairs), "mc", 2 * pairs)


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class FadingMarcParams:
    a11: float
    a21: float
    a31: float
    a13: float
    a23: float
    P1: float
    P2: float
    P3: float
    kind: str = "phase"

    def __post_init__(self):
        if self.kind not in ("phase", "rayleigh"):
            raise ValueError(f"kind must be 'phase' or 'rayleigh', got {self.kind!r}")
        for f in ("a11", "a21", "a31", "a13", "a23", "P1", "P2", "P3"):
            v = getattr(self, f)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{f} must be finite and non-negative, got {v}")

    @property
    def snr(self) -> dict:
        """Received SNR of each link, e.g. ``snr["13"] = a13^2 P1``."""
        return {"11": self.a11 ** 2 * self.P1, "21": self.a21 ** 2 * self.P2, "31": self.a31 ** 2 * self.P3,
                "13": self.a13 ** 2 * self.P1, "23": self.a23 ** 2 * self.P2}

    def to_json(self) -> dict:
        return {"kind": self.kind,
                "a": {k: getattr(self, "a" + k) for k in ("11", "21", "31", "13", "23")},
                "P": [self.P1, self.P2, self.P3]}

    @classmethod
    def from_json(cls, obj: dict) -> "FadingMarcParams":
        try:
            a, P = obj["a"], obj["P"]
            if len(P) != 3:
                raise ValueError("fading JSON field 'P' must list three powers")
            return cls(*(float(a[k]) for k in ("11", "21", "31", "13", "23")),
                       float(P[0]), float(P[1]), float(P[2]), str(obj.get("kind", "phase")).lower())
        except KeyError as e:
            raise ValueError(f"fading JSON is missing field {e.args[0]!r}") from None


@dataclass(frozen=True)
class SourceEntropies:
    """Conditional source entropies in bits, destination side then relay side."""

    h1_given_2w: float
    h2_given_1w: float
    h12_given_w: float
    h1_given_2w3: float = 0.0
    h2_given_1w3: float = 0.0
    h12_given_w3: float = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{k} must be a finite non-negative entropy, got {v}")

    @property
    def destination(self):
        return (self.h1_given_2w, self.h2_given_1w, self.h12_given_w)

    @property
    def relay(self):
        return (self.h1_given_2w3, self.h2_given_1w3, self.h12_given_w3)

    def realizable(self, tol: float = 1e-9) -> bool:
        """Whether some source law could produce these numbers: the joint
        conditional entropy is at least the sum of the two single ones."""
        d, r = self.destination, self.relay
        return d[0] + d[1] <= d[2] + tol and r[0] + r[1] <= r[2] + tol

    @classmethod
    def from_model(cls, model) -> "SourceEntropies":
        e = cls(model.entropy("S1", ("S2", "W")), model.entropy("S2", ("S1", "W")),
                model.entropy(("S1", "S2"), "W"), model.entropy("S1", ("S2", "W3")),
                model.entropy("S2", ("S1", "W3")), model.entropy(("S1", "S2"), "W3"))
        assert e.realizable(), e
        return e


# --------------------------------------------------------------------------
# decode-and-forward conditions and thresholds


def _require(p: FadingMarcParams, kind: str):
    if p.kind != kind:
        raise ValueError(f"expected {kind} fading parameters, got kind={p.kind!r}")


def phase_df_conditions(p: FadingMarcParams) -> tuple[bool, bool, bool]:
    _require(p, "phase")
    s = p.snr
    return (s["11"] + s["31"] <= s["13"],
            s["21"] + s["31"] <= s["23"],
            s["11"] + s["21"] + s["31"] <= s["13"] + s["23"])


def phase_region(p: FadingMarcParams, kappa: float = 1.0) -> tuple[float, float, float]:
    _require(p, "phase")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    s = p.snr
    return (kappa * math.log2(1 + s["11"] + s["31"]),
            kappa * math.log2(1 + s["21"] + s["31"]),
            kappa * math.log2(1 + s["11"] + s["21"] + s["31"]))


def rayleigh_df_conditions(p: FadingMarcParams) -> tuple[bool, bool, bool]:
    """Relay-decoding conditions for Rayleigh fading.

    Each right-hand side is ``a / g(a)``-type; the joint one is the divided
    difference ``(b - a) / (g(b) - g(a))`` of the two relay-link SNRs, which
    becomes ``a^2 / (a - g(a))`` when the SNRs coincide.
    """
    _require(p, "rayleigh")
    s = p.snr
    for k in ("13", "23"):
        if not s[k] > 0:
            raise ValueError(f"relay-link SNR a{k}^2 P{k[0]} must be positive for the Rayleigh conditions")
    a, b = s["13"], s["23"]
    ga, gb = log_gain(a), log_gain(b)
    if abs(a - b) <= 1e-9 * max(a, b):
        third = a * a / (a - ga)
    else:
        third = (b - a) / (gb - ga)
    return (1 + s["11"] + s["31"] <= a / ga,
            1 + s["21"] + s["31"] <= b / gb,
            1 + s["11"] + s["21"] + s["31"] <= third)


def _rayleigh_threshold(scales, mc, method="auto") -> Expectation:
    active = [x for x in scales if x > 0]
    if not active:
        return Expectation(0.0, 0.0, "exact")
    return expected_log2_capacity(active, mc, method)


def rayleigh_region(p: FadingMarcParams, kappa: float = 1.0, mc: MonteCarlo | None = None):
    """Three ergodic thresholds and their standard errors (zero when exact)."""
    _require(p, "rayleigh")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    s = p.snr
    e = [_rayleigh_threshold([s["11"], s["31"]], mc),
         _rayleigh_threshold([s["21"], s["31"]], mc),
         _rayleigh_threshold([s["11"], s["21"], s["31"]], mc)]
    return tuple(kappa * x.value for x in e), tuple(kappa * x.std_error for x in e)


# --------------------------------------------------------------------------
# verdict


@dataclass
class RegionReport:
    kind: str
    kappa: float
    df_conditions: tuple
    thresholds: tuple
    threshold_std_errors: tuple = (0.0, 0.0, 0.0)
    achievable: tuple = ()
    converse_ok: tuple = ()
    mabrc_entropy_conditions_hold: bool | None = None
    verdict: str = ""
    params: dict = field(default_factory=dict)

    @property
    def df_conditions_hold(self) -> bool:
        return all(self.df_conditions)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["df_conditions_hold"] = self.df_conditions_hold
        d["version"] = __version__
        return d


def check_separation_optimal(e: SourceEntropies, p: FadingMarcParams, kappa: float = 1.0,
                             mabrc: bool = False, mc: MonteCarlo | None = None,
                             delta: float = STRICTNESS) -> RegionReport:
    """ACHIEVABLE, NOT_ACHIEVABLE or BOUNDARY for the fading MARC (or MABRC).

    ACHIEVABLE needs the decode-and-forward conditions, every strict
    entropy-vs-threshold inequality and, for the MABRC, relay-side
    entropies no larger than destination-side ones. NOT_ACHIEVABLE means a
    non-strict inequality fails, which rules the rate out. Anything else is
    BOUNDARY.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if p.kind == "phase":
        df = phase_df_conditions(p)
        thr, se = phase_region(p, kappa), (0.0, 0.0, 0.0)
    else:
        df = rayleigh_df_conditions(p)
        thr, se = rayleigh_region(p, kappa, mc)
    lhs = e.destination
    strict = tuple(bool(h <= ZERO_ENTROPY or h < t - delta) for h, t in zip(lhs, thr))
    weak = tuple(bool(h <= t + delta) for h, t in zip(lhs, thr))
    rep = RegionReport(p.kind, kappa, df, thr, se, strict, weak, params=p.to_json())
    ok = all(df) and all(strict)
    if mabrc:
        rep.mabrc_entropy_conditions_hold = all(r <= d + delta for r, d in zip(e.relay, e.destination))
        ok = ok and rep.mabrc_entropy_conditions_hold
    if not all(weak):
        rep.verdict = "NOT_ACHIEVABLE"
    elif ok:
        rep.verdict = "ACHIEVABLE"
    else:
        rep.verdict = "BOUNDARY"
    return rep

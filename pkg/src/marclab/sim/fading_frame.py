"""Complex baseband frames of the fading Gaussian MARC.

Only channel statistics are simulated here (no decoders): received
sequences for given inputs, and Monte-Carlo averages of the ergodic rate
expressions that the closed forms in :mod:`marclab.fading` evaluate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fading import FadingMarcParams, MonteCarlo
from .core import STREAM_TRIAL, rng_for

LINKS = ("11", "21", "31", "13", "23")


def complex_normal(rng, size) -> np.ndarray:
    """CN(0, 1) samples: independent real and imaginary parts of variance 1/2."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def draw_coefficients(p: FadingMarcParams, n: int, rng) -> dict:
    """Link coefficients ``a * e^{j theta}`` (phase) or ``a * U`` (Rayleigh), iid over time."""
    out = {}
    for k in LINKS:
        a = getattr(p, "a" + k)
        if p.kind == "phase":
            out[k] = a * np.exp(1j * rng.uniform(0.0, 2 * np.pi, n))
        else:
            out[k] = a * complex_normal(rng, n)
    return out


@dataclass
class GaussianMarcFrame:
    """One frame: destination output with its CSI, relay output with its CSI."""

    y: np.ndarray
    y3: np.ndarray
    h: dict
    z: np.ndarray
    z3: np.ndarray

    @property
    def destination_csi(self) -> dict:
        return {k: self.h[k] for k in ("11", "21", "31")}

    @property
    def relay_csi(self) -> dict:
        return {k: self.h[k] for k in ("13", "23")}


def simulate_fading_frame(p: FadingMarcParams, inputs, seed: int = 0, tol: float = 1e-9) -> GaussianMarcFrame:
    """Pass complex input sequences ``(x1, x2, x3)`` through one fading frame.

    Every symbol must respect its node's power, ``|x_i[k]|^2 <= P_i``.
    """
    x = [np.asarray(v, dtype=complex) for v in inputs]
    if len(x) != 3 or any(v.ndim != 1 for v in x) or len({v.size for v in x}) != 1:
        raise ValueError("inputs must be three 1-d sequences of equal length")
    for i, (v, P) in enumerate(zip(x, (p.P1, p.P2, p.P3)), start=1):
        peak = float(np.max(np.abs(v) ** 2)) if v.size else 0.0
        if peak > P * (1 + tol) + tol:
            raise ValueError(f"input {i} has symbol power {peak:.6g} above P{i}={P:.6g}")
    n = x[0].size
    rng = rng_for(seed, STREAM_TRIAL)
    h = draw_coefficients(p, n, rng)
    z, z3 = complex_normal(rng, n), complex_normal(rng, n)
    y = h["11"] * x[0] + h["21"] * x[1] + h["31"] * x[2] + z
    y3 = h["13"] * x[0] + h["23"] * x[1] + z3
    return GaussianMarcFrame(y, y3, h, z, z3)


@dataclass
class ErgodicEstimate:
    thresholds: tuple
    std_errors: tuple
    samples: int


def estimate_ergodic_rate(p: FadingMarcParams, mc: MonteCarlo | None = None) -> ErgodicEstimate:
    """Empirical ``E log2(1 + sum a^2 |H|^2 P)`` for the three destination sums.

    The sums are (11, 31), (21, 31) and (11, 21, 31), averaged over fading
    draws from :func:`draw_coefficients` with unit input power scaling.
    """
    mc = mc or MonteCarlo()
    groups = (("11", "31"), ("21", "31"), ("11", "21", "31"))
    power = {"11": p.P1, "21": p.P2, "31": p.P3}
    s1 = np.zeros(3)
    s2 = np.zeros(3)
    done = 0
    for c, start in enumerate(range(0, mc.samples, mc.chunk)):
        k = min(mc.chunk, mc.samples - start)
        h = draw_coefficients(p, k, rng_for(mc.seed, STREAM_TRIAL, c + 1))
        g = {l: np.abs(h[l]) ** 2 * power[l] for l in power}
        for i, grp in enumerate(groups):
            v = np.log2(1.0 + sum(g[l] for l in grp))
            s1[i] += v.sum()
            s2[i] += (v * v).sum()
        done += k
    mean = s1 / done
    var = np.maximum(s2 / done - mean ** 2, 0.0)
    se = np.sqrt(var / max(done - 1, 1))
    if p.kind == "phase":
        se = np.zeros(3)  # |H| is constant, so every draw gives the same value
    return ErgodicEstimate(tuple(float(v) for v in mean), tuple(float(v) for v in se), done)

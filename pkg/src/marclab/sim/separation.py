"""Separation-based block-Markov decode-and-forward with irregular binning.

Each source sequence gets two independent uniform bin indices, one sized for
the relay (``u^r``) and one for the destination (``u^d``). In block ``b``
transmitter ``i`` sends ``x_i(u^r_{i,b}, u^d_{i,b-1})`` superposed on
``v_i(u^d_{i,b-1})``, and the relay sends ``x3(u^d_{1,b-1}, u^d_{2,b-1})``
from its own decoded estimates. Block 1 uses destination index 0 and block
``B+1`` uses relay index 0. The relay decodes forward. The destination
decodes backward from block ``B+1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..conditions import channel_joint
from ..models import DmChannel, SeparationInput, SourceSideInfoModel
from .core import (
    STREAM_CODEBOOK,
    BlockMarkovConfig,
    CodebookTooLarge,
    TrialOutcome,
    TypSpace,
    digits,
    draw_conditional,
    ChannelSampler,
    prune,
    rng_for,
    run_trials,
    sample_rows,
    unique_pair,
)


@dataclass
class CodebookSpec:
    kind: str
    seed: int
    sizes: dict
    bins: dict
    tables: dict
    generation: object = None
    fillers: dict = field(default_factory=dict)
    _members: dict = field(default_factory=dict, repr=False)

    def members(self, name: str, u: int) -> np.ndarray:
        """Source-sequence indices in bin ``u`` of bin map ``name``."""
        if name not in self._members:
            f = self.bins[name]
            order = np.argsort(f, kind="stable")
            starts = np.searchsorted(f[order], np.arange(self.sizes[name] + 1))
            self._members[name] = (order, starts)
        order, starts = self._members[name]
        return order[starts[u]:starts[u + 1]]

    def same_as(self, other: "CodebookSpec") -> bool:
        return (self.sizes == other.sizes
                and all(np.array_equal(self.bins[k], other.bins[k]) for k in self.bins)
                and all(np.array_equal(self.tables[k], other.tables[k]) for k in self.tables)
                and set(self.fillers) == set(other.fillers)
                and all(np.array_equal(self.fillers[k], other.fillers[k]) for k in self.fillers))


def guard_tables(tables: dict, budget: int):
    total = sum(tables.values())
    if total > budget:
        worst = max(tables, key=tables.get)
        raise CodebookTooLarge(
            f"codebook needs {total} codewords (largest table {worst} has {tables[worst]}), budget is {budget}")


def guard_candidates(model: SourceSideInfoModel, m: int):
    k1, k2 = model.size("S1"), model.size("S2")
    total = k1 ** m * k2 ** m
    if total > 1 << 20:
        raise CodebookTooLarge(f"|S1|^m |S2|^m = {total} source pairs exceeds the decoding budget 2^20")


def uniform_bins(rng, n_items: int, n_bins: int) -> np.ndarray:
    return rng.integers(0, n_bins, size=n_items)


def build_separation_codebook(model: SourceSideInfoModel, ch: DmChannel, inp: SeparationInput,
                              cfg: BlockMarkovConfig) -> CodebookSpec:
    m, n = cfg.m, cfg.n
    guard_candidates(model, m)
    M = {k: cfg.table_size(k) for k in ("R1r", "R2r", "R1d", "R2d")}
    guard_tables({"v1": M["R1d"], "v2": M["R2d"], "x1": M["R1r"] * M["R1d"],
                  "x2": M["R2r"] * M["R2d"], "x3": M["R1d"] * M["R2d"]}, cfg.max_codewords)
    for r, s in zip(("X1", "X2", "X3"), ch.input_sizes):
        if inp.sizes[r] != s:
            raise ValueError(f"input alphabet of {r} has size {inp.sizes[r]}, channel expects {s}")
    rng = rng_for(cfg.seed, STREAM_CODEBOOK)
    n1, n2 = model.size("S1") ** m, model.size("S2") ** m
    bins = {"f1r": uniform_bins(rng, n1, M["R1r"]), "f1d": uniform_bins(rng, n1, M["R1d"]),
            "f2r": uniform_bins(rng, n2, M["R2r"]), "f2d": uniform_bins(rng, n2, M["R2d"])}
    v1 = sample_rows(rng, inp.p_v1, (M["R1d"], n))
    v2 = sample_rows(rng, inp.p_v2, (M["R2d"], n))
    x1 = draw_conditional(rng, inp.k_x1, np.broadcast_to(v1[None], (M["R1r"],) + v1.shape))
    x2 = draw_conditional(rng, inp.k_x2, np.broadcast_to(v2[None], (M["R2r"],) + v2.shape))
    nv2 = inp.p_v2.size
    x3 = draw_conditional(rng, inp.k_x3, v1[:, None, :] * nv2 + v2[None, :, :])
    sizes = {"f1r": M["R1r"], "f1d": M["R1d"], "f2r": M["R2r"], "f2d": M["R2d"]}
    return CodebookSpec("sep", cfg.seed, sizes, bins,
                        {"v1": v1, "v2": v2, "x1": x1, "x2": x2, "x3": x3}, inp)


def decode_pair(full, m1, m2, c1, c2, one1, one2, pair, n):
    """Unique typical pair, pruning each side by its marginal first.

    A single a-priori candidate is returned without any test.
    """
    if len(c1) * len(c2) == 1:
        return int(c1[0]), int(c2[0])
    if m1 is not None:
        c1 = prune(m1, c1, one1)
    if m2 is not None:
        c2 = prune(m2, c2, one2)
    if not len(c1) or not len(c2):
        return None
    return unique_pair(full, c1, c2, pair, n)


class SourceBlocks:
    """B blocks of m letters of (S1, S2, W, W3), with sequence indices."""

    def __init__(self, rng, model: SourceSideInfoModel, m: int, B: int):
        w = model.joint.weights
        flat = sample_rows(rng, w.ravel(), (B, m))
        s1, s2, ww, w3 = np.unravel_index(flat, w.shape)
        self.s1, self.s2, self.w, self.w3 = s1, s2, ww, w3
        k1, k2 = model.size("S1"), model.size("S2")
        pw1 = k1 ** np.arange(m - 1, -1, -1)
        pw2 = k2 ** np.arange(m - 1, -1, -1)
        self.i1 = (s1 * pw1).sum(axis=1)
        self.i2 = (s2 * pw2).sum(axis=1)


def sw_spaces(model: SourceSideInfoModel, side: str, eps: float):
    full = TypSpace(model.joint.marginal(("S1", "S2", side)), eps)
    return full, full.marginal(("S1", side)), full.marginal(("S2", side))


def sw_decode(spaces, c1, c2, seq1, seq2, side_seq, side: str, m: int):
    full, m1, m2 = spaces
    return decode_pair(
        full, m1, m2, c1, c2,
        lambda i: {"S1": seq1[i], side: side_seq[None]},
        lambda j: {"S2": seq2[j], side: side_seq[None]},
        lambda i, j, cols: {"S1": seq1[i, cols], "S2": seq2[j, cols], side: side_seq[None, cols]},
        m,
    )


def run_separation_df(model: SourceSideInfoModel, ch: DmChannel, inp: SeparationInput,
                      cfg: BlockMarkovConfig, trials: int, codebook: CodebookSpec | None = None):
    """Monte-Carlo error rate of the separation-based DF scheme.

    Zero or several typical candidates count as a decoding error. A trial
    is in error at the destination if any block is decoded wrongly there
    (MARC) and, in MABRC mode, also if the relay gets any block wrong.
    """
    cb = codebook or build_separation_codebook(model, ch, inp, cfg)
    m, n, B, eps = cfg.m, cfg.n, cfg.B, cfg.epsilon
    T = cb.tables
    seq1 = digits(model.size("S1"), m)
    seq2 = digits(model.size("S2"), m)
    jc = channel_joint(ch, inp)
    rc = TypSpace(jc.marginal(("V1", "V2", "X1", "X2", "X3", "Y3")), eps)
    rc1, rc2 = rc.marginal(("V1", "V2", "X1", "X3", "Y3")), rc.marginal(("V1", "V2", "X2", "X3", "Y3"))
    dc = TypSpace(jc.marginal(("V1", "V2", "X1", "X2", "X3", "Y")), eps)
    dc1, dc2 = dc.marginal(("V1", "X1", "Y")), dc.marginal(("V2", "X2", "Y"))
    sw_r = sw_spaces(model, "W3", eps)
    sw_d = sw_spaces(model, "W", eps)
    M1r, M2r, M1d, M2d = cb.sizes["f1r"], cb.sizes["f2r"], cb.sizes["f1d"], cb.sizes["f2d"]
    all_1r, all_2r = np.arange(M1r), np.arange(M2r)
    all_1d, all_2d = np.arange(M1d), np.arange(M2d)
    f1r, f2r, f1d, f2d = cb.bins["f1r"], cb.bins["f2r"], cb.bins["f1d"], cb.bins["f2d"]
    v1, v2, x1, x2, x3 = T["v1"], T["v2"], T["x1"], T["x2"], T["x3"]
    pass_channel = ChannelSampler(ch)

    def trial(rng):
        src = SourceBlocks(rng, model, m, B)
        u1r, u2r = f1r[src.i1], f2r[src.i2]
        u1d, u2d = f1d[src.i1], f2d[src.i2]
        # relay state: destination bins of its previous estimate
        rd1 = rd2 = 0
        relay_est = [None] * B
        ys = []
        for b in range(B + 1):
            a1 = u1r[b] if b < B else 0
            a2 = u2r[b] if b < B else 0
            p1 = u1d[b - 1] if b > 0 else 0
            p2 = u2d[b - 1] if b > 0 else 0
            y, y3 = pass_channel(rng, x1[a1, p1], x2[a2, p2], x3[rd1, rd2])
            ys.append(y)
            if b == B:
                break
            d1, d2 = rd1, rd2
            known = {"V1": v1[d1][None], "V2": v2[d2][None], "X3": x3[d1, d2][None], "Y3": y3[None]}
            got = decode_pair(
                rc, rc1, rc2, all_1r, all_2r,
                lambda i: dict(known, X1=x1[i, d1]),
                lambda j: dict(known, X2=x2[j, d2]),
                lambda i, j, c: {k: v[:, c] for k, v in known.items()} | {"X1": x1[i, d1, c], "X2": x2[j, d2, c]},
                n,
            )
            s_hat = None
            if got is not None:
                s_hat = sw_decode(sw_r, cb.members("f1r", got[0]), cb.members("f2r", got[1]),
                                  seq1, seq2, src.w3[b], "W3", m)
            relay_est[b] = s_hat
            rd1, rd2 = (f1d[s_hat[0]], f2d[s_hat[1]]) if s_hat is not None else (0, 0)

        relay_err = [relay_est[b] != (src.i1[b], src.i2[b]) for b in range(B)]
        dest_err = [True] * B
        r1 = r2 = 0  # relay-bin indices of block b+1 at the destination
        for b in range(B - 1, -1, -1):
            y = ys[b + 1]
            known = {"Y": y[None]}
            got = decode_pair(
                dc, dc1, dc2, all_1d, all_2d,
                lambda i: {"V1": v1[i], "X1": x1[r1, i], "Y": y[None]},
                lambda j: {"V2": v2[j], "X2": x2[r2, j], "Y": y[None]},
                lambda i, j, c: {"V1": v1[i, c], "V2": v2[j, c], "X1": x1[r1, i, c],
                                 "X2": x2[r2, j, c], "X3": x3[i, j, c], "Y": y[None, c]},
                n,
            )
            s_hat = None
            if got is not None:
                s_hat = sw_decode(sw_d, cb.members("f1d", got[0]), cb.members("f2d", got[1]),
                                  seq1, seq2, src.w[b], "W", m)
            dest_err[b] = s_hat != (src.i1[b], src.i2[b])
            r1, r2 = (f1r[s_hat[0]], f2r[s_hat[1]]) if s_hat is not None else (0, 0)
        return TrialOutcome(relay_err, dest_err)

    return run_trials("sep", cfg, trials, trial)

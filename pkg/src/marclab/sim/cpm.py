"""Block-Markov simulators with correlation-preserving channel codewords.

Scheme A generates the source codewords ``x_i(s_i, u_i, q(t))`` directly from
the source sequence of the current block and the bin index of the previous
one. The relay decodes the source pair itself, and the destination decodes
bin indices backwards and then runs a Slepian-Wolf decoder with ``W``.

Scheme B swaps the roles: ``x_i(u_i, s_i_prev, q(t))`` carries the bin of the
current block towards the relay, the relay decodes bins and resolves them
with its side information, and sends ``x3(s1, s2, q(t))`` for the previous
block. The destination decodes source pairs directly with backward decoding.

Both schemes run at one channel symbol per source sample, so ``n == m``.
Block ``B+1`` uses filler source sequences drawn once per codebook and known
to every node. Scheme B also uses a filler side-information sequence for the
relay's first block.
"""

from __future__ import annotations

import numpy as np

from ..conditions import common_part_factor, cpm_joint
from ..models import CpmInputA, CpmInputB, DmChannel, SourceSideInfoModel
from .core import (
    STREAM_CODEBOOK,
    STREAM_FILLER,
    BlockMarkovConfig,
    ChannelSampler,
    CodebookTooLarge,
    TrialOutcome,
    TypSpace,
    digits,
    draw_conditional,
    rng_for,
    run_trials,
    sample_rows,
)
from .separation import (
    CodebookSpec,
    SourceBlocks,
    decode_pair,
    guard_candidates,
    guard_tables,
    sw_decode,
    sw_spaces,
    uniform_bins,
)


class _CommonPartTables:
    """Per-sequence common-part labels and their row index in the q table."""

    def __init__(self, model: SourceSideInfoModel, m: int):
        cp, _ = common_part_factor(model)
        self.t_size = cp.t_size
        # off-support symbols never occur in true sources; label them 0
        h1 = np.array([t if t < cp.t_size else 0 for t in cp.h1])
        h2 = np.array([t if t < cp.t_size else 0 for t in cp.h2])
        self.seq1 = digits(model.size("S1"), m)
        self.seq2 = digits(model.size("S2"), m)
        self.t1, self.t2 = h1[self.seq1], h2[self.seq2]
        pw = self.t_size ** np.arange(m - 1, -1, -1)
        self.tid1 = (self.t1 * pw).sum(axis=1)
        self.tid2 = (self.t2 * pw).sum(axis=1)
        self.count = self.t_size ** m


def _check_cpm_config(model, ch, sizes, cfg):
    if cfg.n != cfg.m:
        raise ValueError(f"CPM schemes send one channel symbol per source sample; got n={cfg.n}, m={cfg.m}")
    for r, s in zip(("X1", "X2", "X3"), ch.input_sizes):
        if sizes[r] != s:
            raise ValueError(f"input alphabet of {r} has size {sizes[r]}, channel expects {s}")
    for r in ("S1", "S2"):
        if sizes[r] != model.size(r):
            raise ValueError(f"input kernel expects |{r}|={sizes[r]}, source has {model.size(r)}")
    guard_candidates(model, cfg.m)


def _fillers(model: SourceSideInfoModel, cfg: BlockMarkovConfig) -> dict:
    """Known filler block: (a1, a2) from p(s1,s2) and W, W3 drawn given them."""
    rng = rng_for(cfg.seed, STREAM_FILLER)
    blk = SourceBlocks(rng, model, cfg.m, 1)
    return {"a1": blk.s1[0], "a2": blk.s2[0], "a1_index": int(blk.i1[0]), "a2_index": int(blk.i2[0]),
            "alpha": blk.w[0], "alpha3": blk.w3[0]}


def build_cpm_a_codebook(model: SourceSideInfoModel, ch: DmChannel, inp: CpmInputA,
                         cfg: BlockMarkovConfig) -> CodebookSpec:
    _check_cpm_config(model, ch, inp.sizes, cfg)
    m, n = cfg.m, cfg.n
    M1, M2 = cfg.table_size("R1"), cfg.table_size("R2")
    ct = _CommonPartTables(model, m)
    N1, N2 = len(ct.seq1), len(ct.seq2)
    guard_tables({"v1": M1, "v2": M2, "q": ct.count, "x1": N1 * M1, "x2": N2 * M2, "x3": M1 * M2},
                 cfg.max_codewords)
    rng = rng_for(cfg.seed, STREAM_CODEBOOK)
    bins = {"f1": uniform_bins(rng, N1, M1), "f2": uniform_bins(rng, N2, M2)}
    v1 = sample_rows(rng, inp.p_v1, (M1, n))
    v2 = sample_rows(rng, inp.p_v2, (M2, n))
    q = sample_rows(rng, inp.p_q, (ct.count, n))
    nv1, nv2, nq = inp.p_v1.size, inp.p_v2.size, inp.p_q.size
    q1 = q[ct.tid1][:, None, :]
    q2 = q[ct.tid2][:, None, :]
    x1 = draw_conditional(rng, inp.k_x1, (ct.seq1[:, None, :] * nv1 + v1[None]) * nq + q1)
    x2 = draw_conditional(rng, inp.k_x2, (ct.seq2[:, None, :] * nv2 + v2[None]) * nq + q2)
    x3 = draw_conditional(rng, inp.k_x3, v1[:, None, :] * nv2 + v2[None, :, :])
    return CodebookSpec("cpm-a", cfg.seed, {"f1": M1, "f2": M2}, bins,
                        {"v1": v1, "v2": v2, "q": q, "x1": x1, "x2": x2, "x3": x3}, inp,
                        fillers=_fillers(model, cfg))


def build_cpm_b_codebook(model: SourceSideInfoModel, ch: DmChannel, inp: CpmInputB,
                         cfg: BlockMarkovConfig) -> CodebookSpec:
    _check_cpm_config(model, ch, inp.sizes, cfg)
    m, n = cfg.m, cfg.n
    M1, M2 = cfg.table_size("R1"), cfg.table_size("R2")
    ct = _CommonPartTables(model, m)
    N1, N2 = len(ct.seq1), len(ct.seq2)
    guard_tables({"q": ct.count, "x1": M1 * N1, "x2": M2 * N2, "x3": N1 * N2}, cfg.max_codewords)
    rng = rng_for(cfg.seed, STREAM_CODEBOOK)
    bins = {"f1": uniform_bins(rng, N1, M1), "f2": uniform_bins(rng, N2, M2)}
    q = sample_rows(rng, inp.p_q, (ct.count, n))
    nq, k2 = inp.p_q.size, model.size("S2")
    q1, q2 = q[ct.tid1], q[ct.tid2]
    x1 = draw_conditional(rng, inp.k_x1, np.broadcast_to(ct.seq1 * nq + q1, (M1, N1, n)))
    x2 = draw_conditional(rng, inp.k_x2, np.broadcast_to(ct.seq2 * nq + q2, (M2, N2, n)))
    x3 = draw_conditional(rng, inp.k_x3,
                          (ct.seq1[:, None, :] * k2 + ct.seq2[None, :, :]) * nq + q1[:, None, :])
    return CodebookSpec("cpm-b", cfg.seed, {"f1": M1, "f2": M2}, bins,
                        {"q": q, "x1": x1, "x2": x2, "x3": x3}, inp, fillers=_fillers(model, cfg))


def _spaces(model, ch, inp, eps, side, out):
    full = TypSpace(cpm_joint(model, ch, inp.sizes, inp.factors(), side, out), eps)
    return full


def run_cpm_scheme_a(model: SourceSideInfoModel, ch: DmChannel, inp: CpmInputA,
                     cfg: BlockMarkovConfig, trials: int, codebook: CodebookSpec | None = None):
    """Monte-Carlo error rate of the scheme with CPM towards the relay.

    Error accounting matches :func:`run_separation_df`.
    """
    cb = codebook or build_cpm_a_codebook(model, ch, inp, cfg)
    m, B, eps = cfg.m, cfg.B, cfg.epsilon
    ct = _CommonPartTables(model, m)
    seq1, seq2, t1, t2, tid1, tid2 = ct.seq1, ct.seq2, ct.t1, ct.t2, ct.tid1, ct.tid2
    T = cb.tables
    v1, v2, q, x1, x2, x3 = T["v1"], T["v2"], T["q"], T["x1"], T["x2"], T["x3"]
    f1, f2 = cb.bins["f1"], cb.bins["f2"]
    F = cb.fillers
    rc = _spaces(model, ch, inp, eps, "W3", "Y3")
    rc1 = rc.marginal(("S1", "W3", "T", "Q", "V1", "V2", "X1", "X3", "Y3"))
    rc2 = rc.marginal(("S2", "W3", "T", "Q", "V1", "V2", "X2", "X3", "Y3"))
    dc = _spaces(model, ch, inp, eps, "W", "Y")
    dc1 = dc.marginal(("S1", "S2", "W", "T", "Q", "V1", "X1", "Y"))
    dc2 = dc.marginal(("S1", "S2", "W", "T", "Q", "V2", "X2", "Y"))
    sw_d = sw_spaces(model, "W", eps)
    all1, all2 = np.arange(len(seq1)), np.arange(len(seq2))
    allu1, allu2 = np.arange(cb.sizes["f1"]), np.arange(cb.sizes["f2"])
    send = ChannelSampler(ch)

    def trial(rng):
        src = SourceBlocks(rng, model, m, B)
        u1, u2 = f1[src.i1], f2[src.i2]
        d1 = d2 = 0  # relay's bins of its previous estimate
        relay_est = [None] * B
        ys = []
        for c in range(B + 1):
            k1 = src.i1[c] if c < B else F["a1_index"]
            k2 = src.i2[c] if c < B else F["a2_index"]
            p1 = u1[c - 1] if c > 0 else 0
            p2 = u2[c - 1] if c > 0 else 0
            y, y3 = send(rng, x1[k1, p1], x2[k2, p2], x3[d1, d2])
            ys.append(y)
            if c == B:
                break
            known = {"V1": v1[d1][None], "V2": v2[d2][None], "X3": x3[d1, d2][None],
                     "W3": src.w3[c][None], "Y3": y3[None]}
            e1, e2 = d1, d2
            got = decode_pair(
                rc, rc1, rc2, all1, all2,
                lambda i: dict(known, S1=seq1[i], T=t1[i], Q=q[tid1[i]], X1=x1[i, e1]),
                lambda j: dict(known, S2=seq2[j], T=t2[j], Q=q[tid2[j]], X2=x2[j, e2]),
                lambda i, j, s: {k: v[:, s] for k, v in known.items()}
                | {"S1": seq1[i, s], "S2": seq2[j, s], "T": t1[i, s], "Q": q[tid1[i], s],
                   "X1": x1[i, e1, s], "X2": x2[j, e2, s]},
                m,
            )
            relay_est[c] = got
            d1, d2 = (f1[got[0]], f2[got[1]]) if got is not None else (0, 0)

        relay_err = [relay_est[b] != (src.i1[b], src.i2[b]) for b in range(B)]
        dest_err = [True] * B
        k1, k2, w_next = F["a1_index"], F["a2_index"], F["alpha"]
        for b in range(B - 1, -1, -1):
            y = ys[b + 1]
            known = {"S1": seq1[k1][None], "S2": seq2[k2][None], "T": t1[k1][None],
                     "Q": q[tid1[k1]][None], "W": w_next[None], "Y": y[None]}
            h1, h2 = k1, k2
            got = decode_pair(
                dc, dc1, dc2, allu1, allu2,
                lambda i: dict(known, V1=v1[i], X1=x1[h1, i]),
                lambda j: dict(known, V2=v2[j], X2=x2[h2, j]),
                lambda i, j, s: {k: v[:, s] for k, v in known.items()}
                | {"V1": v1[i, s], "V2": v2[j, s], "X1": x1[h1, i, s], "X2": x2[h2, j, s],
                   "X3": x3[i, j, s]},
                m,
            )
            s_hat = None
            if got is not None:
                s_hat = sw_decode(sw_d, cb.members("f1", got[0]), cb.members("f2", got[1]),
                                  seq1, seq2, src.w[b], "W", m)
            dest_err[b] = s_hat != (src.i1[b], src.i2[b])
            # a failed block leaves the destination with a wrong guess
            k1, k2 = s_hat if s_hat is not None else (0, 0)
            w_next = src.w[b]
        return TrialOutcome(relay_err, dest_err)

    return run_trials("cpm-a", cfg, trials, trial, notes={"filler": "known (a1, a2) and alpha in block B+1"})


def run_cpm_scheme_b(model: SourceSideInfoModel, ch: DmChannel, inp: CpmInputB,
                     cfg: BlockMarkovConfig, trials: int, codebook: CodebookSpec | None = None):
    """Monte-Carlo error rate of the scheme with binning towards the relay.

    The relay decodes block ``b`` bins with the side information of block
    ``b-1``. For the first block it uses the filler side-information
    sequence drawn with the filler sources, which the report notes.
    """
    cb = codebook or build_cpm_b_codebook(model, ch, inp, cfg)
    m, B, eps = cfg.m, cfg.B, cfg.epsilon
    ct = _CommonPartTables(model, m)
    seq1, seq2, t1, t2, tid1, tid2 = ct.seq1, ct.seq2, ct.t1, ct.t2, ct.tid1, ct.tid2
    T = cb.tables
    q, x1, x2, x3 = T["q"], T["x1"], T["x2"], T["x3"]
    f1, f2 = cb.bins["f1"], cb.bins["f2"]
    F = cb.fillers
    rc = _spaces(model, ch, inp, eps, "W3", "Y3")
    rc1 = rc.marginal(("S1", "S2", "W3", "T", "Q", "X1", "X3", "Y3"))
    rc2 = rc.marginal(("S1", "S2", "W3", "T", "Q", "X2", "X3", "Y3"))
    sw_r = sw_spaces(model, "W3", eps)
    dc = _spaces(model, ch, inp, eps, "W", "Y")
    dc1 = dc.marginal(("S1", "W", "T", "Q", "X1", "Y"))
    dc2 = dc.marginal(("S2", "W", "T", "Q", "X2", "Y"))
    all1, all2 = np.arange(len(seq1)), np.arange(len(seq2))
    allu1, allu2 = np.arange(cb.sizes["f1"]), np.arange(cb.sizes["f2"])
    send = ChannelSampler(ch)

    def trial(rng):
        src = SourceBlocks(rng, model, m, B)
        u1, u2 = f1[src.i1], f2[src.i2]
        # relay state: its previous source estimate and that block's side information
        r1, r2, w3_prev = F["a1_index"], F["a2_index"], F["alpha3"]
        relay_est = [None] * B
        ys = []
        for c in range(B + 1):
            k1 = src.i1[c - 1] if c > 0 else F["a1_index"]
            k2 = src.i2[c - 1] if c > 0 else F["a2_index"]
            b1 = u1[c] if c < B else 0
            b2 = u2[c] if c < B else 0
            y, y3 = send(rng, x1[b1, k1], x2[b2, k2], x3[r1, r2])
            ys.append(y)
            if c == B:
                break
            known = {"S1": seq1[r1][None], "S2": seq2[r2][None], "T": t1[r1][None],
                     "Q": q[tid1[r1]][None], "X3": x3[r1, r2][None], "W3": w3_prev[None],
                     "Y3": y3[None]}
            e1, e2 = r1, r2
            got = decode_pair(
                rc, rc1, rc2, allu1, allu2,
                lambda i: dict(known, X1=x1[i, e1]),
                lambda j: dict(known, X2=x2[j, e2]),
                lambda i, j, s: {k: v[:, s] for k, v in known.items()}
                | {"X1": x1[i, e1, s], "X2": x2[j, e2, s]},
                m,
            )
            s_hat = None
            if got is not None:
                s_hat = sw_decode(sw_r, cb.members("f1", got[0]), cb.members("f2", got[1]),
                                  seq1, seq2, src.w3[c], "W3", m)
            relay_est[c] = s_hat
            r1, r2 = s_hat if s_hat is not None else (0, 0)
            w3_prev = src.w3[c]

        relay_err = [relay_est[b] != (src.i1[b], src.i2[b]) for b in range(B)]
        dest_err = [True] * B
        h1 = h2 = 0  # bins of the destination's estimate of the next block
        for b in range(B - 1, -1, -1):
            y, w = ys[b + 1], src.w[b]
            g1, g2 = h1, h2
            got = decode_pair(
                dc, dc1, dc2, all1, all2,
                lambda i: {"S1": seq1[i], "T": t1[i], "Q": q[tid1[i]], "X1": x1[g1, i],
                           "W": w[None], "Y": y[None]},
                lambda j: {"S2": seq2[j], "T": t2[j], "Q": q[tid2[j]], "X2": x2[g2, j],
                           "W": w[None], "Y": y[None]},
                lambda i, j, s: {"S1": seq1[i, s], "S2": seq2[j, s], "T": t1[i, s],
                                 "Q": q[tid1[i], s], "X1": x1[g1, i, s], "X2": x2[g2, j, s],
                                 "X3": x3[i, j, s], "W": w[None, s], "Y": y[None, s]},
                m,
            )
            dest_err[b] = got != (src.i1[b], src.i2[b])
            h1, h2 = (f1[got[0]], f2[got[1]]) if got is not None else (0, 0)
        return TrialOutcome(relay_err, dest_err)

    return run_trials("cpm-b", cfg, trials, trial,
                      notes={"filler": "known (a1, a2) in block 1",
                             "relay_block1_side_information": "filler sequence drawn from p(w3|a1,a2)"})


__all__ = ["build_cpm_a_codebook", "build_cpm_b_codebook", "run_cpm_scheme_a", "run_cpm_scheme_b",
           "CodebookTooLarge"]

"""Achievability and converse conditions for the MARC with side information.

Each checker returns a :class:`ConditionReport` whose entries compare a
conditional source entropy (lhs) with a scaled mutual information (rhs).

Achievability entries are strict: satisfied iff ``lhs < rhs - delta``, with
one exception. A zero lhs is always satisfied, because nothing has to be
sent. Converse entries use ``lhs <= rhs + slack``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .models import CpmInputA, CpmInputB, DmChannel, SeparationInput, SourceSideInfoModel
from .prob import (
    FactorizationError,
    JointPmf,
    compose,
    entropy,
    gacs_korner_common_part,
    joint_from_factors,
    mutual_information,
)
from .search import SearchConfig, maximize_mi

STRICTNESS = 1e-9
SLACK = 1e-9
ZERO_ENTROPY = 1e-12


@dataclass
class Condition:
    label: str
    expression: str
    lhs_bits: float
    rhs_bits: float
    satisfied: bool
    margin_bits: float
    kind: str = "achievability"


@dataclass
class ConditionReport:
    theorem: str
    kappa: float
    conditions: list = field(default_factory=list)
    verdict: str = ""
    notes: dict = field(default_factory=dict)

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.conditions)

    def __getitem__(self, label: str) -> Condition:
        for c in self.conditions:
            if c.label == label:
                return c
        raise KeyError(f"no condition {label!r} in {self.labels}")

    @property
    def labels(self) -> list:
        return [c.label for c in self.conditions]

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "kappa": self.kappa,
            "verdict": self.verdict,
            "all_satisfied": self.all_satisfied,
            "conditions": [asdict(c) for c in self.conditions],
            "notes": self.notes,
            "version": __version__,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def summary(self) -> str:
        lines = [f"{self.theorem} (kappa={self.kappa:g}): {self.verdict}"]
        for c in self.conditions:
            mark = "ok  " if c.satisfied else "FAIL"
            lines.append(f"  {mark} {c.label:<20} {c.expression:<48} lhs={c.lhs_bits:.6f} rhs={c.rhs_bits:.6f} margin={c.margin_bits:+.6f}")
        return "\n".join(lines)


def achievability(label, expression, lhs, rhs, delta=STRICTNESS) -> Condition:
    ok = lhs <= ZERO_ENTROPY or lhs < rhs - delta
    return Condition(label, expression, float(lhs), float(rhs), bool(ok), float(rhs - lhs))


def converse(label, expression, lhs, rhs, slack=SLACK) -> Condition:
    return Condition(label, expression, float(lhs), float(rhs), bool(lhs <= rhs + slack),
                     float(rhs - lhs), "converse")


def _finish(rep: ConditionReport, pass_word="ACHIEVABLE", fail_word="NOT_SHOWN") -> ConditionReport:
    rep.verdict = pass_word if rep.all_satisfied else fail_word
    return rep


def _check_kappa(kappa):
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")


def _check_channel_sizes(ch: DmChannel, sizes: dict):
    for r, s in zip(("X1", "X2", "X3"), ch.input_sizes):
        if sizes[r] != s:
            raise FactorizationError(f"input alphabet of {r} has size {sizes[r]} but the channel expects {s}")


def _check_source_sizes(model: SourceSideInfoModel, sizes: dict):
    for r in ("S1", "S2"):
        if sizes[r] != model.size(r):
            raise FactorizationError(f"input kernel expects |{r}| = {sizes[r]}, model has {model.size(r)}")


def _as_separation(inp) -> SeparationInput:
    if isinstance(inp, SeparationInput):
        return inp
    if isinstance(inp, JointPmf):
        return SeparationInput.from_joint(inp)
    raise TypeError(f"expected SeparationInput or JointPmf, got {type(inp).__name__}")


# --------------------------------------------------------------------------
# separation-based decode-and-forward


def channel_joint(ch: DmChannel, inp: SeparationInput) -> JointPmf:
    """p(v1,v2,x1,x2,x3) p(y,y3|x1,x2,x3)."""
    _check_channel_sizes(ch, inp.sizes)
    return compose(inp.joint(), ch.law)


SEPARATION_TERMS = (
    ("rly.S1", ("S1",), ("S2", "W3"), ("X1",), "Y3", ("V1", "X2", "X3")),
    ("rly.S2", ("S2",), ("S1", "W3"), ("X2",), "Y3", ("V2", "X1", "X3")),
    ("rly.S1S2", ("S1", "S2"), ("W3",), ("X1", "X2"), "Y3", ("V1", "V2", "X3")),
    ("dst.S1", ("S1",), ("S2", "W"), ("X1", "X3"), "Y", ("V2", "X2")),
    ("dst.S2", ("S2",), ("S1", "W"), ("X2", "X3"), "Y", ("V1", "X1")),
    ("dst.S1S2", ("S1", "S2"), ("W",), ("X1", "X2", "X3"), "Y", ()),
)


def _h_expr(t, g):
    return f"H({','.join(t)}|{','.join(g)})" if g else f"H({','.join(t)})"


def _i_expr(a, b, g):
    b = b if isinstance(b, tuple) else (b,)
    return f"I({','.join(a)};{','.join(b)}|{','.join(g)})" if g else f"I({','.join(a)};{','.join(b)})"


def separation_terms(model: SourceSideInfoModel, ch: DmChannel, inp: SeparationInput):
    """(label, lhs, mi, expression) for the six decode-and-forward conditions at kappa = 1."""
    joint = channel_joint(ch, _as_separation(inp))
    out = []
    for label, t, g, a, b, c in SEPARATION_TERMS:
        lhs = model.entropy(t, g)
        mi = mutual_information(joint, a, b, c)
        out.append((label, lhs, mi, f"{_h_expr(t, g)} < k*{_i_expr(a, b, c)}"))
    return out


def check_thm1(model: SourceSideInfoModel, ch: DmChannel, inp, kappa: float = 1.0,
               delta: float = STRICTNESS) -> ConditionReport:
    """Separation-based decode-and-forward with irregular binning.

    Six strict conditions: three for relay decoding (``thm1.rly.*``) and
    three for destination decoding (``thm1.dst.*``). Source entropies come
    from ``model``; mutual informations from the channel joint with inputs
    independent of the sources.
    """
    _check_kappa(kappa)
    rep = ConditionReport("thm1", kappa)
    for label, lhs, mi, expr in separation_terms(model, ch, inp):
        rep.conditions.append(achievability("thm1." + label, expr, lhs, kappa * mi, delta))
    return _finish(rep)


_RATE_SUMS = {"rly.S1": ("R1r",), "rly.S2": ("R2r",), "rly.S1S2": ("R1r", "R2r"),
              "dst.S1": ("R1d",), "dst.S2": ("R2d",), "dst.S1S2": ("R1d", "R2d")}


def separation_operating_margins(model: SourceSideInfoModel, ch: DmChannel, inp, rates: dict,
                                 kappa: float = 1.0) -> dict:
    """Margins of a separation operating point, in bits per source sample.

    For every decode-and-forward condition the binning rate ``R`` (or rate
    sum) must exceed the conditional entropy for Slepian-Wolf decoding and
    stay below ``kappa`` times the mutual information for channel decoding.
    Keys are ``"sw.<label>"`` (``R - H``) and ``"ch.<label>"`` (``k I - R``);
    each pair adds up to the rate-free margin of :func:`check_thm1`.
    Missing rates count as zero.
    """
    _check_kappa(kappa)
    out = {}
    for label, lhs, mi, _ in separation_terms(model, ch, inp):
        r = sum(float(rates.get(k, 0.0)) for k in _RATE_SUMS[label])
        out["sw." + label] = r - lhs
        out["ch." + label] = kappa * mi - r
    return out


def check_crbc(model: SourceSideInfoModel, ch: DmChannel, inp, kappa: float = 1.0,
               delta: float = STRICTNESS) -> ConditionReport:
    """Single-source relay broadcast: H(S1|W3) < k I(X1;Y3|X3), H(S1|W) < k I(X1,X3;Y).

    ``inp`` is a :class:`SeparationInput` whose relay input copies V1 (see
    :func:`marclab.models.crbc_input`); source 2 and X2 must be absent.
    """
    _check_kappa(kappa)
    if model.entropy("S2") > ZERO_ENTROPY:
        raise ValueError(f"single-source check needs a degenerate S2; H(S2) = {model.entropy('S2'):.6g} bits")
    inp = _as_separation(inp)
    k3 = inp.k_x3
    if k3.shape[0] != k3.shape[2] or not np.allclose(k3, np.eye(k3.shape[0])[:, None, :]):
        raise ValueError("single-source check needs X3 = V1 (use crbc_input to build the input)")
    joint = channel_joint(ch, inp)
    if entropy(joint, "X2") > ZERO_ENTROPY:
        raise ValueError("single-source check needs a deterministic X2")
    rep = ConditionReport("crbc", kappa)
    rep.conditions.append(achievability(
        "crbc.rly.S1", "H(S1|W3) < k*I(X1;Y3|X3)", model.entropy("S1", "W3"),
        kappa * mutual_information(joint, "X1", "Y3", "X3"), delta))
    rep.conditions.append(achievability(
        "crbc.dst.S1", "H(S1|W) < k*I(X1,X3;Y)", model.entropy("S1", "W"),
        kappa * mutual_information(joint, ("X1", "X3"), "Y"), delta))
    return _finish(rep)


# --------------------------------------------------------------------------
# correlation-preserving mapping


def common_part_factor(model: SourceSideInfoModel):
    cp = gacs_korner_common_part(model.source_pair)
    ind = np.zeros((model.size("S1"), cp.t_size))
    for s1, t in enumerate(cp.h1):
        if t < cp.t_size:
            ind[s1, t] = 1.0
        else:
            ind[s1, 0] = 1.0  # off-support symbol, never drawn
    return cp, ind


def cpm_joint(model: SourceSideInfoModel, ch: DmChannel, sizes: dict, factors, side: str, out: str) -> JointPmf:
    """Joint of sources, one side-information variable, T, inputs and one channel output."""
    _check_channel_sizes(ch, sizes)
    _check_source_sizes(model, sizes)
    cp, ind = common_part_factor(model)
    src = model.joint.marginal(("S1", "S2", side))
    aux = [n for n in ("Q", "V1", "V2") if n in sizes]
    variables = ([("S1", model.size("S1")), ("S2", model.size("S2")), (side, model.size(side)), ("T", cp.t_size)]
                 + [(n, sizes[n]) for n in aux]
                 + [("X1", sizes["X1"]), ("X2", sizes["X2"]), ("X3", sizes["X3"]), (out, ch.output_kernel(out).shape[-1])])
    fs = [(src.names, src.weights), (("S1", "T"), ind)] + list(factors)
    fs.append((("X1", "X2", "X3", out), ch.output_kernel(out)))
    return joint_from_factors(variables, fs)


def _cpm_check(theorem, model, ch, sizes, factors, terms, delta):
    rly = cpm_joint(model, ch, sizes, factors, "W3", "Y3")
    dst = cpm_joint(model, ch, sizes, factors, "W", "Y")
    src = {"W3": rly, "W": dst}
    rep = ConditionReport(theorem, 1.0)
    for label, t, g, a, b, c in terms:
        side = "W3" if b == "Y3" else "W"
        j = src[side]
        lhs = entropy(j, t, g)
        rhs = mutual_information(j, a, b, c)
        rep.conditions.append(achievability(f"{theorem}.{label}", f"{_h_expr(t, g)} < {_i_expr(a, b, c)}", lhs, rhs, delta))
    rep.notes["common_part_size"] = gacs_korner_common_part(model.source_pair).t_size
    return _finish(rep)


CPM_A_TERMS = (
    ("rly.S1", ("S1",), ("S2", "W3"), ("X1",), "Y3", ("S2", "V1", "X2", "X3", "W3", "Q")),
    ("rly.S2", ("S2",), ("S1", "W3"), ("X2",), "Y3", ("S1", "V2", "X1", "X3", "W3", "Q")),
    ("rly.S1S2.T", ("S1", "S2"), ("W3", "T"), ("X1", "X2"), "Y3", ("V1", "V2", "X3", "W3", "T", "Q")),
    ("rly.S1S2", ("S1", "S2"), ("W3",), ("X1", "X2"), "Y3", ("V1", "V2", "X3", "W3")),
    ("dst.S1", ("S1",), ("S2", "W"), ("X1", "X3"), "Y", ("S1", "V2", "X2", "Q")),
    ("dst.S2", ("S2",), ("S1", "W"), ("X2", "X3"), "Y", ("S2", "V1", "X1", "Q")),
    ("dst.S1S2", ("S1", "S2"), ("W",), ("X1", "X2", "X3"), "Y", ("S1", "S2", "Q")),
)

CPM_B_TERMS = (
    ("rly.S1", ("S1",), ("S2", "W3"), ("X1",), "Y3", ("S1", "X2", "X3", "Q")),
    ("rly.S2", ("S2",), ("S1", "W3"), ("X2",), "Y3", ("S2", "X1", "X3", "Q")),
    ("rly.S1S2", ("S1", "S2"), ("W3",), ("X1", "X2"), "Y3", ("S1", "S2", "X3", "Q")),
    ("dst.S1", ("S1",), ("S2", "W"), ("X1", "X3"), "Y", ("S2", "X2", "W", "Q")),
    ("dst.S2", ("S2",), ("S1", "W"), ("X2", "X3"), "Y", ("S1", "X1", "W", "Q")),
    ("dst.S1S2.T", ("S1", "S2"), ("W", "T"), ("X1", "X2", "X3"), "Y", ("W", "T", "Q")),
    ("dst.S1S2", ("S1", "S2"), ("W",), ("X1", "X2", "X3"), "Y", ("W",)),
)


def check_thm6_cpm(model: SourceSideInfoModel, ch: DmChannel, inp: CpmInputA,
                   delta: float = STRICTNESS) -> ConditionReport:
    """CPM towards the relay, binning towards the destination (rate one).

    Seven strict conditions; ``thm6.rly.S1S2.T`` conditions on the common
    part T of the source pair.
    """
    if not isinstance(inp, CpmInputA):
        raise TypeError("check_thm6_cpm needs a CpmInputA")
    return _cpm_check("thm6", model, ch, inp.sizes, inp.factors(), CPM_A_TERMS, delta)


def check_thm7_cpm(model: SourceSideInfoModel, ch: DmChannel, inp: CpmInputB,
                   delta: float = STRICTNESS) -> ConditionReport:
    """Binning towards the relay, CPM towards the destination (rate one)."""
    if not isinstance(inp, CpmInputB):
        raise TypeError("check_thm7_cpm needs a CpmInputB")
    return _cpm_check("thm7", model, ch, inp.sizes, inp.factors(), CPM_B_TERMS, delta)


# --------------------------------------------------------------------------
# outer bounds


OUTER_DST = (
    ("dst.S1", ("S1",), ("S2", "W"), "I(X1,X3;Y|X2)"),
    ("dst.S2", ("S2",), ("S1", "W"), "I(X2,X3;Y|X1)"),
    ("dst.S1S2", ("S1", "S2"), ("W",), "I(X1,X2,X3;Y)"),
)
OUTER_AUX = (
    ("aux.S1", ("S1",), ("S2", "W", "W3"), "I(X1;Y,Y3|X2,V)"),
    ("aux.S2", ("S2",), ("S1", "W", "W3"), "I(X2;Y,Y3|X1,V)"),
    ("aux.S1S2", ("S1", "S2"), ("W", "W3"), "I(X1,X2;Y,Y3|V)"),
)
OUTER_RLY = (
    ("rly.S1", ("S1",), ("S2", "W3"), "I(X1;Y3|X2,X3)"),
    ("rly.S2", ("S2",), ("S1", "W3"), "I(X2;Y3|X1,X3)"),
    ("rly.S1S2", ("S1", "S2"), ("W3",), "I(X1,X2;Y3|X3)"),
)


def _outer(theorem, model, ch, kappa, cfg, groups, slack):
    _check_kappa(kappa)
    cfg = cfg or SearchConfig()
    rep = ConditionReport(theorem, kappa)
    rep.notes["search"] = asdict(cfg)
    rep.notes["families"] = {}
    for terms, family in groups:
        for label, t, g, objective in terms:
            lhs = model.entropy(t, g)
            if lhs <= ZERO_ENTROPY:
                # nothing to bound; skip the search
                rhs, fam = 0.0, family
            else:
                res = maximize_mi(ch, objective, family, cfg)
                rhs, fam = res.best_value_bits, res.family
            rep.conditions.append(converse(f"{theorem}.{label}", f"{_h_expr(t, g)} <= k*max {objective}",
                                           lhs, kappa * rhs, slack))
            rep.notes["families"][f"{theorem}.{label}"] = fam
    rep.verdict = "inconclusive" if rep.all_satisfied else "violated"
    return rep


def check_outer_thm2(model: SourceSideInfoModel, ch: DmChannel, kappa: float = 1.0,
                     cfg: SearchConfig | None = None, family: str = "joint",
                     slack: float = SLACK) -> ConditionReport:
    """Necessary conditions at the destination.

    Each rhs is ``kappa`` times the largest value the search finds for its
    own mutual information, which can only relax the joint maximisation.
    ``family="joint"`` searches p(x1,x2,x3) and p(v)p(x1,x2|v)p(x3|v);
    ``family="product"`` restricts to independent inputs, p(x1)p(x2)p(x3)
    and p(v)p(x1|v)p(x2|v)p(x3|v).

    The verdict is ``"violated"`` when some lhs exceeds its searched maximum
    and ``"inconclusive"`` otherwise.
    """
    if family not in ("joint", "product"):
        raise ValueError("family must be 'joint' or 'product'")
    aux = "aux" if family == "joint" else "aux-product"
    rep = _outer("thm2", model, ch, kappa, cfg, ((OUTER_DST, family), (OUTER_AUX, aux)), slack)
    return rep


def check_outer_thm3_relay(model: SourceSideInfoModel, ch: DmChannel, kappa: float = 1.0,
                           cfg: SearchConfig | None = None, family: str = "joint",
                           slack: float = SLACK) -> ConditionReport:
    """Necessary conditions for relay decoding: H(.|., W3) <= k max I(.;Y3|.,X3)."""
    if family not in ("joint", "product"):
        raise ValueError("family must be 'joint' or 'product'")
    return _outer("thm3", model, ch, kappa, cfg, ((OUTER_RLY, family),), slack)

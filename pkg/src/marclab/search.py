"""Heuristic maximisation of mutual-information objectives over input laws.

The search combines three stages: an exhaustive lattice grid on every
simplex, Dirichlet(1) random restarts, and a coordinate ascent that moves one
simplex at a time with a golden-section line search towards a vertex. The
result is a lower bound on the true maximum.
"""

from __future__ import annotations

import itertools
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .models import DmChannel
from .prob import JointPmf, validate_factorization

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class SearchConfig:
    grid_points_per_simplex_dim: int = 21
    random_restarts: int = 4
    aux_cardinality: int = 4
    seed: int = 0
    max_iterations: int = 200
    max_grid: int = 20000
    workers: int = 1

    def __post_init__(self):
        for name in ("grid_points_per_simplex_dim", "random_restarts", "aux_cardinality", "max_iterations", "max_grid", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"SearchConfig.{name} must be positive")
        if self.seed < 0:
            raise ValueError("SearchConfig.seed must be non-negative")


@dataclass(frozen=True)
class MiTerm:
    a: tuple
    b: tuple
    given: tuple = ()

    def __str__(self):
        s = f"I({','.join(self.a)};{','.join(self.b)}"
        return s + (f"|{','.join(self.given)})" if self.given else ")")


_MI_RE = re.compile(r"^\s*I\(\s*([^;|()]+);([^;|()]+)(?:\|([^;|()]*))?\)\s*$")


def parse_mi(text) -> MiTerm:
    """Parse ``"I(X1,X2;Y,Y3|V)"``."""
    if isinstance(text, MiTerm):
        return text
    m = _MI_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse mutual-information expression {text!r}")
    split = lambda g: tuple(s.strip() for s in (g or "").split(",") if s.strip())
    return MiTerm(split(m.group(1)), split(m.group(2)), split(m.group(3)))


# --------------------------------------------------------------------------
# input families


@dataclass(frozen=True)
class InputFamily:
    """A parametrised set of input laws.

    ``blocks`` lists the row-stochastic parameter arrays as ``(rows, k)``;
    ``build`` maps a batch of parameters to weights over ``variables``.
    """

    name: str
    variables: tuple
    blocks: tuple
    pattern: tuple
    subscripts: str

    def build(self, params) -> np.ndarray:
        """params: list of arrays (K, rows, k) -> weights (K, *sizes)."""
        K = params[0].shape[0]
        shaped = [p.reshape((K,) + shp) for p, shp in zip(params, self._factor_shapes())]
        return np.einsum(self.subscripts, *shaped)

    def _factor_shapes(self):
        sizes = {v[0]: v[1] for v in self.variables}
        out = []
        for f in self.pattern:
            outs, _, given = f.partition("|")
            names = [n for n in given.split(",") if n] + [n for n in outs.split(",") if n]
            out.append(tuple(sizes[n] for n in names))
        return out


def make_family(name: str, x_sizes, aux: int = 4) -> InputFamily:
    a, b, c = x_sizes
    if name == "joint":
        return InputFamily(name, (("X1", a), ("X2", b), ("X3", c)), ((1, a * b * c),),
                           ("X1,X2,X3",), "zabc->zabc")
    if name == "product":
        return InputFamily(name, (("X1", a), ("X2", b), ("X3", c)), ((1, a), (1, b), (1, c)),
                           ("X1", "X2", "X3"), "za,zb,zc->zabc")
    if name == "aux":
        return InputFamily(name, (("V", aux), ("X1", a), ("X2", b), ("X3", c)),
                           ((1, aux), (aux, a * b), (aux, c)),
                           ("V", "X1,X2|V", "X3|V"), "zv,zvab,zvc->zvabc")
    if name == "aux-product":
        return InputFamily(name, (("V", aux), ("X1", a), ("X2", b), ("X3", c)),
                           ((1, aux), (aux, a), (aux, b), (aux, c)),
                           ("V", "X1|V", "X2|V", "X3|V"), "zv,zva,zvb,zvc->zvabc")
    raise ValueError(f"unknown input family {name!r}; use joint, product, aux or aux-product")


# --------------------------------------------------------------------------
# batched objective


def _batch_entropy(w: np.ndarray, keep: tuple) -> np.ndarray:
    drop = tuple(1 + i for i in range(w.ndim - 1) if i not in keep)
    m = w.sum(axis=drop) if drop else w
    m = m.reshape(m.shape[0], -1)
    safe = np.where(m > 0, m, 1.0)
    return -(m * np.log2(safe)).sum(axis=1)


class _Objective:
    """min over terms of I(a;b|c), evaluated on batches of family parameters."""

    def __init__(self, ch: DmChannel, terms, family: InputFamily):
        self.family = family
        self.kernel = ch.kernel
        self.names = [v[0] for v in family.variables] + ["Y", "Y3"]
        self.terms = terms
        lett = "vabc"[4 - len(family.variables):]
        self._subs = f"z{lett},abcyu->z{lett}yu"
        idx = {n: i for i, n in enumerate(self.names)}
        self._plan = []
        for t in terms:
            for n in t.a + t.b + t.given:
                if n not in idx:
                    raise ValueError(f"objective {t} refers to {n!r}, not a variable of {self.names}")
            ax = lambda names: tuple(sorted(idx[n] for n in names))
            self._plan.append((ax(t.a + t.given), ax(t.b + t.given), ax(t.a + t.b + t.given), ax(t.given)))
        self.evaluations = 0

    def __call__(self, params) -> np.ndarray:
        w_in = self.family.build(params)
        w = np.einsum(self._subs, w_in, self.kernel)
        self.evaluations += w.shape[0]
        best = None
        for ac, bc, abc, c in self._plan:
            val = _batch_entropy(w, ac) + _batch_entropy(w, bc) - _batch_entropy(w, abc)
            if c:
                val = val - _batch_entropy(w, c)
            best = val if best is None else np.minimum(best, val)
        return best


# --------------------------------------------------------------------------
# search stages


def _simplex_lattice(k: int, r: int) -> np.ndarray:
    pts = []
    for cut in itertools.combinations(range(r + k - 1), k - 1):
        prev, comp = -1, []
        for c in cut:
            comp.append(c - prev - 1)
            prev = c
        comp.append(r + k - 1 - prev - 1)
        pts.append(comp)
    return np.asarray(pts, dtype=float) / r


def _grid(family: InputFamily, points: int, cap: int):
    """Cartesian product of per-simplex lattices, coarsened to fit ``cap``."""
    rows = [(rws, k) for rws, k in family.blocks for _ in range(rws)]
    r = max(points - 1, 1)
    while True:
        sizes = [math.comb(r + k - 1, k - 1) for _, k in rows]
        if math.prod(sizes) <= cap or r == 1:
            break
        r -= 1
    if math.prod(sizes) > cap:
        return None
    lattices = [_simplex_lattice(k, r) for _, k in rows]
    idx = np.array(list(itertools.product(*[range(len(l)) for l in lattices])), dtype=np.int64)
    cols = [lat[idx[:, i]] for i, lat in enumerate(lattices)]
    params, i = [], 0
    for rws, k in family.blocks:
        params.append(np.stack(cols[i:i + rws], axis=1))
        i += rws
    return params


def _chunks(params, size):
    K = params[0].shape[0]
    for s in range(0, K, size):
        yield [p[s:s + size] for p in params]


def _ascend(obj: _Objective, params, max_iter: int):
    """Coordinate ascent: one simplex row at a time, golden-section towards each vertex."""
    params = [p.copy() for p in params]
    val = float(obj([p[None] for p in params])[0])
    coarse = np.linspace(0.0, 1.0, 9)
    for _ in range(max_iter):
        start = val
        for bi, (rws, k) in enumerate(obj.family.blocks):
            for r in range(rws):
                for j in range(k):
                    p = params[bi][r]
                    if p[j] >= 1 - 1e-15:
                        continue
                    lo = -p[j] / (1 - p[j])
                    e = np.zeros(k)
                    e[j] = 1.0
                    d = e - p

                    def at(ts):
                        batch = [np.repeat(q[None], len(ts), axis=0) for q in params]
                        batch[bi][:, r] = np.clip(p[None] + np.asarray(ts)[:, None] * d[None], 0, None)
                        batch[bi][:, r] /= batch[bi][:, r].sum(axis=1, keepdims=True)
                        return obj(batch)

                    ts = lo + (1 - lo) * coarse
                    vs = at(ts)
                    m = int(np.argmax(vs))
                    a, b = ts[max(m - 1, 0)], ts[min(m + 1, len(ts) - 1)]
                    # golden-section refinement inside the bracketing cell
                    x1 = b - _GOLDEN * (b - a)
                    x2 = a + _GOLDEN * (b - a)
                    f1, f2 = at([x1, x2])
                    for _ in range(40):
                        if b - a < 1e-10:
                            break
                        if f1 < f2:
                            a, x1, f1 = x1, x2, f2
                            x2 = a + _GOLDEN * (b - a)
                            f2 = float(at([x2])[0])
                        else:
                            b, x2, f2 = x2, x1, f1
                            x1 = b - _GOLDEN * (b - a)
                            f1 = float(at([x1])[0])
                    cands = [(vs[m], ts[m]), (f1, x1), (f2, x2)]
                    fbest, tbest = max(cands, key=lambda c: c[0])
                    if fbest > val + 1e-15:
                        q = np.clip(p + tbest * d, 0, None)
                        params[bi][r] = q / q.sum()
                        val = float(fbest)
        if val - start <= 1e-12:
            break
    return val, params


def _restart(obj_factory, family, seed, max_iter):
    rng = np.random.default_rng(seed)
    params = [rng.dirichlet(np.ones(k), size=rws) for rws, k in family.blocks]
    obj = obj_factory()
    v, p = _ascend(obj, params, max_iter)
    return v, p, obj.evaluations


@dataclass
class SearchResult:
    best_value_bits: float
    best_distribution: JointPmf
    family: str
    objective: str
    evaluations: int = 0
    params: list = field(default_factory=list, repr=False)


def maximize_mi(ch: DmChannel, objective, family="joint", cfg: SearchConfig | None = None) -> SearchResult:
    """Maximise a mutual-information objective over an input family.

    Parameters
    ----------
    ch : DmChannel
    objective : str, MiTerm, or a list of them
        ``"I(X1,X2;Y|X3)"``-style expressions over ``V, X1, X2, X3, Y, Y3``.
        A list means the minimum of its terms.
    family : str or InputFamily
        ``"joint"`` p(x1,x2,x3), ``"product"`` p(x1)p(x2)p(x3), ``"aux"``
        p(v)p(x1,x2|v)p(x3|v) or ``"aux-product"`` p(v)p(x1|v)p(x2|v)p(x3|v).
    cfg : SearchConfig

    Returns
    -------
    SearchResult
        Deterministic for a given ``cfg.seed``; restart ``i`` uses seed
        ``cfg.seed + i`` independently of the worker count.
    """
    cfg = cfg or SearchConfig()
    terms = [parse_mi(t) for t in (objective if isinstance(objective, (list, tuple)) and not isinstance(objective, MiTerm) else [objective])]
    fam = family if isinstance(family, InputFamily) else make_family(family, ch.input_sizes, cfg.aux_cardinality)
    make_obj = lambda: _Objective(ch, terms, fam)
    obj = make_obj()

    starts = []
    grid = _grid(fam, cfg.grid_points_per_simplex_dim, cfg.max_grid)
    if grid is not None:
        vals = np.concatenate([obj(c) for c in _chunks(grid, 4096)])
        top = np.argsort(-vals, kind="stable")[:2]
        starts = [(float(vals[i]), [g[i] for g in grid]) for i in top]

    candidates = []
    evals = obj.evaluations
    for v0, p0 in starts:
        o = make_obj()
        v, p = _ascend(o, p0, cfg.max_iterations)
        candidates.append((max(v, v0), p if v >= v0 else p0))
        evals += o.evaluations

    seeds = [cfg.seed + i for i in range(cfg.random_restarts)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            runs = list(ex.map(lambda s: _restart(make_obj, fam, s, cfg.max_iterations), seeds))
    else:
        runs = [_restart(make_obj, fam, s, cfg.max_iterations) for s in seeds]
    for v, p, e in runs:
        candidates.append((v, p))
        evals += e

    # ties keep the earliest candidate, so the order above fixes the answer
    best_v, best_p = candidates[0]
    for v, p in candidates[1:]:
        if v > best_v + 1e-13:
            best_v, best_p = v, p
    w = fam.build([p[None] for p in best_p])[0]
    dist = JointPmf(list(fam.variables), w / w.sum())
    assert validate_factorization(dist, fam.pattern, 1e-10)
    label = " min ".join(str(t) for t in terms)
    return SearchResult(max(best_v, 0.0), dist, fam.name, label, evals, best_p)


def evaluate_mi(ch: DmChannel, objective, family, params) -> float:
    """Objective value at one parameter point (list of (rows, k) arrays)."""
    terms = [parse_mi(t) for t in (objective if isinstance(objective, (list, tuple)) else [objective])]
    fam = family if isinstance(family, InputFamily) else make_family(family, ch.input_sizes, params[0].shape[-1] if family.startswith("aux") else 4)
    return float(_Objective(ch, terms, fam)([np.asarray(p, dtype=float)[None] for p in params])[0])

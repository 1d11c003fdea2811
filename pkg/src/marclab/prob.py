"""Exact discrete probability over named finite variables.

Everything downstream (rate conditions, codebook typicality tests) works on
:class:`JointPmf`, a dense weight tensor with one named axis per variable.
Information measures are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

NORM_TOL = 1e-12


class Variable(NamedTuple):
    name: str
    size: int


def _as_names(names) -> tuple[str, ...]:
    if names is None:
        return ()
    if isinstance(names, str):
        return (names,)
    return tuple(names)


def _check_variables(variables) -> tuple[Variable, ...]:
    out = []
    for v in variables:
        v = Variable(*v) if not isinstance(v, Variable) else v
        if int(v.size) < 1:
            raise ValueError(f"variable {v.name!r} has alphabet size {v.size} < 1")
        out.append(Variable(str(v.name), int(v.size)))
    names = [v.name for v in out]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate variable names in {names}")
    return tuple(out)


class JointPmf:
    """Joint pmf over an ordered list of named finite variables.

    Parameters
    ----------
    variables : sequence of ``Variable`` or ``(name, size)`` pairs
    weights : array_like
        Non-negative weights whose shape is the tuple of alphabet sizes.
        A flat array of the right length is reshaped row-major (last
        variable fastest).
    normalize : bool
        Rescale the weights to sum to one. Otherwise the sum must already be
        one within ``1e-12``.
    """

    __slots__ = ("variables", "weights", "_index")

    def __init__(self, variables, weights, normalize: bool = False):
        self.variables = _check_variables(variables)
        shape = tuple(v.size for v in self.variables)
        w = np.array(weights, dtype=float)
        if w.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"weights have {w.size} entries, expected shape {shape}")
        w = w.reshape(shape)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        total = w.sum()
        if normalize:
            if total <= 0:
                raise ValueError("cannot normalize an all-zero weight tensor")
            w = w / total
        elif abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        w.setflags(write=False)
        self.weights = w
        self._index = {v.name: i for i, v in enumerate(self.variables)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.weights.shape

    def size_of(self, name: str) -> int:
        return self.variables[self.axis(name)].size

    def axis(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}; pmf has {list(self.names)}") from None

    def axes(self, names) -> tuple[int, ...]:
        return tuple(self.axis(n) for n in _as_names(names))

    def __contains__(self, name) -> bool:
        return name in self._index

    def __repr__(self):
        vs = ", ".join(f"{v.name}:{v.size}" for v in self.variables)
        return f"JointPmf({vs})"

    def marginal(self, keep) -> "JointPmf":
        return marginalize(self, keep)

    def transpose(self, order) -> "JointPmf":
        """Same distribution with the variables reordered."""
        order = _as_names(order)
        if sorted(order) != sorted(self.names):
            raise ValueError(f"{order} is not a permutation of {self.names}")
        axes = self.axes(order)
        return JointPmf([self.variables[a] for a in axes], self.weights.transpose(axes))

    def prob(self, **assignment) -> float:
        """Probability of a full assignment, e.g. ``pmf.prob(S1=0, S2=1)``."""
        idx = tuple(assignment[n] for n in self.names)
        return float(self.weights[idx])

    def support(self) -> np.ndarray:
        return self.weights > 0

    def allclose(self, other: "JointPmf", atol: float = 1e-12) -> bool:
        if sorted(self.names) != sorted(other.names):
            return False
        other = other.transpose(self.names)
        return self.variables == other.variables and np.allclose(
            self.weights, other.weights, rtol=0, atol=atol
        )


@dataclass(frozen=True)
class ConditionalPmf:
    """Transition kernel p(outputs | given).

    ``kernel`` has shape ``given sizes + output sizes``; every slice with the
    given-index fixed sums to one.
    """

    given: tuple[Variable, ...]
    outputs: tuple[Variable, ...]
    kernel: np.ndarray

    def __post_init__(self):
        given = _check_variables(self.given)
        outputs = _check_variables(self.outputs)
        _check_variables(given + outputs)
        k = np.array(self.kernel, dtype=float)
        shape = tuple(v.size for v in given + outputs)
        if k.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"kernel has {k.size} entries, expected shape {shape}")
        k = k.reshape(shape)
        if not np.all(np.isfinite(k)) or np.any(k < 0):
            raise ValueError("kernel entries must be finite and non-negative")
        out_axes = tuple(range(len(given), len(shape)))
        rows = k.sum(axis=out_axes) if out_axes else np.ones(k.shape)
        if np.any(np.abs(rows - 1.0) > NORM_TOL):
            worst = float(np.max(np.abs(rows - 1.0)))
            raise ValueError(f"kernel rows do not sum to 1 (worst deviation {worst:.3g})")
        k.setflags(write=False)
        object.__setattr__(self, "given", given)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "kernel", k)

    @property
    def given_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.given)

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.outputs)

    @classmethod
    def deterministic(cls, given, outputs, fn) -> "ConditionalPmf":
        """Kernel of a deterministic map ``fn(*given_symbols) -> output symbol(s)``."""
        given = _check_variables(given)
        outputs = _check_variables(outputs)
        k = np.zeros(tuple(v.size for v in given + outputs))
        for idx in np.ndindex(*(v.size for v in given)):
            out = fn(*idx)
            out = (out,) if np.isscalar(out) else tuple(out)
            k[idx + out] = 1.0
        return cls(given, outputs, k)


def marginalize(pmf: JointPmf, keep) -> JointPmf:
    """Sum out every variable not in ``keep``; pmf variable order is preserved."""
    keep = set(_as_names(keep))
    for n in keep:
        pmf.axis(n)
    drop = tuple(i for i, v in enumerate(pmf.variables) if v.name not in keep)
    if not drop:
        return pmf
    w = pmf.weights.sum(axis=drop)
    kept = [v for v in pmf.variables if v.name in keep]
    return JointPmf(kept, w / w.sum())


def _marginal_weights(pmf: JointPmf, names: Iterable[str]) -> np.ndarray:
    names = set(names)
    drop = tuple(i for i, v in enumerate(pmf.variables) if v.name not in names)
    return pmf.weights.sum(axis=drop) if drop else pmf.weights


def _h(w: np.ndarray) -> float:
    p = w[w > 0]
    return float(-(p * np.log2(p)).sum())


def _disjoint(*groups):
    seen = set()
    for g in groups:
        g = set(g)
        if seen & g:
            raise ValueError(f"variable sets overlap on {sorted(seen & g)}")
        seen |= g


def entropy(pmf: JointPmf, target, given=()) -> float:
    """H(target | given) in bits, with 0 log 0 = 0."""
    target, given = _as_names(target), _as_names(given)
    _disjoint(target, given)
    pmf.axes(target + given)
    h = _h(_marginal_weights(pmf, target + given))
    if given:
        h -= _h(_marginal_weights(pmf, given))
    return max(h, 0.0) if h > -1e-12 else h


def mutual_information(pmf: JointPmf, a, b, given=()) -> float:
    """I(a; b | given) in bits."""
    a, b, given = _as_names(a), _as_names(b), _as_names(given)
    _disjoint(a, b, given)
    pmf.axes(a + b + given)
    hc = _h(_marginal_weights(pmf, given)) if given else 0.0
    val = (
        _h(_marginal_weights(pmf, a + given))
        + _h(_marginal_weights(pmf, b + given))
        - _h(_marginal_weights(pmf, a + b + given))
        - hc
    )
    return max(val, 0.0) if val > -1e-10 else val


def is_markov_chain(pmf: JointPmf, x, y, z, tol: float = 1e-10) -> bool:
    """True iff x - y - z, i.e. I(x; z | y) <= tol."""
    return mutual_information(pmf, x, z, y) <= tol


# --------------------------------------------------------------------------
# Gacs-Korner common part


@dataclass(frozen=True)
class CommonPart:
    """Maps h1, h2 with h1(s1) == h2(s2) on the support; t_size is maximal."""

    h1: tuple[int, ...]
    h2: tuple[int, ...]
    t_size: int

    def t_of(self, s1: int) -> int:
        return self.h1[s1]


def gacs_korner_common_part(source: JointPmf, names=("S1", "S2")) -> CommonPart:
    """Common part of a source pair as connected components of its support graph.

    The bipartite graph has an edge (s1, s2) for every pair with positive
    probability. Labels are assigned in first-encounter order, scanning S1
    symbols in increasing order; symbols with zero marginal probability get
    singleton components after all supported ones.
    """
    n1, n2 = names
    if set(source.names) != {n1, n2}:
        raise ValueError(f"expected a pmf over exactly {names}, got {source.names}")
    w = source.transpose((n1, n2)).weights
    k1, k2 = w.shape
    h1 = [-1] * k1
    h2 = [-1] * k2
    label = 0

    def flood(start):
        stack = [(0, start)]
        h1[start] = label
        while stack:
            side, i = stack.pop()
            if side == 0:
                for j in np.flatnonzero(w[i] > 0):
                    if h2[j] < 0:
                        h2[j] = label
                        stack.append((1, j))
            else:
                for j in np.flatnonzero(w[:, i] > 0):
                    if h1[j] < 0:
                        h1[j] = label
                        stack.append((0, j))

    for s1 in range(k1):
        if h1[s1] < 0 and w[s1].sum() > 0:
            flood(s1)
            label += 1
    supported = label
    for s1 in range(k1):
        if h1[s1] < 0:
            h1[s1] = label
            label += 1
    for s2 in range(k2):
        if h2[s2] < 0:
            h2[s2] = label
            label += 1
    # off-support symbols never occur; they do not add to the common part
    return CommonPart(tuple(h1), tuple(h2), max(supported, 1))


# --------------------------------------------------------------------------
# Strong typicality


@dataclass(frozen=True)
class TypicalityQuery:
    epsilon: float
    n: int

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        if self.n < 1:
            raise ValueError("blocklength n must be >= 1")


def strongly_typical(seq: Sequence[Sequence[int]], pmf: JointPmf, q: TypicalityQuery) -> bool:
    """Strong typicality in the multiplicative form.

    ``seq`` holds one symbol sequence per pmf variable, in pmf order. The
    sequence is typical iff every joint symbol ``a`` satisfies
    ``|N(a)/n - p(a)| <= eps * p(a)`` and ``N(a) = 0`` whenever ``p(a) = 0``.
    """
    if len(seq) != len(pmf.variables):
        raise ValueError(f"expected {len(pmf.variables)} sequences, got {len(seq)}")
    arr = [np.asarray(s, dtype=np.int64) for s in seq]
    for s, v in zip(arr, pmf.variables):
        if s.shape != (q.n,):
            raise ValueError(f"sequence for {v.name} has length {s.shape}, expected {q.n}")
        if s.size and (s.min() < 0 or s.max() >= v.size):
            raise ValueError(f"symbol out of range for {v.name}")
    atoms = np.ravel_multi_index(arr, pmf.shape) if arr else np.zeros(q.n, np.int64)
    return bool(typical_rows(atoms[None, :], pmf.weights.ravel(), q.epsilon)[0])


def typical_rows(atoms: np.ndarray, p_flat: np.ndarray, epsilon: float) -> np.ndarray:
    """Vectorised strong-typicality test.

    ``atoms`` is a ``(K, n)`` integer array of flat joint-symbol indices into
    ``p_flat``; returns a length-K boolean mask.
    """
    atoms = np.asarray(atoms)
    K, n = atoms.shape
    pa = p_flat[atoms]
    ok = np.all(pa > 0, axis=1)
    # N(a) for the symbol at each position, O(K n^2) but n is small here
    counts = (atoms[:, :, None] == atoms[:, None, :]).sum(axis=2)
    dev = np.abs(counts / n - pa) <= epsilon * pa * (1 + 1e-12) + 1e-15
    ok &= np.all(dev, axis=1)
    if epsilon < 1:
        # unseen support symbols deviate by p(a) > eps p(a)
        support = int(np.count_nonzero(p_flat))
        distinct = (np.diff(np.sort(atoms, axis=1), axis=1) != 0).sum(axis=1) + 1
        ok &= distinct == support
    return ok


# --------------------------------------------------------------------------
# Sampling


def sample(pmf: JointPmf, n: int, seed: int) -> tuple[np.ndarray, ...]:
    """``n`` iid draws from ``pmf``, one integer array per variable."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    flat = pmf.weights.ravel()
    idx = rng.choice(flat.size, size=n, p=flat / flat.sum())
    return tuple(np.asarray(a) for a in np.unravel_index(idx, pmf.shape))


# --------------------------------------------------------------------------
# Building joints from factors


class Factor(NamedTuple):
    outputs: tuple[str, ...]
    given: tuple[str, ...]

    def __str__(self):
        out = ",".join(self.outputs)
        return f"p({out}|{','.join(self.given)})" if self.given else f"p({out})"


def parse_factor(spec) -> Factor:
    """Accept ``"X1|V1"``, ``"X1,X2|V"``, ``("X1",)`` or ``(("X1",), ("V1",))``."""
    if isinstance(spec, Factor):
        return spec
    if isinstance(spec, str):
        out, _, given = spec.partition("|")
        outs = tuple(s.strip() for s in out.split(",") if s.strip())
        gv = tuple(s.strip() for s in given.split(",") if s.strip())
        return Factor(outs, gv)
    spec = tuple(spec)
    if len(spec) == 2 and not isinstance(spec[0], str):
        return Factor(_as_names(spec[0]), _as_names(spec[1]))
    return Factor(_as_names(spec), ())


def joint_from_factors(variables, factors: Sequence[tuple]) -> JointPmf:
    """Product of named factors, broadcast over ``variables``.

    Each factor is ``(names, array)`` where the array axes follow ``names``.
    Conditionals are passed with their given-variables first, exactly as
    stored in :class:`ConditionalPmf`.
    """
    variables = _check_variables(variables)
    names = [v.name for v in variables]
    letters = {n: chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26) for i, n in enumerate(names)}
    operands, subs = [], []
    for fnames, arr in factors:
        fnames = _as_names(fnames)
        for n in fnames:
            if n not in letters:
                raise KeyError(f"factor refers to unknown variable {n!r}")
        subs.append("".join(letters[n] for n in fnames))
        operands.append(np.asarray(arr, dtype=float))
    out = "".join(letters[n] for n in names)
    if operands:
        w = np.einsum(",".join(subs) + "->" + out, *operands)
        w = np.broadcast_to(w, tuple(v.size for v in variables))
    else:
        w = np.ones(tuple(v.size for v in variables))
    return JointPmf(variables, w)


def compose(pmf: JointPmf, cond: ConditionalPmf) -> JointPmf:
    """Joint p(x) p(y | x') where x' are the given-variables of ``cond``."""
    for g in cond.given:
        if g.name not in pmf or pmf.size_of(g.name) != g.size:
            raise ValueError(f"conditional's given variable {g} not in {pmf}")
    variables = pmf.variables + cond.outputs
    return joint_from_factors(
        variables,
        [(pmf.names, pmf.weights), (cond.given_names + cond.output_names, cond.kernel)],
    )


def independent(*pmfs: JointPmf) -> JointPmf:
    variables = sum((p.variables for p in pmfs), ())
    return joint_from_factors(variables, [(p.names, p.weights) for p in pmfs])


def conditional_of(pmf: JointPmf, factor) -> np.ndarray:
    """p(outputs | given) from ``pmf`` as an array over ``given + outputs``.

    Rows where the given-configuration has zero probability are filled with
    the uniform distribution.
    """
    f = parse_factor(factor)
    joint = _marginal_weights(pmf, f.given + f.outputs)
    sub = [v.name for v in pmf.variables if v.name in set(f.given + f.outputs)]
    joint = np.moveaxis(joint, [sub.index(n) for n in f.given + f.outputs], range(len(sub)))
    ng = len(f.given)
    denom = joint.sum(axis=tuple(range(ng, joint.ndim)), keepdims=True) if joint.ndim > ng else joint
    n_out = int(np.prod(joint.shape[ng:], dtype=np.int64)) or 1
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(denom > 0, joint / np.where(denom > 0, denom, 1), 1.0 / n_out)
    return cond


class FactorizationError(ValueError):
    pass


def validate_factorization(pmf: JointPmf, pattern, tol: float = 1e-10) -> bool:
    """True iff ``pmf`` equals the product of its own conditionals per ``pattern``.

    ``pattern`` is a list of factor scopes such as
    ``["V1", "X1|V1", "V2", "X2|V2", "X3|V1,V2"]``. The outputs of the
    factors must partition the pmf variables. Closeness is total variation.
    """
    factors = [parse_factor(f) for f in pattern]
    outs = [n for f in factors for n in f.outputs]
    if sorted(outs) != sorted(pmf.names):
        raise FactorizationError(
            f"pattern outputs {outs} do not partition the pmf variables {list(pmf.names)}"
        )
    for f in factors:
        if not f.outputs:
            raise FactorizationError(f"empty factor {f}")
        if set(f.outputs) & set(f.given):
            raise FactorizationError(f"factor {f} conditions on its own output")
        for n in f.given:
            pmf.axis(n)
    letters = {n: chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26)
               for i, n in enumerate(pmf.names)}
    subs = ["".join(letters[n] for n in f.given + f.outputs) for f in factors]
    # product of the pmf's own conditionals; not necessarily normalised when
    # the pattern is cyclic, which then simply shows up as a large distance
    prod = np.einsum(",".join(subs) + "->" + "".join(letters[n] for n in pmf.names),
                     *[conditional_of(pmf, f) for f in factors])
    return 0.5 * float(np.abs(pmf.weights - prod).sum()) <= tol


def total_variation(p: JointPmf, q: JointPmf) -> float:
    q = q.transpose(p.names)
    return 0.5 * float(np.abs(p.weights - q.weights).sum())


# --------------------------------------------------------------------------
# JSON schema: {"variables": [{"name": "S1", "size": 2}, ...], "weights": [...]}


def pmf_to_json(pmf: JointPmf) -> dict:
    return {
        "variables": [{"name": v.name, "size": v.size} for v in pmf.variables],
        "weights": pmf.weights.ravel().tolist(),
    }


def pmf_from_json(obj: dict, normalize: bool = False) -> JointPmf:
    try:
        variables = [Variable(str(v["name"]), int(v["size"])) for v in obj["variables"]]
        weights = obj["weights"]
    except KeyError as e:
        raise ValueError(f"pmf JSON is missing field {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise ValueError(f"pmf JSON field 'variables' is malformed: {e}") from None
    return JointPmf(variables, weights, normalize=normalize)


def uniform(variables) -> JointPmf:
    variables = _check_variables(variables)
    shape = tuple(v.size for v in variables)
    return JointPmf(variables, np.full(shape, 1.0 / max(int(np.prod(shape)), 1)))


def point_mass(variables, *index) -> JointPmf:
    variables = _check_variables(variables)
    w = np.zeros(tuple(v.size for v in variables))
    w[tuple(index)] = 1.0
    return JointPmf(variables, w)

"""Sources, channels and input distributions for the discrete memoryless MARC.

Variable names are fixed roles: sources ``S1, S2``, side information ``W``
(destination) and ``W3`` (relay), channel inputs ``X1, X2, X3`` (``X3`` is
the relay), outputs ``Y`` (destination) and ``Y3`` (relay), auxiliaries
``V1, V2`` and the time-sharing / common-part variable ``Q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .prob import (
    ConditionalPmf,
    FactorizationError,
    JointPmf,
    Variable,
    compose,
    entropy,
    joint_from_factors,
    mutual_information,
    parse_factor,
    pmf_from_json,
    pmf_to_json,
)

SOURCE_ROLES = ("S1", "S2", "W", "W3")
INPUT_ROLES = ("X1", "X2", "X3")
OUTPUT_ROLES = ("Y", "Y3")

SEPARATION_PATTERN = ("V1", "X1|V1", "V2", "X2|V2", "X3|V1,V2")
CPM_A_PATTERN = ("S1,S2", "Q", "V1", "X1|S1,V1,Q", "V2", "X2|S2,V2,Q", "X3|V1,V2")
CPM_B_PATTERN = ("S1,S2", "Q", "X1|S1,Q", "X2|S2,Q", "X3|S1,S2,Q")


def _role_of(entry: dict) -> str:
    if not isinstance(entry, dict):
        raise ValueError(f"each entry of 'variables' must be an object with 'name' and 'size', got {entry!r}")
    return str(entry.get("role", entry.get("name")))


class SourceSideInfoModel:
    """p(s1, s2, w, w3) with variables named by role.

    Missing ``W`` or ``W3`` are added as trivial (size-1) variables, which is
    the same as "no side information".
    """

    def __init__(self, joint: JointPmf):
        extra = set(joint.names) - set(SOURCE_ROLES)
        if extra:
            raise ValueError(f"source model has non-role variables {sorted(extra)}; expected {SOURCE_ROLES}")
        for r in ("S1", "S2"):
            if r not in joint:
                raise ValueError(f"source model is missing {r}")
        variables = list(joint.variables)
        w = joint.weights
        for r in ("W", "W3"):
            if r not in joint:
                variables.append(Variable(r, 1))
                w = w[..., None]
        self.joint = JointPmf(variables, w).transpose(SOURCE_ROLES)

    @classmethod
    def from_sources(cls, p_s1s2, w_fn: Callable | None = None, w3_fn: Callable | None = None,
                     w_size: int = 1, w3_size: int = 1) -> "SourceSideInfoModel":
        """Build from a table p(s1, s2) and deterministic side-information maps."""
        p = np.asarray(p_s1s2, dtype=float)
        k1, k2 = p.shape
        w = np.zeros((k1, k2, w_size, w3_size))
        for s1, s2 in np.ndindex(k1, k2):
            a = w_fn(s1, s2) if w_fn else 0
            b = w3_fn(s1, s2) if w3_fn else 0
            w[s1, s2, a, b] = p[s1, s2]
        return cls(JointPmf([("S1", k1), ("S2", k2), ("W", w_size), ("W3", w3_size)], w))

    @property
    def source_pair(self) -> JointPmf:
        return self.joint.marginal(("S1", "S2"))

    def size(self, role: str) -> int:
        return self.joint.size_of(role)

    def entropy(self, target, given=()) -> float:
        return entropy(self.joint, target, given)

    def to_json(self) -> dict:
        d = pmf_to_json(self.joint)
        for v in d["variables"]:
            v["role"] = v["name"]
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "SourceSideInfoModel":
        if "preset" in obj:
            return source_preset(obj["preset"], **obj.get("args", {}))
        if "variables" not in obj:
            raise ValueError("source model JSON is missing field 'variables'")
        renamed = dict(obj)
        renamed["variables"] = [
            {"name": _role_of(v), "size": v.get("size")} for v in obj["variables"]
        ]
        return cls(pmf_from_json(renamed))


def somarc_source() -> SourceSideInfoModel:
    """The three-atom source table p(0,0) = p(0,1) = p(1,1) = 1/3, no side information."""
    t = np.array([[1, 1], [0, 1]]) / 3.0
    return SourceSideInfoModel.from_sources(t)


def xor_side_info_source(p_s1s2=None, to_destination: bool = True, to_relay: bool = True):
    """Source pair with ``S1 xor S2`` revealed to the destination and/or relay."""
    p = np.full((2, 2), 0.25) if p_s1s2 is None else np.asarray(p_s1s2, dtype=float)
    xor = lambda a, b: a ^ b  # noqa: E731
    return SourceSideInfoModel.from_sources(p, xor if to_destination else None, xor if to_relay else None,
                                            2 if to_destination else 1, 2 if to_relay else 1)


def source_preset(name: str, **kw) -> SourceSideInfoModel:
    presets = {"somarc": somarc_source, "xor-side-info": xor_side_info_source}
    if name not in presets:
        raise ValueError(f"unknown source preset {name!r}; known: {sorted(presets)}")
    return presets[name](**kw)


@dataclass(frozen=True)
class DmChannel:
    """Memoryless channel law p(y, y3 | x1, x2, x3)."""

    law: ConditionalPmf

    def __post_init__(self):
        if self.law.given_names != INPUT_ROLES:
            raise ValueError(f"channel inputs must be {INPUT_ROLES}, got {self.law.given_names}")
        if self.law.output_names != OUTPUT_ROLES:
            raise ValueError(f"channel outputs must be {OUTPUT_ROLES}, got {self.law.output_names}")

    @property
    def input_sizes(self) -> tuple[int, int, int]:
        return tuple(v.size for v in self.law.given)

    @property
    def output_sizes(self) -> tuple[int, int]:
        return tuple(v.size for v in self.law.outputs)

    @property
    def kernel(self) -> np.ndarray:
        return self.law.kernel

    def output_kernel(self, which: str) -> np.ndarray:
        """p(y | x) or p(y3 | x) alone, shape (|X1|, |X2|, |X3|, |out|)."""
        if which not in OUTPUT_ROLES:
            raise KeyError(f"unknown channel output {which!r}")
        return self.law.kernel.sum(axis=4 if which == "Y" else 3)

    @classmethod
    def from_kernel(cls, x_sizes, y_size, y3_size, kernel) -> "DmChannel":
        given = [Variable(n, s) for n, s in zip(INPUT_ROLES, x_sizes)]
        outs = [Variable("Y", y_size), Variable("Y3", y3_size)]
        return cls(ConditionalPmf(given, outs, kernel))

    @classmethod
    def deterministic(cls, x_sizes, y_size, y3_size, fn) -> "DmChannel":
        """``fn(x1, x2, x3) -> (y, y3)``."""
        given = [Variable(n, s) for n, s in zip(INPUT_ROLES, x_sizes)]
        outs = [Variable("Y", y_size), Variable("Y3", y3_size)]
        return cls(ConditionalPmf.deterministic(given, outs, fn))

    @classmethod
    def from_parts(cls, p_y, p_y3) -> "DmChannel":
        """Channel with conditionally independent outputs p(y|x) p(y3|x)."""
        p_y = np.asarray(p_y, dtype=float)
        p_y3 = np.asarray(p_y3, dtype=float)
        k = p_y[..., :, None] * p_y3[..., None, :]
        return cls.from_kernel(p_y.shape[:3], p_y.shape[3], p_y3.shape[3], k)

    def to_json(self) -> dict:
        return {
            "given": [{"name": v.name, "size": v.size, "role": v.name} for v in self.law.given],
            "outputs": [{"name": v.name, "size": v.size, "role": v.name} for v in self.law.outputs],
            "kernel": self.law.kernel.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DmChannel":
        if "preset" in obj:
            return channel_preset(obj["preset"], **obj.get("args", {}))
        for key in ("given", "outputs", "kernel"):
            if key not in obj:
                raise ValueError(f"channel JSON is missing field {key!r}")
        given = {_role_of(v): int(v["size"]) for v in obj["given"]}
        outs = {_role_of(v): int(v["size"]) for v in obj["outputs"]}
        if sorted(given) != sorted(INPUT_ROLES):
            raise ValueError(f"channel JSON field 'given' must carry roles {INPUT_ROLES}")
        if sorted(outs) != sorted(OUTPUT_ROLES):
            raise ValueError(f"channel JSON field 'outputs' must carry roles {OUTPUT_ROLES}")
        order = [_role_of(v) for v in obj["given"]] + [_role_of(v) for v in obj["outputs"]]
        sizes = [given.get(r) or outs.get(r) for r in order]
        k = np.asarray(obj["kernel"], dtype=float)
        if k.size != int(np.prod(sizes)):
            raise ValueError(f"channel JSON field 'kernel' has {k.size} entries, expected {int(np.prod(sizes))}")
        k = np.moveaxis(k.reshape(sizes), [order.index(r) for r in INPUT_ROLES + OUTPUT_ROLES], range(5))
        return cls.from_kernel([given[r] for r in INPUT_ROLES], outs["Y"], outs["Y3"], k)


def somarc_channel() -> DmChannel:
    """Y3 = X1 xor X2 at the relay; destination sees Y = (Y_S, Y_R) with
    Y_S = X1 + X2 and Y_R = X3, packed as Y = 2 * Y_S + Y_R."""
    return DmChannel.deterministic((2, 2, 2), 6, 2, lambda a, b, c: (2 * (a + b) + c, a ^ b))


def adder_mac_channel() -> DmChannel:
    """Binary adder MAC Y = X1 + X2 with an inert relay and a silent relay output."""
    return DmChannel.deterministic((2, 2, 1), 3, 1, lambda a, b, c: (a + b, 0))


def noiseless_pipe_channel(x1_size: int, x2_size: int, x3_size: int) -> DmChannel:
    """Relay sees (X1, X2) perfectly; destination sees only X3.

    All destination information has to flow through the relay, so the
    destination rate is limited by log2 |X3|.
    """
    return DmChannel.deterministic(
        (x1_size, x2_size, x3_size), x3_size, x1_size * x2_size,
        lambda a, b, c: (c, a * x2_size + b),
    )


def orthogonal_pipe_channel(sizes=(2, 2, 2)) -> DmChannel:
    """Noiseless links everywhere: Y carries (X1, X2, X3) and Y3 carries (X1, X2)."""
    a, b, c = sizes
    return DmChannel.deterministic(
        sizes, a * b * c, a * b, lambda x1, x2, x3: ((x1 * b + x2) * c + x3, x1 * b + x2)
    )


def useless_channel(x_sizes=(2, 2, 2), y_size=2, y3_size=2) -> DmChannel:
    """Outputs uniform and independent of the inputs."""
    k = np.full(tuple(x_sizes) + (y_size, y3_size), 1.0 / (y_size * y3_size))
    return DmChannel.from_kernel(x_sizes, y_size, y3_size, k)


def channel_preset(name: str, **kw) -> DmChannel:
    presets = {
        "somarc": somarc_channel,
        "adder-mac": adder_mac_channel,
        "noiseless-pipe": lambda x1=2, x2=2, x3=2: noiseless_pipe_channel(x1, x2, x3),
        "orthogonal-pipe": lambda sizes=(2, 2, 2): orthogonal_pipe_channel(tuple(sizes)),
        "useless": lambda x_sizes=(2, 2, 2), y=2, y3=2: useless_channel(tuple(x_sizes), y, y3),
    }
    if name not in presets:
        raise ValueError(f"unknown channel preset {name!r}; known: {sorted(presets)}")
    return presets[name](**kw)


# --------------------------------------------------------------------------
# input distributions


def _stoch(name: str, arr, n_cond: int) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if a.ndim != n_cond + 1:
        raise FactorizationError(f"factor {name}: expected {n_cond + 1} axes, got shape {a.shape}")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise FactorizationError(f"factor {name}: entries must be finite and non-negative")
    dev = np.abs(a.sum(axis=-1) - 1.0)
    if np.any(dev > 1e-12):
        raise FactorizationError(f"factor {name}: rows do not sum to 1 (worst {dev.max():.3g})")
    return a


def _match(name, arr, axis, size, what):
    if arr.shape[axis] != size:
        raise FactorizationError(f"factor {name}: axis for {what} has size {arr.shape[axis]}, expected {size}")


def _arrays_json(obj, kind, fields):
    out = {"kind": kind}
    for f in fields:
        out[f] = np.asarray(obj[f] if isinstance(obj, dict) else getattr(obj, f)).tolist()
    return out


def _fields_from_json(obj, fields, what):
    try:
        return {f: np.asarray(obj[f], dtype=float) for f in fields}
    except KeyError as e:
        raise ValueError(f"{what} JSON is missing field {e.args[0]!r}") from None
    except ValueError as e:
        raise ValueError(f"{what} JSON has a ragged or non-numeric array: {e}") from None


@dataclass(frozen=True)
class SeparationInput:
    """p(v1) p(x1|v1) p(v2) p(x2|v2) p(x3|v1,v2).

    Kernels are stored with the conditioning axes first, e.g. ``k_x3`` has
    shape ``(|V1|, |V2|, |X3|)``.
    """

    p_v1: np.ndarray
    p_v2: np.ndarray
    k_x1: np.ndarray
    k_x2: np.ndarray
    k_x3: np.ndarray

    FIELDS = ("p_v1", "p_v2", "k_x1", "k_x2", "k_x3")

    def __post_init__(self):
        p_v1 = _stoch("p(V1)", self.p_v1, 0)
        p_v2 = _stoch("p(V2)", self.p_v2, 0)
        k1 = _stoch("p(X1|V1)", self.k_x1, 1)
        k2 = _stoch("p(X2|V2)", self.k_x2, 1)
        k3 = _stoch("p(X3|V1,V2)", self.k_x3, 2)
        _match("p(X1|V1)", k1, 0, p_v1.size, "V1")
        _match("p(X2|V2)", k2, 0, p_v2.size, "V2")
        _match("p(X3|V1,V2)", k3, 0, p_v1.size, "V1")
        _match("p(X3|V1,V2)", k3, 1, p_v2.size, "V2")
        for f, a in zip(self.FIELDS, (p_v1, p_v2, k1, k2, k3)):
            object.__setattr__(self, f, a)

    @property
    def sizes(self) -> dict:
        return {"V1": self.p_v1.size, "V2": self.p_v2.size, "X1": self.k_x1.shape[1],
                "X2": self.k_x2.shape[1], "X3": self.k_x3.shape[2]}

    def joint(self) -> JointPmf:
        s = self.sizes
        names = ("V1", "V2", "X1", "X2", "X3")
        return joint_from_factors(
            [(n, s[n]) for n in names],
            [("V1", self.p_v1), ("V2", self.p_v2), (("V1", "X1"), self.k_x1),
             (("V2", "X2"), self.k_x2), (("V1", "V2", "X3"), self.k_x3)],
        )

    @classmethod
    def independent(cls, p_x1, p_x2, p_x3) -> "SeparationInput":
        """Trivial auxiliaries; independent channel inputs."""
        return cls(np.ones(1), np.ones(1), np.atleast_2d(p_x1), np.atleast_2d(p_x2),
                   np.asarray(p_x3, dtype=float).reshape(1, 1, -1))

    @classmethod
    def from_joint(cls, pmf: JointPmf, tol: float = 1e-10) -> "SeparationInput":
        """Extract the factors of a joint on (V1,V2,X1,X2,X3); errors name the violated factor."""
        check_pattern(pmf, SEPARATION_PATTERN, tol)
        from .prob import conditional_of

        return cls(conditional_of(pmf, "V1"), conditional_of(pmf, "V2"),
                   conditional_of(pmf, "X1|V1"), conditional_of(pmf, "X2|V2"),
                   conditional_of(pmf, "X3|V1,V2"))

    def to_json(self) -> dict:
        return _arrays_json(self, "separation", self.FIELDS)

    @classmethod
    def from_json(cls, obj: dict) -> "SeparationInput":
        return cls(**_fields_from_json(obj, cls.FIELDS, "separation input"))


def crbc_input(p_x1x3) -> SeparationInput:
    """Single-source relay input from a joint p(x1, x3), with X3 carried by V1."""
    p = np.asarray(p_x1x3, dtype=float)
    kx1, kx3 = p.shape
    p_x3 = p.sum(axis=0)
    k_x1 = np.where(p_x3[:, None] > 0, p.T / np.where(p_x3 > 0, p_x3, 1)[:, None], 1.0 / kx1)
    k_x3 = np.eye(kx3).reshape(kx3, 1, kx3)
    return SeparationInput(p_x3, np.ones(1), k_x1, np.ones((1, 1)), k_x3)


@dataclass(frozen=True)
class CpmInputA:
    """p(q) p(v1) p(x1|s1,v1,q) p(v2) p(x2|s2,v2,q) p(x3|v1,v2).

    ``k_x1`` has shape ``(|S1|, |V1|, |Q|, |X1|)``; ``k_x2`` likewise for
    source 2; ``k_x3`` has shape ``(|V1|, |V2|, |X3|)``.
    """

    p_q: np.ndarray
    p_v1: np.ndarray
    p_v2: np.ndarray
    k_x1: np.ndarray
    k_x2: np.ndarray
    k_x3: np.ndarray

    FIELDS = ("p_q", "p_v1", "p_v2", "k_x1", "k_x2", "k_x3")

    def __post_init__(self):
        p_q = _stoch("p(Q)", self.p_q, 0)
        p_v1 = _stoch("p(V1)", self.p_v1, 0)
        p_v2 = _stoch("p(V2)", self.p_v2, 0)
        k1 = _stoch("p(X1|S1,V1,Q)", self.k_x1, 3)
        k2 = _stoch("p(X2|S2,V2,Q)", self.k_x2, 3)
        k3 = _stoch("p(X3|V1,V2)", self.k_x3, 2)
        _match("p(X1|S1,V1,Q)", k1, 1, p_v1.size, "V1")
        _match("p(X1|S1,V1,Q)", k1, 2, p_q.size, "Q")
        _match("p(X2|S2,V2,Q)", k2, 1, p_v2.size, "V2")
        _match("p(X2|S2,V2,Q)", k2, 2, p_q.size, "Q")
        _match("p(X3|V1,V2)", k3, 0, p_v1.size, "V1")
        _match("p(X3|V1,V2)", k3, 1, p_v2.size, "V2")
        for f, a in zip(self.FIELDS, (p_q, p_v1, p_v2, k1, k2, k3)):
            object.__setattr__(self, f, a)

    @property
    def sizes(self) -> dict:
        return {"S1": self.k_x1.shape[0], "S2": self.k_x2.shape[0], "Q": self.p_q.size,
                "V1": self.p_v1.size, "V2": self.p_v2.size, "X1": self.k_x1.shape[3],
                "X2": self.k_x2.shape[3], "X3": self.k_x3.shape[2]}

    def factors(self):
        return [("Q", self.p_q), ("V1", self.p_v1), ("V2", self.p_v2),
                (("S1", "V1", "Q", "X1"), self.k_x1), (("S2", "V2", "Q", "X2"), self.k_x2),
                (("V1", "V2", "X3"), self.k_x3)]

    @classmethod
    def from_separation(cls, sep: SeparationInput, s_sizes) -> "CpmInputA":
        """Source-independent inputs with trivial Q (the separation special case)."""
        k1 = np.broadcast_to(sep.k_x1[None, :, None, :], (s_sizes[0],) + sep.k_x1.shape[:1] + (1,) + sep.k_x1.shape[1:])
        k2 = np.broadcast_to(sep.k_x2[None, :, None, :], (s_sizes[1],) + sep.k_x2.shape[:1] + (1,) + sep.k_x2.shape[1:])
        return cls(np.ones(1), sep.p_v1, sep.p_v2, k1.copy(), k2.copy(), sep.k_x3)

    def to_json(self) -> dict:
        return _arrays_json(self, "cpm-a", self.FIELDS)

    @classmethod
    def from_json(cls, obj: dict) -> "CpmInputA":
        return cls(**_fields_from_json(obj, cls.FIELDS, "cpm-a input"))


@dataclass(frozen=True)
class CpmInputB:
    """p(q) p(x1|s1,q) p(x2|s2,q) p(x3|s1,s2,q)."""

    p_q: np.ndarray
    k_x1: np.ndarray
    k_x2: np.ndarray
    k_x3: np.ndarray

    FIELDS = ("p_q", "k_x1", "k_x2", "k_x3")

    def __post_init__(self):
        p_q = _stoch("p(Q)", self.p_q, 0)
        k1 = _stoch("p(X1|S1,Q)", self.k_x1, 2)
        k2 = _stoch("p(X2|S2,Q)", self.k_x2, 2)
        k3 = _stoch("p(X3|S1,S2,Q)", self.k_x3, 3)
        _match("p(X1|S1,Q)", k1, 1, p_q.size, "Q")
        _match("p(X2|S2,Q)", k2, 1, p_q.size, "Q")
        _match("p(X3|S1,S2,Q)", k3, 0, k1.shape[0], "S1")
        _match("p(X3|S1,S2,Q)", k3, 1, k2.shape[0], "S2")
        _match("p(X3|S1,S2,Q)", k3, 2, p_q.size, "Q")
        for f, a in zip(self.FIELDS, (p_q, k1, k2, k3)):
            object.__setattr__(self, f, a)

    @property
    def sizes(self) -> dict:
        return {"S1": self.k_x1.shape[0], "S2": self.k_x2.shape[0], "Q": self.p_q.size,
                "X1": self.k_x1.shape[2], "X2": self.k_x2.shape[2], "X3": self.k_x3.shape[3]}

    def factors(self):
        return [("Q", self.p_q), (("S1", "Q", "X1"), self.k_x1), (("S2", "Q", "X2"), self.k_x2),
                (("S1", "S2", "Q", "X3"), self.k_x3)]

    def to_json(self) -> dict:
        return _arrays_json(self, "cpm-b", self.FIELDS)

    @classmethod
    def from_json(cls, obj: dict) -> "CpmInputB":
        return cls(**_fields_from_json(obj, cls.FIELDS, "cpm-b input"))


def input_from_json(obj: dict):
    kinds = {"separation": SeparationInput, "cpm-a": CpmInputA, "cpm-b": CpmInputB}
    kind = obj.get("kind")
    if kind not in kinds:
        raise ValueError(f"input JSON field 'kind' must be one of {sorted(kinds)}, got {kind!r}")
    return kinds[kind].from_json(obj)


def check_pattern(pmf: JointPmf, pattern, tol: float = 1e-10) -> None:
    """Raise :class:`FactorizationError` naming the first factor the pmf violates.

    Factors are visited in order; factor ``p(A|B)`` is violated when A still
    depends on earlier outputs beyond B, i.e. I(A; earlier \\ B | B) > tol.
    """
    seen: list[str] = []
    for spec in pattern:
        f = parse_factor(spec)
        rest = [n for n in seen if n not in f.given]
        missing = [n for n in f.given if n not in seen]
        if missing:
            raise FactorizationError(f"factor {f} conditions on {missing} before they are generated")
        if rest and mutual_information(pmf, f.outputs, rest, f.given) > tol:
            raise FactorizationError(f"factor {f} violated: {','.join(f.outputs)} depends on {rest} beyond {list(f.given)}")
        seen.extend(f.outputs)

import itertools
import math
from collections import Counter, defaultdict

import numpy as np
import pytest
from hypothesis import strategies as st

from marclab.prob import JointPmf


# -- independent oracles: plain dictionaries and loops, no shared code paths --

def dict_pmf(pmf: JointPmf) -> dict:
    """{(name -> symbol) tuple: probability} from the dense tensor."""
    out = {}
    for idx in itertools.product(*(range(v.size) for v in pmf.variables)):
        p = float(pmf.weights[idx])
        if p > 0:
            out[idx] = p
    return out


def oracle_entropy(pmf: JointPmf, target, given=()) -> float:
    names = list(pmf.names)
    ti = [names.index(n) for n in target]
    gi = [names.index(n) for n in given]
    joint, cond = defaultdict(float), defaultdict(float)
    for idx, p in dict_pmf(pmf).items():
        joint[tuple(idx[i] for i in ti + gi)] += p
        cond[tuple(idx[i] for i in gi)] += p
    h = -sum(p * math.log2(p) for p in joint.values() if p > 0)
    h += sum(p * math.log2(p) for p in cond.values() if p > 0)
    return h


def oracle_mi(pmf, a, b, given=()) -> float:
    names = list(pmf.names)
    ai, bi, gi = ([names.index(n) for n in s] for s in (a, b, given))
    pabc, pac, pbc, pc = (defaultdict(float) for _ in range(4))
    d = dict_pmf(pmf)
    for idx, p in d.items():
        ka, kb, kc = (tuple(idx[i] for i in s) for s in (ai, bi, gi))
        pabc[ka, kb, kc] += p
        pac[ka, kc] += p
        pbc[kb, kc] += p
        pc[kc] += p
    return sum(p * math.log2(p * pc[kc] / (pac[ka, kc] * pbc[kb, kc])) for (ka, kb, kc), p in pabc.items())


def oracle_typical(seqs, pmf: JointPmf, eps: float) -> bool:
    n = len(seqs[0])
    counts = Counter(zip(*seqs))
    for idx in itertools.product(*(range(v.size) for v in pmf.variables)):
        p = float(pmf.weights[idx])
        f = counts.get(idx, 0) / n
        if p == 0:
            if f > 0:
                return False
        elif abs(f - p) > eps * p + 1e-15:
            return False
    return True


# -- hypothesis strategies --

@st.composite
def small_pmfs(draw, names=("A", "B", "C"), max_size=3, zeros=True):
    sizes = [draw(st.integers(1, max_size)) for _ in names]
    total = int(np.prod(sizes))
    lo = 0 if zeros else 1
    raw = draw(st.lists(st.integers(lo, 20), min_size=total, max_size=total))
    if sum(raw) == 0:
        raw[0] = 1
    w = np.array(raw, dtype=float)
    return JointPmf(list(zip(names, sizes)), w / w.sum())


@pytest.fixture
def somarc_table():
    return JointPmf([("S1", 2), ("S2", 2)], np.array([[1, 1], [0, 1]]) / 3.0)


# -- random instances for the rate-condition checkers --

def random_stochastic(rng, shape, sparsity=0.0):
    k = rng.random(shape)
    if sparsity:
        k = np.where(rng.random(shape) < sparsity, 0.0, k)
        flat = k.reshape(-1, shape[-1])
        flat[flat.sum(axis=1) == 0, 0] = 1.0
    return k / k.sum(axis=-1, keepdims=True)


def random_model(rng, sizes=(2, 2, 2, 2), sparsity=0.3):
    from marclab.models import SourceSideInfoModel
    w = random_stochastic(rng, (int(np.prod(sizes)),), sparsity).reshape(sizes)
    return SourceSideInfoModel(JointPmf(list(zip(("S1", "S2", "W", "W3"), sizes)), w))


def random_channel(rng, x_sizes=(2, 2, 2), y=3, y3=2, sparsity=0.3):
    from marclab.models import DmChannel
    k = random_stochastic(rng, tuple(x_sizes) + (y * y3,), sparsity).reshape(tuple(x_sizes) + (y, y3))
    return DmChannel.from_kernel(x_sizes, y, y3, k)


def random_separation_input(rng, x_sizes=(2, 2, 2), v_sizes=(2, 2)):
    from marclab.models import SeparationInput
    a, b, c = x_sizes
    v1, v2 = v_sizes
    return SeparationInput(random_stochastic(rng, (v1,)), random_stochastic(rng, (v2,)),
                           random_stochastic(rng, (v1, a)), random_stochastic(rng, (v2, b)),
                           random_stochastic(rng, (v1, v2, c)))


# ---------------------------------------------------------------- simulator instances

def _xor(a, b):
    return a ^ b


def three_pair_pmf():
    p = np.zeros((2, 2))
    p[0, 0] = p[0, 1] = p[1, 1] = 1 / 3
    return p


def pipe_instance(k3):
    """Uniform bit pair, S1 xor S2 known at relay and destination, relay sees
    (X1, X2) and the destination sees only X3 of size ``k3``."""
    from marclab.models import SeparationInput, noiseless_pipe_channel, xor_side_info_source
    model = xor_side_info_source()
    ch = noiseless_pipe_channel(8, 8, k3)
    inp = SeparationInput.independent(np.full(8, 1 / 8), np.full(8, 1 / 8), np.full(k3, 1 / k3))
    return model, ch, inp


PIPE_RATES = {"R1r": 1.0, "R2r": 1.0, "R1d": 1.0, "R2d": 1.0}


def cpm_a_instance(relay_sees=True):
    """Three-pair source with xor side information. X_i = 2 S_i + B_i with a
    uniform bit B_i, relay input X3 = (V1, V2) reaches Y noiselessly. The relay
    sees (S1 + S2, B1 xor B2), or nothing when ``relay_sees`` is False."""
    from marclab.models import CpmInputA, DmChannel, SourceSideInfoModel
    model = SourceSideInfoModel.from_sources(three_pair_pmf(), _xor, _xor if relay_sees else None,
                                             2, 2 if relay_sees else 1)
    k1 = np.zeros((2, 4, 1, 4))
    for s in range(2):
        k1[s, :, 0, 2 * s:2 * s + 2] = 0.5
    k3 = np.zeros((4, 4, 16))
    for a in range(4):
        for b in range(4):
            k3[a, b, 4 * a + b] = 1.0
    inp = CpmInputA(np.ones(1), np.full(4, .25), np.full(4, .25), k1, k1.copy(), k3)

    def law(x1, x2, x3):
        y3 = (x1 // 2 + x2 // 2) * 2 + ((x1 % 2) ^ (x2 % 2))
        return x3, (y3 if relay_sees else 0)

    ch = DmChannel.deterministic((4, 4, 16), 16, 6 if relay_sees else 1, law)
    return model, ch, inp


def cpm_b_instance(relay_sees=True):
    """Three-pair source with xor side information. X_i = 4 S_i + B_i with two
    uniform bits B_i and X3 = S1 + S2. The destination sees
    (S1 + S2, B1 xor B2, X3); the relay sees (B1, B2), or nothing."""
    from marclab.models import CpmInputB, DmChannel, SourceSideInfoModel
    model = SourceSideInfoModel.from_sources(three_pair_pmf(), _xor, _xor if relay_sees else None,
                                             2, 2 if relay_sees else 1)
    k1 = np.zeros((2, 1, 8))
    for s in range(2):
        k1[s, 0, 4 * s:4 * s + 4] = 0.25
    k3 = np.zeros((2, 2, 1, 3))
    for a in range(2):
        for b in range(2):
            k3[a, b, 0, a + b] = 1.0
    inp = CpmInputB(np.ones(1), k1, k1.copy(), k3)

    def law(x1, x2, x3):
        s1, b1, s2, b2 = x1 // 4, x1 % 4, x2 // 4, x2 % 4
        y = ((s1 + s2) * 4 + (b1 ^ b2)) * 3 + x3
        return y, (b1 * 4 + b2 if relay_sees else 0)

    ch = DmChannel.deterministic((8, 8, 3), 36, 16 if relay_sees else 1, law)
    return model, ch, inp

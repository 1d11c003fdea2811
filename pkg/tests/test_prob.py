import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from marclab.prob import (
    ConditionalPmf,
    FactorizationError,
    JointPmf,
    TypicalityQuery,
    compose,
    conditional_of,
    entropy,
    gacs_korner_common_part,
    independent,
    is_markov_chain,
    joint_from_factors,
    marginalize,
    mutual_information,
    pmf_from_json,
    pmf_to_json,
    point_mass,
    sample,
    strongly_typical,
    typical_rows,
    uniform,
    validate_factorization,
)

from conftest import oracle_entropy, oracle_mi, oracle_typical, small_pmfs


# ---------------------------------------------------------------- JointPmf

def test_rejects_unnormalised_weights():
    with pytest.raises(ValueError, match="sum to"):
        JointPmf([("X", 2)], [0.5, 0.6])


def test_normalize_on_request():
    p = JointPmf([("X", 2)], [1, 3], normalize=True)
    assert np.allclose(p.weights, [0.25, 0.75])


def test_rejects_duplicate_names_and_bad_shape():
    with pytest.raises(ValueError):
        JointPmf([("X", 2), ("X", 2)], np.full(4, 0.25))
    with pytest.raises(ValueError):
        JointPmf([("X", 2)], np.full(3, 1 / 3))


def test_weights_are_read_only():
    p = uniform([("X", 2)])
    with pytest.raises(ValueError):
        p.weights[0] = 1.0


def test_json_round_trip(somarc_table):
    back = pmf_from_json(pmf_to_json(somarc_table))
    assert back.names == somarc_table.names
    assert np.array_equal(back.weights, somarc_table.weights)


def test_json_missing_field_is_named():
    with pytest.raises(ValueError, match="weights"):
        pmf_from_json({"variables": [{"name": "X", "size": 2}]})


# ---------------------------------------------------------------- marginalize

def test_marginal_of_uniform_square():
    p = uniform([("X", 2), ("Y", 2)])
    assert np.allclose(marginalize(p, ["X"]).weights, [0.5, 0.5])


def test_marginal_of_somarc_table(somarc_table):
    assert np.allclose(marginalize(somarc_table, ["S1"]).weights, [2 / 3, 1 / 3])


def test_marginal_keep_all_is_identity(somarc_table):
    assert marginalize(somarc_table, ["S2", "S1"]).allclose(somarc_table)


def test_marginal_unknown_name():
    with pytest.raises(KeyError, match="Z"):
        marginalize(uniform([("X", 2)]), ["Z"])


@given(small_pmfs())
def test_marginal_preserves_order_and_mass(p):
    m = marginalize(p, ["C", "A"])
    assert m.names == ("A", "C")
    assert abs(m.weights.sum() - 1) < 1e-12


# ---------------------------------------------------------------- entropy / MI

def test_entropy_examples(somarc_table):
    assert entropy(somarc_table, ["S1", "S2"]) == pytest.approx(math.log2(3), abs=1e-12)
    assert entropy(point_mass([("X", 3), ("Y", 2)], 1, 0), ["X", "Y"]) == 0.0
    bits = uniform([("S1", 2), ("S2", 2)])
    assert entropy(bits, "S1", "S2") == pytest.approx(1.0, abs=1e-12)


def test_entropy_overlap_is_an_error(somarc_table):
    with pytest.raises(ValueError):
        entropy(somarc_table, ["S1"], ["S1"])
    with pytest.raises(ValueError):
        mutual_information(somarc_table, ["S1"], ["S1", "S2"])


def test_adder_mac_mutual_information():
    x = uniform([("X1", 2), ("X2", 2)])
    ch = ConditionalPmf.deterministic([("X1", 2), ("X2", 2)], [("Y", 3)], lambda a, b: a + b)
    assert mutual_information(compose(x, ch), ["X1", "X2"], "Y") == pytest.approx(1.5, abs=1e-12)


def test_mi_examples():
    assert mutual_information(uniform([("A", 3), ("B", 2)]), "A", "B") == pytest.approx(0.0, abs=1e-12)
    ident = compose(uniform([("X", 2)]), ConditionalPmf.deterministic([("X", 2)], [("Y", 2)], lambda x: x))
    assert mutual_information(ident, "X", "Y") == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(small_pmfs())
def test_entropy_and_mi_match_dictionary_oracle(p):
    assert entropy(p, ["A", "B"], ["C"]) == pytest.approx(oracle_entropy(p, ["A", "B"], ["C"]), abs=1e-10)
    assert entropy(p, ["B"]) == pytest.approx(oracle_entropy(p, ["B"]), abs=1e-10)
    assert mutual_information(p, "A", "B", "C") == pytest.approx(oracle_mi(p, ["A"], ["B"], ["C"]), abs=1e-10)


def test_entropy_matches_scipy():
    rng = np.random.default_rng(5)
    w = rng.random(12)
    p = JointPmf([("A", 3), ("B", 4)], w / w.sum())
    assert entropy(p, ["A", "B"]) == pytest.approx(stats.entropy(w, base=2), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(small_pmfs())
def test_chain_rule(p):
    lhs = entropy(p, ["A", "B"], ["C"])
    rhs = entropy(p, "A", "C") + entropy(p, "B", ["A", "C"])
    assert lhs == pytest.approx(rhs, abs=1e-10)


@settings(max_examples=80, deadline=None)
@given(small_pmfs())
def test_nonnegativity_and_symmetry(p):
    for t, g in ((["A"], []), (["A", "B"], ["C"]), (["C"], ["A", "B"])):
        assert entropy(p, t, g) >= -1e-10
    iab = mutual_information(p, "A", "B", "C")
    assert iab >= -1e-10
    assert iab == pytest.approx(mutual_information(p, "B", "A", "C"), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(small_pmfs())
def test_mi_is_entropy_difference(p):
    # cross-check of two separate code paths
    diff = entropy(p, "A", "C") - entropy(p, "A", ["B", "C"])
    assert mutual_information(p, "A", "B", "C") == pytest.approx(diff, abs=1e-10)


# ---------------------------------------------------------------- Markov chains

def _random_kernel(rng, a, b):
    k = rng.random((a, b)) + 0.05
    return k / k.sum(axis=1, keepdims=True)


def test_markov_chain_by_construction():
    rng = np.random.default_rng(1)
    px = rng.random(3)
    p = joint_from_factors([("X", 3), ("Y", 2), ("Z", 4)],
                           [("X", px / px.sum()), (("X", "Y"), _random_kernel(rng, 3, 2)),
                            (("Y", "Z"), _random_kernel(rng, 2, 4))])
    assert is_markov_chain(p, "X", "Y", "Z", tol=1e-10)


def test_copied_variable_breaks_markov_chain():
    # X = Z, independent of Y
    w = np.zeros((2, 2, 2))
    for x in range(2):
        for y in range(2):
            w[x, y, x] = 0.25
    p = JointPmf([("X", 2), ("Y", 2), ("Z", 2)], w)
    assert not is_markov_chain(p, "X", "Y", "Z")


def test_independent_triple_is_markov():
    p = independent(uniform([("X", 2)]), uniform([("Y", 3)]), uniform([("Z", 2)]))
    assert is_markov_chain(p, "X", "Y", "Z")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_composed_kernels_always_give_markov_chains(seed):
    rng = np.random.default_rng(seed)
    a, b, c = rng.integers(1, 4, size=3)
    px = rng.random(a) + 0.01
    p = joint_from_factors([("X", a), ("Y", b), ("Z", c)],
                           [("X", px / px.sum()), (("X", "Y"), _random_kernel(rng, a, b)),
                            (("Y", "Z"), _random_kernel(rng, b, c))])
    assert is_markov_chain(p, "X", "Y", "Z", tol=1e-10)
    assert is_markov_chain(p, "Z", "Y", "X", tol=1e-10)


# ---------------------------------------------------------------- factorization

def test_independent_product_matches_singleton_pattern():
    rng = np.random.default_rng(2)
    a, b = rng.random(3), rng.random(2)
    p = independent(JointPmf([("A", 3)], a / a.sum()), JointPmf([("B", 2)], b / b.sum()))
    assert validate_factorization(p, ["A", "B"])


def test_correlated_pair_fails_independence(somarc_table):
    assert not validate_factorization(somarc_table, ["S1", "S2"])
    assert validate_factorization(somarc_table, ["S1", "S2|S1"])


def test_rebuilt_superposition_pattern():
    rng = np.random.default_rng(3)
    pv = rng.random(3)
    p = joint_from_factors([("V1", 3), ("X1", 2)], [("V1", pv / pv.sum()), (("V1", "X1"), _random_kernel(rng, 3, 2))])
    assert validate_factorization(p, ["V1", "X1|V1"], tol=1e-10)


def test_malformed_pattern():
    p = uniform([("A", 2), ("B", 2)])
    with pytest.raises(FactorizationError):
        validate_factorization(p, ["A"])
    with pytest.raises(FactorizationError):
        validate_factorization(p, ["A|A", "B"])
    with pytest.raises(KeyError):
        validate_factorization(p, ["A", "B|Q"])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_factorization_round_trip(seed):
    # build from the pattern, then recover the same factors and rebuild
    rng = np.random.default_rng(seed)
    pv1, pv2 = rng.random(2) + 0.1, rng.random(3) + 0.1
    fac = [("V1", pv1 / pv1.sum()), (("V1", "X1"), _random_kernel(rng, 2, 3)),
           ("V2", pv2 / pv2.sum()), (("V2", "X2"), _random_kernel(rng, 3, 2)),
           (("V1", "V2", "X3"), _random_kernel(rng, 6, 2).reshape(2, 3, 2))]
    var = [("V1", 2), ("X1", 3), ("V2", 3), ("X2", 2), ("X3", 2)]
    p = joint_from_factors(var, fac)
    pattern = ["V1", "X1|V1", "V2", "X2|V2", "X3|V1,V2"]
    assert validate_factorization(p, pattern)
    rebuilt = joint_from_factors(var, [((*f.split("|")[1].split(","), f.split("|")[0]) if "|" in f else (f,),
                                        conditional_of(p, f)) for f in pattern])
    assert rebuilt.allclose(p, atol=1e-12)


# ---------------------------------------------------------------- common part

def test_common_part_examples(somarc_table):
    assert gacs_korner_common_part(somarc_table).t_size == 1
    diag = JointPmf([("S1", 2), ("S2", 2)], np.eye(2) / 2)
    cp = gacs_korner_common_part(diag)
    assert cp.t_size == 2 and cp.h1 == (0, 1) and cp.h2 == (0, 1)
    assert gacs_korner_common_part(uniform([("S1", 3), ("S2", 2)])).t_size == 1


def test_common_part_needs_two_named_sources():
    with pytest.raises(ValueError):
        gacs_korner_common_part(uniform([("S1", 2), ("X", 2)]))


def _components_oracle(w):
    """Union-find over support edges, independent of the flood fill."""
    k1, k2 = w.shape
    parent = list(range(k1 + k2))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k1):
        for j in range(k2):
            if w[i, j] > 0:
                parent[find(i)] = find(k1 + j)
    used = {i for i in range(k1) if w[i].sum() > 0}
    return len({find(i) for i in used})


@settings(max_examples=80, deadline=None)
@given(small_pmfs(names=("S1", "S2"), max_size=5))
def test_common_part_is_consistent_and_maximal(p):
    w = p.weights
    cp = gacs_korner_common_part(p)
    for i, j in zip(*np.nonzero(w)):
        assert cp.h1[i] == cp.h2[j]
    assert cp.t_size == max(_components_oracle(w), 1)


@settings(max_examples=60, deadline=None)
@given(small_pmfs(names=("S1", "S2"), max_size=5), st.randoms(use_true_random=False))
def test_common_part_label_permutation(p, rnd):
    w = p.weights
    pi1 = list(range(w.shape[0]))
    pi2 = list(range(w.shape[1]))
    rnd.shuffle(pi1)
    rnd.shuffle(pi2)
    wp = np.empty_like(w)
    wp[np.ix_(pi1, pi2)] = w  # symbol s1 becomes pi1[s1]
    a = gacs_korner_common_part(p)
    b = gacs_korner_common_part(JointPmf(p.variables, wp))
    assert a.t_size == b.t_size
    # the induced partitions of the supported pairs agree up to relabelling
    rel = {}
    for i, j in zip(*np.nonzero(w)):
        rel.setdefault(a.h1[i], b.h1[pi1[i]])
        assert rel[a.h1[i]] == b.h1[pi1[i]] == b.h2[pi2[j]]
    assert len(set(rel.values())) == len(rel)


# ---------------------------------------------------------------- typicality

def test_typicality_query_validation():
    with pytest.raises(ValueError):
        TypicalityQuery(-0.1, 5)
    with pytest.raises(ValueError):
        TypicalityQuery(0.1, 0)


def test_exact_type_is_typical_for_any_eps(somarc_table):
    seq = ([0, 0, 1], [0, 1, 1])
    for eps in (1e-9, 0.0, 0.5):
        assert strongly_typical(seq, somarc_table, TypicalityQuery(eps, 3))


def test_zero_probability_symbol_is_not_typical(somarc_table):
    seq = ([0, 1, 1], [0, 0, 1])  # contains (1, 0)
    assert not strongly_typical(seq, somarc_table, TypicalityQuery(100.0, 3))


def test_uniform_bit_boundary_case():
    p = uniform([("X", 2)])
    seq = ([1] * 6 + [0] * 4,)
    assert strongly_typical(seq, p, TypicalityQuery(0.3, 10))  # 0.1 <= 0.15
    assert not strongly_typical(seq, p, TypicalityQuery(0.19, 10))  # 0.1 > 0.095


def test_typicality_length_mismatch():
    p = uniform([("X", 2), ("Y", 2)])
    with pytest.raises(ValueError):
        strongly_typical(([0, 1], [0, 1, 1]), p, TypicalityQuery(0.1, 2))
    with pytest.raises(ValueError):
        strongly_typical(([0, 1],), p, TypicalityQuery(0.1, 2))


@settings(max_examples=60, deadline=None)
@given(small_pmfs(names=("A", "B"), max_size=3), st.integers(1, 12),
       st.sampled_from([0.0, 0.1, 0.5, 0.99, 1.0, 3.0, 1e6]), st.integers(0, 10**6))
def test_typicality_matches_counting_oracle(p, n, eps, seed):
    rng = np.random.default_rng(seed)
    seqs = tuple(rng.integers(0, v.size, n) for v in p.variables)
    assert strongly_typical(seqs, p, TypicalityQuery(eps, n)) == oracle_typical(seqs, p, eps)


@settings(max_examples=40, deadline=None)
@given(small_pmfs(names=("A", "B"), max_size=3), st.integers(1, 10), st.integers(0, 10**6))
def test_huge_eps_accepts_every_in_support_sequence(p, n, seed):
    rng = np.random.default_rng(seed)
    support = np.flatnonzero(p.weights.ravel())
    atoms = rng.choice(support, size=n)
    seqs = np.unravel_index(atoms, p.shape)
    assert strongly_typical(seqs, p, TypicalityQuery(1e12, n))


def test_zero_eps_accepts_only_exact_types():
    p = JointPmf([("X", 2)], [0.25, 0.75])
    rows = np.array([[0, 1, 1, 1], [1, 0, 1, 1], [0, 0, 1, 1], [1, 1, 1, 1]])
    assert list(typical_rows(rows, p.weights.ravel(), 0.0)) == [True, True, False, False]


# ---------------------------------------------------------------- sampling

def test_sample_deterministic_pmf():
    s = sample(point_mass([("X", 3), ("Y", 2)], 2, 1), 50, seed=4)
    assert np.all(s[0] == 2) and np.all(s[1] == 1)


def test_sample_same_seed_same_output(somarc_table):
    a = sample(somarc_table, 1000, seed=11)
    b = sample(somarc_table, 1000, seed=11)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    c = sample(somarc_table, 1000, seed=12)
    assert not all(np.array_equal(x, y) for x, y in zip(a, c))


def test_sample_never_leaves_support(somarc_table):
    s1, s2 = sample(somarc_table, 100_000, seed=0)
    assert not np.any((s1 == 1) & (s2 == 0))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sample_chi_square(seed):
    rng = np.random.default_rng(100 + seed)
    w = rng.random(4) + 0.05
    p = JointPmf([("A", 2), ("B", 2)], w / w.sum())
    a, b = sample(p, 100_000, seed=seed)
    obs = np.bincount(a * 2 + b, minlength=4)
    res = stats.chisquare(obs, 100_000 * p.weights.ravel())
    assert res.pvalue > 1e-6

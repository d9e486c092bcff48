import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_state
from mixedschur.combinatorics import Staircase, allowed_staircases, dim_q
from mixedschur.cost import RunCounters
from mixedschur.errors import CapExceeded, InputError
from mixedschur.oracle import build_full_transform, transform_marginals
from mixedschur.sampler import (Ensemble, QuditSource, ensemble_marginals, exact_distribution,
                                histogram, marginal_staircase_distribution, sample_run,
                                sample_shots, total_variation)

S = Staircase
SINGLET = np.array([0, 1, -1, 0]) / np.sqrt(2)


def product(d, m, n, qs):
    return QuditSource(d, m, n, "product", qudits=qs)


def entangled(d, m, n, amps):
    return QuditSource(d, m, n, "entangled", amplitudes=amps)


def test_two_zeros_symmetric():
    src = product(2, 2, 0, [[1, 0], [1, 0]])
    dist = exact_distribution(src)
    assert list(dist) == [(S((1, 0), 1, 0), S((2, 0), 2, 0))]
    assert dist[next(iter(dist))][0] == pytest.approx(1.0, abs=1e-14)
    assert marginal_staircase_distribution(dist) == pytest.approx({S((2, 0), 2, 0): 1.0})
    out = sample_run(src, seed=3)
    assert out.staircase == S((2, 0), 2, 0)


def test_singlet_antisymmetric():
    dist = exact_distribution(entangled(2, 2, 0, SINGLET))
    assert list(dist) == [(S((1, 0), 1, 0), S((1, 1), 2, 0))]
    p, reg = dist[next(iter(dist))]
    assert p == pytest.approx(1.0, abs=1e-12)
    assert abs(abs(reg.vector()[0]) - 1) < 1e-12
    for i in range(20):
        assert sample_run(entangled(2, 2, 0, SINGLET), seed=7, shot_index=i).staircase == S((1, 1), 2, 0)


def test_uniform_mixture_ensemble():
    ens = Ensemble.from_density_matrix(np.eye(4) / 4, 2, 2, 0)
    marg = ensemble_marginals(ens)
    assert marg[S((2, 0), 2, 0)] == pytest.approx(0.75, abs=1e-12)
    assert marg[S((1, 1), 2, 0)] == pytest.approx(0.25, abs=1e-12)
    hist = histogram(sample_shots(ens, seed=11, shots=4000))
    assert hist[S((2, 0), 2, 0)] / 4000 == pytest.approx(0.75, abs=0.03)


def test_basis_state_ensemble():
    basis = [QuditSource(2, 2, 0, "entangled", amplitudes=np.eye(4)[k]) for k in range(4)]
    ens = Ensemble(np.full(4, 0.25), basis)
    marg = ensemble_marginals(ens)
    assert marg[S((2, 0), 2, 0)] == pytest.approx(0.75, abs=1e-12)


def test_product_pair_formula(rng):
    for _ in range(20):
        a, b = random_state(rng, 2), random_state(rng, 2)
        marg = marginal_staircase_distribution(exact_distribution(product(2, 2, 0, [a, b])))
        expected = (1 - abs(np.vdot(a, b)) ** 2) / 2
        assert marg.get(S((1, 1), 2, 0), 0.0) == pytest.approx(expected, abs=1e-12)


def test_single_qudit_streams(rng):
    for d in (1, 2, 3):
        q = random_state(rng, d)
        out = sample_run(product(d, 1, 0, [q]), seed=0)
        assert out.path == (S((1,) + (0,) * (d - 1), 1, 0),)
        # the post state is the qudit itself in the GT basis (e_1 .. e_d in canonical order)
        assert abs(abs(np.vdot(out.post_state.vector(), q)) - 1) < 1e-12
        out = sample_run(product(d, 0, 1, [q]), seed=0)
        assert out.path == (S((0,) * (d - 1) + (-1,), 0, 1),)
        assert abs(np.vdot(out.post_state.vector(), out.post_state.vector()) - 1) < 1e-12


def test_dual_only_stream(rng):
    d, n = 3, 2
    src = entangled(d, 0, n, random_state(rng, d ** n))
    T = build_full_transform(d, 0, n)
    marg = marginal_staircase_distribution(exact_distribution(src))
    orc = transform_marginals(T, src.statevector())
    for g in set(marg) | set(orc):
        assert abs(marg.get(g, 0) - orc.get(g, 0)) < 1e-10
    assert all(g.entries[0] == 0 for g in marg)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(0, 3), st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_probabilities_sum_to_one(d, m, n, seed):
    if m + n == 0:
        return
    r = np.random.default_rng(seed)
    src = (product(d, m, n, [random_state(r, d) for _ in range(m + n)]) if seed % 2
           else entangled(d, m, n, random_state(r, d ** (m + n))))
    dist, dropped = exact_distribution(src, return_dropped=True)
    assert sum(p for p, _ in dist.values()) + dropped == pytest.approx(1.0, abs=1e-9)
    for path, (p, reg) in dist.items():
        assert path[-1] == reg.gamma
        assert reg.norm2() == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 3), st.integers(2, 4), st.integers(0, 1), st.integers(0, 2**32 - 1))
def test_permutation_invariance(d, m, n, seed):
    r = np.random.default_rng(seed)
    qs = [random_state(r, d) for _ in range(m + n)]
    base = marginal_staircase_distribution(exact_distribution(product(d, m, n, qs)))
    perm = list(r.permutation(m)) + list(range(m, m + n))
    other = marginal_staircase_distribution(exact_distribution(product(d, m, n, [qs[k] for k in perm])))
    assert total_variation(base, other) <= 1e-9


def test_key_count_bounded_by_dimension(rng):
    for d, m, n in ((2, 6, 0), (3, 3, 2), (4, 2, 2)):
        qs = [random_state(rng, d) for _ in range(m + n)]
        c = RunCounters()
        for i in range(30):
            out = sample_run(product(d, m, n, qs), seed=5, shot_index=i, counters=c)
            assert len(out.post_state.amplitudes) <= dim_q(out.staircase)
        assert 0 < c.max_dim_ratio <= 1.0


def test_shots_match_exact(rng):
    src = entangled(2, 3, 0, random_state(rng, 8))
    exact = marginal_staircase_distribution(exact_distribution(src))
    N = 20000
    hist = histogram(sample_shots(src, seed=1, shots=N))
    emp = {g: c / N for g, c in hist.items()}
    assert total_variation(emp, exact) <= 3 * np.sqrt(len(exact) / N)


def test_shot_determinism_and_independence(rng):
    qs = [random_state(rng, 3) for _ in range(4)]
    src = product(3, 3, 1, qs)
    a = sample_shots(src, seed=42, shots=50)
    b = [sample_run(src, 42, i) for i in range(50)]
    assert [o.path for o in a] == [o.path for o in b]
    assert all(np.allclose(x.post_state.vector(), y.post_state.vector()) for x, y in zip(a, b))
    c = sample_shots(src, seed=43, shots=50)
    assert [o.path for o in a] != [o.path for o in c]


def test_parallel_shots_identical(rng):
    src = product(2, 4, 0, [random_state(rng, 2) for _ in range(4)])
    serial = sample_shots(src, seed=9, shots=40)
    par = sample_shots(src, seed=9, shots=40, jobs=2)
    assert [o.path for o in serial] == [o.path for o in par]


def test_rank_mode_support():
    d = 4
    s = np.array([0.6, 0.8j, 0, 0])
    t = np.array([0, 0, 1, 1]) / np.sqrt(2)
    src = product(d, 2, 2, [s, s, t, t])
    for o in sample_shots(src, seed=0, shots=300, rank_bounds=(1, 1)):
        for k, g in enumerate(o.path):
            assert g in allowed_staircases(d, g.m, g.n, 1, 1)


def test_rank_mode_needs_product():
    with pytest.raises(InputError):
        sample_run(entangled(2, 2, 0, SINGLET), 0, rank_bounds=(1, 1))


def test_outcome_json(rng):
    out = sample_run(product(3, 2, 1, [random_state(rng, 3) for _ in range(3)]), seed=2)
    obj = json.loads(json.dumps(out.to_json()))
    assert obj["path"][-1] == list(out.staircase.entries)
    assert obj["seed"] == 2 and obj["shot_index"] == 0 and obj["probability"] is None


def test_source_json_round_trip(rng):
    for src in (product(2, 1, 1, [random_state(rng, 2), random_state(rng, 2)]),
                entangled(2, 2, 0, random_state(rng, 4))):
        back = QuditSource.from_json(json.loads(json.dumps(src.to_json())))
        assert np.allclose(back.statevector(), src.statevector())


def test_source_errors():
    with pytest.raises(InputError, match="m \\+ n"):
        QuditSource(2, 0, 0, "product", qudits=[])
    with pytest.raises(InputError, match="qudit vectors"):
        QuditSource(2, 1, 1, "product", qudits=[[1, 0]])
    with pytest.raises(InputError, match="normalized"):
        QuditSource(2, 1, 0, "product", qudits=[[1, 1]])
    with pytest.raises(InputError, match="length"):
        QuditSource(2, 2, 0, "entangled", amplitudes=[1, 0])
    with pytest.raises(InputError, match="'qudits'"):
        QuditSource.from_json({"d": 2, "m": 1, "n": 0, "mode": "product"})
    with pytest.raises(InputError, match="'n'"):
        QuditSource.from_json({"d": 2, "m": 1})
    with pytest.raises(InputError, match="amplitudes"):
        QuditSource.from_json({"d": 2, "m": 1, "n": 0, "amplitudes": [1, 0]})
    with pytest.raises(InputError):
        exact_distribution(Ensemble(np.ones(1), [entangled(2, 2, 0, SINGLET)]))


def test_dense_cap(monkeypatch):
    monkeypatch.setenv("SCHUR_CAP_DENSE", "16")
    with pytest.raises(CapExceeded):
        QuditSource(2, 5, 0, "entangled", amplitudes=np.eye(32)[0])


def test_branch_cap(monkeypatch, rng):
    monkeypatch.setenv("SCHUR_CAP_ENUM", "3")
    with pytest.raises(CapExceeded):
        exact_distribution(product(2, 5, 0, [random_state(rng, 2) for _ in range(5)]))

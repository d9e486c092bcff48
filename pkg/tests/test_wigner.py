import itertools
from fractions import Fraction
from math import factorial, sqrt

import numpy as np
import pytest

from mixedschur.combinatorics import enumerate_staircases, within_rank
from mixedschur.errors import InputError, InternalFault, RankBoundError
from mixedschur.wigner import (_magnitude, col_valid, rank_index_sets, reduced_wigner_matrix,
                               row_valid, t_cg, t_dcg)


def racah_cg(j1, m1, j2, m2, J, M):
    """<j1 m1; j2 m2 | J M> by Racah's formula (half-integers as Fractions)."""
    if m1 + m2 != M or abs(m1) > j1 or abs(m2) > j2 or abs(M) > J:
        return 0.0
    if not (abs(j1 - j2) <= J <= j1 + j2):
        return 0.0
    f = lambda x: factorial(int(x))
    pre = sqrt((2 * J + 1) * f(J + j1 - j2) * f(J - j1 + j2) * f(j1 + j2 - J) / f(j1 + j2 + J + 1))
    pre *= sqrt(f(J + M) * f(J - M) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2))
    s = 0.0
    for k in range(0, 100):
        args = [j1 + j2 - J - k, j1 - m1 - k, j2 + m2 - k, J - j2 + m1 + k, J - j1 - m2 + k]
        if any(a < 0 for a in args[:3]):
            break
        if any(a < 0 for a in args[3:]):
            continue
        s += (-1) ** k / (f(k) * np.prod([f(a) for a in args]))
    return pre * s


def rows_of_length(L, lo, hi):
    return [v for v in itertools.product(range(hi, lo - 1, -1), repeat=L)
            if all(v[k] >= v[k + 1] for k in range(L - 1))]


def contexts(L, max_boxes):
    seen = set()
    for tot in range(0, max_boxes + 1):
        for m in range(tot + 1):
            for g in enumerate_staircases(L, m, tot - m):
                seen.add(g.entries)
    return sorted(seen, reverse=True)


def test_level_one():
    assert t_cg(1, (3,), 1, 1, ()) == 1.0
    assert t_dcg(1, (-2,), 1, 1, ()) == 1.0
    M = reduced_wigner_matrix("cg", 1, (0,), ())
    assert M.entries.tolist() == [[1.0]]


def test_two_box_stage_is_one_over_root_two():
    # register (1,0) in its |1> pattern, qudit |0>: the two outcomes split evenly
    assert abs(t_cg(2, (1, 0), 1, 1, (1,)) - 1 / sqrt(2)) < 1e-15
    assert abs(abs(t_cg(2, (1, 0), 2, 1, (1,))) - 1 / sqrt(2)) < 1e-15


def test_su2_magnitudes_match_racah():
    half = Fraction(1, 2)
    checked = 0
    for m in range(0, 6):
        for g in enumerate_staircases(2, m, 0):
            a, b = g.entries
            j1 = Fraction(a - b, 2)
            for c in range(b, a + 1):
                m1 = c - Fraction(a + b, 2)
                for i in (1, 2):
                    gp = (a + 1, b) if i == 1 else (a, b + 1)
                    if gp[0] < gp[1]:
                        continue
                    J = Fraction(gp[0] - gp[1], 2)
                    for j, m2, nu in ((1, half, (c + 1,)), (2, -half, (c,))):
                        want = abs(racah_cg(j1, m1, half, m2, J, m1 + m2))
                        got = abs(t_cg(2, (a, b), i, j, nu))
                        if not (gp[0] >= nu[0] >= gp[1]):
                            assert got == 0.0
                            continue
                        assert abs(got - want) < 1e-10, (g.entries, c, i, j)
                        checked += 1
    assert checked > 50


@pytest.mark.parametrize("direction", ["cg", "dcg"])
def test_assembled_matrices_are_orthogonal(direction):
    worst = 0.0
    biggest = 0.0
    for L in range(2, 5):
        for g in contexts(L, 5):
            lo, hi = min(g) - 1, max(g) + 1
            for nu in rows_of_length(L - 1, lo, hi):
                rows = [i for i in range(1, L + 1) if row_valid(direction, g, i, nu)]
                if not rows:
                    continue
                M = reduced_wigner_matrix(direction, L, g, nu)
                worst = max(worst, np.max(np.abs(M.entries.T @ M.entries - np.eye(L))))
                biggest = max(biggest, np.max(np.abs(M.entries[M.defined])) if M.defined.any() else 0)
    assert worst <= 1e-10
    assert biggest <= 1 + 1e-12


def test_dual_two_by_two_from_one_box():
    for nu in [(1,), (0,), (-1,)]:
        rows = [i for i in (1, 2) if row_valid("dcg", (1, 0), i, nu)]
        if rows:
            M = reduced_wigner_matrix("dcg", 2, (1, 0), nu)
            assert M.entries.shape == (2, 2)
            assert np.max(np.abs(M.entries.T @ M.entries - np.eye(2))) < 1e-12


def test_branching_inconsistent_cells_vanish():
    # (0,0) + e_2 is not nonincreasing
    assert t_cg(2, (0, 0), 2, 2, (0,)) == 0.0
    assert t_dcg(2, (0, 0), 1, 2, (0,)) == 0.0
    # nu' = (2) does not interlace any one-box update of (0,0)
    assert t_cg(2, (0, 0), 1, 1, (2,)) == 0.0


def test_completion_is_deterministic_and_sign_fixed():
    M1 = reduced_wigner_matrix("cg", 3, (1, 0, 0), (1, 0))
    M2 = reduced_wigner_matrix("cg", 3, (1, 0, 0), (1, 0))
    assert np.array_equal(M1.entries, M2.entries)
    for c in range(3):
        if not M1.defined[:, c].any():
            col = M1.entries[:, c]
            first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
            assert first > 0


def test_rank_reduced_size_and_bit_identity():
    g, nu = (1, 0, 0, 0, 0, -1), (1, 0, 0, 0, 0)
    full = reduced_wigner_matrix("cg", 6, g, nu)
    red = reduced_wigner_matrix("cg", 6, g, nu, rank_bounds=(1, 1))
    assert full.entries.shape == (6, 6)
    assert red.entries.shape[0] <= 3
    for a, i in enumerate(red.row_labels):
        for b, j in enumerate(red.col_labels):
            if red.defined[a, b]:
                assert red.entries[a, b] == full.entries[i - 1, j - 1]


@pytest.mark.parametrize("direction", ["cg", "dcg"])
def test_rank_reduced_values_identical_everywhere(direction):
    for L in (3, 4, 5):
        for r, rd in ((1, 1), (1, 2), (2, 1)):
            for g in contexts(L, 4):
                if not within_rank(g, r, rd):
                    continue
                for nu in rows_of_length(L - 1, min(g) - 1, max(g) + 1):
                    if not within_rank(nu, r, rd):
                        continue
                    if not any(row_valid(direction, g, i, nu) for i in range(1, L + 1)):
                        continue
                    full = reduced_wigner_matrix(direction, L, g, nu)
                    red = reduced_wigner_matrix(direction, L, g, nu, rank_bounds=(r, rd))
                    assert red.size <= min(L, r + rd + 1)
                    assert np.max(np.abs(red.entries.T @ red.entries - np.eye(red.size))) < 1e-10
                    for a, i in enumerate(red.row_labels):
                        for b, j in enumerate(red.col_labels):
                            if red.defined[a, b]:
                                assert red.entries[a, b] == full.entries[i - 1, j - 1]
                    # every valid row lies inside the reduced row set
                    valid = {i for i in range(1, L + 1) if row_valid(direction, g, i, nu)}
                    assert valid <= set(red.row_labels)


def test_rows_outside_reduced_set_vanish():
    # r = r' = 1, d = 5: rows outside {1, 2} U {5} carry nothing for restricted labels
    L, r, rd = 5, 1, 1
    allowed_rows = set(range(1, r + 2)) | set(range(L - rd + 1, L + 1))
    for g in contexts(L, 4):
        if not within_rank(g, r, rd):
            continue
        for nu in rows_of_length(L - 1, min(g) - 1, max(g) + 1):
            if not within_rank(nu, r, rd):
                continue
            for i in range(1, L + 1):
                if i in allowed_rows:
                    continue
                for j in range(1, L + 1):
                    assert t_cg(L, g, i, j, nu) == 0.0


def test_rank_bound_violation_raises():
    with pytest.raises(RankBoundError):
        reduced_wigner_matrix("cg", 3, (1, 1, 0), (1, 0), rank_bounds=(1, 1))


def test_reduced_index_set_sizes():
    for L in range(1, 9):
        for r in range(1, L + 1):
            for rd in range(1, L + 1):
                for direction in ("cg", "dcg"):
                    rows, cols = rank_index_sets(direction, L, r, rd)
                    assert len(rows) == len(cols) == min(L, r + rd + 1)


def test_zero_denominator_is_a_fault():
    with pytest.raises(InternalFault):
        _magnitude([1, 2], [0, 3])


def test_bad_arguments():
    with pytest.raises(InputError):
        t_cg(2, (1, 0, 0), 1, 1, (1,))
    with pytest.raises(InputError):
        t_cg(2, (1, 0), 3, 1, (1,))
    with pytest.raises(InputError):
        reduced_wigner_matrix("sideways", 2, (1, 0), (1,))

"""Reduced Wigner coefficients and their level-wise rotation matrices.

Index conventions at level L (1-based, as in the closed forms):
  gamma   input staircase of length L (the register's level-L row)
  nu_out  already updated output row of length L-1
  i       row index: the output level-L row is gamma + e_i (CG) or gamma - e_i (dual)
  j       column index: nu_out = nu + e_j (CG) / nu - e_j (dual), j = L meaning nu_out = nu
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InputError, InternalFault, RankBoundError
from .combinatorics import within_rank

CG = "cg"
DUAL = "dcg"
DIRECTIONS = (CG, DUAL)

ORTHO_TOL = 1e-8


def normalize_direction(direction) -> str:
    key = str(direction).lower().replace("_", "").replace("-", "")
    if key in ("cg",):
        return CG
    if key in ("dcg", "dualcg", "dual"):
        return DUAL
    raise InputError(f"unknown direction {direction!r}; use 'cg' or 'dcg'")


def _sign(i, j) -> int:
    return 1 if i <= j else -1


def _nonincreasing(v) -> bool:
    return all(v[k] >= v[k + 1] for k in range(len(v) - 1))


def _interlaces(nu, g) -> bool:
    return all(g[k] >= nu[k] >= g[k + 1] for k in range(len(nu)))


def _bump(v, idx, delta) -> tuple:
    w = list(v)
    w[idx - 1] += delta
    return tuple(w)


def row_valid(direction, gamma: tuple, i: int, nu_out: tuple) -> bool:
    delta = 1 if direction == CG else -1
    gp = _bump(gamma, i, delta)
    return _nonincreasing(gp) and _interlaces(nu_out, gp)


def col_valid(direction, gamma: tuple, j: int, nu_out: tuple) -> bool:
    L = len(gamma)
    if j == L:
        nu = nu_out
    else:
        nu = _bump(nu_out, j, -1 if direction == CG else 1)
        if not _nonincreasing(nu):
            return False
    return _interlaces(nu, gamma)


def branching_consistent(direction, gamma, i, j, nu_out) -> bool:
    return row_valid(direction, gamma, i, nu_out) and col_valid(direction, gamma, j, nu_out)


def _factor_lists(direction, gamma, i, j, nu_out):
    L = len(gamma)
    l = [gamma[k] - (k + 1) for k in range(L)]          # l[k-1] = gamma_k - k
    lp = [nu_out[k] - (k + 1) for k in range(L - 1)]    # lp[k-1] = nu'_k - k
    li = l[i - 1]
    others = [l[k] for k in range(L) if k != i - 1]
    if direction == CG:
        if j == L:
            nums = [x - li - 1 for x in lp]
            dens = [x - li for x in others]
        else:
            lj = lp[j - 1]
            rest = [lp[k] for k in range(L - 1) if k != j - 1]
            nums = [x - li - 1 for x in rest] + [x - lj + 1 for x in others]
            dens = [x - lj for x in rest] + [x - li for x in others]
    else:
        if j == L:
            nums = [x - li for x in lp]
            dens = [x - li for x in others]
        else:
            lj = lp[j - 1]
            rest = [lp[k] for k in range(L - 1) if k != j - 1]
            nums = [x - li for x in rest] + [x - lj for x in others]
            dens = [x - lj for x in rest] + [x - li for x in others]
    return nums, dens


def _magnitude(nums, dens):
    """sqrt|prod(nums)/prod(dens)| after cancelling equal factors; also return #factors left."""
    if any(x == 0 for x in nums):
        return 0.0, 0
    if any(x == 0 for x in dens):
        raise InternalFault("zero denominator in a branching-consistent reduced Wigner coefficient")
    cn = Counter(abs(x) for x in nums)
    cd = Counter(abs(x) for x in dens)
    common = cn & cd
    cn -= common
    cd -= common
    top = sorted(cn.elements())
    bot = sorted(cd.elements())
    val = 1.0
    # interleave so intermediate products stay near 1
    for a, b in zip(top, bot):
        val *= a / b
    for a in top[len(bot):]:
        val *= a
    for b in bot[len(top):]:
        val /= b
    return math.sqrt(val), len(top) + len(bot)


@lru_cache(maxsize=None)
def _coefficient(direction, gamma: tuple, i: int, j: int, nu_out: tuple):
    L = len(gamma)
    if L == 1:
        return (1.0, 0) if (i == 1 and j == 1) else (0.0, 0)
    if not branching_consistent(direction, gamma, i, j, nu_out):
        return 0.0, 0
    nums, dens = _factor_lists(direction, gamma, i, j, nu_out)
    mag, n_factors = _magnitude(nums, dens)
    sgn = 1 if j == L else _sign(i, j)
    return sgn * mag, n_factors


def _check_args(level, gamma, i, j, nu_out):
    gamma = tuple(int(x) for x in gamma)
    nu_out = tuple(int(x) for x in nu_out)
    if len(gamma) != level or len(nu_out) != level - 1:
        raise InputError(f"level {level} needs rows of lengths {level} and {level - 1}")
    if not (1 <= i <= level and 1 <= j <= level):
        raise InputError(f"indices (i, j) = ({i}, {j}) out of range for level {level}")
    return gamma, nu_out


def t_cg(level: int, gamma, i: int, j: int, nu_out) -> float:
    gamma, nu_out = _check_args(level, gamma, i, j, nu_out)
    return _coefficient(CG, gamma, i, j, nu_out)[0]


def t_dcg(level: int, gamma, i: int, j: int, nu_out) -> float:
    gamma, nu_out = _check_args(level, gamma, i, j, nu_out)
    return _coefficient(DUAL, gamma, i, j, nu_out)[0]


def coefficient_factor_count(direction, gamma, i, j, nu_out) -> int:
    """Number of factors that survive cancellation for one cell."""
    return _coefficient(normalize_direction(direction), tuple(gamma), i, j, tuple(nu_out))[1]


def rank_index_sets(direction, level: int, r: int, r_dual: int):
    """Row and column labels that can carry weight when every row obeys the rank bounds."""
    L = level
    low = set(range(1, r + 1))
    if direction == CG:
        rows = low | {r + 1} | set(range(L - r_dual + 1, L + 1))
        cols = low | set(range(L - r_dual, L + 1))
    else:
        rows = low | set(range(L - r_dual, L + 1))
        cols = low | set(range(L - r_dual, L + 1))
    rows = tuple(sorted(x for x in rows if 1 <= x <= L))
    cols = tuple(sorted(x for x in cols if 1 <= x <= L))
    return rows, cols


@dataclass(frozen=True)
class ReducedWignerMatrix:
    direction: str
    level: int
    top: tuple
    lower_out: tuple
    entries: np.ndarray
    row_labels: tuple
    col_labels: tuple
    defined: np.ndarray  # boolean mask of cells filled from the closed forms

    @property
    def size(self) -> int:
        return len(self.row_labels)

    def column(self, j: int):
        """Nonzero defined (row label, value) pairs of column j."""
        c = self.col_labels.index(j)
        return [(self.row_labels[a], float(self.entries[a, c]))
                for a in range(len(self.row_labels))
                if self.defined[a, c] and self.entries[a, c] != 0.0]

    def to_json(self) -> dict:
        return {
            "direction": self.direction,
            "level": self.level,
            "gamma": list(self.top),
            "nu": list(self.lower_out),
            "row_labels": list(self.row_labels),
            "col_labels": list(self.col_labels),
            "entries": [float(x) for x in self.entries.ravel()],
            "defined": [bool(x) for x in self.defined.ravel()],
        }


def _complete(mat: np.ndarray, defined_cols: list) -> np.ndarray:
    """Fill non-defined columns by Gram-Schmidt against identity vectors in index order."""
    s = mat.shape[0]
    basis = [mat[:, c] for c in defined_cols]
    out = mat.copy()
    for c in range(s):
        if c in defined_cols:
            continue
        for t in range(s):
            v = np.zeros(s)
            v[t] = 1.0
            for b in basis:
                v -= b * (b @ v)
            for b in basis:  # second pass for stability
                v -= b * (b @ v)
            nrm = np.linalg.norm(v)
            if nrm > 1e-6:
                v /= nrm
                first = np.flatnonzero(np.abs(v) > 1e-12)[0]
                if v[first] < 0:
                    v = -v
                out[:, c] = v
                basis.append(v)
                break
        else:
            raise InternalFault("Gram-Schmidt completion ran out of candidate vectors")
    return out


@lru_cache(maxsize=None)
def _assemble(direction, gamma: tuple, nu_out: tuple, bounds):
    L = len(gamma)
    if bounds is None:
        rows = cols = tuple(range(1, L + 1))
    else:
        rows, cols = rank_index_sets(direction, L, *bounds)
    s = len(rows)
    if len(cols) != s:
        raise InternalFault("rank index sets have different sizes")
    mat = np.zeros((s, s))
    defined = np.zeros((s, s), dtype=bool)
    good_rows = [a for a, i in enumerate(rows) if L == 1 or row_valid(direction, gamma, i, nu_out)]
    good_cols = [b for b, j in enumerate(cols) if L == 1 or col_valid(direction, gamma, j, nu_out)]
    for a in good_rows:
        for b in good_cols:
            mat[a, b] = _coefficient(direction, gamma, rows[a], cols[b], nu_out)[0]
            defined[a, b] = True
    if good_cols:
        block = mat[:, good_cols]
        err = np.max(np.abs(block.T @ block - np.eye(len(good_cols))))
        if err > ORTHO_TOL:
            raise InternalFault(
                f"defined columns not orthonormal (err {err:.3g}) for {direction} level {L} "
                f"gamma={gamma} nu'={nu_out}")
    mat = _complete(mat, good_cols)
    mat.setflags(write=False)
    defined.setflags(write=False)
    return ReducedWignerMatrix(direction, L, gamma, nu_out, mat, rows, cols, defined)


def reduced_wigner_matrix(direction, level: int, gamma, nu_out, rank_bounds=None) -> ReducedWignerMatrix:
    direction = normalize_direction(direction)
    gamma = tuple(int(x) for x in gamma)
    nu_out = tuple(int(x) for x in nu_out)
    if len(gamma) != level or len(nu_out) != level - 1:
        raise InputError(f"level {level} needs rows of lengths {level} and {level - 1}")
    if not _nonincreasing(gamma) or not _nonincreasing(nu_out):
        raise InputError("rows must be nonincreasing")
    if rank_bounds is not None:
        r, rd = (int(x) for x in rank_bounds)
        if r < 1 or rd < 1:
            raise InputError("rank bounds must be >= 1")
        if not (within_rank(gamma, r, rd) and within_rank(nu_out, r, rd)):
            raise RankBoundError(f"rows {gamma}, {nu_out} exceed rank bounds ({r}, {rd})")
        rank_bounds = (r, rd)
    return _assemble(direction, gamma, nu_out, rank_bounds)

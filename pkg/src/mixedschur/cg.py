"""(Dual) Clebsch-Gordan transform on a GT-encoded register.

The transform is applied level by level (levels 1..d).  While it runs, every
term carries an integer tag next to its pattern:
  tag > level   the fresh qudit index, not yet absorbed
  tag == level  the qudit enters at this level (column j = level)
  tag < level   the row touched at the previous level (column j = tag)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .combinatorics import (Staircase, add_box, dim_q, gt_patterns, remove_box,
                            within_rank)
from .errors import CapExceeded, InputError, InternalFault, RankBoundError
from .limits import dense_cap
from .wigner import CG, DUAL, normalize_direction, reduced_wigner_matrix

PRUNE = 1e-14
PRUNED_MASS_MAX = 1e-10
NORM_TOL = 1e-9
LEAK_TOL = 1e-8


@dataclass
class SchurRegister:
    gamma: Staircase
    amplitudes: dict  # GT pattern -> complex (or ndarray in entangled mode)

    def __post_init__(self):
        top = self.gamma.entries
        for pat in self.amplitudes:
            if tuple(pat[-1]) != top or len(pat) != len(top):
                raise InputError(f"pattern {pat} does not have top row {top}")

    def norm2(self) -> float:
        return float(sum(_norm2(a) for a in self.amplitudes.values()))

    def normalized(self) -> "SchurRegister":
        nrm = np.sqrt(self.norm2())
        if nrm == 0:
            raise InputError("cannot normalize an empty register")
        return SchurRegister(self.gamma, {p: a / nrm for p, a in self.amplitudes.items()})

    def vector(self) -> np.ndarray:
        """Dense amplitude vector in canonical pattern order."""
        pats = gt_patterns(self.gamma.entries)
        return np.array([complex(self.amplitudes.get(p, 0.0)) for p in pats])

    def to_json(self) -> dict:
        items = []
        for p in gt_patterns(self.gamma.entries):
            if p in self.amplitudes:
                a = complex(self.amplitudes[p])
                items.append({"pattern": [list(lev) for lev in p], "amplitude": [a.real, a.imag]})
        return {"gamma": self.gamma.to_json(), "amplitudes": items}

    @classmethod
    def from_json(cls, obj) -> "SchurRegister":
        try:
            gamma = Staircase.from_json(obj["gamma"])
            amps = {}
            for item in obj["amplitudes"]:
                pat = tuple(tuple(int(x) for x in lev) for lev in item["pattern"])
                re, im = item["amplitude"]
                amps[pat] = complex(re, im)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed register object: {exc}") from None
        return cls(gamma, amps)


@dataclass
class CGOutput:
    blocks: dict  # Staircase -> (SchurRegister, weight)
    pruned_mass: float = 0.0

    def weights(self) -> dict:
        return {g: w for g, (_, w) in self.blocks.items()}


def _norm2(a) -> float:
    if isinstance(a, np.ndarray):
        return float(np.vdot(a, a).real)
    return a.real * a.real + a.imag * a.imag


def trivial_register(d: int) -> SchurRegister:
    z = (0,) * d
    pat = tuple(z[:i] for i in range(1, d + 1))
    return SchurRegister(Staircase(z, 0, 0), {pat: 1.0 + 0j})


@lru_cache(maxsize=None)
def _column_moves(direction, level, g, nu_out, j, bounds):
    mat = reduced_wigner_matrix(direction, level, g, nu_out, bounds)
    if j not in mat.col_labels:
        raise RankBoundError(f"column {j} outside the reduced index set at level {level}")
    delta = 1 if direction == CG else -1
    moves = []
    for i, coef in mat.column(j):
        row = list(g)
        row[i - 1] += delta
        moves.append((i, coef, tuple(row)))
    return tuple(moves), mat.size


def cascade(terms: dict, direction: str, d: int, rank_bounds=None, counters=None):
    """Run the level cascade on {(pattern, qudit_index): amplitude}.

    Returns ({pattern: amplitude}, pruned_mass).
    """
    direction = normalize_direction(direction)
    state = dict(terms)
    pruned = 0.0
    for level in range(1, d + 1):
        new = {}
        lookups = 0
        size = level
        for (pat, tag), amp in state.items():
            if tag > level:
                new[(pat, tag)] = new[(pat, tag)] + amp if (pat, tag) in new else amp
                continue
            g = pat[level - 1]
            nu_out = pat[level - 2] if level > 1 else ()
            moves, size = _column_moves(direction, level, g, nu_out, tag, rank_bounds)
            lookups += len(moves)
            head, tail = pat[:level - 1], pat[level:]
            for i, coef, row in moves:
                key = (head + (row,) + tail, i)
                contrib = coef * amp
                new[key] = new[key] + contrib if key in new else contrib
        state = {}
        for key, amp in new.items():
            w = _norm2(amp)
            if w < PRUNE * PRUNE:
                pruned += w
            else:
                state[key] = amp
        if rank_bounds is not None:
            r, rd = rank_bounds
            for (pat, tag) in state:
                if tag <= level and not within_rank(pat[level - 1], r, rd):
                    raise RankBoundError(
                        f"level-{level} row {pat[level - 1]} exceeds rank bounds ({r}, {rd})")
        if counters is not None:
            if rank_bounds is not None:
                size = min(level, rank_bounds[0] + rank_bounds[1] + 1)
            counters.record_level(size, lookups)
    if counters is not None:
        counters.record_application(len(state))
    out = {}
    for (pat, _tag), amp in state.items():
        out[pat] = out[pat] + amp if pat in out else amp
    return out, pruned


def _check_rank_register(register: SchurRegister, rank_bounds):
    r, rd = rank_bounds
    for pat in register.amplitudes:
        for row in pat:
            if not within_rank(row, r, rd):
                raise RankBoundError(f"register row {row} exceeds rank bounds ({r}, {rd})")


def normalize_rank_bounds(rank_bounds, d):
    if rank_bounds is None:
        return None
    r, rd = (int(x) for x in rank_bounds)
    if not (1 <= r <= d and 1 <= rd <= d):
        raise InputError("rank bounds must satisfy 1 <= r, r' <= d")
    return (r, rd)


def branching_set(gamma: Staircase, direction) -> tuple:
    return add_box(gamma) if normalize_direction(direction) == CG else remove_box(gamma)


def split_blocks(gamma: Staircase, direction, amps: dict) -> dict:
    """Group output amplitudes by their new top row."""
    branches = branching_set(gamma, direction)
    lookup = {b.entries: b for b in branches}
    grouped = {b: {} for b in branches}
    for pat, amp in amps.items():
        top = pat[-1]
        if top not in lookup:
            raise InternalFault(f"output top row {top} is not a branch of {gamma.entries}")
        grouped[lookup[top]][pat] = amp
    return grouped


def cg_apply(register: SchurRegister, qudit_amplitudes, direction, rank_bounds=None,
             counters=None) -> CGOutput:
    direction = normalize_direction(direction)
    d = register.gamma.d
    q = np.asarray(qudit_amplitudes, dtype=complex).ravel()
    if q.shape != (d,):
        raise InputError(f"qudit vector must have length {d}")
    if abs(np.vdot(q, q).real - 1) > NORM_TOL:
        raise InputError("qudit vector is not normalized")
    total = register.norm2()
    if abs(total - 1) > NORM_TOL:
        raise InputError(f"register is not normalized (norm^2 = {total})")
    rank_bounds = normalize_rank_bounds(rank_bounds, d)
    if rank_bounds is not None:
        _check_rank_register(register, rank_bounds)
    terms = {}
    for pat, amp in register.amplitudes.items():
        for k in range(d):
            if q[k] != 0:
                terms[(pat, k + 1)] = complex(amp) * q[k]
    amps, pruned = cascade(terms, direction, d, rank_bounds, counters)
    if pruned > PRUNED_MASS_MAX:
        raise InternalFault(f"pruned mass {pruned:.3g} exceeds {PRUNED_MASS_MAX}")
    blocks = {}
    weight_total = 0.0
    for g, sub in split_blocks(register.gamma, direction, amps).items():
        w = float(sum(_norm2(a) for a in sub.values()))
        weight_total += w
        blocks[g] = (SchurRegister(g, sub), w)
    if abs(weight_total - 1) > LEAK_TOL:
        raise InternalFault(f"CG transform leaked weight: total {weight_total}")
    return CGOutput(blocks, pruned)


@dataclass
class CGMatrix:
    gamma: Staircase
    direction: str
    matrix: np.ndarray
    row_labels: list  # (Staircase, pattern)
    col_labels: list  # (pattern, qudit index 1..d)
    blocks: dict = field(default_factory=dict)  # Staircase -> slice of rows

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma.to_json(),
            "direction": self.direction,
            "row_labels": [{"gamma": g.to_json(), "pattern": [list(x) for x in p]}
                           for g, p in self.row_labels],
            "col_labels": [{"pattern": [list(x) for x in p], "qudit": k}
                           for p, k in self.col_labels],
            "entries": [float(x) for x in self.matrix.ravel()],
        }


@lru_cache(maxsize=None)
def _cg_matrix_cached(gamma: Staircase, direction: str) -> CGMatrix:
    d = gamma.d
    pats = gt_patterns(gamma.entries)
    cols = [(p, k) for p in pats for k in range(1, d + 1)]
    branches = branching_set(gamma, direction)
    rows = []
    blocks = {}
    for b in branches:
        start = len(rows)
        rows.extend((b, p) for p in gt_patterns(b.entries))
        blocks[b] = slice(start, len(rows))
    if len(rows) != len(cols):
        raise InternalFault(f"dimension mismatch {len(rows)} vs {len(cols)} for {gamma}")
    row_index = {(b.entries, p): a for a, (b, p) in enumerate(rows)}
    mat = np.zeros((len(rows), len(cols)))
    for c, (p, k) in enumerate(cols):
        amps, _ = cascade({(p, k): 1.0}, direction, d)
        for pat, amp in amps.items():
            mat[row_index[(pat[-1], pat)], c] = amp
    mat.setflags(write=False)
    return CGMatrix(gamma, direction, mat, rows, cols, blocks)


def cg_matrix(gamma: Staircase, direction, cap: int | None = None) -> CGMatrix:
    direction = normalize_direction(direction)
    cap = dense_cap() if cap is None else cap
    size = dim_q(gamma) * gamma.d
    if size > cap:
        raise CapExceeded(f"cg_matrix for {gamma.entries} would be {size}x{size} (> cap {cap})")
    return _cg_matrix_cached(gamma, direction)


def _min_context(entries) -> Staircase:
    pos = sum(x for x in entries if x > 0)
    neg = -sum(x for x in entries if x < 0)
    return Staircase(tuple(entries), pos, neg)


def _check_unitary(U, tol=1e-10):
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InputError("U must be a square matrix")
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > tol:
        raise InputError("U is not unitary")
    return U


def irrep_action(gamma, U) -> np.ndarray:
    """Representation matrix of U on the GT basis of the irrep labelled gamma."""
    U = _check_unitary(U)
    entries = gamma.entries if isinstance(gamma, Staircase) else tuple(gamma)
    if len(entries) != U.shape[0]:
        raise InputError("U size does not match the staircase length")
    memo = {}
    Ubar = U.conj()

    def rep(ent):
        if ent in memo:
            return memo[ent]
        if all(x == 0 for x in ent):
            out = np.ones((1, 1), dtype=complex)
        else:
            negs = [k for k, x in enumerate(ent) if x < 0]
            if negs:
                k = negs[0]
                direction, fresh = DUAL, Ubar
                prev = list(ent)
                prev[k] += 1
            else:
                k = max(k for k, x in enumerate(ent) if x > 0)
                direction, fresh = CG, U
                prev = list(ent)
                prev[k] -= 1
            prev = tuple(prev)
            M = cg_matrix(_min_context(prev), direction)
            big = M.matrix @ np.kron(rep(prev), fresh) @ M.matrix.T
            target = [b for b in M.blocks if b.entries == ent][0]
            sl = M.blocks[target]
            out = big[sl, sl]
        memo[ent] = out
        return out

    return rep(entries)

"""Brute-force ground truth for tiny instances.

Three independent routes to the isotypic projectors:
  transform   dense Schur transform assembled from cg_matrix blocks
  characters  symmetric-group characters (Murnaghan-Nakayama) and permutation matrices (n = 0)
  haar        Monte-Carlo over Haar unitaries weighted by Weyl characters
The characters and haar routes never touch the CG code.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .combinatorics import (Staircase, dim_q, enumerate_staircases, gt_patterns, _entries)
from .errors import CapExceeded, InputError, InternalFault
from .limits import dense_cap


@dataclass
class FullTransform:
    d: int
    m: int
    n: int
    matrix: np.ndarray
    row_labels: list  # (path tuple of Staircase, GT pattern)

    def rows_for(self, gamma: Staircase, path=None) -> np.ndarray:
        return np.array([a for a, (p, _q) in enumerate(self.row_labels)
                         if p[-1] == gamma and (path is None or p == path)], dtype=int)

    def paths(self) -> list:
        seen = []
        for p, _ in self.row_labels:
            if not seen or seen[-1] != p:
                seen.append(p)
        return seen


@dataclass
class ProjectorEstimate:
    gamma: Staircase
    matrix: np.ndarray
    method: str
    sample_count: int | None = None

    def rank(self, tol=1e-6) -> int:
        return int(np.sum(np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2) > 0.5))

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def idempotency_residual(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix - self.matrix)))


def _check_dense(d, m, n):
    if m < 0 or n < 0 or m + n < 1:
        raise InputError("need m, n >= 0 and m + n >= 1")
    size = d ** (m + n)
    if size > dense_cap():
        raise CapExceeded(f"dense dimension {size} exceeds cap {dense_cap()}")
    return size


def build_full_transform(d: int, m: int, n: int) -> FullTransform:
    """U_Sch^{m,n} from iterated CG blocks; rows sorted by (endpoint, path, pattern), descending."""
    from .cg import cg_matrix, trivial_register

    _check_dense(d, m, n)
    triv = trivial_register(d)
    labels = [((), next(iter(triv.amplitudes)))]
    gammas = [triv.gamma]
    mat = np.ones((1, 1), dtype=complex)
    for k in range(m + n):
        direction = "cg" if k < m else "dcg"
        new_labels, new_rows = [], []
        # group current rows by path
        groups = {}
        for a, (path, pat) in enumerate(labels):
            groups.setdefault(path, []).append(a)
        for path, rows in groups.items():
            g = path[-1] if path else triv.gamma
            M = cg_matrix(g, direction)
            pats = gt_patterns(g.entries)
            order = {p: a for a, p in zip(rows, [labels[a][1] for a in rows])}
            idx = [order[p] for p in pats]
            block = M.matrix @ np.kron(mat[idx, :], np.eye(d))
            for b, sl in M.blocks.items():
                for off, (bb, pat) in enumerate(M.row_labels[sl]):
                    new_labels.append((path + (b,), pat))
                    new_rows.append(block[sl.start + off])
        labels = new_labels
        mat = np.array(new_rows)
    order = sorted(range(len(labels)),
                   key=lambda a: (labels[a][0][-1].entries, tuple(s.entries for s in labels[a][0]),
                                  labels[a][1]), reverse=True)
    return FullTransform(d, m, n, mat[order], [labels[a] for a in order])


def transformed_state(T: FullTransform, psi) -> np.ndarray:
    return T.matrix @ np.asarray(psi, dtype=complex)


def transform_projector(T: FullTransform, gamma: Staircase, path=None) -> ProjectorEstimate:
    rows = T.rows_for(gamma, path)
    V = T.matrix[rows]
    return ProjectorEstimate(gamma, V.conj().T @ V, "transform")


def transform_marginals(T: FullTransform, psi) -> dict:
    phi = transformed_state(T, psi)
    out = {}
    for a, (path, _pat) in enumerate(T.row_labels):
        out[path[-1]] = out.get(path[-1], 0.0) + abs(phi[a]) ** 2
    return out


def conditional_states(T: FullTransform, psi) -> dict:
    """{path: (probability, normalized vector over the endpoint's GT patterns)}."""
    phi = transformed_state(T, psi)
    out = {}
    for path in T.paths():
        rows = T.rows_for(path[-1], path)
        pats = [T.row_labels[a][1] for a in rows]
        ref = gt_patterns(path[-1].entries)
        pos = {p: a for p, a in zip(pats, rows)}
        v = np.array([phi[pos[p]] for p in ref])
        w = float(np.vdot(v, v).real)
        out[path] = (w, v / np.sqrt(w) if w > 0 else v)
    return out


# ---------------------------------------------------------------- characters

def _beta(lam, length):
    return [lam[i] + (length - 1 - i) if i < len(lam) else (length - 1 - i) for i in range(length)]


@lru_cache(maxsize=None)
def mn_character(lam: tuple, cycle_type: tuple) -> int:
    """Symmetric-group character by the Murnaghan-Nakayama rule (bead moves on a beta set)."""
    lam = tuple(x for x in lam if x > 0)
    cycle_type = tuple(sorted((c for c in cycle_type if c > 0), reverse=True))
    if sum(lam) != sum(cycle_type):
        raise InputError(f"partition {lam} and cycle type {cycle_type} have different sizes")
    if not cycle_type:
        return 1
    k, rest = cycle_type[0], cycle_type[1:]
    length = len(lam)
    beta = _beta(lam, length)
    bset = set(beta)
    total = 0
    for b in beta:
        nb = b - k
        if nb < 0 or nb in bset:
            continue
        sign = (-1) ** sum(1 for x in beta if nb < x < b)
        new_beta = sorted((bset - {b}) | {nb}, reverse=True)
        new_lam = tuple(new_beta[i] - (length - 1 - i) for i in range(length))
        total += sign * mn_character(new_lam, rest)
    return total


def cycle_type(perm) -> tuple:
    seen = [False] * len(perm)
    out = []
    for s in range(len(perm)):
        if seen[s]:
            continue
        c, t = 0, s
        while not seen[t]:
            seen[t] = True
            t = perm[t]
            c += 1
        out.append(c)
    return tuple(sorted(out, reverse=True))


def permutation_indices(perm, d: int) -> np.ndarray:
    """Index map of the operator sending tensor factor a to position perm[a]."""
    m = len(perm)
    shape = (d,) * m
    grid = np.indices(shape).reshape(m, -1)
    target = np.empty_like(grid)
    for a in range(m):
        target[perm[a]] = grid[a]
    return np.ravel_multi_index(tuple(target), shape)


def sn_isotypic_projector(lam, d: int, m: int) -> ProjectorEstimate:
    ent = _entries(lam)
    if any(x < 0 for x in ent) or any(ent[k] < ent[k + 1] for k in range(len(ent) - 1)):
        raise InputError(f"{ent} is not a partition")
    if sum(ent) != m:
        raise InputError(f"partition {ent} does not have size m = {m}")
    size = _check_dense(d, m, 0)
    parts = tuple(x for x in ent if x > 0)
    dim = mn_character(parts, (1,) * m)
    P = np.zeros((size, size))
    cols = np.arange(size)
    for perm in itertools.permutations(range(m)):
        chi = mn_character(parts, cycle_type(perm))
        if chi:
            P[permutation_indices(perm, d), cols] += chi
    P *= dim / math.factorial(m)
    gamma = Staircase(parts + (0,) * (d - len(parts)), m, 0) if len(parts) <= d else None
    return ProjectorEstimate(gamma, P.astype(complex), "characters")


# ---------------------------------------------------------------- haar route

def haar_unitary(d: int, rng: np.random.Generator, special: bool = False) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    q = q * (diag / np.abs(diag))
    if special:
        q = q / np.linalg.det(q) ** (1.0 / d)
    return q


def weyl_character(gamma, U=None, eigenvalues=None) -> complex:
    """Character of the U(d) irrep gamma at U via the Schur bialternant."""
    ent = _entries(gamma)
    d = len(ent)
    z = np.linalg.eigvals(U) if eigenvalues is None else np.asarray(eigenvalues, dtype=complex)
    shift = -ent[-1]
    lam = [x + shift for x in ent]
    num = np.array([[zj ** (lam[i] + d - 1 - i) for zj in z] for i in range(d)])
    den = np.array([[zj ** (d - 1 - i) for zj in z] for i in range(d)])
    val = np.linalg.det(num) / np.linalg.det(den)
    return val / np.prod(z) ** shift


def tensor_action(U, m: int, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    Ub = U.conj()
    for _ in range(m):
        out = np.kron(out, U)
    for _ in range(n):
        out = np.kron(out, Ub)
    return out


def haar_projector_estimate(gamma: Staircase, d: int, m: int, n: int, samples: int,
                            seed: int = 0, gap: float = 1e-6, max_retries: int = 100) -> ProjectorEstimate:
    if samples < 1000:
        raise InputError("haar_projector_estimate needs samples >= 1000")
    if gamma.d != d or gamma.m != m or gamma.n != n:
        raise InputError("staircase context does not match (d, m, n)")
    _check_dense(d, m, n)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    acc = np.zeros((d ** (m + n),) * 2, dtype=complex)
    for _ in range(samples):
        for _try in range(max_retries):
            U = haar_unitary(d, rng)
            z = np.linalg.eigvals(U)
            if d == 1 or min(abs(z[a] - z[b]) for a in range(d) for b in range(a + 1, d)) > gap:
                break
        else:
            raise InternalFault("could not draw a unitary with well-separated eigenvalues")
        chi = weyl_character(gamma, eigenvalues=z)
        acc += np.conj(chi) * tensor_action(U, m, n)
    P = dim_q(gamma) * acc / samples
    P = (P + P.conj().T) / 2
    return ProjectorEstimate(gamma, P, "haar", samples)


# ---------------------------------------------------------------- walled Brauer

def walled_brauer_generator_action(generator, d: int, m: int, n: int) -> np.ndarray:
    """Matrix of a walled Brauer generator on (C^d)^{m} x (C^d*)^{n}.

    generator: "id", ("swap", a) exchanging factors a and a+1 (1-based, both on one
    side of the wall), or "contract" for the cup-cap between factors m and m+1.
    """
    size = _check_dense(d, m, n)
    k = m + n
    if generator in ("id", "identity", ("id",)):
        return np.eye(size)
    if generator in ("contract", ("contract",), "e"):
        if m < 1 or n < 1:
            raise InputError("the contraction needs m >= 1 and n >= 1")
        shape = (d,) * k
        M = np.zeros((size, size))
        for idx in itertools.product(range(d), repeat=k):
            if idx[m - 1] != idx[m]:
                continue
            for c in range(d):
                out = list(idx)
                out[m - 1] = out[m] = c
                M[np.ravel_multi_index(out, shape), np.ravel_multi_index(idx, shape)] = 1.0
        return M
    if isinstance(generator, (tuple, list)) and len(generator) == 2 and generator[0] == "swap":
        a = int(generator[1])
        ok = (1 <= a < m) or (m < a < k)
        if not ok:
            raise InputError(f"swap ({a} {a + 1}) does not stay on one side of the wall")
        perm = list(range(k))
        perm[a - 1], perm[a] = a, a - 1
        P = np.zeros((size, size))
        P[permutation_indices(perm, d), np.arange(size)] = 1.0
        return P
    raise InputError(f"invalid walled Brauer generator {generator!r}")


def walled_brauer_generators(m: int, n: int) -> list:
    gens = [("swap", a) for a in range(1, m)] + [("swap", a) for a in range(m + 1, m + n)]
    if m >= 1 and n >= 1:
        gens.append("contract")
    return gens


# ---------------------------------------------------------------- reports

def verify_intertwiner(gamma: Staircase, direction, trials: int = 20, tol: float = 1e-8,
                       seed: int = 0) -> dict:
    from .cg import cg_matrix, irrep_action
    M = cg_matrix(gamma, direction)
    d = gamma.d
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    unit = float(np.max(np.abs(M.matrix.T @ M.matrix - np.eye(M.matrix.shape[0]))))
    mask = np.ones(M.matrix.shape, dtype=bool)
    for sl in M.blocks.values():
        mask[sl, sl] = False
    worst = 0.0
    for _ in range(trials):
        U = haar_unitary(d, rng, special=True)
        fresh = U if M.direction == "cg" else U.conj()
        big = M.matrix @ np.kron(irrep_action(gamma, U), fresh) @ M.matrix.T
        if mask.any():
            worst = max(worst, float(np.max(np.abs(big[mask]))))
    return {"gamma": gamma.to_json(), "direction": M.direction, "trials": trials,
            "unitarity_residual": unit, "max_offblock_residual": worst,
            "pass": bool(unit <= tol and worst <= tol)}


def fidelity(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


def compare_sampler_oracle(source, tol: float = 1e-8, transform: FullTransform | None = None) -> dict:
    from .sampler import exact_distribution, marginal_staircase_distribution
    psi = source.statevector()
    T = transform or build_full_transform(source.d, source.m, source.n)
    dist = exact_distribution(source)
    samp = marginal_staircase_distribution(dist)
    orc = transform_marginals(T, psi)
    keys = set(samp) | set(orc)
    dev = max(abs(samp.get(g, 0.0) - orc.get(g, 0.0)) for g in keys)
    cond = conditional_states(T, psi)
    min_fid = 1.0
    for path, (p, reg) in dist.items():
        w, v = cond[path]
        if abs(w - p) > dev:
            dev = max(dev, abs(w - p))
        min_fid = min(min_fid, fidelity(v, reg.vector()))
    out = {"d": source.d, "m": source.m, "n": source.n,
           "max_probability_deviation": float(dev), "min_post_state_fidelity": float(min_fid),
           "paths": len(dist)}
    if source.n == 0 and source.m <= 6:
        sn_dev = 0.0
        for g in enumerate_staircases(source.d, source.m, 0):
            lam = tuple(x for x in g.entries if x > 0)
            P = sn_isotypic_projector(lam, source.d, source.m).matrix
            sn_dev = max(sn_dev, abs(float(np.vdot(psi, P @ psi).real) - samp.get(g, 0.0)))
        out["max_probability_deviation_characters"] = sn_dev
        dev = max(dev, sn_dev)
    out["pass"] = bool(dev <= tol and min_fid >= 1 - tol)
    return out

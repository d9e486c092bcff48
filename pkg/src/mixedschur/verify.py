"""Invariant suite behind `schur verify --d D --m M --n N`."""
from __future__ import annotations

import numpy as np

from .combinatorics import dim_p, dim_q, enumerate_staircases
from .oracle import (build_full_transform, compare_sampler_oracle, haar_unitary,
                     sn_isotypic_projector, tensor_action, transform_projector,
                     verify_intertwiner, walled_brauer_generator_action, walled_brauer_generators)
from .sampler import QuditSource


def _random_state(d, k, rng):
    v = rng.standard_normal(d ** k) + 1j * rng.standard_normal(d ** k)
    return v / np.linalg.norm(v)


def run_suite(d: int, m: int, n: int, tol: float = 1e-8, seed: int = 0) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    checks = []

    def add(name, value, ok, **extra):
        checks.append(dict({"check": name, "value": value, "pass": bool(ok)}, **extra))

    total = sum(dim_p(g) * dim_q(g) for g in enumerate_staircases(d, m, n))
    add("dimension_sum", total, total == d ** (m + n), expected=d ** (m + n))

    # every CG block met along a stream of this shape
    for k in range(m + n):
        mm, nn = min(k, m), max(0, k - m)
        direction = "cg" if k < m else "dcg"
        for g in enumerate_staircases(d, mm, nn) if k else []:
            rep = verify_intertwiner(g, direction, trials=3, tol=tol,
                                     seed=int(rng.integers(1 << 31)))
            add("cg_intertwiner", max(rep["unitarity_residual"], rep["max_offblock_residual"]),
                rep["pass"], gamma=list(g.entries), direction=direction)

    T = build_full_transform(d, m, n)
    unit = float(np.max(np.abs(T.matrix.conj().T @ T.matrix - np.eye(T.matrix.shape[0]))))
    add("transform_unitarity", unit, unit <= tol)

    U = haar_unitary(d, rng)
    act = tensor_action(U, m, n)
    gens = [walled_brauer_generator_action(g, d, m, n) for g in walled_brauer_generators(m, n)]
    for g in enumerate_staircases(d, m, n):
        P = transform_projector(T, g).matrix
        res = float(np.max(np.abs(P @ act - act @ P)))
        for G in gens:
            res = max(res, float(np.max(np.abs(P @ G - G @ P))))
        add("commutant", res, res <= tol, gamma=list(g.entries))
        if n == 0 and m <= 6:
            S = sn_isotypic_projector(tuple(x for x in g.entries if x > 0), d, m).matrix
            err = float(np.max(np.abs(S - P)))
            add("characters_vs_transform", err, err <= tol, gamma=list(g.entries))

    for trial in range(3):
        src = QuditSource(d, m, n, "entangled", amplitudes=_random_state(d, m + n, rng))
        rep = compare_sampler_oracle(src, tol, transform=T)
        add("sampler_vs_oracle", rep["max_probability_deviation"], rep["pass"],
            min_fidelity=rep["min_post_state_fidelity"], mode="entangled")
    qs = [_random_state(d, 1, rng) for _ in range(m + n)]
    rep = compare_sampler_oracle(QuditSource(d, m, n, "product", qudits=qs), tol, transform=T)
    add("sampler_vs_oracle", rep["max_probability_deviation"], rep["pass"],
        min_fidelity=rep["min_post_state_fidelity"], mode="product")
    return {"checks": checks, "pass": all(c["pass"] for c in checks)}

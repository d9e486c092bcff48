"""Streaming unitary (mixed) Schur sampling.

Each qudit is fed through a CG transform (the first m) or a dual CG transform
(the last n); after every step the branching label is measured, recorded
and the register renormalized.  The stream starts from the trivial irrep, so
the first step is itself a CG transform with a forced outcome.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cg import (SchurRegister, cascade, normalize_rank_bounds, split_blocks,
                 trivial_register, _norm2)
from .combinatorics import Staircase, dim_q
from .errors import CapExceeded, InputError, InternalFault
from .limits import dense_cap, enum_cap
from .wigner import CG, DUAL

NORM_TOL = 1e-9
DROP = 1e-14


@dataclass
class QuditSource:
    d: int
    m: int
    n: int
    mode: str  # "product" or "entangled"
    qudits: list | None = None       # product mode: m ordinary then n dual vectors
    amplitudes: np.ndarray | None = None  # entangled mode, row-major, leftmost qudit first

    def __post_init__(self):
        if self.d < 1 or self.m < 0 or self.n < 0:
            raise InputError("need d >= 1 and m, n >= 0")
        if self.m + self.n == 0:
            raise InputError("empty source: m + n = 0")
        if self.mode == "product":
            if self.qudits is None:
                raise InputError("product mode needs 'qudits'")
            qs = [np.asarray(q, dtype=complex).ravel() for q in self.qudits]
            if len(qs) != self.m + self.n:
                raise InputError(f"product mode needs m+n = {self.m + self.n} qudit vectors, "
                                 f"got {len(qs)}")
            for k, q in enumerate(qs):
                if q.shape != (self.d,):
                    raise InputError(f"qudits[{k}] must have length {self.d}")
                if abs(np.vdot(q, q).real - 1) > NORM_TOL:
                    raise InputError(f"qudits[{k}] is not normalized")
            self.qudits = qs
        elif self.mode == "entangled":
            if self.amplitudes is None:
                raise InputError("entangled mode needs 'amplitudes'")
            size = self.d ** (self.m + self.n)
            if size > dense_cap():
                raise CapExceeded(f"statevector of size {size} exceeds dense cap {dense_cap()}")
            a = np.asarray(self.amplitudes, dtype=complex).ravel()
            if a.shape != (size,):
                raise InputError(f"amplitudes must have length d^(m+n) = {size}")
            if abs(np.vdot(a, a).real - 1) > NORM_TOL:
                raise InputError("amplitudes are not normalized")
            self.amplitudes = a
        else:
            raise InputError(f"unknown mode {self.mode!r}")

    def direction(self, k: int) -> str:
        """Direction used to absorb qudit k (0-based)."""
        return CG if k < self.m else DUAL

    def statevector(self) -> np.ndarray:
        if self.mode == "entangled":
            return self.amplitudes
        out = np.ones(1, dtype=complex)
        for q in self.qudits:
            out = np.kron(out, q)
        return out

    def to_json(self) -> dict:
        obj = {"d": self.d, "m": self.m, "n": self.n, "mode": self.mode}
        if self.mode == "product":
            obj["qudits"] = [[[z.real, z.imag] for z in q] for q in self.qudits]
        else:
            obj["amplitudes"] = [[z.real, z.imag] for z in self.amplitudes]
        return obj

    @classmethod
    def from_json(cls, obj) -> "QuditSource":
        for key in ("d", "m", "n"):
            if key not in obj:
                raise InputError(f"state file is missing field '{key}'")
        mode = obj.get("mode", "entangled" if "amplitudes" in obj else "product")

        def cvec(raw, name):
            try:
                return np.array([complex(float(x[0]), float(x[1])) for x in raw])
            except (TypeError, ValueError, IndexError):
                raise InputError(f"field '{name}' must be a list of [re, im] pairs") from None

        if mode == "product":
            if "qudits" not in obj:
                raise InputError("state file is missing field 'qudits'")
            qs = [cvec(q, f"qudits[{k}]") for k, q in enumerate(obj["qudits"])]
            return cls(int(obj["d"]), int(obj["m"]), int(obj["n"]), "product", qudits=qs)
        if "amplitudes" not in obj:
            raise InputError("state file is missing field 'amplitudes'")
        return cls(int(obj["d"]), int(obj["m"]), int(obj["n"]), "entangled",
                   amplitudes=cvec(obj["amplitudes"], "amplitudes"))


@dataclass
class Ensemble:
    """Convex mixture of pure sources, used for mixed input states."""
    weights: np.ndarray
    sources: list

    @classmethod
    def from_density_matrix(cls, rho, d, m, n, tol=1e-12) -> "Ensemble":
        rho = np.asarray(rho, dtype=complex)
        vals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
        keep = vals > tol
        w = vals[keep] / vals[keep].sum()
        srcs = [QuditSource(d, m, n, "entangled", amplitudes=vecs[:, k])
                for k in np.flatnonzero(keep)]
        return cls(w, srcs)


@dataclass
class SamplingOutcome:
    path: tuple
    staircase: Staircase
    post_state: SchurRegister
    probability: float | None
    seed: int | None = None
    shot_index: int | None = None

    def to_json(self) -> dict:
        return {
            "path": [list(g.entries) for g in self.path],
            "staircase": self.staircase.to_json(),
            "probability": self.probability,
            "seed": self.seed,
            "shot_index": self.shot_index,
            "post_state": self.post_state.to_json(),
        }


def shot_rng(seed: int, shot_index: int) -> np.random.Generator:
    """Independent PCG64 stream for shot `shot_index` of run `seed`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(shot_index),))))


# --------------------------------------------------------------------------
# one step of the stream; registers hold scalar amplitudes (product mode) or
# arrays over the not-yet-received qudits (entangled mode)

def _initial_terms(source: QuditSource):
    d = source.d
    reg = trivial_register(source.d)
    if source.mode == "product":
        return reg, None
    rest = source.amplitudes.reshape((d,) + (d ** (source.m + source.n - 1),))
    return reg, rest


def _step(reg: SchurRegister, source, k, rank_bounds, counters, pending):
    """Absorb qudit k; returns {gamma: (amplitudes, weight)} over the branching set."""
    d = source.d
    direction = source.direction(k)
    terms = {}
    if source.mode == "product":
        q = source.qudits[k]
        for pat, amp in reg.amplitudes.items():
            for a in range(d):
                if q[a] != 0:
                    terms[(pat, a + 1)] = amp * q[a]
    else:
        # pending: amplitude arrays indexed (current qudit, rest...) per pattern
        for pat, arr in pending.items():
            for a in range(d):
                sub = arr[a]
                if _norm2(sub) > 0:
                    terms[(pat, a + 1)] = sub
    amps, pruned = cascade(terms, direction, d, rank_bounds, counters)
    if pruned > 1e-10:
        raise InternalFault(f"pruned mass {pruned:.3g} too large")
    blocks = {}
    for g, sub in split_blocks(reg.gamma, direction, amps).items():
        blocks[g] = (sub, float(sum(_norm2(a) for a in sub.values())))
    return blocks


def _to_pending(amps: dict, d: int, remaining: int):
    if remaining == 0:
        return amps
    return {p: np.asarray(a).reshape((d,) + (d ** (remaining - 1),)) for p, a in amps.items()}


def _finalize(amps: dict):
    return {p: complex(np.asarray(a).reshape(())) if isinstance(a, np.ndarray) else complex(a)
            for p, a in amps.items()}


def _check_rank_source(source, rank_bounds):
    if rank_bounds is not None and source.mode != "product":
        raise InputError("rank-reduced mode is only available for product sources")


class _Walker:
    """Deterministic branch tree with memoized expansions (shared by shots)."""

    def __init__(self, source, rank_bounds=None, counters=None, memo=True):
        self.source = source
        self.rank_bounds = normalize_rank_bounds(rank_bounds, source.d)
        _check_rank_source(source, self.rank_bounds)
        self.counters = counters
        self.memo = {} if memo else None
        reg, rest = _initial_terms(source)
        self.root = (reg, None if rest is None else {p: rest for p in reg.amplitudes})

    def expand(self, path, node, k):
        if self.memo is not None and path in self.memo:
            return self.memo[path]
        reg, pending = node
        blocks = _step(reg, self.source, k, self.rank_bounds, self.counters, pending)
        remaining = self.source.m + self.source.n - k - 1
        out = []
        for g, (amps, w) in blocks.items():
            if w <= 0.0:
                out.append((g, w, None))
                continue
            nrm = np.sqrt(w)
            normed = {p: a / nrm for p, a in amps.items()}
            if self.source.mode == "entangled":
                child = (SchurRegister(g, {}), _to_pending(normed, self.source.d, remaining))
                if remaining == 0:
                    child = (SchurRegister(g, _finalize(normed)), None)
            else:
                if len(normed) > dim_q(g):
                    raise InternalFault(f"register holds {len(normed)} keys, more than dim_q({g.entries})")
                child = (SchurRegister(g, normed), None)
            if self.counters is not None and self.source.mode == "product":
                self.counters.record_register(child[0], k + 1, self.source)
            out.append((g, w, child))
        if self.memo is not None:
            self.memo[path] = out
        return out


def _choose(branches, u):
    total = sum(w for _, w, _ in branches)
    acc = 0.0
    last = None
    for g, w, child in branches:
        if w <= 0.0:
            continue
        acc += w / total
        last = (g, w, child)
        if u < acc:
            return last
    return last


def _run_shot(walker: _Walker, seed, shot_index):
    src = walker.source
    rng = shot_rng(seed, shot_index)
    node = walker.root
    path = ()
    for k in range(src.m + src.n):
        branches = walker.expand(path, node, k)
        g, _w, node = _choose(branches, rng.random())
        path = path + (g,)
    reg, _ = node
    return SamplingOutcome(path, path[-1], reg, None, seed, shot_index)


def sample_run(source, seed: int, shot_index: int = 0, rank_bounds=None, counters=None) -> SamplingOutcome:
    """One streaming run of the sampler."""
    if isinstance(source, Ensemble):
        rng = shot_rng(seed, shot_index)
        pick = int(np.searchsorted(np.cumsum(source.weights), rng.random() * source.weights.sum(), side="right"))
        pick = min(pick, len(source.sources) - 1)
        # offset the stream so the eigenvector choice does not reuse the branch draws
        walker = _Walker(source.sources[pick], rank_bounds, counters, memo=False)
        return _run_shot(walker, seed, shot_index + (1 << 32))
    walker = _Walker(source, rank_bounds, counters, memo=False)
    return _run_shot(walker, seed, shot_index)


def _shots_chunk(args):
    source, seed, start, stop, rank_bounds = args
    walker = _Walker(source, rank_bounds)
    return [_run_shot(walker, seed, i) for i in range(start, stop)]


def sample_shots(source, seed: int, shots: int, rank_bounds=None, counters=None, jobs: int = 1):
    """Many shots; identical to calling sample_run for shot_index = 0..shots-1."""
    if isinstance(source, Ensemble):
        return [sample_run(source, seed, i, rank_bounds, counters) for i in range(shots)]
    if jobs > 1 and counters is None and shots > 1:
        bounds = np.linspace(0, shots, jobs + 1).astype(int)
        chunks = [(source, seed, int(a), int(b), rank_bounds) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            out = []
            for part in ex.map(_shots_chunk, chunks):
                out.extend(part)
        return out
    walker = _Walker(source, rank_bounds, counters)
    return [_run_shot(walker, seed, i) for i in range(shots)]


def exact_distribution(source: QuditSource, rank_bounds=None, counters=None,
                       return_dropped: bool = False):
    """All measurement branches: {path: (probability, post_state)}.

    Branches below probability 1e-14 are dropped; with return_dropped=True
    the dropped mass is returned as a second value.
    """
    if isinstance(source, Ensemble):
        raise InputError("exact_distribution takes a pure source; use ensemble_marginals for mixtures")
    walker = _Walker(source, rank_bounds, counters, memo=False)
    out = {}
    dropped = 0.0
    cap = enum_cap()

    def visit(path, node, prob, k):
        nonlocal dropped
        if k == source.m + source.n:
            out[path] = (prob, node[0])
            if len(out) > cap:
                raise CapExceeded(f"more than {cap} branches")
            return
        for g, w, child in walker.expand(path, node, k):
            p = prob * w
            if child is None or p < DROP:
                dropped += p
                continue
            visit(path + (g,), child, p, k + 1)

    visit((), walker.root, 1.0, 0)
    total = sum(p for p, _ in out.values())
    if abs(total + dropped - 1) > 1e-9:
        raise InternalFault(f"branch probabilities sum to {total + dropped}")
    return (out, dropped) if return_dropped else out


def marginal_staircase_distribution(dist: dict) -> dict:
    out = {}
    for path, (p, _) in dist.items():
        out[path[-1]] = out.get(path[-1], 0.0) + p
    return dict(sorted(out.items(), key=lambda kv: kv[0].entries, reverse=True))


def ensemble_marginals(ens: Ensemble) -> dict:
    out = {}
    for w, src in zip(ens.weights, ens.sources):
        for g, p in marginal_staircase_distribution(exact_distribution(src)).items():
            out[g] = out.get(g, 0.0) + w * p
    return dict(sorted(out.items(), key=lambda kv: kv[0].entries, reverse=True))


def histogram(outcomes) -> dict:
    counts = {}
    for o in outcomes:
        counts[o.staircase] = counts.get(o.staircase, 0) + 1
    return dict(sorted(counts.items(), key=lambda kv: kv[0].entries, reverse=True))


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)

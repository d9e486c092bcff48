"""Label-level combinatorics for mixed Schur-Weyl duality.

Staircases are nonincreasing integer vectors gamma of length d carrying a
context (m, n): m ordinary boxes and n dual boxes.  Young-Yamanouchi paths
label the walled-Brauer side, Gelfand-Tsetlin patterns the unitary side.

Gelfand-Tsetlin patterns are plain tuples of integer tuples
``(level_1, ..., level_d)`` with ``len(level_i) == i``.  Lower levels are
not tied to an (m, n) context, so they are stored without one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import CapExceeded, InputError
from .limits import enum_cap

GTPattern = tuple  # tuple[tuple[int, ...], ...]


def validate_staircase(entries: Sequence[int], d: int, m: int, n: int) -> bool:
    entries = tuple(entries)
    if len(entries) != d:
        raise InputError(f"staircase has length {len(entries)}, expected d={d}")
    if m < 0 or n < 0:
        return False
    if any(entries[k] < entries[k + 1] for k in range(d - 1)):
        return False
    if sum(entries) != m - n:
        return False
    pos = sum(x for x in entries if x > 0)
    neg = -sum(x for x in entries if x < 0)
    return pos <= m and neg <= n


@dataclass(frozen=True, order=False)
class Staircase:
    entries: tuple
    m: int
    n: int

    def __post_init__(self):
        ent = tuple(int(x) for x in self.entries)
        object.__setattr__(self, "entries", ent)
        if len(ent) == 0:
            raise InputError("staircase must have d >= 1 entries")
        if not validate_staircase(ent, len(ent), self.m, self.n):
            raise InputError(f"{ent} is not a staircase for (m, n) = ({self.m}, {self.n})")

    @property
    def d(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def __repr__(self):
        return f"Staircase({self.entries}, m={self.m}, n={self.n})"

    def num_positive(self) -> int:
        return sum(1 for x in self.entries if x > 0)

    def num_negative(self) -> int:
        return sum(1 for x in self.entries if x < 0)

    def to_json(self) -> dict:
        return {"entries": list(self.entries), "m": self.m, "n": self.n}

    @classmethod
    def from_json(cls, obj) -> "Staircase":
        try:
            return cls(tuple(obj["entries"]), int(obj["m"]), int(obj["n"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed staircase object {obj!r}: missing field {exc}") from None


def _sorted_set(items) -> tuple:
    uniq = {s.entries: s for s in items}
    return tuple(uniq[k] for k in sorted(uniq, reverse=True))


def _nonincreasing(v) -> bool:
    return all(v[k] >= v[k + 1] for k in range(len(v) - 1))


def add_box(gamma: Staircase) -> tuple:
    out = []
    for i in range(gamma.d):
        v = list(gamma.entries)
        v[i] += 1
        if validate_staircase(v, gamma.d, gamma.m + 1, gamma.n):
            out.append(Staircase(tuple(v), gamma.m + 1, gamma.n))
    return _sorted_set(out)


def remove_box(gamma: Staircase) -> tuple:
    out = []
    for i in range(gamma.d):
        v = list(gamma.entries)
        v[i] -= 1
        if validate_staircase(v, gamma.d, gamma.m, gamma.n + 1):
            out.append(Staircase(tuple(v), gamma.m, gamma.n + 1))
    return _sorted_set(out)


def _partitions_bounded(total, parts, largest):
    """Nonincreasing tuples of `parts` nonnegative ints summing to total, entries <= largest."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, largest), -1, -1):
        if first * parts < total:
            break
        for rest in _partitions_bounded(total - first, parts - 1, first):
            yield (first,) + rest


def enumerate_staircases(d: int, m: int, n: int) -> tuple:
    if d < 1:
        raise InputError("d must be >= 1")
    if m < 0 or n < 0:
        raise InputError("m and n must be nonnegative")
    out = []
    # split into a positive part (p entries) and a negative part (q entries)
    for p in range(0, d + 1):
        for q in range(0, d - p + 1):
            for a in range(p, m + 1):
                b = a - (m - n)
                if b < q or b > n:
                    continue
                if (p == 0) != (a == 0) or (q == 0) != (b == 0):
                    continue
                for pos in _partitions_bounded(a, p, a):
                    if p and pos[-1] == 0:
                        continue
                    for negp in _partitions_bounded(b, q, b):
                        if q and negp[-1] == 0:
                            continue
                        v = pos + (0,) * (d - p - q) + tuple(-x for x in reversed(negp))
                        out.append(Staircase(v, m, n))
    return _sorted_set(out)


def interlaces(nu: Sequence[int], gamma: Sequence[int]) -> bool:
    nu = tuple(nu)
    gamma = tuple(gamma)
    if len(nu) != len(gamma) - 1:
        raise InputError(f"interlacing needs lengths d-1 and d, got {len(nu)} and {len(gamma)}")
    return all(gamma[k] >= nu[k] >= gamma[k + 1] for k in range(len(nu)))


def _entries(gamma) -> tuple:
    return gamma.entries if isinstance(gamma, Staircase) else tuple(gamma)


def _patterns_below(top: tuple):
    # descending lexicographic order with the highest level most significant
    L = len(top)
    if L == 1:
        yield (top,)
        return
    ranges = [range(top[k], top[k + 1] - 1, -1) for k in range(L - 1)]
    for nu in itertools.product(*ranges):
        for lower in _patterns_below(nu):
            yield lower + (top,)


def enumerate_gt_patterns(gamma, cap: int | None = None) -> Iterator[GTPattern]:
    """Lazily yield every GT pattern with top row gamma.

    Raises CapExceeded once more than `cap` patterns would be produced.
    """
    cap = enum_cap() if cap is None else cap
    top = _entries(gamma)
    for count, pat in enumerate(_patterns_below(top), 1):
        if count > cap:
            raise CapExceeded(f"more than {cap} GT patterns for {top}")
        yield pat


@lru_cache(maxsize=None)
def gt_patterns(top: tuple) -> tuple:
    """Materialized pattern tuple (canonical order), cached."""
    return tuple(enumerate_gt_patterns(top))


def pattern_top(pattern: GTPattern) -> tuple:
    return pattern[-1]


def is_gt_pattern(pattern) -> bool:
    try:
        levels = [tuple(int(x) for x in lev) for lev in pattern]
    except TypeError:
        return False
    for i, lev in enumerate(levels, 1):
        if len(lev) != i or not _nonincreasing(lev):
            return False
    return all(interlaces(levels[i], levels[i + 1]) for i in range(len(levels) - 1))


def initial_staircase(d: int, m: int, n: int) -> Staircase:
    if m + n < 1:
        raise InputError("need at least one qudit")
    if m >= 1:
        return Staircase((1,) + (0,) * (d - 1), 1, 0)
    return Staircase((0,) * (d - 1) + (-1,), 0, 1)


def _predecessors(gamma: Staircase) -> tuple:
    """Staircases one step earlier on a Young-Yamanouchi path ending at gamma."""
    d, m, n = gamma.d, gamma.m, gamma.n
    out = []
    if n > 0:
        for i in range(d):
            v = list(gamma.entries)
            v[i] += 1
            if validate_staircase(v, d, m, n - 1):
                out.append(Staircase(tuple(v), m, n - 1))
    elif m > 1:
        for i in range(d):
            v = list(gamma.entries)
            v[i] -= 1
            if validate_staircase(v, d, m - 1, 0):
                out.append(Staircase(tuple(v), m - 1, 0))
    return _sorted_set(out)


def enumerate_paths(gamma: Staircase, cap: int | None = None) -> Iterator[tuple]:
    """Lazily yield every Young-Yamanouchi path (tuple of Staircases) to gamma."""
    cap = enum_cap() if cap is None else cap
    start = initial_staircase(gamma.d, gamma.m, gamma.n)
    count = 0

    def walk(node):
        if node.m + node.n == 1:
            if node == start:
                yield (node,)
            return
        for prev in _predecessors(node):
            if dim_p(prev) == 0:
                continue
            for head in walk(prev):
                yield head + (node,)

    for path in walk(gamma):
        count += 1
        if count > cap:
            raise CapExceeded(f"more than {cap} paths to {gamma.entries}")
        yield path


def is_yy_path(path: Sequence[Staircase]) -> bool:
    if not path:
        return False
    last = path[-1]
    m, n = last.m, last.n
    if len(path) != m + n or path[0] != initial_staircase(last.d, m, n):
        return False
    for k in range(len(path) - 1):
        nxt = add_box(path[k]) if k + 1 < m else remove_box(path[k])
        if path[k + 1] not in nxt:
            return False
    return True


@lru_cache(maxsize=None)
def _dim_q_cached(entries: tuple) -> int:
    d = len(entries)
    val = Fraction(1)
    for i in range(d):
        for j in range(i + 1, d):
            val *= Fraction(entries[i] - entries[j] + j - i, j - i)
    if val.denominator != 1:
        raise AssertionError(f"Weyl dimension of {entries} is not integral: {val}")
    return int(val)


def dim_q(gamma) -> int:
    """Dimension of the unitary irrep (Weyl dimension formula, exact)."""
    return _dim_q_cached(_entries(gamma))


@lru_cache(maxsize=None)
def dim_p(gamma: Staircase) -> int:
    """Number of Young-Yamanouchi paths ending at gamma."""
    if gamma.m + gamma.n == 1:
        return 1 if gamma == initial_staircase(gamma.d, gamma.m, gamma.n) else 0
    return sum(dim_p(prev) for prev in _predecessors(gamma))


def allowed_staircases(d: int, m: int, n: int, r: int, r_dual: int) -> tuple:
    if not (1 <= r <= d and 1 <= r_dual <= d):
        raise InputError("rank bounds must satisfy 1 <= r, r' <= d")
    return tuple(g for g in enumerate_staircases(d, m, n)
                 if g.num_positive() <= r and g.num_negative() <= r_dual)


def within_rank(entries: Sequence[int], r: int, r_dual: int) -> bool:
    pos = sum(1 for x in entries if x > 0)
    neg = sum(1 for x in entries if x < 0)
    return pos <= r and neg <= r_dual


def shift_staircase(gamma: Staircase, k: int) -> Staircase:
    """Entrywise gamma + k, with the context enlarged so the result validates."""
    d = gamma.d
    m = gamma.m + k * d if k > 0 else gamma.m
    n = gamma.n - k * d if k < 0 else gamma.n
    return Staircase(tuple(x + k for x in gamma.entries), m, n)


def dual_partition(mu) -> Staircase:
    """(mu_1 - mu_d, ..., mu_1 - mu_2, 0) for a partition mu."""
    ent = _entries(mu)
    if any(x < 0 for x in ent) or not _nonincreasing(ent):
        raise InputError(f"{ent} is not a partition")
    top = ent[0]
    out = tuple(top - x for x in reversed(ent))
    return Staircase(out, sum(out), 0)


def partition(entries: Sequence[int]) -> Staircase:
    """Partition as an n = 0 staircase."""
    ent = tuple(entries)
    return Staircase(ent, sum(ent), 0)

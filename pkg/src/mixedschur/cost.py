"""Gate/memory cost model and instrumentation counters.

All constants hidden in the asymptotic bounds are set to 1, so every number
here is in "modeled units", not an exact gate count.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import InputError

DEFAULT_P = 1.44
SOLOVAY_KITAEV_P = 3.97


@dataclass
class CostRecord:
    coefficient_evals: int
    rotation_dim: int
    gram_schmidt_flops: int
    modeled_elementary_gates: float
    register_qubit_equivalent: float
    parameters: dict
    entry_steps: int = 0
    synthesis_gates: float = 0.0
    aux_qubit_equivalent: float = 0.0
    max_register_keys: int = 0
    classical_lookups: int = 0
    alternative: "CostRecord | None" = None

    def to_json(self) -> dict:
        out = asdict(self)
        if self.alternative is None:
            out.pop("alternative")
        return out

    def csv_row(self) -> dict:
        row = dict(self.parameters)
        for key in ("coefficient_evals", "rotation_dim", "gram_schmidt_flops", "entry_steps",
                    "synthesis_gates", "modeled_elementary_gates", "register_qubit_equivalent",
                    "aux_qubit_equivalent"):
            row[key] = getattr(self, key)
        return row


def _check(d, r, r_dual, eps, p):
    if d < 1:
        raise InputError("d must be >= 1")
    if not (1 <= r <= d and 1 <= r_dual <= d):
        raise InputError("rank bounds must satisfy 1 <= r, r' <= d")
    if not (0 < eps < 1):
        raise InputError("eps must lie in (0, 1)")
    if p <= 0:
        raise InputError("p must be positive")


def core_size(d: int, r: int, r_dual: int) -> int:
    return min(d, r + r_dual + 1)


def _log_term(eps, p):
    return math.log2(1.0 / eps) ** p


def cg_cost(d: int, r: int, r_dual: int, eps: float, p: float = DEFAULT_P) -> CostRecord:
    """Modeled cost of one (dual) CG transform: d levels, each an s x s rotation."""
    _check(d, r, r_dual, eps, p)
    s = core_size(d, r, r_dual)
    lg = _log_term(eps, p)
    entries = s * s
    entry_steps = entries * s           # O(s) steps per entry after cancellation
    gs = s ** 3
    synth = s * s * lg
    # per level: compute + uncompute coefficients (2 s^3), synthesize/apply/unsynthesize
    # the rotation (3 s^2 log^p), add the control value (s^2), bounded by s^3 log^p
    gates_per_level = (s ** 3) * lg
    return CostRecord(
        coefficient_evals=d * entries,
        rotation_dim=s,
        gram_schmidt_flops=d * gs,
        modeled_elementary_gates=d * gates_per_level,
        register_qubit_equivalent=0.0,
        parameters={"d": d, "r": r, "r_dual": r_dual, "eps": eps, "p": p},
        entry_steps=d * entry_steps,
        synthesis_gates=d * 3 * synth,
        aux_qubit_equivalent=synth,
    )


def label_bits(d: int, m: int, n: int, r: int | None = None, r_dual: int | None = None) -> int:
    """Bits to store one GT pattern: entries per level times bits per entry."""
    width = max(1, math.ceil(math.log2(m + n + 1)))
    if r is None:
        stored = d * (d + 1) // 2
    else:
        s = r + r_dual + 1
        stored = sum(min(i, s) for i in range(1, d + 1))
    return stored * width


def _pipeline_at(d, m, n, r, r_dual, eps_step, p, steps):
    rec = cg_cost(d, r, r_dual, eps_step, p)
    return rec, steps * rec.modeled_elementary_gates


def pipeline_cost(d: int, m: int, n: int, r: int, r_dual: int, eps: float,
                  p: float = DEFAULT_P, budget: str = "shared") -> CostRecord:
    """Whole-stream cost with the per-step accuracy eps' = eps / T.

    T depends on eps' and eps' on T; one fixed-point pass starting from
    eps' = eps resolves it.  With budget="shared" the T in eps / T is the
    unrestricted (r = r' = d) count, an upper bound for every r, so the
    polylog factor is the same function of (d, m, n, eps) for all ranks.
    budget="own" uses the rank-restricted T instead.
    """
    _check(d, r, r_dual, eps, p)
    if m < 0 or n < 0 or m + n < 1:
        raise InputError("need m, n >= 0 and m + n >= 1")
    if budget not in ("shared", "own"):
        raise InputError("budget must be 'shared' or 'own'")
    steps = m + n
    br, brd = (d, d) if budget == "shared" else (r, r_dual)
    _, T0 = _pipeline_at(d, m, n, br, brd, eps, p, steps)
    eps_step = eps / max(T0, 1.0)
    rec, total = _pipeline_at(d, m, n, r, r_dual, eps_step, p, steps)
    s = core_size(d, r, r_dual)
    reg = d * s * max(1.0, math.log2(m + n)) + math.log2(max(d, 2))
    base = dict(rec.parameters, m=m, n=n, eps=eps, eps_step=eps_step, steps=steps, budget=budget)
    log2_alt = (math.log2(d * (r + r_dual)) + (2 * d * (r + r_dual) + 1) * math.log2(m + n)
                + math.log2(_log_term(eps_step, p)))
    alt_T = 2.0 ** log2_alt if log2_alt < 1000 else math.inf
    alternative = CostRecord(
        coefficient_evals=0, rotation_dim=0, gram_schmidt_flops=0,
        modeled_elementary_gates=alt_T,
        register_qubit_equivalent=(r + r_dual) * d * max(1.0, math.log2(m + n)),
        parameters=dict(base, variant="tradeoff"),
    )
    return CostRecord(
        coefficient_evals=steps * rec.coefficient_evals,
        rotation_dim=s,
        gram_schmidt_flops=steps * rec.gram_schmidt_flops,
        modeled_elementary_gates=total,
        register_qubit_equivalent=reg,
        parameters=base,
        entry_steps=steps * rec.entry_steps,
        synthesis_gates=steps * rec.synthesis_gates,
        aux_qubit_equivalent=rec.aux_qubit_equivalent,
        alternative=alternative,
    )


@dataclass
class RunCounters:
    """Counters filled in by an instrumented sampler run.

    A level rotation of size s counts s^2 coefficient evaluations and s^3
    Gram-Schmidt flops once per CG application, as a coherent evaluation
    would; `classical_lookups` counts the per-branch work of the classical
    simulation on top of that.
    """
    applications: int = 0
    coefficient_evals: int = 0
    gram_schmidt_flops: int = 0
    rotation_dim: int = 0
    classical_lookups: int = 0
    max_register_keys: int = 0
    max_register_bits: int = 0
    max_dim_ratio: float = 0.0
    params: dict = field(default_factory=dict)

    def record_level(self, size: int, lookups: int):
        self.coefficient_evals += size * size
        self.gram_schmidt_flops += size ** 3
        self.rotation_dim = max(self.rotation_dim, size)
        self.classical_lookups += lookups

    def record_application(self, keys: int):
        self.applications += 1

    def record_register(self, register, step: int, source):
        from .combinatorics import dim_q
        keys = len(register.amplitudes)
        self.max_register_keys = max(self.max_register_keys, keys)
        bits = keys * label_bits(source.d, source.m, source.n)
        self.max_register_bits = max(self.max_register_bits, bits)
        self.max_dim_ratio = max(self.max_dim_ratio, keys / dim_q(register.gamma))
        self.params.update(d=source.d, m=source.m, n=source.n)


def measured_counts(run: RunCounters) -> CostRecord:
    return CostRecord(
        coefficient_evals=run.coefficient_evals,
        rotation_dim=run.rotation_dim,
        gram_schmidt_flops=run.gram_schmidt_flops,
        modeled_elementary_gates=0.0,
        register_qubit_equivalent=float(run.max_register_bits),
        parameters=dict(run.params, applications=run.applications),
        max_register_keys=run.max_register_keys,
        classical_lookups=run.classical_lookups,
    )

"""`schur` command line entry point.

Exit status: 0 success, 1 verification failure, 2 input error.
Entangled amplitude arrays are row-major with the leftmost qudit most significant.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .errors import InputError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


# ---------------------------------------------------------------- JSON output

def _encode(obj, out):
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append(format(x, ".17g") if math.isfinite(x) else "null")
    elif isinstance(obj, (complex, np.complexfloating)):
        _encode([obj.real, obj.imag], out)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _encode(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for k, val in enumerate(obj):
            if k:
                out.append(",")
            _encode(val, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Compact JSON with floats written to 17 significant digits."""
    out = []
    _encode(obj, out)
    return "".join(out)


class _Out:
    def __init__(self, path):
        self.fh = open(path, "w") if path else sys.stdout

    def line(self, obj):
        self.fh.write(dumps(obj) + "\n")

    def raw(self, text):
        self.fh.write(text)

    def close(self):
        if self.fh is not sys.stdout:
            self.fh.close()


# ---------------------------------------------------------------- parsing helpers

def _load_json_arg(text, name):
    try:
        if text.startswith("@"):
            with open(text[1:]) as fh:
                return json.load(fh)
        return json.loads(text)
    except FileNotFoundError:
        raise InputError(f"--{name}: file {text[1:]!r} not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"--{name}: invalid JSON ({exc})") from None


def _staircase_arg(text, m=None, n=None, name="gamma"):
    from .combinatorics import Staircase
    obj = _load_json_arg(text, name)
    if isinstance(obj, dict):
        if "entries" not in obj:
            raise InputError(f"--{name}: object is missing field 'entries'")
        if m is not None:
            obj = dict(obj, m=m)
        if n is not None:
            obj = dict(obj, n=n)
        if "m" not in obj or "n" not in obj:
            entries = obj["entries"]
            obj = dict(obj, m=obj.get("m", sum(x for x in entries if x > 0)),
                       n=obj.get("n", -sum(x for x in entries if x < 0)))
        return Staircase.from_json(obj)
    if isinstance(obj, list) and all(isinstance(x, int) for x in obj):
        mm = sum(x for x in obj if x > 0) if m is None else m
        nn = -sum(x for x in obj if x < 0) if n is None else n
        return Staircase(tuple(obj), mm, nn)
    raise InputError(f"--{name}: expected a staircase object or an integer list")


def _int_list_arg(text, name):
    obj = _load_json_arg(text, name)
    if isinstance(obj, dict) and "entries" in obj:
        obj = obj["entries"]
    if not isinstance(obj, list) or not all(isinstance(x, int) for x in obj):
        raise InputError(f"--{name}: expected an integer list")
    return tuple(obj)


def _rank(args):
    if args.rank is None and args.rank_dual is None:
        return None
    if args.rank is None or args.rank_dual is None:
        raise InputError("--rank and --rank-dual must be given together")
    return (args.rank, args.rank_dual)


def _load_state(path):
    from .sampler import QuditSource
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"state file {path!r} not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"state file {path!r} is not valid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise InputError("state file must hold a JSON object")
    return QuditSource.from_json(obj)


def _paths_json(path):
    return [list(g.entries) for g in path]


def _pattern_json(pat):
    return [list(lev) for lev in pat]


# ---------------------------------------------------------------- subcommands

def cmd_enumerate(args, out):
    from .combinatorics import allowed_staircases, enumerate_staircases
    rb = _rank(args)
    items = (enumerate_staircases(args.d, args.m, args.n) if rb is None
             else allowed_staircases(args.d, args.m, args.n, *rb))
    for g in items:
        out.line(g.to_json())
    return EXIT_OK


def cmd_paths(args, out):
    from .combinatorics import enumerate_paths
    g = _staircase_arg(args.gamma, args.m, args.n)
    for p in enumerate_paths(g):
        out.line({"path": _paths_json(p)})
    return EXIT_OK


def cmd_patterns(args, out):
    from .combinatorics import enumerate_gt_patterns
    g = _staircase_arg(args.gamma, args.m, args.n)
    for p in enumerate_gt_patterns(g):
        out.line({"pattern": _pattern_json(p)})
    return EXIT_OK


def cmd_cg_matrix(args, out):
    from .cg import cg_matrix
    from .wigner import reduced_wigner_matrix
    if args.nu is not None:
        gamma = _int_list_arg(args.gamma, "gamma")
        nu = _int_list_arg(args.nu, "nu")
        level = args.level if args.level is not None else len(gamma)
        M = reduced_wigner_matrix(args.direction, level, gamma, nu, _rank(args))
        out.line(M.to_json())
        return EXIT_OK
    if _rank(args) is not None:
        raise InputError("--rank applies to level matrices; pass --nu as well")
    g = _staircase_arg(args.gamma, args.m, args.n)
    out.line(cg_matrix(g, args.direction).to_json())
    return EXIT_OK


def cmd_sample(args, out):
    from .sampler import exact_distribution, histogram, sample_shots
    src = _load_state(args.input)
    rb = _rank(args)
    if args.exact:
        dist = exact_distribution(src, rank_bounds=rb)
        if args.histogram:
            from .sampler import marginal_staircase_distribution
            for g, p in marginal_staircase_distribution(dist).items():
                out.line({"staircase": g.to_json(), "probability": p})
            return EXIT_OK
        for path, (p, reg) in dist.items():
            out.line({"path": _paths_json(path), "staircase": path[-1].to_json(),
                      "probability": p, "seed": None, "shot_index": None,
                      "post_state": reg.to_json()})
        return EXIT_OK
    if args.shots < 1:
        raise InputError("--shots must be >= 1")
    outcomes = sample_shots(src, args.seed, args.shots, rank_bounds=rb, jobs=args.jobs)
    if args.histogram:
        for g, c in histogram(outcomes).items():
            out.line({"staircase": g.to_json(), "count": c, "shots": args.shots})
        return EXIT_OK
    for o in outcomes:
        out.line(o.to_json())
    return EXIT_OK


def _projector_report(P, gamma, expected_trace, tol):
    tr = float(np.trace(P.matrix).real)
    rep = {"gamma": gamma.to_json(), "method": P.method, "trace": tr,
           "expected_trace": expected_trace,
           "hermitian_residual": P.hermitian_residual(),
           "idempotency_residual": P.idempotency_residual()}
    if P.sample_count:
        rep["samples"] = P.sample_count
    rep["pass"] = bool(abs(tr - expected_trace) <= tol and rep["hermitian_residual"] <= tol
                       and rep["idempotency_residual"] <= tol)
    return rep


def cmd_oracle(args, out):
    from .combinatorics import dim_p, dim_q, enumerate_staircases
    from .oracle import (build_full_transform, haar_projector_estimate,
                         sn_isotypic_projector, transform_projector)
    ok = True
    gammas = enumerate_staircases(args.d, args.m, args.n)
    if args.method == "transform":
        T = build_full_transform(args.d, args.m, args.n)
        unit = float(np.max(np.abs(T.matrix.conj().T @ T.matrix - np.eye(T.matrix.shape[0]))))
        out.line({"d": args.d, "m": args.m, "n": args.n, "unitarity_residual": unit,
                  "pass": unit <= args.tol})
        ok &= unit <= args.tol
        projs = [(g, transform_projector(T, g), args.tol) for g in gammas]
    elif args.method == "characters":
        if args.n != 0:
            raise InputError("the characters method needs n = 0")
        projs = [(g, sn_isotypic_projector(tuple(x for x in g.entries if x > 0), args.d, args.m),
                  args.tol) for g in gammas]
    else:
        tol = 5 / math.sqrt(args.samples)
        projs = [(g, haar_projector_estimate(g, args.d, args.m, args.n, args.samples, args.seed + k),
                  tol * dim_p(g) * dim_q(g)) for k, g in enumerate(gammas)]
    for g, P, tol in projs:
        rep = _projector_report(P, g, dim_p(g) * dim_q(g), tol)
        ok &= rep["pass"]
        out.line(rep)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args, out):
    from .oracle import compare_sampler_oracle
    if args.input:
        rep = compare_sampler_oracle(_load_state(args.input), args.tol)
        out.line(rep)
        return EXIT_OK if rep["pass"] else EXIT_FAIL
    if args.d is None or args.m is None or args.n is None:
        raise InputError("verify needs --input or all of --d, --m, --n")
    from .verify import run_suite
    report = run_suite(args.d, args.m, args.n, args.tol, args.seed)
    for item in report["checks"]:
        out.line(item)
    out.line({"summary": True, "checks": len(report["checks"]), "pass": report["pass"]})
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_cost(args, out):
    from .cost import pipeline_cost
    rb = _rank(args) or (args.d, args.d)
    rec = pipeline_cost(args.d, args.m, args.n, rb[0], rb[1], args.eps, args.p, args.budget)
    if args.csv:
        rows = [rec.csv_row()]
        if rec.alternative is not None:
            rows.append(rec.alternative.csv_row())
        keys = list(rows[0].keys())
        for r in rows[1:]:
            keys += [k for k in r if k not in keys]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
        out.raw(buf.getvalue())
    else:
        out.line(rec.to_json())
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_rank(p):
    p.add_argument("--rank", type=int, default=None, help="rank bound r for ordinary qudits")
    p.add_argument("--rank-dual", type=int, default=None, help="rank bound r' for dual qudits")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="schur",
        description="Streaming unitary (mixed) Schur sampling and its oracles.",
        epilog="Caps: SCHUR_CAP_DENSE (default 4096), SCHUR_CAP_ENUM (default 1000000). "
               "Entangled amplitude arrays are row-major, leftmost qudit most significant. "
               "JSON arguments may be given inline or as @file.")
    ap.add_argument("--output", "-o", default=None, help="write output to this file")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="list staircases for (d, m, n)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=0)
    _add_rank(p)
    p.set_defaults(func=cmd_enumerate)

    for name, func, what in (("paths", cmd_paths, "Young-Yamanouchi paths"),
                             ("patterns", cmd_patterns, "Gelfand-Tsetlin patterns")):
        p = sub.add_parser(name, help=f"list {what} of a staircase")
        p.add_argument("--gamma", required=True, help='{"entries":[...],"m":M,"n":N} or [..]')
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("cg-matrix", help="level rotation matrix (with --nu) or dense CG unitary")
    p.add_argument("--direction", choices=["cg", "dcg"], required=True)
    p.add_argument("--gamma", required=True)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--nu", default=None, help="already updated lower row, length level-1")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    _add_rank(p)
    p.set_defaults(func=cmd_cg_matrix)

    p = sub.add_parser("sample", help="run the streaming sampler on a state file")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="enumerate every branch instead of sampling")
    p.add_argument("--histogram", action="store_true", help="fold outcomes into endpoint counts")
    p.add_argument("--jobs", type=int, default=1)
    _add_rank(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("oracle", help="isotypic projectors by an independent method")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--method", choices=["transform", "characters", "haar"], default="transform")
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="compare sampler against the oracles")
    p.add_argument("--input", default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cost", help="modeled gate and memory cost")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--p", type=float, default=1.44)
    p.add_argument("--budget", choices=["shared", "own"], default="shared")
    p.add_argument("--csv", action="store_true")
    _add_rank(p)
    p.set_defaults(func=cmd_cost)
    return ap


def main(argv=None) -> int:
    from .errors import CapExceeded
    parser = build_parser()
    args = parser.parse_args(argv)
    out = None
    try:
        out = _Out(args.output)
        return args.func(args, out)
    except (InputError, CapExceeded) as exc:
        print(f"schur: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"schur: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        if out is not None:
            out.close()


if __name__ == "__main__":
    sys.exit(main())

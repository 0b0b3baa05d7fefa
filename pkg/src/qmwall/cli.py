"""Command-line front end: ``qmwall <subcommand> ...``.

Every command prints canonical JSON (sorted keys, rationals as "p/q") on
stdout.  Invalid input exits with status 1 and one line on stderr; a failed
internal identity exits with status 2.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

from . import detline, polappx, qstab, wallcross
from .cohring import (
    ChernVector,
    DegreeClass,
    SurfaceModel,
    det_degree,
    hilb_class,
    load_surface,
    u_class,
)
from .ifunc import I0, I1, I_sharp_hilbn
from .rational import q, qvec, to_json
from .series import series_from_obj, series_to_obj


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise InputError(message)


# ---------------------------------------------------------------------------
# helpers

def jsonable(x: Any) -> Any:
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, (int, Fraction)):
        return to_json(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def _table(obj: Any, prefix: str = "") -> list[str]:
    if isinstance(obj, dict):
        out = []
        for k in sorted(obj):
            out.extend(_table(obj[k], f"{prefix}{k}."))
        return out
    if isinstance(obj, list) and obj:
        out = []
        for i, v in enumerate(obj):
            out.extend(_table(v, f"{prefix}{i}."))
        return out
    key = prefix.rstrip(".")
    val = json.dumps(obj, sort_keys=True)
    return [f"{key}\t{val}" if key else val]


def render(obj: Any, output: str) -> str:
    if output == "table":
        return "\n".join(_table(jsonable(obj))) + "\n"
    return dumps(obj)


def _read_json(path: str) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc.msg} at line {exc.lineno}") from None


def _reject_float(text: str) -> Any:
    raise InputError(f"floating-point token {text!r} is not allowed; use \"p/q\"")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip() != "")
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


def _rationals(text: str) -> tuple[Fraction, ...]:
    return qvec(x.strip() for x in text.split(",") if x.strip() != "")


def _surface(args) -> SurfaceModel:
    return load_surface(args.surface)


def _chern(args, S: SurfaceModel) -> ChernVector:
    if getattr(args, "v", None):
        vals = _rationals(args.v)
        if len(vals) != S.picard_rank + 2:
            raise InputError(f"--v needs rk, {S.picard_rank} c1 entries and ch2")
        return ChernVector(vals[0], vals[1:-1], vals[-1])
    if getattr(args, "n", None) is None:
        raise InputError("give either --v or --n")
    return hilb_class(args.n, S)


def _gamma(args, S: SurfaceModel) -> tuple[int, ...]:
    gamma = _ints(args.gamma) if args.gamma is not None else (0,) * S.picard_rank
    if len(gamma) != S.picard_rank:
        raise InputError(f"--gamma needs {S.picard_rank} entries")
    return gamma


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# commands

def cmd_ifunc(args) -> Any:
    S = _surface(args)
    return series_to_obj(I_sharp_hilbn(args.n, S, args.order))


def cmd_walls(args) -> Any:
    if args.degree < 0:
        raise InputError("--degree must be nonnegative")
    return qstab.walls(args.degree)


def cmd_vdim(args) -> Any:
    S = _surface(args)
    if args.epsilon is not None:
        qstab.Epsilon.parse(args.epsilon)  # validated; vdim does not depend on it
    v = _chern(args, S)
    beta = DegreeClass.from_curve_class(_gamma(args, S), q(args.m))
    dimM = args.dimM if args.dimM is not None else 2 * (args.n or 0)
    if args.dimM is None and args.n is None:
        raise InputError("--dimM is required with --v")
    return qstab.vdim(v, beta, S, args.g, args.N, dimM)


def cmd_detdeg(args) -> Any:
    S = _surface(args)
    v = _chern(args, S)
    beta = DegreeClass.from_curve_class(_gamma(args, S), q(args.m))
    return {
        "L0": det_degree(u_class(v, 0, S), beta, S),
        "L1": det_degree(u_class(v, 1, S), beta, S),
    }


def _stability_one(payload: tuple[dict, str, Optional[int]]) -> dict:
    data, eps_text, m = payload
    e = qstab.Epsilon.parse(eps_text)
    if "vertices" in data:
        G = qstab.graph_from_mapping(data)
        rep = qstab.is_epsilon_stable(G, e)
        out = {"ok": rep.ok, "failures": list(rep.failures), "total_degree": G.total_degree}
        out["chamber"] = qstab.chamber_of(e, G.total_degree)
        return out
    if m is None:
        raise InputError("subscheme data needs --m")
    D = qstab.subscheme_from_mapping(data)
    rep = qstab.hilb_conditions(D, e, m)
    return {"ok": rep.ok, "failures": list(rep.failures)}


def cmd_stability(args) -> Any:
    data = _read_json(args.input)
    batch = isinstance(data, dict) and "graphs" in data
    items = data["graphs"] if batch else [data]
    results = _pmap(_stability_one, [(d, args.epsilon, args.m) for d in items], args.jobs)
    for i, r in enumerate(results):
        for f in r["failures"]:
            print(f"[{i}] {f}", file=sys.stderr)
    return results if batch else results[0]


def cmd_length(args) -> Any:
    S = _surface(args)
    v = _chern(args, S)
    raw = _read_json(args.ledger)
    if not isinstance(raw, list):
        raise InputError("ledger must be a JSON array of {rk, deg, chi}")
    steps = tuple(detline.QuotientData.of(s["rk"], s["deg"], s["chi"]) for s in raw)
    L = detline.LangtonLedger(steps, v, args.m)
    out: dict[str, Any] = {"length": detline.length_of_point(L, S)}
    drops = [detline.step_drop_Lbeta(Q, v, args.m, S) for Q in steps]
    out["drops"] = drops
    if args.l1c is not None:
        out["m0"] = detline.m0_threshold(v, q(args.l1c), args.m_ample, S)
    return out


def _wc_series(path: str) -> wallcross.BracketSeries:
    return wallcross.bseries_from_obj(_read_json(path))


def _nov(path: str):
    return series_from_obj(_read_json(path))


def cmd_wallcross(args) -> Any:
    if args.action == "delpezzo":
        S = _surface(args)
        return series_to_obj(wallcross.delpezzo_specialize(args.g, args.N, _gamma(args, S), args.order, S))
    if args.action == "substitute":
        F = _wc_series(args.series)
        return wallcross.bseries_to_obj(wallcross.expand_substitution(F, _nov(args.mu)))
    if args.action == "walls":
        F = _wc_series(args.series)
        mu = _nov(args.mu)
        if args.wall is not None:
            G = wallcross.single_wall(F, args.wall, mu)
        else:
            if args.degree is None:
                raise InputError("give --wall d0 or --degree d")
            G = wallcross.cross_all_walls(F, mu, args.degree)
        return wallcross.bseries_to_obj(G)
    if args.action == "dtpt":
        F = _wc_series(args.series)
        I, Is = _nov(args.I), _nov(args.Isharp)
        res = wallcross.dtpt_composite(F, I0(I), I1(I), I0(Is), I1(Is), args.g)
        out: dict[str, Any] = {"ok": res.ok, "terms": len(res.route_b)}
        diff = res.first_difference()
        if diff is not None:
            b, w, a_val, b_val = diff
            out["first_difference"] = {"bracket": wallcross.bracket_to_obj(b), "gamma": list(w[0]),
                                       "m": w[1], "route_a": a_val, "route_b": b_val}
        if not res.ok:
            raise wallcross.InvariantViolation("the two DT/PT routes disagree: " + json.dumps(jsonable(out)))
        return out
    raise InputError(f"unknown wallcross action {args.action!r}")


def _sheaf(d: dict) -> polappx.SheafNumerics:
    return polappx.SheafNumerics.of(d["rk"], d["deg_f"], d["kF"])


def _instance(raw: dict) -> polappx.Instance:
    F = raw["F"] if isinstance(raw["F"], list) else [raw["F"]]
    G = raw["G"] if isinstance(raw["G"], list) else [raw["G"]]
    return polappx.Instance(tuple(_sheaf(x) for x in F), tuple(_sheaf(x) for x in G))


def _appendix_terms(payload: tuple) -> dict:
    inst, X, n, mode = payload
    ks = [n * c.k for c in X.components]
    if X.node_structure == "separating":
        t = polappx.sep_terms(inst.G[0], inst.G[1], inst.F[0], inst.F[1], X, ks[0], ks[1], mode)
        return {"a": t.a, "b1": t.b1, "b2": t.b2, "total": t.total}
    return {"total": polappx.total_at(inst, X, n, mode)}


def cmd_appendixa(args) -> Any:
    data = _read_json(args.instances)
    S = load_surface(data.get("surface", args.surface))
    comps = tuple(polappx.Component(int(c.get("genus", 0)), int(c.get("k", 1))) for c in data["components"])
    X = polappx.PolarizedProduct(S, comps, data.get("node", "smooth"))
    insts = [_instance(r) for r in data["instances"]]
    K = data.get("K")
    modes = ["paper", "oracle"] if args.mode == "both" else [args.mode]
    out: dict[str, Any] = {}
    for mode in modes:
        res = polappx.n0_search(insts, X, K, mode)
        rep: dict[str, Any] = {"feasible": res.feasible, "n0": res.n0,
                               "ks": list(res.ks) if res.ks else None,
                               "per_instance": list(res.per_instance),
                               "infeasible": list(res.infeasible)}
        if res.feasible:
            rep["terms"] = _pmap(_appendix_terms, [(i, X, res.n0, mode) for i in insts], args.jobs)
            if K is not None:
                certs = []
                for c in res.certificates:
                    if isinstance(c, bool):
                        certs.append({"bounds_check": c})
                    else:
                        certs.append([{"lhs": lhs, "rhs": rhs, "holds": h} for lhs, rhs, h in c])
                rep["certificates"] = certs
        out[mode] = rep
    return out


# ---------------------------------------------------------------------------
# parser

def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--surface", default=None, help="preset name or TOML path (default P2)")
    p.add_argument("--output", choices=["json", "table"], default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker processes for batch inputs")
    p.add_argument("--config", default=None, help="TOML file with default parameters")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = _Parser(prog="qmwall", description="Quasimap wall-crossing calculator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ifunc", parents=[common], help="perverse I-function of Hilb^n(S)")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--order", type=int, default=None)

    s = sub.add_parser("walls", parents=[common], help="wall values 1/d0")
    s.add_argument("--degree", type=int, required=True)

    for name, text in (("vdim", "virtual dimension"), ("detdeg", "degrees of det(u0), det(u1)")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--n", type=int, default=None, help="use v = ch(I_Z), Z of length n")
        s.add_argument("--v", default=None, help="rk,c1_1,...,c1_rho,ch2")
        s.add_argument("--gamma", default=None, help="comma-separated curve class")
        s.add_argument("--m", default="0")
        if name == "vdim":
            s.add_argument("--g", type=int, default=0)
            s.add_argument("--N", type=int, default=0)
            s.add_argument("--dimM", type=int, default=None)
            s.add_argument("--epsilon", default=None)

    s = sub.add_parser("stability", parents=[common], help="epsilon-stability of graph or subscheme data")
    s.add_argument("input")
    s.add_argument("--epsilon", required=True)
    s.add_argument("--m", type=int, default=None)

    s = sub.add_parser("length", parents=[common], help="length of a base point from a ledger")
    s.add_argument("ledger")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--v", default=None)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--l1c", default=None, help="L_1 . C, enables the m0 threshold")
    s.add_argument("--m-ample", dest="m_ample", type=int, default=1)

    s = sub.add_parser("wallcross", parents=[common], help="correlator substitutions")
    s.add_argument("action", choices=["substitute", "walls", "delpezzo", "dtpt"])
    s.add_argument("--series", default=None)
    s.add_argument("--mu", default=None)
    s.add_argument("--wall", type=int, default=None)
    s.add_argument("--degree", type=int, default=None)
    s.add_argument("--I", dest="I", default=None)
    s.add_argument("--Isharp", default=None)
    s.add_argument("--g", type=int, default=0)
    s.add_argument("--N", type=int, default=0)
    s.add_argument("--gamma", default=None)
    s.add_argument("--order", type=int, default=None)

    s = sub.add_parser("appendixa", parents=[common], help="suitable polarization thresholds")
    s.add_argument("instances")
    s.add_argument("--mode", choices=["paper", "oracle", "both"], default="both")
    _defer_defaults(sub)
    return p


def _defer_defaults(sub) -> None:
    """Move argparse defaults aside so a config file can sit between flags and defaults."""
    for name, sp in sub.choices.items():
        stash = {}
        for action in sp._actions:
            if action.default not in (None, argparse.SUPPRESS) and not action.required:
                stash[action.dest] = action.default
                action.default = None
        sp.set_defaults(_deferred=stash)


COMMANDS: dict[str, Callable] = {
    "ifunc": cmd_ifunc,
    "walls": cmd_walls,
    "vdim": cmd_vdim,
    "detdeg": cmd_detdeg,
    "stability": cmd_stability,
    "length": cmd_length,
    "wallcross": cmd_wallcross,
    "appendixa": cmd_appendixa,
}

DEFAULTS = {"surface": "P2", "output": "json", "jobs": 1, "order": 4, "n": None}


def _load_config(path: str) -> dict:
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:  # pragma: no cover
        import tomli as tomllib  # type: ignore[no-redef]
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"config {path}: {exc}") from None
    return data


def _apply_config(args: argparse.Namespace) -> None:
    """flags > config file > defaults."""
    cfg: dict = {}
    if args.config:
        raw = _load_config(args.config)
        cfg = {k.replace("-", "_"): v for k, v in raw.items() if not isinstance(v, dict)}
        cfg.update({k.replace("-", "_"): v for k, v in raw.get(args.command, {}).items()})
    for key, val in cfg.items():
        if isinstance(val, float):
            raise InputError(f"config key {key!r}: floating-point values are not allowed")
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    for key, val in {**DEFAULTS, **args._deferred}.items():
        if getattr(args, key, None) is None and hasattr(args, key):
            setattr(args, key, val)
    if args.command == "ifunc" and args.n is None:
        args.n = 1
    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")


def run(argv: Optional[Iterable[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
        _apply_config(args)
        with contextlib.redirect_stderr(stderr):
            result = COMMANDS[args.command](args)
        stdout.write(render(result, args.output))
        return 0
    except (wallcross.InvariantViolation, ArithmeticError) as exc:
        print(f"invariant violation: {type(exc).__name__}: {_one_line(exc)}", file=stderr)
        return 2
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=stderr)
        return 1


def _one_line(exc: BaseException) -> str:
    text = str(exc.args[0]) if len(exc.args) == 1 else str(exc)
    return " ".join(text.split())


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

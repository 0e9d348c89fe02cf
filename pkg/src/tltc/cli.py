"""``tltc`` command-line front end.

Exit codes are the machine contract:

====  ===================================================================
code  meaning
====  ===================================================================
0     check PASS / realized set non-empty / state is a member
1     realized root set empty / state is not a member
2     backend incompatible or realization rejected as unsound
3     parse, validation or usage error (bad spec, unknown axis, bad state)
4     numerical failure during realization
====  ===================================================================

Structured results go to stdout as JSON with sorted keys; diagnostics go to
stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from tltc import formula as F
from tltc import tlt
from tltc.errors import (
    BinaryCapExceeded,
    CflViolation,
    DirectionConflict,
    FragmentError,
    IncompatibleBackend,
    NumericalError,
    OutOfDomain,
    TltcError,
    UnsoundRealization,
)
from tltc.hj.backend import HjBackend
from tltc.hj.io import StoredLevelSet, write_levelset
from tltc.hz.io import StoredSequence, write_sequence
from tltc.specfile import load_spec, make_backend

EXIT_OK, EXIT_EMPTY, EXIT_UNSOUND, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3, 4

_INCOMPATIBLE = (FragmentError, IncompatibleBackend, UnsoundRealization, DirectionConflict)
_NUMERIC = (NumericalError, CflViolation, BinaryCapExceeded, FloatingPointError)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _err(msg: str) -> None:
    print(f"tltc: {msg}", file=sys.stderr)


def _build(args):
    spec = load_spec(args.spec)
    backend = make_backend(spec, args.backend, getattr(args, "grid_profile", None))
    tree = tlt.construct(spec.formula, backend.primitives, spec.propositions)
    return spec, backend, tree


def cmd_check(args) -> int:
    try:
        spec, backend, tree = _build(args)
    except _INCOMPATIBLE as e:
        _emit({"verdict": "INCOMPATIBLE", "error": str(e), "nodes": []})
        _err(str(e))
        return EXIT_UNSOUND
    except (TltcError, ValueError, KeyError) as e:
        _err(str(e))
        return EXIT_INVALID
    report = tlt.check_compat(tree, backend.caps)
    _emit(report.to_json())
    for e in report.rejected:
        _err(f"{e.verdict} at {e.formula}: {e.reason}")
    return EXIT_OK if report.verdict == "PASS" else EXIT_UNSOUND


def cmd_realize(args) -> int:
    try:
        spec, backend, tree = _build(args)
    except _INCOMPATIBLE as e:
        _err(str(e))
        return EXIT_UNSOUND
    except (TltcError, ValueError, KeyError) as e:
        _err(str(e))
        return EXIT_INVALID
    try:
        result = tlt.realize(tree, backend, allow_unsound=args.allow_unsound)
        satisfiable = tlt.is_satisfiable(result)
    except _INCOMPATIBLE as e:
        report = getattr(e, "report", None)
        if report is not None:
            _emit(report.to_json())
        _err(str(e))
        return EXIT_UNSOUND
    except _NUMERIC as e:
        where = getattr(e, "provenance", None)
        _err(f"numerical failure{f' at {where}' if where else ''}: {e}")
        return EXIT_NUMERIC
    except TltcError as e:
        _err(str(e))
        return EXIT_INVALID
    out = Path(args.out)
    if isinstance(backend, HjBackend):
        write_levelset(result.root, out, backend.t0, backend.tf)
    else:
        write_sequence(result.root.sequence(backend.N), out, backend.space.names,
                       list(zip(backend.space.lower, backend.space.upper)), backend.dt, backend.t0)
    stats = {
        "backend": backend.name,
        "formula": F.render(spec.formula),
        "approx": result.approx.value,
        "satisfiable": bool(satisfiable),
        "wall_seconds": result.stats["wall_seconds"],
        "metrics": {k: v for k, v in result.stats.items() if k != "wall_seconds"},
    }
    (out / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    _emit({"out": str(out), "satisfiable": bool(satisfiable)})
    return EXIT_OK if satisfiable else EXIT_EMPTY


def _open_result(path):
    header = json.loads((Path(path) / "header.json").read_text())
    if header.get("backend") == "hz":
        return StoredSequence(path)
    return StoredLevelSet(path)


def _parse_state(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ValueError(f"cannot parse state {text!r}; expected comma-separated numbers") from None


def cmd_query(args) -> int:
    try:
        res = _open_result(args.result)
        t = res.header["t0"] if args.time is None else args.time
        z = _parse_state(args.state)
        member = res.member(z, t)
    except (OSError, ValueError, KeyError, OutOfDomain, TltcError) as e:
        _err(str(e))
        return EXIT_INVALID
    _emit({"member": bool(member), "state": z.tolist(), "time": float(t)})
    return EXIT_OK if member else EXIT_EMPTY


def _parse_fix(items) -> dict[str, float]:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part:
                continue
            name, _, val = part.partition("=")
            if not _:
                raise ValueError(f"expected name=value, got {part!r}")
            out[name.strip()] = float(val)
    return out


def cmd_slice(args) -> int:
    try:
        res = _open_result(args.result)
        t = res.header["t0"] if args.time is None else args.time
        axes = [a.strip() for a in args.axes.split(",") if a.strip()]
        if not 1 <= len(axes) <= 2 or len(set(axes)) != len(axes):
            raise ValueError("--axes takes one or two distinct axis names")
        fix = _parse_fix(args.fix)
        if isinstance(res, StoredSequence):
            ts, coords, V = res.section(t, axes, fix, args.resolution)
            column = "member"
        else:
            ts, coords, V = res.section(t, axes, fix)
            column = "value"
    except (OSError, ValueError, KeyError, OutOfDomain, TltcError) as e:
        _err(str(e.args[0]) if isinstance(e, KeyError) else str(e))
        return EXIT_INVALID
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*axes, column])
    mesh = np.meshgrid(*coords, indexing="ij")
    for idx in np.ndindex(V.shape):
        w.writerow([*(repr(float(m[idx])) for m in mesh),
                    int(V[idx]) if column == "member" else repr(float(V[idx]))])
    if args.csv:
        Path(args.csv).write_text(buf.getvalue())
        _emit({"csv": args.csv, "rows": int(V.size), "time": float(ts)})
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tltc", description="Compile and realize temporal logic trees.")
    sub = p.add_subparsers(dest="command", required=True)

    def spec_args(sp):
        sp.add_argument("spec", help="specification JSON file")
        sp.add_argument("--backend", choices=("hj", "hz"), default="hj")
        sp.add_argument("--grid-profile", default=None,
                        help="named backend profile from the spec (e.g. 'full')")

    c = sub.add_parser("check", help="static compatibility and soundness check")
    spec_args(c)
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("realize", help="compute the satisfaction set")
    spec_args(r)
    r.add_argument("--out", required=True, help="result directory")
    r.add_argument("--allow-unsound", action="store_true",
                   help="realize even if the soundness check rejects the tree")
    r.set_defaults(func=cmd_realize)

    q = sub.add_parser("query", help="membership of a state in a realized set")
    q.add_argument("result", help="result directory")
    q.add_argument("--state", required=True, help="comma-separated state, e.g. '0,0'")
    q.add_argument("--time", type=float, default=None, help="real time (default t0)")
    q.set_defaults(func=cmd_query)

    s = sub.add_parser("slice", help="export a 1-D or 2-D section as CSV")
    s.add_argument("result", help="result directory")
    s.add_argument("--time", type=float, default=None)
    s.add_argument("--axes", required=True, help="one or two axis names, e.g. 'x,v'")
    s.add_argument("--fix", action="append", help="values for the other axes, e.g. 'theta=0,v=16'")
    s.add_argument("--csv", default=None, help="output path (default stdout)")
    s.add_argument("--resolution", type=int, default=41,
                   help="lattice points per axis for hybrid-zonotope results")
    s.set_defaults(func=cmd_slice)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Every parameter can come from ``--config <json>``; flags given on the command
line override the file. Exit status is 0 on success, 1 on bad input and 2 when
``verify`` (or ``dominate``) detects an invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _accel
from .cz_operator import KernelSpec, apply_T
from .domination import a2_experiment, dominate
from .dyadic_grid import DyadicCube
from .fieldio import read_field, read_json, write_csv, write_field, write_json
from .generators import make_field, make_weight, rng_from_seed
from .lerner import SparseCollection, decompose, verify_decomposition
from .sampled_field import GridSpec, SampledFunction, parse_q
from .shift_ops import ShiftSpec, apply_A
from .weights import Weight, a_infty_characteristic, ap_characteristic

COMMANDS = ("decompose", "dominate", "a2", "weights", "shift-apply", "apply-t", "verify")

DEFAULTS = {
    "format": "json",
    "out": ".",
    "seed": 0,
    "d": 1,
    "J": None,
    "root_j": 0,
    "n": 1,
    "q": "2",
    "nu": "1/2",
    "K": 8,
    "p": "2",
    "generator": "random-piecewise",
    "exponents": "0,0.3,-0.3,0.6,-0.6,0.9,-0.9",
    "oracle": False,
}


class InvariantViolation(RuntimeError):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with parameters")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--field", type=Path, help="input field header")
    common.add_argument("--generator", help="field generator spec, e.g. 'bump c=1/2 r=1/4'")
    common.add_argument("--d", type=int)
    common.add_argument("--J", type=int)
    common.add_argument("--root-j", dest="root_j", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--q")
    common.add_argument("--kernel", type=Path, help="KernelSpec JSON")

    parser = argparse.ArgumentParser(prog="sparse-dyadic", description="Sparse dyadic domination experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("decompose", parents=[common]).add_argument("--nu")
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--collection", type=Path)
    v.add_argument("--oracle", action="store_true", default=None)
    dm = sub.add_parser("dominate", parents=[common])
    dm.add_argument("--nu")
    dm.add_argument("--K", type=int)
    a2 = sub.add_parser("a2", parents=[common])
    a2.add_argument("--p")
    a2.add_argument("--exponents")
    w = sub.add_parser("weights", parents=[common])
    w.add_argument("--weight", help="weight field header or generator spec, e.g. 'power a=0.6 domain=[-1,1] J=10'")
    w.add_argument("--p", help="comma-separated exponents")
    sub.add_parser("shift-apply", parents=[common]).add_argument("--shift", type=Path)
    sub.add_parser("apply-t", parents=[common])
    return parser


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            loaded = read_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValueError("config must be a JSON object")
        cfg.update(loaded)
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
    return cfg


def _grid(cfg: dict) -> GridSpec:
    d, J = int(cfg["d"]), int(cfg["J"] if cfg["J"] is not None else 6)
    return GridSpec(DyadicCube.standard(int(cfg["root_j"]), (0,) * d), J)


def _field(cfg: dict) -> SampledFunction:
    if cfg.get("field"):
        return read_field(Path(cfg["field"]))
    rng = rng_from_seed(cfg["seed"])
    return make_field(cfg["generator"], _grid(cfg), int(cfg["n"]), parse_q(cfg["q"]), rng)


def _kernel(cfg: dict, f: SampledFunction) -> KernelSpec:
    k = cfg.get("kernel")
    if k is None:
        if f.grid.d == 1:
            return KernelSpec.hilbert(n=f.n)
        if f.n == 1:
            return KernelSpec("power_truncated", d=f.grid.d)
        return KernelSpec("matrix_composed", d=f.grid.d, n=f.n, G=np.eye(f.n))
    obj = k if isinstance(k, dict) else read_json(Path(k))
    return KernelSpec.from_json(obj)


def _emit(cfg: dict, stem: str, report: dict, rows: list[dict]) -> Path:
    out = Path(cfg["out"])
    if cfg["format"] == "csv":
        return write_csv(out / f"{stem}.csv", rows)
    return write_json(out / f"{stem}.json", report)


def cmd_decompose(cfg: dict) -> dict:
    f = _field(cfg)
    S = decompose(f, f.grid.root, Fraction(str(cfg["nu"])))
    write_json(Path(cfg["out"]) / "collection.json", S.to_json())
    rep = verify_decomposition(f, S)
    summary = {"entries": len(S), "depth": S.depth, "verification": rep.to_json()}
    _emit(cfg, "decompose", summary, S.csv_rows())
    if not rep.ok:
        raise InvariantViolation(f"decomposition fails its certificate at cell {rep.worst_cell}")
    return summary


def cmd_verify(cfg: dict) -> dict:
    if not cfg.get("collection"):
        raise ValueError("verify needs --collection")
    try:
        S = SparseCollection.from_json(read_json(Path(cfg["collection"])))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed collection: {exc}") from exc
    f = _field(cfg)
    rep = verify_decomposition(f, S, oracle=bool(cfg["oracle"]))
    report = rep.to_json()
    _emit(cfg, "verify", report, [{"violation": v} for v in rep.sparse_violations] or [{"violation": ""}])
    if not rep.ok:
        where = rep.sparse_violations[0] if rep.sparse_violations else f"cell {rep.worst_cell}"
        raise InvariantViolation(f"verification failed: {where}")
    return report


def cmd_dominate(cfg: dict) -> dict:
    f = _field(cfg)
    spec = _kernel(cfg, f)
    r = dominate(spec, f, f.grid.root, Fraction(str(cfg["nu"])), int(cfg["K"]))
    report = dict(r.to_json(), kernel=spec.to_json())
    out = Path(cfg["out"])
    write_field(out / "lhs.json", r.lhs_field)
    write_field(out / "rhs.json", r.rhs_field)
    _emit(cfg, "dominate", report, r.csv_rows())
    if r.violations:
        raise InvariantViolation(r.violations[0])
    return report


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(Fraction(s.strip())) for s in str(text).split(",") if s.strip()]


def cmd_a2(cfg: dict) -> dict:
    spec = KernelSpec.from_json(cfg["kernel"]) if isinstance(cfg.get("kernel"), dict) else KernelSpec.hilbert()
    p = _floats(cfg["p"])[0]
    exp = a2_experiment(spec, p, _floats(cfg["exponents"]), J=int(cfg["J"] if cfg["J"] is not None else 10), seed=int(cfg["seed"]))
    report = exp.to_json()
    rows = exp.csv_rows() + [{"a": "slope", "characteristic": "", "ratio": exp.fitted_slope, "p": p, "best_function": ""}]
    _emit(cfg, "a2", report, rows)
    return report


def cmd_weights(cfg: dict) -> dict:
    src = cfg.get("weight") or "power a=0.5 domain=[-1,1] J=10"
    if Path(src).suffix == ".json" and Path(src).exists():
        w = Weight(read_field(Path(src)))
    else:
        w = make_weight(src, d=int(cfg["d"]), rng=rng_from_seed(cfg["seed"]))
    rows, reports = [], []
    for p in _floats(cfg["p"]):
        ap = ap_characteristic(w, p)
        reports.append(ap.to_json())
        rows.append({"p": p, "value": ap.value, "argmax": str(ap.argmax_cube.to_json()), "family_size": ap.cube_family_size})
    ainf = a_infty_characteristic(w)
    rows.append({"p": "inf", "value": ainf.value, "argmax": str(ainf.argmax_cube.to_json()), "family_size": ainf.cube_family_size})
    report = {"weight": src, "ap": reports, "a_infty": ainf.to_json()}
    _emit(cfg, "weights", report, rows)
    return report


def cmd_shift_apply(cfg: dict) -> dict:
    if not cfg.get("shift"):
        raise ValueError("shift-apply needs --shift")
    spec = ShiftSpec.from_json(read_json(Path(cfg["shift"])))
    f = _field(cfg)
    g = apply_A(spec, f)
    path = write_field(Path(cfg["out"]) / "shift.json", g, "csv" if cfg["format"] == "csv" else "f8le")
    return {"output": str(path), "cubes": len(spec.cubes), "k": spec.k}


def cmd_apply_t(cfg: dict) -> dict:
    f = _field(cfg)
    spec = _kernel(cfg, f)
    Tf = apply_T(spec, f)
    path = write_field(Path(cfg["out"]) / "tf.json", Tf, "csv" if cfg["format"] == "csv" else "f8le")
    return {"output": str(path), "kernel": spec.to_json()}


HANDLERS = {
    "decompose": cmd_decompose,
    "verify": cmd_verify,
    "dominate": cmd_dominate,
    "a2": cmd_a2,
    "weights": cmd_weights,
    "shift-apply": cmd_shift_apply,
    "apply-t": cmd_apply_t,
}


def run(cfg: dict) -> int:
    try:
        result = HANDLERS[cfg["command"]](cfg)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, json.JSONDecodeError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"command": cfg["command"], "status": "ok", "keys": sorted(result)}, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    _accel.set_threads()
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

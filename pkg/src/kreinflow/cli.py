"""Command-line front end.

Subcommands read a JSON config (``--config``), run one computation and write
a JSON report (or CSV tables with ``--format csv``).  With ``--trace`` the
flow commands emit eigenphase trajectories: in CSV the first column is the
path parameter and the remaining columns are the sorted eigenphases.

Exit codes: 0 success, 1 input error, 2 spectral-gap error, 3 non-transversal
path.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import junitary, models, specflow
from .errors import InputError, KreinError
from .krein_core import standard_j, symmetry_from_json
from .lagrangian import act_on_frame, lagrangian_frame
from .numerics import DEFAULT_TOL, Tolerances, matrix_exp, matrix_from_json

EXIT_HELP = "exit codes: 0 ok, 1 input error, 2 spectral-gap error, 3 non-transversal path"
CSV_HELP = "CSV trajectories: column 1 is the parameter, then sorted eigenphases"


# --- config parsing --------------------------------------------------------

def _strict(cfg: dict, allowed: set, where: str) -> dict:
    if not isinstance(cfg, dict):
        raise InputError(f"{where}: expected a JSON object")
    extra = set(cfg) - allowed
    if extra:
        raise InputError(f"{where}: unknown keys {sorted(extra)}")
    return cfg


def _need(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise InputError(f"{where}: missing key {key!r}")
    return cfg[key]


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{where}: expected a number")
    return float(x)


def _matrix(cfg, key, where):
    try:
        return matrix_from_json(_need(cfg, key, where))
    except InputError as exc:
        raise InputError(f"{where}.{key}: {exc}") from None


def _symmetry(cfg, dim: int, where: str):
    if "symmetry" not in cfg:
        if dim % 2:
            raise InputError(f"{where}: odd dimension needs an explicit symmetry")
        return standard_j(dim // 2)
    try:
        sym = symmetry_from_json(cfg["symmetry"])
    except (InputError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}.symmetry: {exc}") from None
    if sym.dim != dim:
        raise InputError(f"{where}: symmetry dimension {sym.dim} does not match {dim}")
    return sym


def _operator(cfg, rng, tol, where):
    """Either an explicit matrix or {"random": {"n": n, "scale": s}}."""
    if "random" in cfg:
        spec = _strict(cfg["random"], {"n", "scale"}, f"{where}.random")
        n = int(_number(_need(spec, "n", f"{where}.random"), f"{where}.random.n"))
        return junitary.random_junitary(standard_j(n), rng, spec.get("scale", 0.6))
    m = _matrix(cfg, "matrix", where)
    return junitary.validate(m, _symmetry(cfg, m.shape[0], where), tol)


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config line {exc.lineno} col {exc.colno}: {exc.msg}") from None


def _tolerances(pairs) -> Tolerances:
    values = {}
    for item in pairs or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            values[name] = type(getattr(DEFAULT_TOL, name, 0.0))(float(val))
        except ValueError:
            raise InputError(f"--tol {name}: not a number") from None
    return DEFAULT_TOL.with_overrides(**values)


# --- commands --------------------------------------------------------------

def cmd_sig(cfg, rng, tol, args):
    where = "sig"
    _strict(cfg, {"model", "matrix", "symmetry", "random", "h"}, where)
    op = _operator(cfg, rng, tol, where)
    intervals = junitary.admissible_h_intervals(op, tol)
    h = cfg.get("h")
    h = junitary.default_h(op, tol) if h is None else _number(h, f"{where}.h")
    split = junitary.spectral_split(op, h, tol)
    sig = junitary.signature_of_split(split, tol)
    report = {"split": split.to_json(tol), "signature": sig, "summary": f"Sig = {sig}",
              "admissible_h": [list(iv) for iv in intervals],
              "symmetry": {"kind": op.symmetry.kind, "n_plus": op.symmetry.n_plus,
                           "n_minus": op.symmetry.n_minus}}
    rows = [["re", "im", "multiplicity", "class", "nu_plus", "nu_minus", "nu_zero"]]
    for g in report["split"]["groups"]:
        rows.append([g["re"], g["im"], g["multiplicity"], g["class"], *g["inertia"]])
    return report, rows


def _flow_gamma(cfg, rng, tol, where):
    _strict(cfg, {"model", "path", "matrix", "symmetry", "random", "example"}, where)
    if "example" in cfg:
        spec = _example_spec(cfg["example"], f"{where}.example")
        op, _ = models.example_2x2(spec)
    else:
        op = _operator(cfg, rng, tol, where)
    return specflow.spectral_flow(specflow.rotation_loop(op, tol), tol)


def _flow_bound_states(cfg, rng, tol, where):
    _strict(cfg, {"model", "path", "H", "random", "interval"}, where)
    h = _hermitian(cfg, rng, where)
    _, rep = models.bound_state_count(h, _interval(cfg, where), tol, report=True)
    return rep


def _flow_shift(cfg, rng, tol, where):
    _strict(cfg, {"model", "path", "N", "r"}, where)
    n = int(_number(cfg.get("N", 32), f"{where}.N"))
    r = _number(cfg.get("r", 0.5), f"{where}.r")
    ev, _ = models.shift_loop(n, r, tol)
    return specflow.intersection_index(ev, 1.0, 0.0, 2 * np.pi, True, tol)


def _flow_harper(cfg, rng, tol, where):
    problem = _harper_problem(cfg, where, extra={"path"})
    _, crossings = models.harper_flow_oracle(problem)
    return models.flow_report_from_crossings(crossings)


def _flow_hamiltonian(cfg, rng, tol, where):
    _strict(cfg, {"model", "path", "H", "P", "E", "T0", "symmetry", "t_range", "dt", "z"},
            where)
    h = _matrix(cfg, "H", where)
    p = _matrix(cfg, "P", where) if "P" in cfg else np.zeros_like(h)
    sym = _symmetry(cfg, h.shape[0], where)
    t0 = junitary.validate(_matrix(cfg, "T0", where) if "T0" in cfg else np.eye(h.shape[0]),
                           sym, tol)
    lo, hi = _interval(cfg, where, key="t_range")
    dt = _number(cfg.get("dt", 1e-3), f"{where}.dt")
    z = cfg.get("z", [1.0, 0.0])
    z = complex(_number(z[0], f"{where}.z"), _number(z[1], f"{where}.z"))
    path = models.hamiltonian_flow(h, p, _number(cfg.get("E", 0.0), f"{where}.E"),
                                   t0, (lo, hi), dt, tol)
    return specflow.intersection_index(path, z, lo, hi, False, tol)


FLOW_PATHS = {
    "gamma_T": _flow_gamma,
    "bound_states": _flow_bound_states,
    "shift_loop": _flow_shift,
    "harper": _flow_harper,
    "hamiltonian": _flow_hamiltonian,
}


def _flow_rows(rep, trace):
    if trace:
        k = rep.phases.shape[1] if rep.phases.ndim == 2 else 0
        rows = [["t"] + [f"phase_{i + 1}" for i in range(k)]]
        rows += [[float(t), *map(float, row)] for t, row in zip(rep.ts, rep.phases)]
        return rows
    rows = [["t_star", "l", "n_minus", "n_plus", "p_minus", "p_plus", "signature"]]
    for c in rep.crossings:
        rows.append([c.t_star, c.l, c.n_minus, c.n_plus, c.p_minus, c.p_plus, c.signature])
    return rows


def cmd_flow(cfg, rng, tol, args):
    kind = _need(cfg, "path", "flow")
    if kind not in FLOW_PATHS:
        raise InputError(f"flow.path: unknown path {kind!r}; choose from {sorted(FLOW_PATHS)}")
    rep = FLOW_PATHS[kind](cfg, rng, tol, f"flow[{kind}]")
    return {"path": kind, "flow": rep.to_json(args.trace)}, _flow_rows(rep, args.trace)


def cmd_bottmaslov(cfg, rng, tol, args):
    """Path t -> exp(t iJH) . Phi0 against the reference Psi."""
    where = "bottmaslov"
    _strict(cfg, {"model", "psi", "phi0", "generator", "symmetry", "t_range", "closed"}, where)
    psi_m = _matrix(cfg, "psi", where)
    sym = _symmetry(cfg, psi_m.shape[0], where)
    psi = lagrangian_frame(psi_m, sym, tol)
    phi0 = lagrangian_frame(_matrix(cfg, "phi0", where), sym, tol) if "phi0" in cfg else psi
    gen = _matrix(cfg, "generator", where)
    if np.abs(gen - gen.conj().T).max() > 1e-10:
        raise InputError(f"{where}.generator must be Hermitian")
    x = 1j * sym.matrix @ gen
    lo, hi = _interval(cfg, where, key="t_range")
    closed = bool(cfg.get("closed", False))
    rep = specflow.bott_maslov(lambda t: act_on_frame(matrix_exp(t * x), phi0), psi,
                               lo, hi, closed, tol)
    return {"flow": rep.to_json(args.trace)}, _flow_rows(rep, args.trace)


def _hermitian(cfg, rng, where):
    if "random" in cfg:
        spec = _strict(cfg["random"], {"n"}, f"{where}.random")
        n = int(_number(_need(spec, "n", f"{where}.random"), f"{where}.random.n"))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        return (a + a.conj().T) / 2
    return _matrix(cfg, "H", where)


def _interval(cfg, where, key="interval"):
    iv = _need(cfg, key, where)
    if not isinstance(iv, list) or len(iv) != 2:
        raise InputError(f"{where}.{key}: expected [lo, hi]")
    return _number(iv[0], f"{where}.{key}[0]"), _number(iv[1], f"{where}.{key}[1]")


def cmd_bound_states(cfg, rng, tol, args):
    where = "bound-states"
    _strict(cfg, {"model", "H", "random", "interval"}, where)
    h = _hermitian(cfg, rng, where)
    lo, hi = _interval(cfg, where)
    count, rep = models.bound_state_count(h, (lo, hi), tol, report=True)
    w = np.linalg.eigvalsh((h + h.conj().T) / 2)
    direct = int(np.sum((w > lo) & (w < hi)))
    report = {"count": count, "direct_count": direct, "interval": [lo, hi],
              "flow": rep.to_json(args.trace)}
    return report, _flow_rows(rep, args.trace)


def _harper_problem(cfg, where, extra=frozenset()):
    _strict(cfg, {"model", "p", "q", "E", "grid", "N", "boundary"} | set(extra), where)
    p = int(_number(_need(cfg, "p", where), f"{where}.p"))
    q = int(_number(_need(cfg, "q", where), f"{where}.q"))
    E = _number(_need(cfg, "E", where), f"{where}.E")
    grid = int(_number(cfg.get("grid", 2048), f"{where}.grid"))
    n = cfg.get("N")
    b = cfg.get("boundary", [1.0, 0.0])
    if not isinstance(b, list) or len(b) != 2:
        raise InputError(f"{where}.boundary: expected [b1, b2]")
    return models.HarperEdgeProblem(p, q, E, grid, None if n is None else int(n),
                                    (float(b[0]), float(b[1])))


def cmd_harper(cfg, rng, tol, args):
    problem = _harper_problem(cfg, "harper")
    count, roots = models.harper_edge_count(problem, tol)
    oracle, _ = models.harper_flow_oracle(problem)
    report = {"weighted_count": count, "oracle_flow": oracle,
              "roots": [{"phi": r.phi, "kappa": r.kappa, "sign": r.sign} for r in roots],
              "gaps": [list(g) for g in models.bulk_gaps(problem.p, problem.q)]}
    rows = [["phi", "kappa", "sign"]] + [[r.phi, r.kappa, r.sign] for r in roots]
    return report, rows


def _example_spec(cfg, where):
    _strict(cfg, {"kind", "phi", "eta", "a", "E"}, where)
    kind = _need(cfg, "kind", where)
    if kind not in models.KINDS:
        raise InputError(f"{where}.kind: choose from {list(models.KINDS)}")
    vals = {k: _number(cfg.get(k, 0.0), f"{where}.{k}") for k in ("phi", "eta", "a", "E")}
    return models.TwoByTwoExample(kind, **vals)


DEFAULT_EXAMPLES = [
    {"kind": "boost", "phi": 0.0, "eta": 1.0},
    {"kind": "rotation", "phi": 0.3, "eta": 0.7},
    {"kind": "jordan", "phi": 0.4, "a": 0.5},
    {"kind": "family-E", "E": 0.5},
    {"kind": "family-E", "E": 2.0},
]


def cmd_examples(cfg, rng, tol, args):
    _strict(cfg, {"model", "examples", "samples"}, "examples")
    specs = cfg.get("examples", DEFAULT_EXAMPLES)
    samples = int(_number(cfg.get("samples", 256), "examples.samples"))
    out, rows = [], [["kind", "phi", "eta", "a", "E", "max_deviation", "flow", "crossings"]]
    for i, raw in enumerate(specs):
        spec = _example_spec(raw, f"examples[{i}]")
        op, closed = models.example_2x2(spec)
        dev = models.closed_form_deviation(op, closed, samples, tol)
        rep = specflow.spectral_flow(specflow.rotation_loop(op, tol), tol)
        out.append({"kind": spec.kind, "phi": spec.phi, "eta": spec.eta, "a": spec.a,
                    "E": spec.E, "max_deviation": dev, "flow": rep.to_json(False)})
        rows.append([spec.kind, spec.phi, spec.eta, spec.a, spec.E, dev, rep.total,
                     len(rep.crossings)])
    return {"examples": out}, rows


def cmd_selfcheck(cfg, rng, tol, args):
    _strict(cfg, {"model", "trials"}, "selfcheck")
    trials = int(_number(cfg.get("trials", 5), "selfcheck.trials"))
    results = _selfcheck(rng, trials, tol)
    report = {"checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in results],
              "passed": all(ok for _, ok, _ in results)}
    rows = [["name", "passed", "detail"]] + [[n, ok, d] for n, ok, d in results]
    return report, rows


def _selfcheck(rng, trials, tol):
    from . import vmap

    out = []
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = (a + a.conj().T) / 2
        lo, hi = np.sort(rng.uniform(-4, 4, 2))
        w = np.linalg.eigvalsh(h)
        if np.min(np.abs(np.r_[w - lo, w - hi])) < 1e-6:
            continue
        bad += models.bound_state_count(h, (lo, hi), tol) != int(np.sum((w > lo) & (w < hi)))
    out.append(("bound_states", bad == 0, f"{bad} mismatches"))

    op = models.unbalanced_example(0.5 * np.exp(0.4j), 0.9)
    sig = junitary.signature(op, 0.3, tol)
    out.append(("unbalanced_signature", sig == 1, f"Sig = {sig}"))

    worst = 0.0
    for _ in range(trials):
        t = junitary.random_junitary(standard_j(3), rng, 0.6)
        v = vmap.v_of(t, tol)
        worst = max(worst, vmap.norm_diff(vmap.re_v(t), (v + v.conj().T) / 2),
                    vmap.norm_diff(v.conj().T, vmap.v_of(t.inverse(), tol)))
    out.append(("v_algebra", worst <= 1e-9, f"max residual {worst:.2e}"))

    worst = 0.0
    for raw in DEFAULT_EXAMPLES:
        op, closed = models.example_2x2(_example_spec(raw, "selfcheck"))
        worst = max(worst, models.closed_form_deviation(op, closed, 64, tol))
    out.append(("catalog_closed_forms", worst <= 1e-9, f"max deviation {worst:.2e}"))

    ev, _ = models.shift_loop(32, 0.5, tol)
    total = specflow.intersection_index(ev, 1.0, 0.0, 2 * np.pi, True, tol).total
    out.append(("shift_loop", total == 2, f"IN = {total}"))
    return out


COMMANDS = {
    "sig": cmd_sig,
    "flow": cmd_flow,
    "bottmaslov": cmd_bottmaslov,
    "bound-states": cmd_bound_states,
    "harper": cmd_harper,
    "examples": cmd_examples,
    "selfcheck": cmd_selfcheck,
}


# --- output ----------------------------------------------------------------

def _to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kreinflow", description="Invariants of J-unitary operators.",
        epilog=f"{EXIT_HELP}. {CSV_HELP}.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, epilog=f"{EXIT_HELP}. {CSV_HELP}.")
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--trace", action="store_true", help="include eigenphase trajectories")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", action="append", metavar="NAME=VALUE", default=[])
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = _tolerances(args.tol)
        cfg = _load_config(args.config)
        if isinstance(cfg, dict) and "model" in cfg and cfg["model"] not in (
                args.command, args.command.replace("-", "_"), cfg.get("path")):
            raise InputError(f"config is for model {cfg['model']!r}, not {args.command!r}")
        rng = np.random.default_rng(args.seed)
        report, rows = COMMANDS[args.command](cfg, rng, tol, args)
    except KreinError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        for attr in ("t", "admissible"):
            val = getattr(exc, attr, None)
            if val not in (None, []):
                err[attr] = val if attr == "t" else [list(v) for v in val]
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return exc.exit_code
    if args.format == "csv":
        text = _to_csv(rows)
    else:
        header = {"command": args.command, "seed": args.seed,
                  "tolerance_overrides": sorted(args.tol)}
        text = json.dumps({"header": header, "report": report}, sort_keys=True, indent=2) + "\n"
    _emit(text, args.out)
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

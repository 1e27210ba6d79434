"""Command-line front end.

Exit codes: 0 success, 1 a checked condition failed, 2 bad input,
3 synthesis retries exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys as _sys
from pathlib import Path

import numpy as np

from . import __version__
from . import catalog
from . import extend as ex
from . import linmath as lm
from . import mcsys as ms
from . import setpoint as sp
from . import sim
from . import synth as sy
from .errors import DomainError, InvalidInputError, ResourceError, SynthesisError
from .graphs import DelayedGraph, graph_to_dict, load_graph

EXIT_OK, EXIT_CONDITION, EXIT_INPUT, EXIT_RETRIES = 0, 1, 2, 3

log = logging.getLogger("distctl")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _header(args, command) -> dict:
    return {
        "tool": "distctl",
        "version": __version__,
        "command": command,
        "seed": getattr(args, "seed", 0),
        "tolerances": {
            "rank_tol": args.tol,
            "pencil_rtol": ms.PENCIL_RTOL,
            "markov_rtol": ms.MARKOV_RTOL,
            "spectrum_rtol": sy.SPECTRUM_RTOL,
        },
    }


def _emit(args, report: dict, table: str, files: dict | None = None):
    """Print the table (or JSON) and write files under --out."""
    if args.json:
        print(_dump(report))
    else:
        print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(_dump(report) + "\n")
        for name, content in (files or {}).items():
            path = out / name
            if callable(content):
                content(path)
            else:
                path.write_text(content)


def _load_system(path):
    try:
        return ms.load_system(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read system file {path}: {exc}") from exc


def _load_graph(path):
    try:
        return load_graph(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read graph file {path}: {exc}") from exc


def _base(graph):
    return graph.graph if isinstance(graph, DelayedGraph) else graph


def _fmt(z) -> str:
    z = complex(z)
    return f"{z.real:.6g}" if z.imag == 0 else f"{z.real:.6g}{z.imag:+.6g}j"


def _parse_list(text, kind=float):
    text = text.strip()
    if text.startswith("["):
        return [kind(v) for v in json.loads(text)]
    return [kind(v) for v in text.split(",") if v.strip()]


def _parse_hold(text, m):
    t = text.strip().lower()
    if t == "all":
        return list(range(1, m + 1))
    if t == "none":
        return []
    return sorted(set(_parse_list(text, int)))


# ---------------------------------------------------------------- commands

def cmd_analyze(args) -> int:
    sys = _load_system(args.system)
    if args.share:
        if not args.graph:
            raise InvalidInputError("--share needs --graph")
        sys = catalog.output_sharing(sys, _base(_load_graph(args.graph)))
    rep = ms.fixed_spectrum(sys, tol=args.tol)
    tg = ms.transfer_graph(sys)
    report = _header(args, "analyze")
    report.update({
        "fixed_spectrum": rep.to_dict(),
        "jointly_controllable": ms.jointly_controllable(sys),
        "jointly_observable": ms.jointly_observable(sys),
        "transfer_graph": graph_to_dict(tg),
    })
    lines = [f"n={sys.n} m={sys.m} fixed eigenvalues: "
             + (", ".join(_fmt(z) for z in rep.fixed_eigenvalues) or "none"),
             f"deficiency r={rep.deficiency_r}"]
    if rep.witnesses:
        lines.append(f"{'lambda':>14}  {'subset s':<12} rank")
        for lam, ws in rep.witnesses.items():
            for w in ws:
                lines.append(f"{_fmt(lam):>14}  {str(set(w.subset)):<12} {w.rank}")
    lines.append(f"transfer arcs: {tg.sorted_arcs()}")
    _emit(args, report, "\n".join(lines))
    return EXIT_OK


def _report_lines(cond: ex.ConditionReport, lifted: ex.LiftedSystem) -> str:
    lines = [f"{lifted.kind}: dimension {lifted.n}, n_i={lifted.n_i}, d_i={lifted.lags}",
             f"condition {cond.checked_condition}: {'holds' if cond.verdict else 'FAILS'}"]
    for s, lam, rank in cond.failing_subsets:
        lines.append(f"  fixed at {_fmt(lam)} witnessed by s={set(s)} rank {rank}")
    for key in ("controller_dimension", "holding_increase", "fixed_at_zero"):
        if key in cond.details:
            lines.append(f"  {key}: {cond.details[key]}")
    return "\n".join(lines)


def cmd_extend(args) -> int:
    sys = _load_system(args.system)
    graph = _base(_load_graph(args.graph))
    n_i = ex.resolve_dimensions(sys, args.ni)
    lifted = ex.build_extension(sys, graph, n_i)
    cond = ex.check_extension(sys, graph, n_i)
    report = _header(args, "extend")
    report.update({"condition": cond.to_dict(), "lifted": lifted.to_dict()})
    _emit(args, report, _report_lines(cond, lifted),
          {"lifted.json": _dump(lifted.to_dict()) + "\n"})
    return EXIT_OK if cond.verdict else EXIT_CONDITION


def cmd_lift(args) -> int:
    sys = _load_system(args.system)
    graph = _load_graph(args.graph)
    if not isinstance(graph, DelayedGraph):
        graph = DelayedGraph(graph, {})
    n_i = ex.resolve_dimensions(sys, args.ni)
    hold = _parse_hold(args.hold, sys.m)
    if not hold:
        cond = ex.check_delay_nonzero_fixed(sys, graph, n_i)
    elif len(hold) == sys.m:
        cond = ex.check_state_holding_no_fixed(sys, graph, n_i)
    else:
        cond = ex.check_selective_holding(sys, graph, n_i, hold)
    lifted = ex.build_holding_lift(sys, graph, n_i, hold)
    report = _header(args, "lift")
    report.update({"condition": cond.to_dict(), "lifted": lifted.to_dict()})
    _emit(args, report, _report_lines(cond, lifted), {"lifted.json": _dump(lifted.to_dict()) + "\n"})
    return EXIT_OK if cond.verdict else EXIT_CONDITION


def _eigen_report(cl: sim.ClosedLoop) -> dict:
    ev = lm.spectrum(cl.M)
    ev = sorted(ev, key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    return {"eigenvalues": [ms._complex_json(z) for z in ev], **sim.summary(cl)}


def _closed_loop(ctrl):
    E, Y, q = sp.plant_maps(ctrl)
    cl = sim.assemble_closed_loop(ctrl, E, Y, q)
    meta = ctrl.certificate.get("setpoint")
    if meta:
        cl.n_report = int(meta["n"])
    return cl


def cmd_synth(args) -> int:
    sys = _load_system(args.system)
    graph = _load_graph(args.graph)
    alpha, rho = args.alpha, args.rho
    if args.method == "observer-based":
        ctrl = sy.assemble_observer_controller(sys, _base(graph), q=args.q or 1, alpha=alpha, rho=rho,
                                               seed=args.seed, mode=args.mode)
    else:
        hold = None if args.hold is None else _parse_hold(args.hold, sys.m)
        ctrl = sy.observer_free_synthesis(sys, graph, args.ni, q=args.q, alpha=alpha, rho=rho,
                                          seed=args.seed, mode=args.mode, holding=hold)
    cl = _closed_loop(ctrl)
    eig = _eigen_report(cl)
    report = _header(args, "synth")
    report.update({"controller": ctrl.to_dict(), "closed_loop": eig})
    bound = (f"abscissa {eig['spectral_abscissa']:.6g} (alpha={alpha})" if sys.domain == ms.CONTINUOUS
             else f"radius {eig['spectral_radius']:.6g} (rho={rho})")
    table = (f"{ctrl.kind} controller, channel q={ctrl.q}, compensator order {ctrl.compensator.order}\n"
             f"closed-loop dimension {cl.dim}, {bound}")
    _emit(args, report, table, {"controller.json": _dump(ctrl.to_dict()) + "\n"})
    ok = (eig["spectral_abscissa"] <= -alpha + 1e-9) if sys.domain == ms.CONTINUOUS \
        else (eig["spectral_radius"] <= rho + 1e-9)
    return EXIT_OK if ok else EXIT_CONDITION


def _horizon(args, domain):
    if domain == ms.DISCRETE:
        return float(args.T if args.T is not None else 50), 1.0
    T = args.T if args.T is not None else 20.0 / args.alpha
    return float(T), float(args.dt)


def _x0(args, dim):
    if args.x0:
        x0 = np.array(_parse_list(args.x0), dtype=float)
        return np.full(dim, x0[0]) if x0.size == 1 else x0
    return np.random.default_rng(args.seed).standard_normal(dim)


def cmd_setpoint(args) -> int:
    sys = _load_system(args.system)
    graph = _load_graph(args.graph)
    r = _parse_list(args.r)
    prob = sp.SetpointProblem(sys, r)
    feas = sp.check_setpoint_feasible(prob)
    report = _header(args, "setpoint")
    report["feasibility"] = feas.to_dict()
    if not feas.verdict:
        _emit(args, report, f"infeasible: rank {feas.details['rank']} < {feas.details['required']}")
        return EXIT_CONDITION
    method = sy.OBSERVER_BASED if args.method == "observer-based" else sy.OBSERVER_FREE
    n_i = args.ni if args.ni != "r" or method == sy.OBSERVER_BASED else 1
    sol = sp.solve_setpoint(prob, graph if method == sy.OBSERVER_FREE else _base(graph), method=method,
                            alpha=args.alpha, rho=args.rho, seed=args.seed, q=args.q, n_i=n_i, mode=args.mode)
    T, dt = _horizon(args, sys.domain)
    traj = sim.simulate(sol.closed_loop, np.zeros(sol.closed_loop.dim), T, dt, w=prob.r)
    y_eq, resid = sp.steady_outputs(sol, prob.r)
    err = np.abs(traj.outputs[-1] - prob.r)
    report.update({"controller": sol.controller.to_dict(), "closed_loop": _eigen_report(sol.closed_loop),
                   "reference": prob.r.tolist(), "final_outputs": traj.outputs[-1].tolist(),
                   "final_errors": err.tolist(), "equilibrium_outputs": y_eq.tolist(),
                   "equilibrium_residual": resid, "horizon": T})
    lines = [f"{'agent':>5} {'r_i':>10} {'y_i(T)':>14} {'|y_i-r_i|':>12}"]
    for i, (ri, yi, e) in enumerate(zip(prob.r, traj.outputs[-1], err), start=1):
        lines.append(f"{i:>5} {ri:>10.6g} {yi:>14.8g} {e:>12.3e}")
    _emit(args, report, "\n".join(lines), {"controller.json": _dump(sol.controller.to_dict()) + "\n",
                                           "trajectory.csv": traj.to_csv})
    return EXIT_OK if np.all(err <= 1e-3) else EXIT_CONDITION


def cmd_simulate(args) -> int:
    try:
        data = json.loads(Path(args.controller).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read controller file {args.controller}: {exc}") from exc
    ctrl = sy.DistributedController.from_dict(data.get("controller", data))
    if args.system:
        sys = _load_system(args.system)
        meta = ctrl.certificate.get("setpoint")
        plant = ctrl.plant
        same = (np.allclose(sys.A, plant.A[:sys.n, :sys.n]) if meta else
                sys.n == plant.n and np.allclose(sys.A, plant.A))
        if not same:
            raise InvalidInputError("controller was designed for a different plant")
    cl = _closed_loop(ctrl)
    T, dt = _horizon(args, ctrl.plant.domain)
    w = None
    meta = ctrl.certificate.get("setpoint")
    if meta:
        w = _parse_list(args.r) if args.r else meta["reference"]
    traj = sim.simulate(cl, _x0(args, cl.dim), T, dt, w=w)
    offset = None
    if w is not None:
        offset, _ = sim.equilibrium(cl, w)
    rate, clamped = sim.fit_decay(traj, offset=offset)
    report = _header(args, "simulate")
    report.update({"summary": {**sim.summary(cl), "decay_rate": rate, "decay_fit_clamped": clamped,
                               "final_state_norm": float(np.linalg.norm(traj.states[-1])),
                               "final_outputs": traj.outputs[-1].tolist(), "horizon": T, "dt": dt}})
    table = f"simulated {len(traj.times) - 1} steps, decay rate estimate {rate:.6g}"
    _emit(args, report, table, {"trajectory.csv": traj.to_csv})
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distctl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"distctl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp_, system=True, graph=True):
        if system:
            sp_.add_argument("--system", required=True, help="system JSON")
        if graph:
            sp_.add_argument("--graph", required=True, help="graph JSON (arcs, optional delays)")
        sp_.add_argument("--tol", type=float, default=None, help="absolute rank tolerance")
        sp_.add_argument("--seed", type=int, default=0)
        sp_.add_argument("--json", action="store_true", help="print the JSON report")
        sp_.add_argument("--out", default=None, help="directory for output files")

    a = sub.add_parser("analyze", help="fixed spectrum and transfer graph")
    common(a, graph=False)
    a.add_argument("--graph", default=None)
    a.add_argument("--share", action="store_true", help="stack neighbors' outputs into each channel")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("extend", help="integrator extension and its condition check")
    common(e)
    e.add_argument("--ni", default="r", help="'r', an integer, or a comma list")
    e.set_defaults(func=cmd_extend)

    lf = sub.add_parser("lift", help="delay lift with optional state holding")
    common(lf)
    lf.add_argument("--ni", default="r")
    lf.add_argument("--hold", default="none", help="all | none | comma list of agents")
    lf.set_defaults(func=cmd_lift)

    def design(sp_):
        sp_.add_argument("--method", choices=["observer-based", "observer-free"], default="observer-based")
        sp_.add_argument("--alpha", type=float, default=1.0, help="continuous decay rate")
        sp_.add_argument("--rho", type=float, default=0.5, help="discrete spectral radius bound")
        sp_.add_argument("--q", type=int, default=None, help="channel carrying the compensator")
        sp_.add_argument("--mode", choices=[sy.FULL, sy.MINIMAL], default=sy.FULL)
        sp_.add_argument("--ni", default="r")
        sp_.add_argument("--hold", default=None)

    s = sub.add_parser("synth", help="design a distributed controller")
    common(s)
    design(s)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("setpoint", help="set-point regulation")
    common(t)
    design(t)
    t.add_argument("--r", required=True, help="references as a JSON array or comma list")
    t.add_argument("--T", type=float, default=None)
    t.add_argument("--dt", type=float, default=0.01)
    t.set_defaults(func=cmd_setpoint)

    m = sub.add_parser("simulate", help="simulate a saved controller")
    common(m, system=False, graph=False)
    m.add_argument("--controller", required=True)
    m.add_argument("--system", default=None, help="optional plant file to check against")
    m.add_argument("--T", type=float, default=None)
    m.add_argument("--dt", type=float, default=0.01)
    m.add_argument("--alpha", type=float, default=1.0, help="sets the default horizon 20/alpha")
    m.add_argument("--x0", default=None)
    m.add_argument("--r", default=None)
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SynthesisError as exc:
        print(f"synthesis failed: {exc}", file=_sys.stderr)
        return EXIT_RETRIES
    except DomainError as exc:
        print(f"condition failed: {exc}", file=_sys.stderr)
        return EXIT_CONDITION
    except (InvalidInputError, ResourceError) as exc:
        print(f"input error: {exc}", file=_sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())

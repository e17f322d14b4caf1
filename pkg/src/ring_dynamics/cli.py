"""Command line interface: ``ring-dynamics eval|integrate|search|verify|wire``.

Exit codes: 0 success, 1 violation or non-convergence, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import sys as _sys
import time
from pathlib import Path

import numpy as np

from . import io, plotting
from .config import RunConfig
from .dynamics import (EVENT_KINDS, PlanarState, ReducedState, SpatialState, Until,
                       circular_state, integrate_planar, integrate_reduced,
                       integrate_spatial)
from .errors import (ConfigError, IntegrationTimeout, PreconditionError, RingDynamicsError,
                     SearchBracketError, SourceCollisionError)
from .potential import (EulerSystem, RingSystem, euler_force, euler_potential, evaluate,
                        measure_wire_constant, quadrature_force, quadrature_potential)
from .search import (axis_crossings, find_far_orbit, find_near_orbit, find_spiral,
                     search_eight_family)
from .verify import (Interval, Report, check_field_pointing, check_return_time,
                     check_trajectory_pointing, default_pointing_grid, hill_radius,
                     random_launches, scalar_ode_lemmas, upper_half_arcs)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
ACCEPT_SIMPLE = 1e-8    # closure acceptance for far and near orbits
ACCEPT_ASSEMBLED = 1e-7  # figure eights (4 tau) and spiral orbits (q tau)
DEFAULT_DELTAS = (-0.25, -0.5, -1.0)


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma separated numbers, got {text!r}") from None


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    over = {}
    for flag, key in (("radius", "system__radius"), ("mass", "system__mass"),
                      ("rtol", "integrator__rtol"), ("atol", "integrator__atol"),
                      ("method", "integrator__method"), ("eps", "search__eps"),
                      ("K", "search__K"), ("family", "search__family"),
                      ("qmax", "search__q_max"), ("seed", "verify__seed"),
                      ("formats", "output__formats")):
        if hasattr(args, flag):
            over[key] = getattr(args, flag)
    if getattr(args, "euler", False):
        over["system__type"] = "euler"
    return cfg.override(**over)


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------

def cmd_eval(args) -> int:
    cfg = _load_config(args)
    p = _floats(args.at)
    system = cfg.system()
    if isinstance(system, EulerSystem):
        if len(p) not in (2, 3):
            raise UsageError("--at needs x,y for the Euler system")
        q = (p[0], p[1])
        v = euler_potential(system, q)
        f = euler_force(system, q)
        print(f"V = {io.format_float(v)}")
        print(f"F = ({io.format_float(f[0])}, {io.format_float(f[1])})")
        return EXIT_OK
    if len(p) != 3:
        raise UsageError("--at needs x,y,z")
    s = evaluate(system, p)
    print(f"V = {io.format_float(s.potential)}")
    print("F = (" + ", ".join(io.format_float(c) for c in s.force) + ")")
    print(f"distance to source = {io.format_float(s.distance_to_source)}")
    if s.near_source:
        print("warning: point is close to the source; accuracy degrades")
    if args.oracle:
        vq = quadrature_potential(system, p)
        fq = quadrature_force(system, p)
        rel_v = abs(vq - s.potential) / abs(s.potential)
        rel_f = float(np.max(np.abs(fq - np.array(s.force)))) / max(float(np.max(np.abs(fq))), 1e-300)
        print(f"AGM V = {io.format_float(s.potential)}")
        print(f"quadrature V = {io.format_float(vq)}")
        print(f"relative difference V = {rel_v:.3e}")
        print(f"relative difference F = {rel_f:.3e}")
        if max(rel_v, rel_f) > 1e-10:
            return EXIT_FAIL
    return EXIT_OK


# --------------------------------------------------------------------------
# integrate
# --------------------------------------------------------------------------

def _parse_until(tokens: list[str]) -> Until:
    if len(tokens) < 2:
        raise UsageError("--until takes 'time T' or 'event KIND [T_MAX]'")
    if tokens[0] == "time":
        return Until(float(tokens[1]))
    if tokens[0] == "event":
        kind = tokens[1]
        if kind not in EVENT_KINDS:
            raise UsageError(f"unknown event {kind!r}; choose from {', '.join(EVENT_KINDS)}")
        t_max = float(tokens[2]) if len(tokens) > 2 else 1e3
        return Until(t_max, kind)
    raise UsageError("--until takes 'time T' or 'event KIND [T_MAX]'")


def cmd_integrate(args) -> int:
    cfg = _load_config(args)
    system = cfg.system()
    config = cfg.integrator()
    until = _parse_until(args.until)
    if args.circular is not None:
        if not isinstance(system, RingSystem):
            raise UsageError("--circular needs the ring system")
        state = circular_state(system, args.circular)
        layout = "spatial"
    else:
        if args.init is None:
            raise UsageError("give --init or --circular")
        vals = _floats(args.init)
        layout = args.layout or {4: "planar", 6: "spatial"}.get(len(vals))
        if layout is None:
            raise UsageError("--init needs 4 (planar) or 6 (spatial) values, or --layout reduced")
        need = {"planar": 4, "spatial": 6, "reduced": 4}[layout]
        if len(vals) != need:
            raise UsageError(f"{layout} layout needs {need} values")
        if layout == "planar":
            state = PlanarState(*vals)
        elif layout == "spatial":
            state = SpatialState(*vals)
        else:
            state = ReducedState(*vals, keff=args.keff)
    if layout == "planar":
        trace = integrate_planar(system, state, until, config)
    elif isinstance(system, EulerSystem):
        raise UsageError("the Euler system is planar; use a 4-value --init")
    elif layout == "spatial":
        trace = integrate_spatial(system, state, until, config)
    else:
        trace = integrate_reduced(system, state, until, config)
    out = Path(args.out)
    io.write_trace(trace, out)
    formats = cfg.formats()
    if "png" in formats:
        plotting.plot_trace(trace, out.with_suffix(".png"), f"{layout} trace")
    if "dat" in formats:
        io.write_projection(trace, out.with_suffix(".dat"))
    print(f"status = {trace.status}")
    print(f"samples = {len(trace.t)}")
    print(f"t_end = {io.format_float(trace.t[-1])}")
    print(f"energy drift = {trace.energy_drift:.3e}")
    if trace.events:
        print(f"events = {len(trace.events)} (last: {trace.events[-1].kind} at "
              f"t={trace.events[-1].t:.12g})")
    print(f"wrote {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# search
# --------------------------------------------------------------------------

def _write_orbit(out_dir: Path, name: str, record: dict, trace, formats: set[str],
                 title: str, source=None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in formats:
        io.write_json(out_dir / f"{name}.json", record)
    if trace is None:
        return
    if "csv" in formats:
        io.write_trace(trace, out_dir / f"{name}.csv")
    io.write_projection(trace, out_dir / f"{name}.dat")
    if "png" in formats:
        plotting.plot_trace(trace, out_dir / f"{name}.png", title, source)


def cmd_search(args) -> int:
    cfg = _load_config(args)
    config = cfg.integrator()
    out_dir = Path(args.out or cfg["output.directory"])
    formats = cfg.formats()
    eps = cfg["search.eps"]
    start = time.perf_counter()
    kind = args.kind
    if kind in ("far", "near"):
        eps = eps if eps is not None else 0.05
        if kind == "far":
            orbit = find_far_orbit(eps, mass=cfg["system.mass"], config=config)
        else:
            orbit = find_near_orbit(eps, config=config)
        record = orbit.to_dict()
        record["crossings"] = axis_crossings(orbit.trace)
        record["energy_drift"] = orbit.trace.energy_drift
        accept = ACCEPT_SIMPLE
        trace, source = orbit.trace, [(-1.0, 0.0), (1.0, 0.0)]
        closure = orbit.closure_error
    elif kind in ("eight", "euler-eight"):
        fam = search_eight_family(cfg["search.family"],
                                  "euler" if kind == "euler-eight" else "ring",
                                  mass=cfg["system.mass"], config=config)
        orbit = fam.assembly.orbit
        record = orbit.to_dict()
        e = fam.essential
        record["essential"] = {"x0": e.x0, "v0": e.v0, "tau": e.tau,
                               "endpoint": list(e.endpoint), "conditions": e.conditions(),
                               "injective": fam.injective, "integrations": e.integrations,
                               "levels": e.levels}
        record["assembly"] = {"joint_mismatch": fam.assembly.joint_mismatch,
                              "symmetry": fam.assembly.symmetry}
        record["energy_drift"] = orbit.trace.energy_drift
        accept = ACCEPT_ASSEMBLED
        trace, source = orbit.trace, [(-1.0, 0.0), (1.0, 0.0)]
        closure = orbit.closure_error
        if "csv" in formats:
            io.write_trace(e.trace, out_dir / f"{kind}-essential.csv")
        if not fam.injective:
            closure = np.inf
    elif kind == "spiral":
        K = cfg["search.K"]
        if K == 0:
            raise PreconditionError("K must be nonzero: with zero angular momentum the "
                                    "azimuth is constant")
        sp = find_spiral(K, q_max=cfg["search.q_max"], offset=args.offset, config=config)
        record = sp.to_dict()
        record["p"], record["q"] = sp.target.numerator, sp.target.denominator
        record["theta"] = sp.theta
        record["theta_quadrature"] = sp.theta_quadrature
        record["theta_error"] = abs(sp.theta - float(sp.target))
        record["energy_drift"] = sp.spatial.energy_drift
        accept = ACCEPT_ASSEMBLED
        trace, source = sp.spatial, None
        closure = sp.closure_3d
        if "csv" in formats:
            io.write_trace(sp.reduced.trace, out_dir / "spiral-reduced.csv")
    else:  # pragma: no cover - argparse restricts the choices
        raise UsageError(kind)
    record["accepted"] = bool(closure <= accept)
    _write_orbit(out_dir, kind, record, trace, formats, f"{kind} orbit", source)
    print(f"class = {record['class']}")
    print(f"period = {io.format_float(record['period'])}")
    print(f"closure = {closure:.3e} (acceptance {accept:.0e})")
    if kind == "spiral":
        print(f"p/q = {record['p']}/{record['q']}, theta error = {record['theta_error']:.3e}")
    print(f"runtime = {time.perf_counter() - start:.2f} s")
    print(f"wrote {out_dir / (kind + '.json')}")
    return EXIT_OK if record["accepted"] else EXIT_FAIL


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

def _verify_pointing(system, n: int, seed: int, config, arcs: int = 20) -> list[Report]:
    xs, zs = default_pointing_grid(n)
    rho = system.radius if isinstance(system, RingSystem) else system.separation
    interval = Interval.bounded(-rho, rho)
    field = check_field_pointing(system, interval, xs, zs)
    traces = upper_half_arcs(system, interval, arcs, np.random.default_rng([seed, 1]), config)
    reps = [check_trajectory_pointing(tr, interval, samples=2000) for tr in traces]
    viol = [{"arc": i, **r.to_report("trajectory-pointing").to_dict()} for i, r in enumerate(reps)
            if not r.passed]
    ok = len(traces) == arcs and not viol
    stats = {"arcs": len(traces), "requested": arcs, "seed": seed,
             "min_h_increment": min((r.min_h_increment for r in reps), default=None),
             "landings": [r.landing for r in reps]}
    return [field, Report("trajectory-pointing", ok, viol, stats)]


def _verify_hill(system, deltas) -> list[Report]:
    out = []
    for d in deltas:
        h = hill_radius(system, d)
        ok = h.grid_sup <= h.radius * (1 + 1e-2)
        if isinstance(system, EulerSystem):
            ok = ok and h.radius <= 2.0 / (-d) + 1.0
        out.append(Report("hill", ok, [] if ok else [h.to_dict()], h.to_dict()))
    return out


def _verify_return(system, deltas, n: int, seed: int, config) -> list[Report]:
    out = []
    for k, d in enumerate(deltas):
        rng = np.random.default_rng([seed, k])
        launches = random_launches(system, d, n, rng)
        rep = check_return_time(system, launches, d, config)
        rep.stats["seed"] = seed
        out.append(rep)
    return out


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    system = cfg.system()
    config = cfg.integrator()
    deltas = tuple(args.delta) if args.delta else DEFAULT_DELTAS
    reports: list[Report] = []
    which = args.suite
    if which in ("pointing", "all"):
        reports += _verify_pointing(system, args.grid, cfg["verify.seed"], config)
    if which in ("hill", "all"):
        reports += _verify_hill(system, deltas)
    if which in ("return-time", "all"):
        reports += _verify_return(system, deltas, args.n, cfg["verify.seed"], config)
    if which in ("lemmas", "all"):
        reports.append(scalar_ode_lemmas())
    out_dir = Path(args.out) if args.out else None
    for rep in reports:
        line = "PASS" if rep.passed else "FAIL"
        detail = ""
        st = rep.stats
        if rep.check == "hill":
            detail = (f"delta={st['delta']:g} R_delta={st['R_delta']:.10g} A={st['A']:.10g} "
                      f"Lambda_A={st['Lambda_A']:.10g} T_delta={st['T_delta']:.10g}")
        elif rep.check == "return-time":
            detail = (f"delta={st['delta']:g} launches={st['launches']} "
                      f"max ratio={st['max_ratio']:.6f} collisions={st['collisions']}")
        elif rep.check == "field-pointing":
            detail = f"samples={st['samples']} violations={st['violations']}"
        elif rep.check == "trajectory-pointing":
            detail = f"arcs={st['arcs']} min h increment={st['min_h_increment']:.3e}"
        elif rep.check == "lemmas":
            detail = f"A values={len(st['rows'])}"
        print(f"{line} {rep.check} {detail}".rstrip())
    if out_dir is not None:
        io.write_json(out_dir / f"verify-{which}.json",
                      {"seed": cfg["verify.seed"], "reports": [r.to_dict() for r in reports]})
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# --------------------------------------------------------------------------
# wire
# --------------------------------------------------------------------------

def cmd_wire(args) -> int:
    w = measure_wire_constant(density=args.density)
    record = {"point": list(w.point), "epsilons": list(w.epsilons), "raw": list(w.raw),
              "tangential": list(w.tangential), "richardson": [list(r) for r in w.richardson],
              "constant": w.constant, "constant_4sig": f"{w.constant:#.4g}",
              "declared": w.declared, "agrees": w.agrees, "summary": w.summary()}
    for e, r in zip(w.epsilons, w.raw):
        print(f"eps={e:.0e}  coefficient={r:.10f}")
    print(w.summary())
    if args.out:
        out = Path(args.out)
        io.write_json(out / "wire.json", record)
        plotting.plot_wire_limit(w.epsilons, w.raw, w.constant, out / "wire.png")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--radius", type=float, default=None, help="circle radius (default 1)")
    p.add_argument("--mass", type=float, default=None, help="circle mass (default 1)")
    p.add_argument("--euler", action="store_true", help="use the symmetric two-center system")
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--method", choices=("DOP853", "RK45"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ring-dynamics",
                                     description="Orbits of a particle attracted by a fixed circle.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="potential and force at a point")
    _common(p)
    p.add_argument("--at", required=True, help="x,y,z (or x,y with --euler)")
    p.add_argument("--oracle", action="store_true", help="compare with trapezoid quadrature")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("integrate", help="integrate one trajectory")
    _common(p)
    p.add_argument("--init", help="x,z,vx,vz (planar) or x,y,z,vx,vy,vz (spatial)")
    p.add_argument("--layout", choices=("planar", "spatial", "reduced"), default=None)
    p.add_argument("--keff", type=float, default=0.0, help="angular momentum for --layout reduced")
    p.add_argument("--circular", type=float, default=None, help="start on the circular orbit of this radius")
    p.add_argument("--until", nargs="+", required=True, metavar="STOP",
                   help="'time T' or 'event KIND [T_MAX]'")
    p.add_argument("--out", required=True, help="trace CSV path")
    p.add_argument("--formats", default=None, help="extra outputs: png,dat")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("search", help="find a periodic orbit")
    _common(p)
    p.add_argument("kind", choices=("far", "near", "eight", "spiral", "euler-eight"))
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--family", type=int, default=None)
    p.add_argument("--K", type=float, default=None)
    p.add_argument("--qmax", type=int, default=None)
    p.add_argument("--offset", type=float, default=0.0,
                   help="shift of the winding target (negative control)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--formats", default=None, help="subset of csv,json,dat,png")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("verify", help="run verification suites")
    _common(p)
    p.add_argument("suite", choices=("all", "pointing", "hill", "return-time", "lemmas"))
    p.add_argument("--delta", type=float, action="append", default=None,
                   help="energy level(s) below zero; repeatable")
    p.add_argument("--n", type=int, default=100, help="launches per delta")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid", type=int, default=50, help="pointing grid size per axis")
    p.add_argument("--out", default=None, help="directory for the JSON report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("wire", help="measure the straight-wire limit constant")
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--out", default=None, help="directory for JSON and PNG")
    p.set_defaults(func=cmd_wire)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SourceCollisionError as exc:
        print(f"error: point on source ({exc})", file=_sys.stderr)
        return EXIT_USAGE
    except (UsageError, ConfigError, PreconditionError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except (SearchBracketError, IntegrationTimeout, RingDynamicsError) as exc:
        print(f"failed: {exc}", file=_sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    _sys.exit(main())

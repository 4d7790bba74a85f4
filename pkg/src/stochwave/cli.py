"""Command-line harness: ``stochwave <subcommand> [--config FILE] [--out DIR] [--seed S] [--threads N]``.

Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 acceptance check failed.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import (absorb_experiment, approximate_attractor, invariance_check,
                        pullback_convergence_test, sample_ball)
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import NoiseContext, SimulationError, State, evolve, transform_initial
from .energy import check_energy_inequality, path_radius
from .noise import bump, member_seed, sample_path, save_path
from .params import decay_rate_sigma, max_noise_intensity, validate
from .tails import tail_experiment
from .vitali import FAMILIES, PointwiseConvergenceError, load_family_csv, vitali_verdict

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ACCEPT = 0, 2, 3, 4
CHUNK = 8  # ensemble members per work unit; fixed so results never depend on --threads


class Outputs:
    """Writes artifacts into one directory, stamping each with the config hash."""

    def __init__(self, directory, cfg_hash: str):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hash = cfg_hash
        self.written: list[str] = []

    def json(self, name: str, data: dict) -> None:
        with open(self.dir / name, "w") as fh:
            json.dump({"config_hash": self.hash, **data}, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
        self.written.append(name)

    def csv(self, name: str, header, rows) -> None:
        with open(self.dir / name, "w", newline="") as fh:
            fh.write(f"# config_hash={self.hash}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        self.written.append(name)

    def path(self, name: str) -> Path:
        self.written.append(name)
        return self.dir / name


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _contexts(cfg: ExperimentConfig, count: int, t_min: float, t_max: float, threads: int):
    """Per-member noise contexts, chunked; member ``i`` always gets ``member_seed(seed, i)``."""
    dt = cfg.noise["dt"]

    def build(lo):
        idx = range(lo, min(lo + CHUNK, count))
        paths = [sample_path(member_seed(cfg.seed, i), t_min, t_max, dt, cfg.params.m) for i in idx]
        return NoiseContext.from_paths(paths, cfg.params.delta)

    return _map(build, range(0, count, CHUNK), threads)


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _initial(cfg: ExperimentConfig, init: dict):
    g = cfg.grid
    kind = init.get("kind", "bump")
    if kind == "zero":
        return g.zeros()
    if kind == "bump":
        return init.get("amplitude", 1.0) * bump(g, init.get("radius", 2.0))
    if kind == "gaussian":
        return init.get("amplitude", 1.0) * np.exp(-(g.radius**2))
    raise ConfigError(f"unknown initial kind {kind!r}")


def _with_member_axis(ctx: NoiseContext) -> NoiseContext:
    return NoiseContext(ctx.t_min, ctx.dt, ctx.n_steps, ctx.z[:, None], ctx.paths)


# -- subcommands ------------------------------------------------------------------

def cmd_validate(cfg, out, threads):
    p = cfg.params
    problems = validate(p)
    out.json("validate.json", {
        "valid": not problems, "violations": problems,
        "sigma": decay_rate_sigma(p) if not problems else None,
        "epsilon_max": max_noise_intensity(p),
        "a": p.a,
    })
    return not problems


def cmd_simulate(cfg, out, threads):
    e = cfg.experiment["simulate"]
    system, step = cfg.system(), cfg.step("simulate")
    t0, t1 = float(e["t0"]), float(e["t1"])
    u0 = _initial(cfg, e["initial"])
    reports = []

    def run(ctx):
        z0 = ctx.field(system.forcing.profile, ctx.index(t0))
        u = np.broadcast_to(u0, z0.shape)
        st = transform_initial(u, np.zeros_like(u), cfg.params, cfg.params.epsilon * z0)
        tr = evolve(st, t0, t1, ctx, system, step, e["record_every"])
        return tr, check_energy_inequality(tr, ctx, system, e["tol"])

    ctxs = _contexts(cfg, e["ensemble"], min(t0, 0.0), max(t1, 0.0), threads)
    results = _map(run, ctxs, threads)
    save_path(ctxs[0].paths[0], out.path("noise_member0.bin"))
    rows, traj_rows, member = [], [], 0
    x = cfg.grid.coords[0].ravel()
    for tr, rep in results:
        q = rep.q.reshape(len(rep.times), -1)
        b = rep.bound.reshape(len(rep.times), -1)
        en = rep.e_norm.reshape(len(rep.times), -1)
        u = tr.u.reshape(len(tr.times), q.shape[1], -1)
        v = tr.v.reshape(len(tr.times), q.shape[1], -1)
        for j in range(q.shape[1]):
            for i, t in enumerate(rep.times):
                rows.append([member + j, t, en[i, j], q[i, j], b[i, j], b[i, j] - q[i, j]])
                for c in range(u.shape[2]):
                    traj_rows.append([member + j, t, x[c] if cfg.grid.n == 1 else c, u[i, j, c], v[i, j, c]])
        member += q.shape[1]
        reports.append(rep)
    out.csv("simulate_energy.csv", ["member", "t", "e_norm", "Q", "bound", "margin"], rows)
    out.csv("simulate_trajectory.csv", ["member", "t", "x" if cfg.grid.n == 1 else "cell", "u", "v"], traj_rows)
    viol = sum(r.violations for r in reports)
    ok = viol == 0
    out.json("simulate_summary.json", {
        "members": member, "violation_count": viol, "tolerance": e["tol"],
        "min_relative_margin": min(r.min_relative_margin for r in reports),
        "final_e_norm_max": max(float(np.max(r.e_norm[-1])) for r in reports), "passed": ok,
    })
    return ok


def cmd_pullback(cfg, out, threads):
    e = cfg.experiment["pullback"]
    system, step = cfg.system(), cfg.step("pullback")
    t = [float(x) for x in e["t_schedule"]]
    ctxs = _contexts(cfg, e["ensemble"], -max(t), 0.0, threads)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1 << 20,)))
    radius = e["radius"]
    if radius is None:
        radius = float(np.max(np.concatenate([np.atleast_1d(path_radius(c, system)) for c in ctxs])))
    init = sample_ball(system, radius, e["members"], rng)

    def run(ctx):
        return pullback_convergence_test(_with_member_axis(ctx), system, init, t, step, member_axis=1)

    reps = _map(run, ctxs, threads)
    diffs = np.concatenate([r.differences for r in reps], axis=1)  # (k-1, ensemble, members)
    rows = [[s, j, t[i], diffs[i, s, j]] for s in range(diffs.shape[1]) for j in range(diffs.shape[2])
            for i in range(diffs.shape[0])]
    out.csv("pullback_differences.csv", ["member", "init", "t", "difference"], rows)
    insufficient = reps[0].insufficient
    decreasing = np.concatenate([r.strictly_decreasing for r in reps]) if not insufficient else np.array([])
    rates = np.concatenate([np.ravel(r.fitted_rate) for r in reps]) if not insufficient else np.array([])
    rate_ok = all(r.rate_ok(e["slack"]) for r in reps)
    ok = (not insufficient) and (rate_ok if cfg.params.epsilon == 0 else bool(np.all(decreasing)))
    out.json("pullback_summary.json", {
        "insufficient_data": insufficient, "benchmark_rate": reps[0].benchmark,
        "fitted_rate_max": float(rates.max()) if rates.size else None, "rate_within_benchmark": rate_ok,
        "strictly_decreasing_fraction": float(decreasing.mean()) if decreasing.size else None,
        "terminal_spread_max": max(r.terminal_spread for r in reps),
        "last_gap_max": float(diffs[-1].max()) if diffs.size else None,
        "init_radius": radius, "passed": ok,
    })
    return ok


def cmd_absorb(cfg, out, threads):
    e = cfg.experiment["absorb"]
    system, step = cfg.system(), cfg.step("absorb")
    ctxs = _contexts(cfg, e["ensemble"], -float(e["horizon"]), 0.0, threads)

    def run(args):
        k, ctx = args
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1 << 21, k)))
        return absorb_experiment(ctx, system, float(e["horizon"]), e["members"], rng, e["scale"], step)

    reps = _map(run, list(enumerate(ctxs)), threads)
    rows, s0 = [], 0
    for r in reps:
        for s in range(len(r.radius)):
            for j in range(r.initial_norms.shape[1]):
                rows.append([s0 + s, j, r.radius[s], r.initial_norms[s, j], r.final_norms[s, j]])
        s0 += len(r.radius)
    out.csv("absorb.csv", ["member", "init", "radius", "initial_e_norm", "final_e_norm"], rows)
    ok = all(r.ok for r in reps)
    out.json("absorb_summary.json", {
        "horizon": e["horizon"], "members": s0, "inits_per_member": e["members"], "scale": e["scale"],
        "max_final_over_radius": max(r.as_dict()["max_final_over_radius"] for r in reps), "passed": ok,
    })
    return ok


def cmd_tails(cfg, out, threads):
    e = cfg.experiment["tails"]
    system, step = cfg.system(), cfg.step("tails")
    ts = [float(x) for x in e["t_schedule"]]
    ctxs = _contexts(cfg, e["ensemble"], -max(ts), 0.0, threads)
    u0 = _initial(cfg, e["initial"])
    scales = np.arange(1, e["members"] + 1, dtype=float)
    init = State(scales[:, None] * u0.reshape(1, -1), np.zeros((len(scales), u0.size)))
    init = State(init.u.reshape((len(scales),) + cfg.grid.shape), init.v.reshape((len(scales),) + cfg.grid.shape))

    def run(ctx):
        return tail_experiment(system, _with_member_axis(ctx), init, ts, e["r_schedule"], e["eta"], step)

    reps = _map(run, ctxs, threads)
    vals = np.max(np.stack([r.values for r in reps]), axis=0)
    rep = reps[0]
    rep.values = vals
    rep.members = sum(r.members for r in reps)
    rows = [[t] + list(row) for t, row in zip(rep.t_schedule, vals)]
    out.csv("tails.csv", ["t"] + [f"r={float(r)!r}" for r in rep.r_schedule], rows)
    ok = bool(rep.passed[-1, -1])
    out.json("tails_summary.json", {**rep.summary(), "passed": ok})
    return ok


def cmd_attractor(cfg, out, threads):
    e = cfg.experiment["attractor"]
    system, step = cfg.system(), cfg.step("attractor")
    T = [float(x) for x in e["pullback_times"]]
    shift = float(e["shift"])
    path = sample_path(member_seed(cfg.seed, 0), -max(T), max(shift, 0.0), cfg.noise["dt"], cfg.params.m)
    ctx = NoiseContext.from_path(path, cfg.params.delta)
    radius = e["radius"] if e["radius"] is not None else float(path_radius(ctx, system))
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1 << 22,)))
    init = sample_ball(system, radius, e["members"], rng)
    approx = approximate_attractor(ctx, system, init, T, step, e["keep_last"], seed=int(path.seed))
    inv = invariance_check(ctx, system, init, T, shift, step, e["keep_last"], e["factor"])
    approx.cloud.save(out.path("attractor_cloud.npy"))
    out.json("attractor_manifest.json", {**approx.cloud.manifest(system), **approx.as_dict(),
                                         "init_radius": radius})
    ok = inv.ok
    out.json("attractor_invariance.json", {**inv.as_dict(), "passed": ok})
    return ok


def cmd_vitali(cfg, out, threads):
    e = cfg.experiment["vitali"]
    cases = {name: FAMILIES[name](e["members"], e["p"]) for name in e["families"]}
    if e["csv"]:
        cases[Path(e["csv"]).stem] = load_family_csv(e["csv"])
    verdicts, ok = {}, True
    for name, (seq, lim) in cases.items():
        try:
            rep = vitali_verdict(seq, lim, e["p"], e["eps_schedule"], e["threshold_schedule"])
        except PointwiseConvergenceError as err:
            verdicts[name] = {"pointwise_convergence": False, "diagnostic": str(err)}
            ok = False
            continue
        verdicts[name] = {"pointwise_convergence": True, **rep.as_dict()}
        ok &= rep.consistent
    out.json("vitali.json", {"families": verdicts, "passed": ok})
    return ok


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "pullback": cmd_pullback,
    "absorb": cmd_absorb,
    "tails": cmd_tails,
    "attractor": cmd_attractor,
    "vitali": cmd_vitali,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stochwave", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML experiment config (default: built-in reference setup)")
        sp.add_argument("--out", help="output directory (overrides output.directory)")
        sp.add_argument("--seed", type=int, help="master seed (overrides noise.seed)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    return ap


def _write_meta(out: Outputs, args, status: int, message: str | None) -> None:
    meta = {
        "command": args.command, "config": args.config, "threads": args.threads,
        "exit_status": status, "message": message, "artifacts": out.written,
        "config_hash": out.hash, "version": __version__, "python": platform.python_version(),
        "numpy": np.__version__, "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    with open(out.dir / f"{args.command}.meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig.from_dict({})
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except ConfigError as e:
        print(json.dumps({"error": "config", "problems": e.problems}, indent=2), file=sys.stderr)
        return EXIT_CONFIG
    out = Outputs(args.out or cfg.output["directory"], cfg.hash())
    try:
        ok = COMMANDS[args.command](cfg, out, args.threads)
    except ConfigError as e:
        print(json.dumps({"error": "config", "problems": e.problems}, indent=2), file=sys.stderr)
        _write_meta(out, args, EXIT_CONFIG, str(e))
        return EXIT_CONFIG
    except (SimulationError, FloatingPointError, ValueError) as e:
        print(json.dumps({"error": "runtime", "message": str(e), "partial_artifacts": out.written}, indent=2),
              file=sys.stderr)
        _write_meta(out, args, EXIT_RUNTIME, str(e))
        return EXIT_RUNTIME
    status = EXIT_OK if ok else EXIT_ACCEPT
    _write_meta(out, args, status, None if ok else "acceptance check failed")
    print(json.dumps({"command": args.command, "passed": bool(ok), "out": str(out.dir),
                      "artifacts": out.written}))
    return status


if __name__ == "__main__":
    sys.exit(main())

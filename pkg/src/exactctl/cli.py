"""Batch command-line interface for the transport example.

Usage::

    exactctl steer --config configs/transport.json --out out/
    exactctl probe-lipschitz --m-max 10000

Exit codes: 0 success, 1 domain failure, 2 configuration failure. Errors are
reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, serialize
from .control import MinNormInverse, reachability_apply
from .dynamics import mild_solve
from .errors import ConfigInvalid, ExactCtlError
from .semigroup import sg_apply
from .space import l2_norm
from .steer import steer
from .transport import (
    TransportConfig,
    build_transport_model,
    dissipativity_probe,
    lipschitz_ladder,
)


def _load_config(args) -> TransportConfig:
    cfg = TransportConfig.load(args.config) if args.config else TransportConfig.from_dict({})
    if args.seed is not None:
        cfg = TransportConfig(cfg.n, cfg.T, cfg.m_profile, cfg.target, cfg.steering,
                              args.seed, cfg.output_dir)
    return cfg


def _out_dir(args, cfg):
    out = Path(args.out if args.out else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(line):
    print(serialize.dumps_json(line))


# --------------------------------------------------------------------------- subcommands


def cmd_steer(args):
    cfg = _load_config(args)
    model = build_transport_model(cfg)
    out = _out_dir(args, cfg)
    x_T = model.target.values
    res = steer(model.semigroup, model.B, model.f, x_T, model.grid, cfg.steering)
    serialize.write_trajectory_csv(out / "trajectory.csv", res.trajectory)
    serialize.write_control_csv(out / "control.csv", res.control)
    summary = res.summary()
    summary.update({
        "T": cfg.T, "n": cfg.n, "nt": model.grid.nt,
        "target_norm": float(l2_norm(x_T)),
        "residual_bound": 1e-6 * (1 + float(l2_norm(x_T))),
        # f keeps only the first n coordinates of rho; the dropped tail has norm <= 1/sqrt(n)
        "rho_truncation_bound": float(1 / np.sqrt(cfg.n)),
    })
    serialize.write_json(out / "summary.json", summary)
    _emit({"command": "steer", **res.summary()})
    return 0


def cmd_linear_control(args):
    cfg = _load_config(args)
    model = build_transport_model(cfg)
    out = _out_dir(args, cfg)
    y = model.target.values
    ctx = MinNormInverse(model.semigroup, model.B, model.grid)
    u = ctx.control(y)
    traj = mild_solve(model.semigroup, model.B, None, u, model.grid, np.zeros(cfg.n))
    residual = float(l2_norm(reachability_apply(model.semigroup, model.B, u) - y))
    serialize.write_trajectory_csv(out / "trajectory.csv", traj)
    serialize.write_control_csv(out / "control.csv", u)
    summary = {"reconstruction_residual": residual, "control_energy": u.energy(),
               "gramian": ctx.gramian.diagnostics()}
    serialize.write_json(out / "summary.json", summary)
    _emit({"command": "linear-control", "reconstruction_residual": residual,
           "cond_estimate": ctx.gramian.cond_estimate})
    return 0


def cmd_simulate(args):
    cfg = _load_config(args)
    model = build_transport_model(cfg)
    out = _out_dir(args, cfg)
    u = serialize.read_control_csv(args.control) if args.control else None
    if u is not None and u.grid != model.grid:
        raise ConfigInvalid("control grid does not match the config",
                            fields={"--control": f"grid T={u.grid.T}, nt={u.grid.nt}; "
                                                 f"expected T={model.grid.T}, nt={model.grid.nt}"})
    z0 = model.target.values if args.z0 == "target" else np.zeros(cfg.n)
    traj = mild_solve(model.semigroup, model.B, model.f, u, model.grid, z0)
    serialize.write_trajectory_csv(out / "trajectory.csv", traj)
    summary = serialize.trajectory_summary(traj)
    serialize.write_json(out / "summary.json", summary)
    _emit({"command": "simulate", **summary})
    return 0


def cmd_probe_dissipative(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    rep = dissipativity_probe(n=cfg.n, count=args.pairs, seed=cfg.seed)
    data = {"probe": "dissipative", "n": cfg.n, "estimate": rep.estimate,
            "samples": rep.samples, "seed": rep.seed, "certified": rep.estimate <= 1e-12}
    serialize.write_json(out / "probes.json", data)
    _emit(data)
    return 0


def cmd_probe_lipschitz(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    rows = lipschitz_ladder(args.m_max, n=cfg.n)
    ratios = [r["ratio"] for r in rows]
    data = {"probe": "lipschitz", "n": cfg.n, "ladder": rows, "sup_ratio": max(ratios),
            "monotone": all(a < b for a, b in zip(ratios, ratios[1:])),
            "max_sqrt_m_error": max(abs(r["ratio"] - r["sqrt_m"]) for r in rows)}
    serialize.write_json(out / "probes.json", data)
    _emit({k: v for k, v in data.items() if k != "ladder"})
    return 0


def cmd_mnc(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    model = build_transport_model(cfg)
    rng = np.random.default_rng(cfg.seed)
    sets = [rng.standard_normal((5, cfg.n)) for _ in range(args.sets)]
    shift = analysis.condensing_ratio(lambda x: sg_apply(model.semigroup, 0.25, x), sets, args.nblocks)
    fmap = analysis.condensing_ratio(model.f, sets, args.nblocks)
    data = {"probe": "mnc", "proxy": True, "nblocks": args.nblocks, "sets": args.sets,
            "seed": cfg.seed, "shift_quarter_ratio": shift.estimate, "f_ratio": fmap.estimate}
    serialize.write_json(out / "probes.json", data)
    _emit(data)
    return 0


def cmd_selftest(args):
    from .selftest import run_all

    results = run_all(seed=args.seed or 0)
    for r in results:
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {r['name']}: {r['value']:.3e}")
    failed = [r["name"] for r in results if not r["passed"]]
    _emit({"command": "selftest", "passed": len(results) - len(failed), "failed": failed})
    return 0 if not failed else 1


# --------------------------------------------------------------------------- entry point


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON transport config (defaults built in)")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="override the config seed")

    p = argparse.ArgumentParser(prog="exactctl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("steer", parents=[common], help="semilinear steering to the target")
    sub.add_parser("linear-control", parents=[common], help="minimum-norm control with f = 0")
    sp = sub.add_parser("simulate", parents=[common], help="forward mild solution")
    sp.add_argument("--control", help="control CSV (t,xi,u); zero input if omitted")
    sp.add_argument("--z0", choices=["zero", "target"], default="zero",
                    help="initial state (default: zero)")
    pd = sub.add_parser("probe-dissipative", parents=[common], help="one-sided Lipschitz probe of f")
    pd.add_argument("--pairs", type=int, default=10_000)
    pl = sub.add_parser("probe-lipschitz", parents=[common], help="Lipschitz ratio ladder of f at 0")
    pl.add_argument("--m-max", type=int, default=10_000)
    pm = sub.add_parser("mnc", parents=[common], help="condensing ratios via the block proxy")
    pm.add_argument("--nblocks", type=int, default=2)
    pm.add_argument("--sets", type=int, default=50)
    sub.add_parser("selftest", parents=[common], help="quick invariant suite")
    return p


COMMANDS = {
    "steer": cmd_steer,
    "linear-control": cmd_linear_control,
    "simulate": cmd_simulate,
    "probe-dissipative": cmd_probe_dissipative,
    "probe-lipschitz": cmd_probe_lipschitz,
    "mnc": cmd_mnc,
    "selftest": cmd_selftest,
}


def run_cli(argv=None):
    args = build_parser().parse_args(argv)
    try:
        for name in ("pairs", "m_max", "nblocks", "sets"):
            val = getattr(args, name, None)
            if val is not None and val < 1:
                raise ConfigInvalid(f"--{name.replace('_', '-')} must be >= 1",
                                    fields={f"--{name.replace('_', '-')}": "must be >= 1"})
        return COMMANDS[args.command](args)
    except ConfigInvalid as exc:
        print(serialize.dumps_json(exc.to_dict()), file=sys.stderr)
        return 2
    except (ExactCtlError, ValueError, OSError) as exc:
        payload = exc.to_dict() if isinstance(exc, ExactCtlError) else \
            {"error": type(exc).__name__, "message": str(exc)}
        print(serialize.dumps_json(payload), file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

"""Command-line entry points.

Subcommands: plan, phantom, simulate, evaluate, report, serve.  All numeric
I/O is in mm, s, N, N*mm, and degrees.  Exit codes: 2 plan validation,
3 simulation errors (including missing input files), 4 evaluation/report
errors.  SSF_LOG_LEVEL controls logging verbosity.
"""
from __future__ import annotations

import argparse
import glob as globmod
import json
import logging
import os
import sys

import numpy as np

from . import evaluation, service, tracker
from .control import ControlConfig
from .errors import (ArcTooLong, EmptyInput, MisalignedEntry, NegativeLength,
                     NonPositiveRadius, PlanPhantomMismatch, SsfError)
from .phantom import PhantomSpec, build_phantom, load_phantom_spec, save_phantom_spec
from .simulate import simulate_procedure
from .trajectory import load_plan, make_bilateral, make_plan, save_plan
from .tracker import read_cloud_csv, read_tracker_csv, synthesize_tracker_log, write_tracker_csv

log = logging.getLogger("ssfsim")

EXIT_PLAN = 2
EXIT_SIM = 3
EXIT_EVAL = 4


def _parse_pair_token(token: str, straight: float, arc: float):
    """Parse 'I' or 'J:<radius>:<alpha>' into a plan."""
    parts = token.split(":")
    if parts[0] == "I":
        return make_plan("I", None, 0.0, straight, arc)
    if parts[0] == "J" and len(parts) == 3:
        return make_plan("J", float(parts[1]), float(parts[2]), straight, arc)
    raise ValueError(f"bad --pair token {token!r} (want I or J:<radius>:<alpha>)")


def cmd_plan(args) -> int:
    try:
        if args.pair:
            left = _parse_pair_token(args.pair[0], args.straight, args.arc)
            right = _parse_pair_token(args.pair[1], args.straight, args.arc)
            obj = make_bilateral(left, right)
        else:
            obj = make_plan(args.shape, args.radius, args.alpha, args.straight, args.arc)
    except NonPositiveRadius as e:
        print(f"error: NonPositiveRadius (--radius): {e}", file=sys.stderr)
        return EXIT_PLAN
    except ArcTooLong as e:
        print(f"error: ArcTooLong (--arc / --radius): {e}", file=sys.stderr)
        return EXIT_PLAN
    except NegativeLength as e:
        print(f"error: NegativeLength (--straight / --arc): {e}", file=sys.stderr)
        return EXIT_PLAN
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PLAN
    save_plan(args.out, obj)
    print(f"wrote {args.out} ({obj.label})")
    return 0


def cmd_phantom(args) -> int:
    try:
        spec = PhantomSpec(voxel_mm=args.voxel, body_extent_mm=tuple(args.extent),
                           shell_thickness_mm=args.shell, channel_d_mm=args.channel,
                           insert_pcf=args.pcf, pedicle_len_mm=args.pedicle,
                           body_depth_mm=args.body_depth)
    except (SsfError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PLAN
    save_phantom_spec(args.out, spec)
    print(f"wrote {args.out}")
    return 0


def cmd_simulate(args) -> int:
    try:
        plan = load_plan(args.plan)
        spec = load_phantom_spec(args.phantom)
        phantom = build_phantom(spec)
        cfg = ControlConfig.from_dict({"dt_s": args.dt})
        sim = simulate_procedure(plan, phantom, cfg)
    except FileNotFoundError as e:
        print(f"error: missing input file: {e}", file=sys.stderr)
        return EXIT_SIM
    except (MisalignedEntry, PlanPhantomMismatch) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SIM
    sim.save(args.out_log)
    log_ = synthesize_tracker_log(sim.achieved_centerline, sample_hz=args.hz,
                                  noise_sigma_mm=args.noise, seed=args.seed,
                                  insertion_speed_mm_s=args.speed)
    write_tracker_csv(args.out_tracker, log_)
    print(f"cutting_time_s={round(sim.cutting_time_s, 3)}")
    print(f"removed_volume_mm3={round(sim.removed_volume_mm3, 3)}")
    print(f"wrote {args.out_log} and {args.out_tracker}")
    return 0


def cmd_evaluate(args) -> int:
    if not args.cloud and not args.phantom:
        print("error: need --phantom or --cloud for the model surface", file=sys.stderr)
        return EXIT_EVAL
    try:
        plan = load_plan(args.plan)
        log_ = read_tracker_csv(args.log)
        if args.cloud:
            model_cloud = read_cloud_csv(args.cloud)
        else:
            model_cloud = build_phantom(load_phantom_spec(args.phantom)).surface_cloud()
        report = evaluation.evaluate_trial(
            log_, plan, model_cloud, trial_id=args.trial_id, direction=args.direction)
    except FileNotFoundError as e:
        print(f"error: missing input file: {e}", file=sys.stderr)
        return EXIT_EVAL
    except SsfError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_EVAL
    evaluation.save_report(args.out, report)
    print(f"fitted_radius_mm={report.fitted_radius_mm:.3f} "
          f"error_pct={report.radius_error_pct:.3f} "
          f"transition_s_mm={report.transition_s_mm:.3f}")
    print(f"wrote {args.out}")
    return 0


def cmd_report(args) -> int:
    paths = sorted(globmod.glob(args.glob))
    try:
        reports = [evaluation.load_report(p) for p in paths]
        table = evaluation.aggregate(reports)
    except (SsfError, FileNotFoundError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_EVAL
    text = table.render_text()
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    if args.out_json:
        with open(args.out_json, "w", encoding="utf-8") as f:
            json.dump(table.to_dict(), f, indent=2, ensure_ascii=False)
            f.write("\n")
    return 0


def cmd_serve(args) -> int:
    try:
        plan = load_plan(args.plan)
        spec = load_phantom_spec(args.phantom)
    except FileNotFoundError as e:
        print(f"error: missing input file: {e}", file=sys.stderr)
        return EXIT_SIM
    server = service.SessionServer(
        plan, build_phantom(spec), port=args.port, realtime=not args.stepped,
        initial_offset_mm=(0.0, args.offset, 0.0), noise_sigma_mm=args.noise, seed=args.seed)
    server.start()
    print(f"listening on port {server.port}", flush=True)
    try:
        server.join()
    except KeyboardInterrupt:
        server.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssf", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    pl = sub.add_parser("plan", help="write a trajectory plan (or bilateral pair) JSON")
    pl.add_argument("--shape", choices=["I", "J"], default="J")
    pl.add_argument("--radius", type=float, default=None, help="curve radius mm (J only)")
    pl.add_argument("--alpha", type=float, default=0.0, help="curve-plane angle deg")
    pl.add_argument("--straight", type=float, default=17.0)
    pl.add_argument("--arc", type=float, default=35.0)
    pl.add_argument("--pair", nargs=2, metavar=("LEFT", "RIGHT"),
                    help="bilateral pair tokens, e.g. I J:50:0 or J:50:0 J:50:90")
    pl.add_argument("--out", default="plan.json")
    pl.set_defaults(func=cmd_plan)

    ph = sub.add_parser("phantom", help="write a phantom spec JSON")
    ph.add_argument("--voxel", type=float, default=0.2)
    ph.add_argument("--extent", type=float, nargs=3, default=[56.0, 40.0, 30.0])
    ph.add_argument("--shell", type=float, default=2.0)
    ph.add_argument("--channel", type=float, default=8.0)
    ph.add_argument("--pcf", type=float, default=10.0)
    ph.add_argument("--pedicle", type=float, default=17.0)
    ph.add_argument("--body-depth", type=float, default=33.4)
    ph.add_argument("--out", default="phantom.json")
    ph.set_defaults(func=cmd_phantom)

    si = sub.add_parser("simulate", help="run a pre-aligned headless drilling simulation")
    si.add_argument("--plan", required=True)
    si.add_argument("--phantom", required=True)
    si.add_argument("--dt", type=float, default=0.01)
    si.add_argument("--noise", type=float, default=0.0, help="tracker noise sigma mm")
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--hz", type=float, default=40.0, help="tracker sample rate")
    si.add_argument("--speed", type=float, default=2.0, help="screw insertion speed mm/s")
    si.add_argument("--out-log", default="simlog.json")
    si.add_argument("--out-tracker", default="tracker.csv")
    si.set_defaults(func=cmd_simulate)

    ev = sub.add_parser("evaluate", help="evaluate one tracker log against its plan")
    ev.add_argument("--log", required=True)
    ev.add_argument("--plan", required=True)
    ev.add_argument("--phantom", help="phantom spec JSON; builds the model cloud")
    ev.add_argument("--cloud", help="model surface cloud CSV (overrides --phantom)")
    ev.add_argument("--direction", choices=[evaluation.INSERTION, evaluation.RETRACTION],
                    default=evaluation.INSERTION)
    ev.add_argument("--trial-id", default="trial")
    ev.add_argument("--out", default="report.json")
    ev.set_defaults(func=cmd_evaluate)

    rp = sub.add_parser("report", help="aggregate trial reports into a summary table")
    rp.add_argument("--glob", required=True, help="glob pattern of report JSON files")
    rp.add_argument("--out", help="write the text table here as well")
    rp.add_argument("--out-json")
    rp.set_defaults(func=cmd_report)

    sv = sub.add_parser("serve", help="run the interactive session service")
    sv.add_argument("--port", type=int, default=7465)
    sv.add_argument("--plan", required=True)
    sv.add_argument("--phantom", required=True)
    sv.add_argument("--stepped", action="store_true",
                    help="advance simulated time per message instead of wall clock")
    sv.add_argument("--offset", type=float, default=0.0,
                    help="initial lateral tool offset mm (alignment exercise)")
    sv.add_argument("--noise", type=float, default=0.2)
    sv.add_argument("--seed", type=int, default=0)
    sv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SSF_LOG_LEVEL", "WARNING").upper())
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

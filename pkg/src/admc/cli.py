"""Command line front end: serve, headless, replay, bridge-fake."""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import threading
from dataclasses import replace
from pathlib import Path

from .agents import AgentKind, run_agent, write_metrics_csv
from .arm import VelocityLimits
from .bridge import BridgeConfig, BridgeRole, DEFAULT_SYNC_PERIOD, FakeExternalArm, serve_fake_arm, sine_script
from .geometry import Vec3
from .recording import load_recording, metrics_rows, replay as replay_frames, write_recording
from .session import ControlScheme, Session, SessionConfig
from .server import SessionServer

DEFAULT_PORT = 7341
DEFAULT_HTTP_PORT = 8730


def _load_config(args) -> SessionConfig:
    cfg = SessionConfig()
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as f:
            cfg = SessionConfig.from_dict(json.load(f))
    overrides = {}
    if getattr(args, "scheme", None):
        overrides["scheme"] = ControlScheme(args.scheme)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "tick_rate", None) is not None:
        overrides["tick_rate"] = args.tick_rate
    if getattr(args, "record", None):
        overrides["recording_path"] = args.record
    if getattr(args, "bridge_role", None):
        host, _, port = (getattr(args, "bridge_endpoint", None) or "127.0.0.1:7600").partition(":")
        overrides["bridge"] = BridgeConfig(
            role=BridgeRole(args.bridge_role),
            endpoint=(host, int(port or 7600)),
        )
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def cmd_serve(args) -> int:
    cfg = _load_config(args)
    session = Session(cfg)
    static_dir = args.static_dir
    if static_dir is None:
        bundled = Path(__file__).resolve().parent.parent.parent.parent / "frontend" / "dist"
        static_dir = str(bundled) if bundled.is_dir() else None
    server = SessionServer(
        session,
        host=args.host,
        port=args.port,
        http_port=args.http_port,
        static_dir=static_dir,
    )
    print(f"session on tcp://{args.host}:{args.port} "
          f"(scheme {cfg.scheme.value}, seed {cfg.seed})")
    if args.http_port is not None:
        print(f"cockpit on http://{args.host}:{args.http_port} (websocket at /ws)")
    server.run_forever()
    return 0


def cmd_headless(args) -> int:
    cfg = _load_config(args)
    kinds = {
        "greedy": [AgentKind.GREEDY_ADMC],
        "classic": [AgentKind.CLASSIC_ORACLE],
        "both": [AgentKind.GREEDY_ADMC, AgentKind.CLASSIC_ORACLE],
    }[args.agent]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    for kind in kinds:
        rows = run_agent(cfg, kind, episodes=args.episodes)
        results[kind.value] = rows
        write_metrics_csv(out_dir / f"metrics_{kind.value}.csv", rows, agent=kind.value)
        switches = [r.mode_switches for r in rows]
        times = [r.completion_time for r in rows]
        print(f"{kind.value}: {len(rows)} episodes, "
              f"mode switches mean {statistics.mean(switches):.2f}, "
              f"completion mean {statistics.mean(times):.2f}s")
    from .report import write_benchmark_figures

    figures = write_benchmark_figures(results, out_dir)
    for path in figures:
        print(f"figure: {path}")
    if len(results) == 2:
        g = statistics.mean(r.mode_switches for r in results["greedy"])
        c = statistics.mean(r.mode_switches for r in results["classic"])
        print(f"adaptive/classic mode-switch ratio: {g / c:.3f}")
    return 0


def cmd_replay(args) -> int:
    header, frames = load_recording(args.recording)
    consumed = sum(1 for _ in replay_frames(header, frames))
    episodes = metrics_rows(frames)
    print(f"{args.recording}: {consumed} frames at {header.tick_rate:g} Hz, "
          f"{len(episodes)} completed episodes")
    for row in episodes:
        print(f"  episode {row.episode}: {row.completion_time:.2f}s, "
              f"{row.mode_switches} mode switches, "
              f"{row.suggestions_accepted} suggestions accepted")
    if args.rerecord:
        write_recording(args.rerecord, header, frames)
        print(f"re-recorded to {args.rerecord}")
    if args.report:
        from .report import write_replay_figures

        for path in write_replay_figures(header, frames, args.report):
            print(f"figure: {path}")
    return 0


def cmd_bridge_fake(args) -> int:
    script = sine_script() if args.mode == "sine" else None
    arm = FakeExternalArm(
        limits=VelocityLimits(vel_trans=args.vel, vel_rot=1.5, vel_fingers=1.5),
        script=script,
    )
    stop = threading.Event()
    thread = serve_fake_arm(args.host, args.port, arm, period=args.period, stop=stop)
    print(f"fake external arm ({args.mode}) on tcp://{args.host}:{args.port}, "
          f"vel {args.vel} m/s, period {args.period}s")
    try:
        thread.join()
    except KeyboardInterrupt:
        stop.set()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="admc",
        description="Shared-control simulator for an assistive robotic arm.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON session config file")
        p.add_argument("--scheme", choices=[s.value for s in ControlScheme])
        p.add_argument("--seed", type=int)
        p.add_argument("--tick-rate", type=float, dest="tick_rate")
        p.add_argument("--record", help="write a recording CSV to this path")
        p.add_argument("--bridge-role", choices=[r.value for r in BridgeRole])
        p.add_argument("--bridge-endpoint", help="host:port of the external arm")

    serve = sub.add_parser("serve", help="run an interactive session server")
    common(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    serve.add_argument("--http-port", type=int, default=DEFAULT_HTTP_PORT)
    serve.add_argument("--static-dir", help="cockpit assets directory")
    serve.set_defaults(func=cmd_serve)

    headless = sub.add_parser("headless", help="run scripted agents and report")
    common(headless)
    headless.add_argument("--agent", choices=["greedy", "classic", "both"], default="both")
    headless.add_argument("--episodes", type=int, default=50)
    headless.add_argument("--out", default="results")
    headless.set_defaults(func=cmd_headless)

    replay = sub.add_parser("replay", help="inspect or re-render a recording")
    replay.add_argument("recording")
    replay.add_argument("--rerecord", help="write the replayed frames to a new CSV")
    replay.add_argument("--report", help="render figures into this directory")
    replay.set_defaults(func=cmd_replay)

    fake = sub.add_parser("bridge-fake", help="serve a fake external arm endpoint")
    fake.add_argument("--host", default="127.0.0.1")
    fake.add_argument("--port", type=int, default=7600)
    fake.add_argument("--mode", choices=["follow", "sine"], default="follow")
    fake.add_argument("--vel", type=float, default=0.2)
    fake.add_argument("--period", type=float, default=DEFAULT_SYNC_PERIOD)
    fake.set_defaults(func=cmd_bridge_fake)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

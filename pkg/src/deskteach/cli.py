"""Command-line entry points: teach (interactive/batch), bench, serve."""

from __future__ import annotations

import argparse
import sys

from .bench import RAW_FIELDS, AGG_FIELDS, generate_corpus, run_benchmark
from .service import serve
from .session import Session, save_log
from .store import Config, load_config, load_scene, save_scene, write_csv
from .viewsphere import build_view_sphere


def _load_config_arg(path: str | None) -> Config:
    return load_config(path) if path else Config()


def _sphere_banner(config: Config) -> str:
    sphere = build_view_sphere(config.sphere_frequency, config.sphere_radius,
                               config.sphere_cutoff)
    return (f"view sphere: {sphere.viewpoint_count} viewpoints "
            f"(frequency {config.sphere_frequency}, cutoff {config.sphere_cutoff:g}, "
            f"radius {config.sphere_radius:g} mm)")


def cmd_teach(args) -> int:
    config = _load_config_arg(args.config)
    scene = load_scene(args.scene)
    print(_sphere_banner(config))
    session = Session(scene, config, scene_path=args.scene)

    if args.script:
        with open(args.script, "r", encoding="utf-8") as f:
            lines = [l.strip() for l in f if l.strip() and not l.startswith("#")]
        failed = 0
        for line in lines:
            response = session.submit(line)
            marker = "ok" if response.ok else "err"
            print(f"[{marker}] {line}\n      -> {response.text}")
            if not response.ok:
                failed += 1
            if session.done:
                break
        if args.log:
            save_log(session, args.log)
        return 1 if failed else 0

    print("type protocol commands (\"start object registration\", "
          "\"this is the ...\", \"where is the ...\", \"flip\", \"done\", "
          "\"list\", \"load <scene>\", \"quit\")")
    while not session.done:
        try:
            line = input("teacher> ").strip()
        except EOFError:
            print()
            break
        if not line:
            continue
        response = session.submit(line)
        print(response.text)
    if args.log:
        save_log(session, args.log)
    return 0


def _parse_int_list(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part and not part.startswith("-"):
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def cmd_bench(args) -> int:
    config = _load_config_arg(args.config)
    print(_sphere_banner(config))
    sphere = build_view_sphere(config.sphere_frequency, config.sphere_radius,
                               config.sphere_cutoff)
    corpus = generate_corpus(args.objects, seed=args.corpus_seed)
    budgets = _parse_int_list(args.budgets)
    seeds = _parse_int_list(args.seeds)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    cells = len(strategies) * len(budgets) * len(seeds)
    done = [0]

    def progress(strategy, budget, seed):
        done[0] += 1
        print(f"  [{done[0]}/{cells}] {strategy} budget={budget} seed={seed}")

    result = run_benchmark(corpus, strategies, budgets, seeds, sphere=sphere,
                           weights=config.gov_weights(),
                           unknown_threshold=config.detector_threshold,
                           noise_sigma=config.depth_noise_sigma,
                           progress=progress if args.verbose else None)
    write_csv(args.raw, RAW_FIELDS, result.rows)
    write_csv(args.agg, AGG_FIELDS, result.aggregates)
    print(f"wrote {len(result.rows)} raw rows to {args.raw}")
    print(f"wrote {len(result.aggregates)} aggregate rows to {args.agg}")
    print(f"{'strategy':>10} {'budget':>6} {'mean':>8} {'std':>8}")
    for agg in result.aggregates:
        print(f"{agg['strategy']:>10} {agg['budget']:>6} "
              f"{agg['mean_accuracy']:>8.4f} {agg['std_accuracy']:>8.4f}")
    return 0


def cmd_serve(args) -> int:
    serve(args.host, args.port, static_root=args.console)
    return 0


def cmd_make_scene(args) -> int:
    """Write one corpus scene to a file (handy for demos and the console)."""
    corpus = generate_corpus(args.objects, seed=args.corpus_seed)
    save_scene(corpus[args.index], args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="deskteach",
                                     description="desk-scale object teaching on a "
                                                 "simulated RGB-D rig")
    sub = parser.add_subparsers(dest="command", required=True)

    p_teach = sub.add_parser("teach", help="run a teaching session")
    p_teach.add_argument("--scene", required=True, help="scene file to load")
    p_teach.add_argument("--config", help="config file (defaults built in)")
    p_teach.add_argument("--script", help="batch command file; exit 1 on any protocol error")
    p_teach.add_argument("--log", help="write the accepted-command log here on exit")
    p_teach.set_defaults(func=cmd_teach)

    p_bench = sub.add_parser("bench", help="strategy/budget benchmark")
    p_bench.add_argument("--objects", type=int, default=20)
    p_bench.add_argument("--budgets", default="1,2,3,5,8")
    p_bench.add_argument("--seeds", default="0-9")
    p_bench.add_argument("--strategies", default="explore,random")
    p_bench.add_argument("--corpus-seed", type=int, default=0)
    p_bench.add_argument("--raw", default="bench_raw.csv")
    p_bench.add_argument("--agg", default="bench_agg.csv")
    p_bench.add_argument("--config", help="config file")
    p_bench.add_argument("--verbose", action="store_true")
    p_bench.set_defaults(func=cmd_bench)

    p_serve = sub.add_parser("serve", help="run the HTTP teaching service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8787)
    p_serve.add_argument("--console", help="directory with the built browser console "
                                           "(e.g. frontend/) to host alongside the API")
    p_serve.set_defaults(func=cmd_serve)

    p_scene = sub.add_parser("make-scene", help="write a corpus scene file")
    p_scene.add_argument("--objects", type=int, default=8)
    p_scene.add_argument("--corpus-seed", type=int, default=0)
    p_scene.add_argument("--index", type=int, default=0)
    p_scene.add_argument("--out", required=True)
    p_scene.set_defaults(func=cmd_make_scene)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: verify, profile, train, sample, ablate, schedule dump.

Every artifact-producing command writes a run manifest next to its outputs
capturing the resolved configuration, seed, library version, output paths,
and a timestamp; all numerical artifacts (CSV/JSON) are byte-deterministic
given the seed. Configuration precedence is CLI flags > JSON config file >
built-in defaults, and the resolved union is echoed into the manifest.

Exit codes: 0 success, 1 check or assertion failure, 2 usage error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

import numpy as np

from . import __version__
from .bridge import EndpointPair
from .errors import IntegrationError, TrainingError
from .model import (
    ModelConfig,
    init,
    load_parameters,
    save_parameters,
)
from .numerics import RngStream
from .objectives import ObjectiveKind, target_profile
from .sampler import oracle_field, sample as sample_trajectory
from .schedules import shifted
from .tasks import (
    TaskSpec,
    evaluate,
    generate_pairs,
    model_batch_field,
    oracle_batch_field,
    pair_provider,
    report_from_endpoints,
    simulate_endpoints_for_pairs,
)
from .trainer import TrainConfig, train
from .verify import SUITES, report_to_json, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_OUT_DIR_ENV = "BRIDGELAB_OUT_DIR"


def _usage_error(message: str):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# small deterministic writers
# ---------------------------------------------------------------------------


def _atomic_write(path: str, data: "str | bytes") -> None:
    tmp = path + ".tmp"
    mode = "wb" if isinstance(data, bytes) else "w"
    kwargs = {} if isinstance(data, bytes) else {"encoding": "utf-8", "newline": "\n"}
    with open(tmp, mode, **kwargs) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row)
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_manifest(out_dir: str, command: str, config: dict, outputs: list[str]) -> str:
    manifest = {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "version": __version__,
        "outputs": sorted(os.path.basename(p) for p in outputs),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = os.path.join(out_dir, "manifest.json")
    _atomic_write(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _write_svg(path: str, series: dict[str, list[tuple[float, float]]], title: str) -> None:
    """Minimal polyline plot; a convenience view of the CSV, never load-bearing."""
    width, height, pad = 640, 400, 45
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]

    def sx(x):
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_lo) / y_span * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for i, (label, pts) in enumerate(series.items()):
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        color = colors[i % len(colors)]
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - pad - 4}" y="{pad + 16 * i + 12}" text-anchor="end" '
            f'font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")


def _ensure_out_dir(args) -> str:
    out_dir = args.out_dir or os.environ.get(_OUT_DIR_ENV) or "."
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v != "")


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v != "")


def _parse_grid(text: str) -> np.ndarray:
    """Grid syntax: either 'start:stop:count' or a comma-separated list."""
    if ":" in text:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    return np.array(_parse_floats(text))


def _parse_overrides(items: list[str] | None) -> dict:
    overrides = {}
    for item in items or []:
        name, _, value = item.partition("=")
        if not _:
            _usage_error(f"bad override {item!r}, expected name=value")
        overrides[name] = float(value)
    return overrides


def _add_task_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", default="gaussian_shift", choices=["gaussian_shift", "moons_rotate", "grid_colorize", "signal_refine"])
    p.add_argument("--dim", type=int, default=2, help="task dimension (gaussian_shift, signal_refine)")
    p.add_argument("--shift", type=_parse_floats, default=(2.0, 0.0), help="shift vector, comma separated")
    p.add_argument("--angle", type=float, default=0.7853981633974483, help="rotation angle (moons_rotate)")
    p.add_argument("--grid-size", type=int, default=4, help="grid side (grid_colorize)")
    p.add_argument("--repeat", type=int, default=4, help="repeat factor k (signal_refine)")
    p.add_argument("--task-seed", type=int, default=0)


def _task_from_args(args) -> TaskSpec:
    if args.task == "gaussian_shift":
        shift = args.shift
        if len(shift) != args.dim:
            _usage_error(f"--shift needs {args.dim} components, got {len(shift)}")
        return TaskSpec(name="gaussian_shift", dimension=args.dim, shift=shift, seed=args.task_seed)
    if args.task == "moons_rotate":
        return TaskSpec(name="moons_rotate", dimension=2, angle=args.angle, seed=args.task_seed)
    if args.task == "grid_colorize":
        return TaskSpec(
            name="grid_colorize",
            dimension=3 * args.grid_size**2,
            grid_size=args.grid_size,
            seed=args.task_seed,
        )
    return TaskSpec(
        name="signal_refine", dimension=args.dim, repeat=args.repeat, seed=args.task_seed
    )


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hidden", type=_parse_ints, default=(32, 32), help="hidden widths, comma separated")
    p.add_argument("--time-features", type=int, default=8)
    p.add_argument("--activation", default="tanh", choices=["tanh", "smooth_relu"])
    p.add_argument("--zero-context", action="store_true", help="train/evaluate with conditioning zeroed")


def _model_config(args, spec: TaskSpec) -> ModelConfig:
    return ModelConfig(
        input_dim=spec.dimension,
        hidden=args.hidden,
        time_features=args.time_features,
        context_dim=spec.context_dim,
        activation=args.activation,
    )


def _resolved_config(args, skip=("config", "func", "command")) -> dict:
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or callable(value):
            continue
        if isinstance(value, tuple):
            value = list(value)
        elif isinstance(value, np.ndarray):
            value = [float(v) for v in value]
        config[key] = value
    return config


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    overrides = _parse_overrides(args.override)
    report = run_suite(args.suite, seed=args.seed, mc=args.mc, overrides=overrides)
    text = report_to_json(report)
    outputs = []
    if args.out_dir is not None or args.out is not None:
        out_dir = _ensure_out_dir(args)
        out_path = args.out or os.path.join(out_dir, "verify_report.json")
        _atomic_write(out_path, text)
        outputs.append(out_path)
        _write_manifest(out_dir, "verify", _resolved_config(args), outputs)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['suite']}.{check['name']}: measured={check['measured']:.6g} bound={check['bound']:.6g}")
    print(f"{'PASS' if report['passed'] else 'FAIL'} suite={args.suite} checks={len(report['checks'])}")
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def cmd_profile(args) -> int:
    out_dir = _ensure_out_dir(args)
    d = args.dim
    x1 = np.full(d, np.sqrt(args.distance2 / d))
    pair = EndpointPair(np.zeros(d), x1)
    kind = ObjectiveKind(args.objective)
    rng = RngStream(seed=args.seed, stream=600) if args.mc > 0 else None
    points = target_profile(kind, pair, args.s, _parse_grid(args.grid), mc_samples=args.mc, rng=rng)
    csv_path = os.path.join(out_dir, f"profile_{kind.value}.csv")
    _write_csv(csv_path, ["t", "S", "C"], [[p.t, p.s_value, p.c_value] for p in points])
    outputs = [csv_path]
    if args.svg:
        svg_path = os.path.join(out_dir, f"profile_{kind.value}.svg")
        _write_svg(
            svg_path,
            {
                "S(t)": [(p.t, p.s_value) for p in points],
                "C(t)": [(p.t, p.c_value) for p in points],
            },
            f"target contributions: {kind.value}",
        )
        outputs.append(svg_path)
    _write_manifest(out_dir, "profile", _resolved_config(args), outputs)
    print(f"wrote {csv_path} ({len(points)} grid points)")
    return EXIT_OK


def _train_once(
    args,
    spec: TaskSpec,
    objective: ObjectiveKind,
    noise_scale: float,
    steps: int,
    observer=None,
):
    mconfig = _model_config(args, spec)
    config = TrainConfig(
        objective=objective,
        noise_scale=noise_scale,
        steps=steps,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        optimizer=args.optimizer,
        seed=args.seed,
        log_every=args.log_every,
    )
    params = init(mconfig, RngStream(seed=args.seed, stream=900))
    provider = pair_provider(spec, zero_context=args.zero_context)
    params, stats = train(params, mconfig, provider, config, observer=observer)
    return params, mconfig, config, stats


class _AlphaAudit:
    """Per-step normalization-factor statistics, written as debug CSV."""

    def __init__(self):
        self.rows = []
        self._step = None
        self._values = []

    def __call__(self, step, pair, t, eps, state, alpha_sq, target):
        if step != self._step:
            self._flush()
            self._step = step
        self._values.append(alpha_sq)

    def _flush(self):
        if self._step is not None and self._values:
            self.rows.append(
                [self._step, float(np.mean(self._values)), float(np.max(self._values))]
            )
        self._values = []

    def write(self, path: str) -> None:
        self._flush()
        _write_csv(path, ["step", "mean_alpha_sq", "max_alpha_sq"], self.rows)


def cmd_train(args) -> int:
    out_dir = _ensure_out_dir(args)
    spec = _task_from_args(args)
    audit = _AlphaAudit() if args.debug else None
    try:
        params, mconfig, config, stats = _train_once(
            args, spec, ObjectiveKind(args.objective), args.s, args.steps, observer=audit
        )
    except (TrainingError, IntegrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    params_path = os.path.join(out_dir, "params.bin")
    stats_path = os.path.join(out_dir, "stats.csv")
    save_parameters(params_path, mconfig, params)
    stats.to_csv(stats_path)
    outputs = [params_path, stats_path]
    if audit is not None:
        debug_path = os.path.join(out_dir, "debug.csv")
        audit.write(debug_path)
        outputs.append(debug_path)
    resolved = _resolved_config(args)
    resolved["train_config"] = config.to_dict()
    resolved["sample_stream_digest"] = stats.sample_stream_digest
    _write_manifest(out_dir, "train", resolved, outputs)
    final = stats.rows[-1]
    print(
        f"trained {args.steps} steps: final loss={final.loss:.6g} "
        f"grad_norm={final.grad_norm:.6g} -> {params_path}"
    )
    return EXIT_OK


def cmd_sample(args) -> int:
    out_dir = _ensure_out_dir(args)
    spec = _task_from_args(args)
    schedule = shifted(args.N, args.gamma)
    loaded = None
    if args.oracle:
        make_field = oracle_batch_field
    else:
        if not args.params:
            _usage_error("either --oracle or --params FILE is required")
        loaded = load_parameters(args.params)
        make_field = model_batch_field(
            loaded[1], loaded[0], args.objective, use_context=not args.zero_context
        )
    rng = RngStream(seed=args.seed, stream=700)
    pairs = generate_pairs(spec, args.runs, rng.split(1))
    try:
        endpoints = simulate_endpoints_for_pairs(
            make_field, pairs, schedule, args.mode, args.s, rng.split(2)
        )
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    report = report_from_endpoints(endpoints, pairs)
    d = spec.dimension
    endpoints_path = os.path.join(out_dir, "endpoints.csv")
    _write_csv(
        endpoints_path,
        ["run"] + [f"coord_{i}" for i in range(d)],
        [[r] + [float(v) for v in endpoints[r]] for r in range(args.runs)],
    )
    eval_path = os.path.join(out_dir, "eval.json")
    _atomic_write(eval_path, report.to_json() + "\n")
    outputs = [endpoints_path, eval_path]
    if args.trajectories:
        traj_path = os.path.join(out_dir, "trajectory.csv")
        field = (
            oracle_field(pairs[0].x1)
            if args.oracle
            else _single_field(loaded, args, pairs[0])
        )
        traj = sample_trajectory(
            args.mode, pairs[0].x0, field, schedule, args.s, RngStream(seed=args.seed, stream=701)
        )
        _write_csv(
            traj_path,
            ["k", "t"] + [f"coord_{i}" for i in range(d)],
            [
                [k, float(schedule.points[k])] + [float(v) for v in state.ravel()]
                for k, state in enumerate(traj)
            ],
        )
        outputs.append(traj_path)
    resolved = _resolved_config(args)
    resolved["schedule_points"] = [float(t) for t in schedule.points]
    _write_manifest(out_dir, "sample", resolved, outputs)
    print(
        f"sampled {args.runs} endpoints (mode={args.mode}, N={args.N}, gamma={args.gamma}): "
        f"paired_mse={report.paired_mse:.6g} energy_distance={report.energy_distance:.6g}"
    )
    return EXIT_OK


def _single_field(loaded, args, pair: EndpointPair):
    from .model import velocity_field_from

    mconfig, params = loaded
    context = None
    if mconfig.context_dim > 0:
        context = (
            np.zeros(mconfig.context_dim)
            if (args.zero_context or pair.context is None)
            else pair.context
        )
    return velocity_field_from(params, mconfig, args.objective, context)


def cmd_ablate(args) -> int:
    out_dir = _ensure_out_dir(args)
    spec = _task_from_args(args)
    values = [v for v in args.values.split(",") if v != ""]
    if len(values) < 2:
        _usage_error("ablation needs at least 2 axis values")
    schedule = shifted(args.N, args.gamma)

    def eval_rng():
        # fresh evaluation stream per cell: identical pairs/noise across
        # cells, so rows are directly comparable
        return RngStream(seed=args.seed, stream=800)

    header = [
        "axis",
        "value",
        "status",
        "paired_mse",
        "energy_distance",
        "mean_displacement_error",
        "sample_count",
        "final_loss",
        "max_target_sqnorm",
    ]
    rows: list[list] = []

    shared_model = None
    if args.axis in ("steps", "gamma"):
        # Sampling-time axes reuse one trained model across all cells.
        shared_model = _train_once(args, spec, ObjectiveKind(args.objective), args.s, args.steps)

    for value in values:
        try:
            objective = ObjectiveKind(args.objective)
            noise_scale = args.s
            cell_schedule = schedule
            if args.axis == "objective":
                objective = ObjectiveKind(value)
            elif args.axis == "noise_scale":
                noise_scale = float(value)
            elif args.axis == "steps":
                cell_schedule = shifted(int(value), args.gamma)
            elif args.axis == "gamma":
                cell_schedule = shifted(args.N, float(value))

            if shared_model is None:
                params, mconfig, _config, stats = _train_once(
                    args, spec, objective, noise_scale, args.steps
                )
            else:
                params, mconfig, _config, stats = shared_model
            make_field = model_batch_field(
                params, mconfig, objective, use_context=not args.zero_context
            )
            report = evaluate(
                make_field, spec, cell_schedule, args.mode, noise_scale, args.runs, eval_rng()
            )
            rows.append(
                [
                    args.axis,
                    value,
                    "ok",
                    report.paired_mse,
                    report.energy_distance,
                    report.mean_displacement_error,
                    report.sample_count,
                    stats.rows[-1].loss,
                    stats.max_target_sqnorm_overall,
                ]
            )
        except (TrainingError, IntegrationError) as exc:
            rows.append([args.axis, value, f"error:{exc}", "", "", "", "", "", ""])

    summary_path = os.path.join(out_dir, f"ablate_{args.axis}.csv")
    _write_csv(summary_path, header, rows)
    _write_manifest(out_dir, "ablate", _resolved_config(args), [summary_path])
    print(f"wrote {summary_path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_schedule_dump(args) -> int:
    out_dir = _ensure_out_dir(args)
    schedule = shifted(args.N, args.gamma)
    path = args.out or os.path.join(out_dir, "schedule.csv")
    _write_csv(
        path, ["i", "t"], [[i, float(t)] for i, t in enumerate(schedule.points)]
    )
    _write_manifest(out_dir, "schedule_dump", _resolved_config(args), [path])
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgelab",
        description="Brownian-bridge translation models: verify, profile, train, sample, ablate.",
    )
    parser.add_argument("--config", default=None, help="JSON config file (flags override it)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run a statistical verification suite")
    p.add_argument("--suite", default="all", choices=list(SUITES))
    p.add_argument("--mc", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--override", action="append", help="tolerance override name=value")
    p.add_argument("--out", default=None, help="report JSON path")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("profile", help="loss-contribution profile S(t), C(t)")
    p.add_argument("--objective", default="stabilized_velocity", choices=[k.value for k in ObjectiveKind])
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--distance2", type=float, default=1.0, help="squared endpoint distance")
    p.add_argument("--s", type=float, default=1.0, help="noise scale")
    p.add_argument("--grid", default="0:0.999:1000", help="'start:stop:count' or comma list")
    p.add_argument("--mc", type=int, default=0, help="Monte-Carlo draws per point (0 = closed form)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("train", help="train a velocity model on a synthetic task")
    _add_task_args(p)
    _add_model_args(p)
    p.add_argument("--objective", default="stabilized_velocity", choices=[k.value for k in ObjectiveKind])
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", default="adam", choices=["sgd", "adam"])
    p.add_argument("--log-every", type=int, default=50)
    p.add_argument("--debug", action="store_true", help="also write per-step alpha stats (debug.csv)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample endpoints and evaluate against ground truth")
    _add_task_args(p)
    p.add_argument("--params", default=None, help="trained parameter container")
    p.add_argument("--oracle", action="store_true", help="use the analytic conditional drift")
    p.add_argument("--objective", default="stabilized_velocity", choices=[k.value for k in ObjectiveKind])
    p.add_argument("--zero-context", action="store_true")
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--mode", default="corrected", choices=["standard", "corrected"])
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--runs", type=int, default=1024)
    p.add_argument("--trajectories", action="store_true", help="also write the first run's trajectory")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("ablate", help="train+evaluate along one axis")
    _add_task_args(p)
    _add_model_args(p)
    p.add_argument("--axis", required=True, choices=["objective", "noise_scale", "steps", "gamma"])
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--objective", default="stabilized_velocity", choices=[k.value for k in ObjectiveKind])
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", default="adam", choices=["sgd", "adam"])
    p.add_argument("--log-every", type=int, default=50)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--mode", default="corrected", choices=["standard", "corrected"])
    p.add_argument("--runs", type=int, default=1024)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("schedule", help="schedule utilities")
    sched_sub = p.add_subparsers(dest="schedule_command", required=True)
    pd = sched_sub.add_parser("dump", help="emit the discretization grid as CSV")
    pd.add_argument("--N", type=int, required=True)
    pd.add_argument("--gamma", type=float, default=1.0)
    pd.add_argument("--out", default=None)
    pd.add_argument("--out-dir", default=None)
    pd.add_argument("--seed", type=int, default=0)
    pd.set_defaults(func=cmd_schedule_dump)

    return parser


def _iter_parsers(parser: argparse.ArgumentParser):
    yield parser
    if parser._subparsers is not None:  # noqa: SLF001
        for group_action in parser._subparsers._group_actions:  # noqa: SLF001
            for sub in group_action.choices.values():
                yield from _iter_parsers(sub)


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Seed parser defaults from --config JSON so explicit flags keep precedence."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config, "r", encoding="utf-8") as fh:
        loaded = json.load(fh)
    defaults = {}
    for key, value in loaded.items():
        defaults[key.replace("-", "_")] = tuple(value) if isinstance(value, list) else value
    for sub in _iter_parsers(parser):
        valid = {action.dest for action in sub._actions}  # noqa: SLF001
        sub.set_defaults(**{k: v for k, v in defaults.items() if k in valid})


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (IntegrationError, TrainingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point orchestrating the full pipeline.

    proxref demo       generate the synthetic demo dataset
    proxref calibrate  fit per-object reflectance from sweeps
    proxref train-head train the regression head on frozen embeddings
    proxref estimate   produce predictions (fixed / head / categorical / prompt)
    proxref grasp-sim  run the simulated grasping protocol
    proxref evaluate   build the evaluation tables

Exit codes: 0 ok, 2 usage, 3 data, 4 convergence, 5 transport.  Every
artifact-producing command writes a ``<output>.run.json`` metadata sidecar
(version, resolved config, seeds, timestamps).  Configuration precedence is
flags > config file > environment > defaults; environment variables are only
read for remote prompt-client credentials (PROXREF_PROMPT_ENDPOINT,
PROXREF_PROMPT_MODEL, PROXREF_PROMPT_API_KEY).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

from . import __version__
from .calibration import fit_alpha
from .data import (
    Manifest,
    PredictionRecord,
    Split,
    load_embeddings,
    load_manifest,
    load_predictions,
    load_sweeps,
    save_manifest,
    save_predictions,
)
from .demo import write_demo
from .errors import ConvergenceError, DataError, ProxrefError, TransportError
from .estimators import (
    CategoricalEstimator,
    FixedEstimator,
    GroundTruthEstimator,
    HeadEstimator,
    PredictionTableEstimator,
    build_training_set,
)
from .grasp import (
    SceneConfig,
    load_grasp_results,
    run_protocol,
    save_grasp_results,
)
from .head import (
    FusionMode,
    TrainConfig,
    load_head_params,
    save_head_params,
    save_loss_history,
    train_head,
)
from .metrics import (
    distance_samples,
    error_table_csv,
    force_samples,
    grasp_summary,
    grasp_summary_csv,
    reflectance_error_table,
    render_error_table,
    render_grasp_summary,
    render_significance,
    significance_csv,
    significance_matrix,
)
from .prompting import ClientConfig, OpenAIChatClient, ReplayClient, estimate as prompt_estimate, save_transcripts
from .sensor import SensorIntrinsics

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4
EXIT_TRANSPORT = 5

ENV_PREFIX = "PROXREF_PROMPT_"


class CliUsageError(ProxrefError):
    pass


# ---------------------------------------------------------------------------
# configuration resolution


class Resolver:
    """flags > config file > environment > defaults, with provenance."""

    def __init__(self, args: argparse.Namespace, verbose: bool):
        self.config: dict = {}
        self.provenance: list[str] = []
        self.verbose = verbose
        config_path = getattr(args, "config", None)
        if config_path:
            try:
                self.config = json.loads(Path(config_path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise DataError(f"cannot read config file {config_path}: {exc}") from None
            if not isinstance(self.config, dict):
                raise DataError(f"config file {config_path} must hold a JSON object")

    def get(self, name: str, flag_value, default, env: str | None = None, cast=None):
        if flag_value is not None:
            value, source = flag_value, "flag"
        elif name in self.config:
            value, source = self.config[name], "config-file"
        elif env is not None and os.environ.get(env):
            value, source = os.environ[env], f"env:{env}"
        else:
            value, source = default, "default"
        if cast is not None and value is not None:
            value = cast(value)
        self.provenance.append(f"{name} = {value!r}  [{source}]")
        return value

    def report(self) -> None:
        if self.verbose:
            print("resolved configuration (flags > config file > env > defaults):")
            for line in self.provenance:
                print("  " + line)


def _write_run_metadata(primary_output: Path, command: str, config: dict, started: str) -> None:
    meta = {
        "toolkit_version": __version__,
        "command": command,
        "resolved_config": config,
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = Path(str(primary_output) + ".run.json")
    path.write_text(json.dumps(meta, indent=2, default=str) + "\n", encoding="utf-8")


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# subcommands


def _cmd_demo(args: argparse.Namespace) -> int:
    started = _now()
    res = Resolver(args, args.verbose)
    seed = res.get("seed", args.seed, 7, cast=int)
    config = {
        "outdir": args.outdir,
        "seed": seed,
        "objects": args.objects,
        "train": args.train,
        "views": args.views,
        "dim": args.dim,
    }
    res.report()
    paths = write_demo(
        args.outdir,
        seed=seed,
        n_objects=args.objects,
        n_train=args.train,
        views=args.views,
        dim=args.dim,
    )
    _write_run_metadata(Path(paths["manifest"]), "demo", config, started)
    print(f"demo dataset written under {args.outdir}")
    for key, value in paths.items():
        print(f"  {key}: {value}")
    return EXIT_OK


def _intrinsics_from(args, res: Resolver) -> SensorIntrinsics:
    d0 = res.get("d0", args.d0, 1.0, cast=float)
    n = res.get("n", args.n, 2.0, cast=float)
    return SensorIntrinsics(d0_mm=d0, n=n)


def _cmd_calibrate(args: argparse.Namespace) -> int:
    started = _now()
    res = Resolver(args, args.verbose)
    intrinsics = _intrinsics_from(args, res)
    res.report()
    manifest = load_manifest(args.manifest)
    sweeps = {}
    for rel in manifest.sweep_files:
        sweeps.update(load_sweeps(manifest.resolve(rel)))

    failures: list[str] = []
    fitted = 0
    for rec in manifest.objects:
        sweep = sweeps.get(rec.object_id)
        if sweep is None:
            failures.append(f"{rec.object_id}: no sweep data")
            continue
        try:
            result = fit_alpha(intrinsics, sweep)
        except DataError as exc:
            failures.append(f"{rec.object_id}: {exc}")
            continue
        if result.out_of_bounds:
            failures.append(
                f"{rec.object_id}: fitted alpha {result.alpha:.6g} outside (0, 1]"
            )
            continue
        rec.true_alpha = result.alpha
        fitted += 1
        print(
            f"{rec.object_id}: alpha={result.alpha:.6f} "
            f"rms={result.rms_residual:.3e} n={result.sample_count}"
        )
    out_path = Path(args.out)
    save_manifest(manifest, out_path)
    _write_run_metadata(
        out_path,
        "calibrate",
        {
            "manifest": args.manifest,
            "out": args.out,
            "d0": intrinsics.d0_mm,
            "n": intrinsics.n,
            "fitted": fitted,
            "failures": failures,
        },
        started,
    )
    if failures:
        print(f"{len(failures)} objects failed calibration:", file=sys.stderr)
        for line in failures:
            print("  " + line, file=sys.stderr)
        if not args.keep_going:
            return EXIT_DATA
    print(f"calibrated manifest with {fitted} objects -> {out_path}")
    return EXIT_OK


def _load_all_embeddings(manifest: Manifest):
    vectors = []
    for rel in manifest.embedding_files:
        vectors.extend(
            load_embeddings(manifest.resolve(rel), expected_dim=manifest.embedding_dim)
        )
    return vectors


def _cmd_train_head(args: argparse.Namespace) -> int:
    started = _now()
    res = Resolver(args, args.verbose)
    fusion = FusionMode(res.get("fusion", args.fusion, "image_only"))
    batch = res.get("batch_size", args.batch_size, 16, cast=int)
    cfg = TrainConfig(
        learning_rate=res.get("lr", args.lr, 1e-3, cast=float),
        epochs=res.get("epochs", args.epochs, 200, cast=int),
        batch_size=None if batch == 0 else batch,  # 0 selects full batch
        lr_floor=res.get("lr_floor", args.lr_floor, 0.0, cast=float),
        hidden_units=res.get("hidden", args.hidden, 32, cast=int),
        seed=res.get("seed", args.seed, 0, cast=int),
    )
    res.report()
    manifest = load_manifest(args.manifest)
    if not manifest.split_objects(Split.TRAIN):
        raise CliUsageError("manifest has zero training objects")
    vectors = _load_all_embeddings(manifest)
    images, texts, targets = build_training_set(manifest, vectors, Split.TRAIN)
    result = train_head(images, targets, cfg, fusion, texts)
    out_path = Path(args.out)
    save_head_params(result.params, out_path)
    if args.loss_csv:
        save_loss_history(result.loss_history, args.loss_csv)
    final = result.loss_history[-1] if result.loss_history else float("nan")
    _write_run_metadata(
        out_path,
        "train-head",
        {
            "manifest": args.manifest,
            "fusion": fusion.value,
            "input_dim": result.params.input_dim,
            "hidden_units": cfg.hidden_units,
            "epochs": cfg.epochs,
            "learning_rate": cfg.learning_rate,
            "lr_floor": cfg.lr_floor,
            "seed": cfg.seed,
            "samples": int(targets.shape[0]),
            "final_train_mse": final,
        },
        started,
    )
    print(
        f"trained head ({fusion.value}, input_dim={result.params.input_dim}) "
        f"final MSE {final:.3e} -> {out_path}"
    )
    return EXIT_OK


def _cmd_estimate(args: argparse.Namespace) -> int:
    started = _now()
    res = Resolver(args, args.verbose)
    trials = res.get("trials", args.trials, 6, cast=int)
    split = Split(res.get("split", args.split, "test"))
    res.report()
    manifest = load_manifest(args.manifest)
    objects = manifest.split_objects(split)
    if not objects:
        raise CliUsageError(f"manifest has zero {split.value} objects")
    out_path = Path(args.out)
    records: list[PredictionRecord] = []
    config: dict = {
        "manifest": args.manifest,
        "method": args.method,
        "split": split.value,
        "trials": trials,
    }

    if args.method == "fixed":
        if args.alpha is None:
            raise CliUsageError("--alpha is required for the fixed method")
        estimator = FixedEstimator(float(args.alpha))
        config["alpha"] = float(args.alpha)
        for rec in objects:
            for trial in range(trials):
                records.append(
                    PredictionRecord(
                        method_id=estimator.method_id,
                        object_id=rec.object_id,
                        trial_index=trial,
                        predicted_alpha=estimator.estimate_alpha(rec),
                    )
                )
    elif args.method == "head":
        if not args.params:
            raise CliUsageError("--params is required for the head method")
        fusion = FusionMode(args.fusion or "image_only")
        estimator = HeadEstimator(
            params=load_head_params(args.params),
            embeddings=_load_all_embeddings(manifest),
            fusion=fusion,
        )
        config.update({"params": args.params, "fusion": fusion.value})
        for rec in objects:
            value = estimator.estimate_alpha(rec)
            for trial in range(trials):
                records.append(
                    PredictionRecord(
                        method_id=estimator.method_id,
                        object_id=rec.object_id,
                        trial_index=trial,
                        predicted_alpha=value,
                    )
                )
    elif args.method == "categorical":
        estimator = CategoricalEstimator.from_manifest(manifest)
        config["category_alphas"] = estimator.category_alphas
        for rec in objects:
            value = estimator.estimate_alpha(rec)
            for trial in range(trials):
                records.append(
                    PredictionRecord(
                        method_id=estimator.method_id,
                        object_id=rec.object_id,
                        trial_index=trial,
                        predicted_alpha=value,
                    )
                )
    elif args.method == "prompt":
        examples = [
            (rec.name, rec.true_alpha)
            for rec in manifest.split_objects(Split.TRAIN)
            if rec.true_alpha is not None
        ]
        if not examples:
            raise CliUsageError("prompt method needs calibrated training objects")
        endpoint = res.get("endpoint", args.endpoint, "", env=ENV_PREFIX + "ENDPOINT")
        model = res.get("model", args.model, "", env=ENV_PREFIX + "MODEL")
        if args.transcripts:
            client = ReplayClient.from_directory(args.transcripts)
            config["transcripts"] = args.transcripts
        elif endpoint and model:
            client = OpenAIChatClient(
                ClientConfig(endpoint=endpoint, model=model),
                api_key=os.environ.get(ENV_PREFIX + "API_KEY", ""),
            )
            config.update({"endpoint": endpoint, "model": model})
        else:
            raise CliUsageError(
                "prompt method needs --transcripts (replay) or an endpoint+model"
            )
        run = prompt_estimate(
            [(rec.object_id, rec.name) for rec in objects],
            examples,
            client,
            method_id="prompt",
            trials=trials,
        )
        records = run.records
        audit_dir = Path(str(out_path) + ".transcripts")
        save_transcripts(run, audit_dir)
        config["audit_transcripts"] = str(audit_dir)
        if run.failures:
            print(f"{len(run.failures)} queries failed to parse:", file=sys.stderr)
            for failure in run.failures:
                print(
                    f"  {failure.object_id} trial {failure.trial_index}: {failure.message}",
                    file=sys.stderr,
                )
    else:  # pragma: no cover - argparse restricts choices
        raise CliUsageError(f"unknown method {args.method!r}")

    save_predictions(records, out_path)
    _write_run_metadata(out_path, "estimate", config, started)
    print(f"{len(records)} predictions -> {out_path}")
    return EXIT_OK


def _parse_method_spec(spec: str, manifest: Manifest):
    parts = spec.split(":")
    kind = parts[0]
    if kind == "fixed":
        if len(parts) != 2:
            raise CliUsageError(f"fixed method spec must be fixed:<alpha>, got {spec!r}")
        return FixedEstimator(float(parts[1]))
    if kind == "ground-truth":
        return GroundTruthEstimator()
    if kind == "categorical":
        return CategoricalEstimator.from_manifest(manifest)
    if kind == "head":
        if len(parts) < 2:
            raise CliUsageError(f"head method spec must be head:<params>[:fusion], got {spec!r}")
        fusion = FusionMode(parts[2]) if len(parts) > 2 else FusionMode.IMAGE_ONLY
        return HeadEstimator(
            params=load_head_params(parts[1]),
            embeddings=_load_all_embeddings(manifest),
            fusion=fusion,
        )
    if kind == "predictions":
        if len(parts) < 2:
            raise CliUsageError(
                f"predictions method spec must be predictions:<csv>[:method], got {spec!r}"
            )
        records = load_predictions(parts[1])
        method_id = parts[2] if len(parts) > 2 else None
        return PredictionTableEstimator.from_records(records, method_id)
    raise CliUsageError(f"unknown method spec {spec!r}")


def _cmd_grasp_sim(args: argparse.Namespace) -> int:
    started = _now()
    res = Resolver(args, args.verbose)
    repetitions = res.get("repetitions", args.repetitions, 5, cast=int)
    seed = res.get("seed", args.seed, 0, cast=int)
    standoff = res.get("standoff", args.standoff, 10.0, cast=float)
    noise = res.get("noise", args.noise, 0.0, cast=float)
    max_force = res.get("max_force", args.max_force, 5.2, cast=float)
    intrinsics = _intrinsics_from(args, res)
    res.report()
    manifest = load_manifest(args.manifest)
    methods = [
        _parse_method_spec(spec.strip(), manifest)
        for spec in args.methods.split(",")
        if spec.strip()
    ]
    if not methods:
        raise CliUsageError("no grasp methods given")
    config = SceneConfig(
        intrinsics=intrinsics,
        standoff_mm=standoff,
        max_force_n=max_force,
        noise_rel=noise,
    )
    run = run_protocol(
        manifest, methods, repetitions=repetitions, seed=seed, config=config
    )
    out_path = Path(args.out)
    save_grasp_results(run.results, out_path)
    summary_rows = grasp_summary(run.results)
    summary_text = render_grasp_summary(summary_rows, markers=args.markers)
    if args.summary:
        Path(args.summary).write_text(summary_text, encoding="utf-8")
        Path(str(args.summary) + ".csv").write_text(
            grasp_summary_csv(summary_rows), encoding="utf-8"
        )
    print(summary_text, end="")
    if run.failures:
        print(f"{len(run.failures)} estimator failures:", file=sys.stderr)
        for failure in run.failures:
            print(
                f"  {failure.method_id} on {failure.object_id}: {failure.message}",
                file=sys.stderr,
            )
    _write_run_metadata(
        out_path,
        "grasp-sim",
        {
            "manifest": args.manifest,
            "methods": args.methods,
            "repetitions": repetitions,
            "seed": seed,
            "standoff_mm": standoff,
            "noise_rel": noise,
            "max_force_n": max_force,
            "d0": intrinsics.d0_mm,
            "n": intrinsics.n,
            "results": len(run.results),
            "failures": len(run.failures),
        },
        started,
    )
    print(f"{len(run.results)} grasp trials -> {out_path}")
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    started = _now()
    res = Resolver(args, args.verbose)
    res.report()
    manifest = load_manifest(args.manifest)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    if args.predictions:
        records = []
        for path in args.predictions:
            records.extend(load_predictions(path))
        summaries = reflectance_error_table(records, manifest)
        (outdir / "error_table.txt").write_text(
            render_error_table(summaries, markers=args.markers), encoding="utf-8"
        )
        (outdir / "error_table.csv").write_text(
            error_table_csv(summaries), encoding="utf-8"
        )
        written += ["error_table.txt", "error_table.csv"]
        # per-method abs-error samples over the unseen split, for significance
        unseen_errors: dict[str, list[float]] = {}
        for rec in records:
            obj = manifest.object(rec.object_id)
            if obj.split is Split.TEST and obj.true_alpha is not None:
                unseen_errors.setdefault(rec.method_id, []).append(
                    abs(rec.predicted_alpha - obj.true_alpha)
                )
        if len(unseen_errors) >= 2:
            matrix = significance_matrix(unseen_errors, test=args.test)
            (outdir / "significance_error.txt").write_text(
                render_significance(matrix), encoding="utf-8"
            )
            (outdir / "significance_error.csv").write_text(
                significance_csv(matrix), encoding="utf-8"
            )
            written += ["significance_error.txt", "significance_error.csv"]

    if args.grasp_results:
        results = load_grasp_results(args.grasp_results)
        rows = grasp_summary(results)
        (outdir / "grasp_summary.txt").write_text(
            render_grasp_summary(rows, markers=args.markers), encoding="utf-8"
        )
        (outdir / "grasp_summary.csv").write_text(
            grasp_summary_csv(rows), encoding="utf-8"
        )
        written += ["grasp_summary.txt", "grasp_summary.csv"]
        for label, samples in (
            ("distance", distance_samples(results)),
            ("force", force_samples(results)),
        ):
            usable = {k: v for k, v in samples.items() if len(v) >= 2}
            if len(usable) >= 2:
                matrix = significance_matrix(usable, test=args.test)
                (outdir / f"significance_{label}.txt").write_text(
                    render_significance(matrix), encoding="utf-8"
                )
                (outdir / f"significance_{label}.csv").write_text(
                    significance_csv(matrix), encoding="utf-8"
                )
                written += [f"significance_{label}.txt", f"significance_{label}.csv"]

    if not written:
        raise CliUsageError("evaluate needs --predictions and/or --grasp-results")
    _write_run_metadata(
        outdir / "evaluate",
        "evaluate",
        {
            "manifest": args.manifest,
            "predictions": list(args.predictions or []),
            "grasp_results": args.grasp_results,
            "test": args.test,
            "written": written,
        },
        started,
    )
    for name in written:
        print(f"wrote {outdir / name}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxref",
        description="Reflectance estimation and proximity-sensing toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"proxref {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file (flag values by name)")
        p.add_argument("--verbose", action="store_true", help="print resolved config")

    p = sub.add_parser("demo", help="generate the synthetic demo dataset")
    p.add_argument("--outdir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--objects", type=int, default=54)
    p.add_argument("--train", type=int, default=40)
    p.add_argument("--views", type=int, default=6)
    p.add_argument("--dim", type=int, default=512)
    common(p)
    p.set_defaults(func=_cmd_demo)

    p = sub.add_parser("calibrate", help="fit reflectance per object from sweeps")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="path for the calibrated manifest")
    p.add_argument("--d0", type=float, default=None, help="sensor length offset [mm]")
    p.add_argument("--n", type=float, default=None, help="sensor decay exponent")
    p.add_argument("--keep-going", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("train-head", help="train the regression head")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="path for the head parameters")
    p.add_argument("--loss-csv", default=None)
    p.add_argument(
        "--fusion", choices=[m.value for m in FusionMode], default=None
    )
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--lr-floor", dest="lr_floor", type=float, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument(
        "--batch-size", dest="batch_size", type=int, default=None, help="0 = full batch"
    )
    p.add_argument("--seed", type=int, default=None)
    common(p)
    p.set_defaults(func=_cmd_train_head)

    p = sub.add_parser("estimate", help="produce a predictions CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument(
        "--method", required=True, choices=["fixed", "head", "categorical", "prompt"]
    )
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=None, help="fixed method value")
    p.add_argument("--params", default=None, help="head parameters file")
    p.add_argument(
        "--fusion", choices=[m.value for m in FusionMode], default=None
    )
    p.add_argument("--transcripts", default=None, help="replay directory for prompt")
    p.add_argument("--endpoint", default=None, help="remote completion endpoint")
    p.add_argument("--model", default=None, help="remote model identifier")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--split", choices=["train", "test"], default=None)
    common(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("grasp-sim", help="run the simulated grasping protocol")
    p.add_argument("--manifest", required=True)
    p.add_argument(
        "--methods",
        required=True,
        help=(
            "comma-separated: fixed:<a>, ground-truth, categorical, "
            "head:<params>[:fusion], predictions:<csv>[:method]"
        ),
    )
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--summary", default=None, help="summary table path")
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--standoff", type=float, default=None, help="grasp-start distance [mm]")
    p.add_argument("--noise", type=float, default=None, help="relative sensor noise")
    p.add_argument("--max-force", dest="max_force", type=float, default=None)
    p.add_argument("--d0", type=float, default=None)
    p.add_argument("--n", type=float, default=None)
    p.add_argument("--markers", action="store_true", help="mark best/second-best cells")
    common(p)
    p.set_defaults(func=_cmd_grasp_sim)

    p = sub.add_parser("evaluate", help="build evaluation tables")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", nargs="*", default=None)
    p.add_argument("--grasp-results", dest="grasp_results", default=None)
    p.add_argument("--outdir", required=True)
    p.add_argument("--test", choices=["mann-whitney", "welch"], default="mann-whitney")
    p.add_argument("--markers", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

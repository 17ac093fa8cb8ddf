"""Command-line interface: ``recover``, ``sweep``, ``image``, ``selftest``.

Every run writes a manifest JSON next to its outputs with the resolved
configuration, seed, version, and timestamps, so figure data can be
replayed exactly. Flag precedence: command line > config file > defaults.
The seed falls back to the FPS_SFT_SEED environment variable.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .core import CubeShape, load_spectrum, make_synthetic_source, save_spectrum, spectra_match
from .driver import FpsSftConfig, RecoveryReport, baseline_sft, fps_sft
from .imaging import PgmError, nonzero_fraction, read_pgm, reconstruct_sparse_image, sparsify, write_pgm
from .oracle import (
    ALGORITHMS,
    GeneratorSpec,
    generate,
    parse_placement,
    run_sweep,
    sweep_rows_to_csv,
    sweep_rows_to_dicts,
)
from .selftest import run_all


def _version_string() -> str:
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=Path(__file__).parent,
        )
        if described.returncode == 0 and described.stdout.strip():
            return f"{__version__}+{described.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def parse_shape(text: str) -> CubeShape:
    try:
        return CubeShape(int(part) for part in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}: {exc}") from None


def _default_seed() -> int:
    env = os.environ.get("FPS_SFT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(f"FPS_SFT_SEED must be an integer, got {env!r}") from None
    return 0


def _write_manifest(out_dir: Path, subcommand: str, resolved: dict, seed: int) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": resolved,
        "seed": seed,
        "version": _version_string(),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "argv": sys.argv[1:],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _report_dict(report: RecoveryReport) -> dict:
    return {
        "iterations_run": report.iterations_run,
        "samples_used": report.samples_used,
        "percent_samples": report.percent_samples(),
        "k_recovered": report.recovered.k,
        "terminated_by": report.terminated_by,
        "iteration_log": [
            {
                "iteration": s.iteration,
                "alpha": list(s.alpha),
                "tau": list(s.tau),
                "candidates": s.candidates,
                "accepted": s.accepted,
                "rejected": s.rejected,
            }
            for s in report.iteration_log
        ],
    }


def _algo_config(args, seed: int) -> FpsSftConfig:
    kwargs = {"seed": seed}
    if args.tmax:
        kwargs["max_iterations"] = args.tmax
    if args.stall:
        kwargs["stall_limit"] = args.stall
    return FpsSftConfig(**kwargs)


def cmd_recover(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else _default_seed()
    gen_seed, algo_seed = _split_seed(seed)
    if args.input:
        truth = load_spectrum(args.input)
        shape = truth.shape
        if args.shape and args.shape.dims != shape.dims:
            raise SystemExit(
                f"--shape {args.shape.dims} conflicts with input file shape {shape.dims}"
            )
    else:
        if not args.shape or not args.k:
            raise SystemExit("recover needs either --input or both --shape and --k")
        shape = args.shape
        placement, cluster = parse_placement(args.placement)
        truth, _ = generate(
            GeneratorSpec(
                shape=shape, k=args.k, placement=placement, cluster_size=cluster, seed=gen_seed
            )
        )
    source = make_synthetic_source(truth)
    config = _algo_config(args, algo_seed)
    runner = ALGORITHMS[args.algo]
    report = runner(source, config)
    success = spectra_match(report.recovered, truth)

    save_spectrum(report.recovered, out_dir / "recovered_spectrum.txt")
    payload = _report_dict(report)
    payload["shape"] = list(shape.dims)
    payload["k_true"] = truth.k
    payload["success"] = success
    payload["algo"] = args.algo
    (out_dir / "report.json").write_text(json.dumps(payload, indent=2) + "\n")
    _write_manifest(
        out_dir,
        "recover",
        {
            "algo": args.algo,
            "shape": list(shape.dims),
            "k": truth.k,
            "placement": args.placement if not args.input else None,
            "input": args.input,
            "tmax": config.max_iterations,
            "stall": config.stall_limit,
        },
        seed,
    )
    print(
        f"recovered {report.recovered.k}/{truth.k} sinusoids in "
        f"{report.iterations_run} iterations ({report.samples_used} samples); "
        f"{'perfect' if success else 'incomplete'}"
    )
    return 0 if success else 2


def _split_seed(seed: int) -> tuple[int, int]:
    gen_ss, algo_ss = np.random.SeedSequence(seed).spawn(2)
    return (
        int(gen_ss.generate_state(1, dtype=np.uint64)[0]),
        int(algo_ss.generate_state(1, dtype=np.uint64)[0]),
    )


def _load_sweep_config(path: str | None) -> dict:
    if not path:
        return {}
    raw = Path(path).read_bytes()
    try:
        if path.endswith(".json"):
            return json.loads(raw)
        return tomllib.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise SystemExit(f"cannot parse sweep config {path}: {exc}") from None


def cmd_sweep(args) -> int:
    file_cfg = _load_sweep_config(args.config)
    algos = file_cfg.get("algos", [file_cfg.get("algo", "fps")])
    if isinstance(algos, str):
        algos = [algos]
    if args.algo:
        algos = [args.algo]
    shapes_text = file_cfg.get("shapes", ["256x256"])
    if args.shape:
        shapes_text = [f"{args.shape.dims[0]}x{args.shape.dims[1]}"]
    shapes = [parse_shape(s) if isinstance(s, str) else CubeShape(s) for s in shapes_text]
    k_values = [int(k) for k in (args.k_values or file_cfg.get("k_values", [64]))]
    placements = args.placements or file_cfg.get("placements", ["uniform"])
    trials = args.trials or int(file_cfg.get("trials", 100))
    seed = args.seed if args.seed is not None else int(file_cfg.get("seed", _default_seed()))
    tmax = args.tmax or file_cfg.get("tmax")
    stall = args.stall or file_cfg.get("stall")
    cfg_kwargs = {}
    if tmax:
        cfg_kwargs["max_iterations"] = int(tmax)
    if stall:
        cfg_kwargs["stall_limit"] = int(stall)
    config = FpsSftConfig(**cfg_kwargs)
    threads = args.threads or os.cpu_count()

    rows = run_sweep(
        algos,
        shapes,
        k_values,
        placements,
        trials,
        seed,
        config=config,
        threads=threads,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.csv").write_text(sweep_rows_to_csv(rows))
    (out_dir / "sweep.json").write_text(json.dumps(sweep_rows_to_dicts(rows), indent=2) + "\n")
    _write_manifest(
        out_dir,
        "sweep",
        {
            "algos": algos,
            "shapes": [list(s.dims) for s in shapes],
            "k_values": k_values,
            "placements": placements,
            "trials": trials,
            "tmax": config.max_iterations,
            "stall": config.stall_limit,
            "threads": threads,
            "config_file": args.config,
        },
        seed,
    )
    print(sweep_rows_to_csv(rows), end="")
    return 0


def cmd_image(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        img = read_pgm(args.input)
    except PgmError as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return 1
    sparse = sparsify(img, args.threshold)
    k = int(np.count_nonzero(sparse.pixels))
    config = _algo_config(args, seed)
    reconstructed, report = reconstruct_sparse_image(sparse, config)
    err = float(np.abs(reconstructed.pixels - sparse.pixels).max())
    write_pgm(reconstructed, out_dir / "reconstructed.pgm", maxval=65535)
    metrics = {
        "input": str(args.input),
        "threshold": args.threshold,
        "shape": list(sparse.pixels.shape),
        "k": k,
        "sparsity_fraction": nonzero_fraction(sparse),
        "percent_samples": report.percent_samples(),
        "max_abs_error": err,
        "iterations": report.iterations_run,
        "samples_used": report.samples_used,
        "terminated_by": report.terminated_by,
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    _write_manifest(
        out_dir,
        "image",
        {
            "input": str(args.input),
            "threshold": args.threshold,
            "algo": args.algo,
            "tmax": config.max_iterations,
        },
        seed,
    )
    print(
        f"k={k} ({nonzero_fraction(sparse):.2%} nonzero), "
        f"{report.percent_samples():.1%} of frequency samples, "
        f"max abs error {err:.2e}"
    )
    return 0 if err <= 1e-6 else 2


def cmd_selftest(args) -> int:
    results = run_all(quick=args.quick)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fps-sft",
        description="Sparse multi-dimensional Fourier transform experiments",
    )
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default: FPS_SFT_SEED or 0)")
        p.add_argument("--tmax", type=int, default=None, help="iteration cap")
        p.add_argument("--stall", type=int, default=None, help="stall limit")
        p.add_argument("--out", default="out", help="output directory")

    p_rec = sub.add_parser("recover", help="recover a sparse spectrum from a synthetic source")
    p_rec.add_argument("--shape", type=parse_shape, default=None, help="cube shape, e.g. 256x256")
    p_rec.add_argument("--k", type=int, default=None, help="number of sinusoids to generate")
    p_rec.add_argument(
        "--placement",
        choices=["uniform", "clustered9", "clustered25"],
        default="uniform",
    )
    p_rec.add_argument("--input", default=None, help="spectrum file to use as ground truth")
    p_rec.add_argument("--algo", choices=sorted(ALGORITHMS), default="fps")
    common(p_rec)
    p_rec.set_defaults(func=cmd_recover)

    p_sweep = sub.add_parser("sweep", help="Monte Carlo recovery-rate sweep")
    p_sweep.add_argument("config", nargs="?", default=None, help="TOML or JSON sweep config")
    p_sweep.add_argument("--algo", choices=sorted(ALGORITHMS), default=None)
    p_sweep.add_argument("--shape", type=parse_shape, default=None)
    p_sweep.add_argument("--k-values", type=int, nargs="+", default=None)
    p_sweep.add_argument(
        "--placements",
        nargs="+",
        choices=["uniform", "clustered9", "clustered25"],
        default=None,
    )
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--threads", type=int, default=None, help="worker processes")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_img = sub.add_parser("image", help="sparse-image reconstruction from frequency samples")
    p_img.add_argument("input", help="input PGM image (P5 or P2)")
    p_img.add_argument("--threshold", type=float, required=True, help="sparsification threshold in [0,1]")
    p_img.add_argument("--algo", choices=["fps"], default="fps")
    common(p_img)
    p_img.set_defaults(func=cmd_image)

    p_self = sub.add_parser("selftest", help="run built-in property checks")
    p_self.add_argument("--quick", action="store_true", help="smaller shape family")
    common(p_self)
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

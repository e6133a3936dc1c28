"""Command line interface: fit, simulate, evaluate, bic-scan, experiment and serve."""

# Standard library imports
import argparse
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Third party imports
import numpy as np
from pydantic import ValidationError

from src.core.config import (
    E_TOL,
    LAMBDA_GRID_SIZE,
    MAX_ITER,
    PROJECT_NAME,
    RESTARTS,
    RNG_ALGORITHM,
    THREADS,
    VERSION,
    configure_logging,
)
from src.core.errors import HgmError, InvalidParameter
from src.models.data import DataMatrix
from src.models.fit import FitSummary
from src.models.manifest import RunManifest
from src.models.simulation import SimulationSpec
from src.models.solver import Estimator, FitTrace, ReassignMetric, SolverConfig
from src.services.clustering import coherence_rates
from src.services.model import standardize
from src.services.selection import scan
from src.services.simbench import edge_confusion, run_experiment, sample_dataset
from src.services.solver import HgmSolver
from src.storage.repositories.matrices import MatrixFormat, MatrixRepository
from src.storage.repositories.results import ResultRepository
from src.utils.digests import file_digest
from src.utils.grids import LambdaGrid, parse_int_list, parse_lambda_grid
from src.utils.uuids import generate_run_id

log = logging.getLogger(__name__)


def _positive_int(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {raw!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _non_negative_int(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {raw!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _positive_float(raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {raw!r}")
    if not np.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {raw}")
    return value


def _int_list(raw: str) -> List[int]:
    try:
        return parse_int_list(raw)
    except InvalidParameter as e:
        raise argparse.ArgumentTypeError(str(e))


def _lambda_grid(raw: str) -> LambdaGrid:
    try:
        return parse_lambda_grid(raw)
    except InvalidParameter as e:
        raise argparse.ArgumentTypeError(str(e))


def _estimator_list(raw: str) -> List[Estimator]:
    try:
        return [Estimator(token.strip()) for token in raw.split(",") if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"estimators are glasso and scio, got {raw!r}")


def _solver_config(args: argparse.Namespace, *, k: int, lam: float) -> SolverConfig:
    try:
        return SolverConfig(
            k=k,
            lam=lam,
            e_tol=args.etol,
            max_iter=args.max_iter,
            restarts=args.restarts,
            seed=args.seed,
            estimator=args.estimator,
            reassign_metric=args.reassign_metric,
            threads=args.threads,
        )
    except ValidationError as e:
        raise argparse.ArgumentError(None, f"solver flags: {e}")


def _simulation_spec(args: argparse.Namespace) -> SimulationSpec:
    try:
        return SimulationSpec(
            n=args.n,
            k=args.k,
            block_size=args.block_size,
            rho=args.rho,
            replicates_per_node=args.replicates,
            noise_sd=args.noise_sd,
            seed=args.seed,
        )
    except ValidationError as e:
        raise argparse.ArgumentError(None, f"simulation flags: {e}")


def _load_input(args: argparse.Namespace) -> Tuple[DataMatrix, Dict[str, str]]:
    """Read --input, standardize unless disabled, and digest the file."""
    path = Path(args.input)
    x = MatrixRepository(".").load(path, args.format)
    if not args.no_standardize:
        x = standardize(x)
    log.info("Loaded %s: n = %d, p = %d", path, x.n, x.p)
    return x, {"input": file_digest(path)}


def _write_manifest(
    out: ResultRepository,
    command: str,
    config: Dict[str, Any],
    *,
    seeds: Sequence[int],
    inputs: Dict[str, str],
    started: float,
) -> None:
    payload = {"config": config, "seeds": list(seeds), "inputs": inputs, "version": VERSION}
    manifest = RunManifest(
        run_id=generate_run_id(command, payload),
        command=command,
        tool=PROJECT_NAME,
        version=VERSION,
        config=config,
        seeds=list(seeds),
        generator=RNG_ALGORITHM,
        inputs=inputs,
        timings={"wall_seconds": time.perf_counter() - started},
    )
    out.write_json("manifest.json", manifest)


def _trace_rows(traces: Sequence[FitTrace]) -> List[List[Any]]:
    return [
        [
            trace.restart_seed,
            record.iteration,
            record.objective,
            record.neg_log_lik,
            record.groups_changed,
            record.z_delta,
            *record.step_objectives,
            int(record.omega_rejected),
        ]
        for trace in traces
        for record in trace.records
    ]


def _output(args: argparse.Namespace) -> Tuple[ResultRepository, MatrixRepository]:
    out = ResultRepository(args.out_dir)
    out.ensure()
    return out, MatrixRepository(args.out_dir)


def _run_fit(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    x, inputs = _load_input(args)
    cfg = _solver_config(args, k=args.k, lam=args.lam)
    initial = None
    if args.fixed_groups:
        initial = ResultRepository(".").read_groups(args.fixed_groups, k=args.k)
        inputs["fixed_groups"] = file_digest(args.fixed_groups)
        cfg = cfg.model_copy(update={"update_groups": False})

    state, traces = HgmSolver(cfg).fit(x, initial_groups=initial)

    out, matrices = _output(args)
    summary = FitSummary(
        k=cfg.k,
        lam=cfg.lam,
        estimator=cfg.estimator,
        n=x.n,
        p=x.p,
        objective=state.objective,
        neg_log_lik=state.neg_log_lik,
        iterations=state.iterations,
        converged=state.converged,
        restarts=len(traces),
        seed=cfg.seed,
    )
    out.write_groups("groups.csv", state.g)
    matrices.save(f"z.{args.format.value}", state.z.values, args.format)
    out.write_edges("omega_edges.csv", state.omega)
    out.write_vector("phi.csv", ("group", "phi"), state.phi.phi)
    out.write_json("summary.json", summary)
    out.write_table(
        "trace.csv",
        (
            "restart_seed", "iteration", "objective", "neg_log_lik", "groups_changed",
            "z_delta", "after_z", "after_phi", "after_omega", "omega_rejected",
        ),
        _trace_rows(traces),
    )
    config = {
        **cfg.model_dump(mode="json"),
        "format": args.format.value,
        "standardize": not args.no_standardize,
    }
    seeds = [t.restart_seed for t in traces]
    _write_manifest(out, "fit", config, seeds=seeds, inputs=inputs, started=started)
    log.info(
        "Fit finished: objective %.10g, %d iteration(s), converged = %s",
        state.objective, state.iterations, state.converged,
    )
    return 0


def _run_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    spec = _simulation_spec(args)
    x, truth = sample_dataset(spec)
    out, matrices = _output(args)
    matrices.save(f"x.{args.format.value}", x.values, args.format)
    matrices.save(f"z_true.{args.format.value}", truth.z_true.values, args.format)
    out.write_groups("groups_true.csv", truth.g_true)
    out.write_edges("omega_true_edges.csv", truth.omega_true)
    config = {**spec.model_dump(mode="json"), "format": args.format.value}
    _write_manifest(out, "simulate", config, seeds=[spec.seed], inputs={}, started=started)
    return 0


def _run_evaluate(args: argparse.Namespace) -> int:
    """Score fit directories against a simulate directory."""
    started = time.perf_counter()
    truth_dir = ResultRepository(args.truth)
    g_true = truth_dir.read_groups("groups_true.csv")
    omega_true = truth_dir.read_edges("omega_true_edges.csv", g_true.k)
    inputs = {
        "truth/groups_true.csv": file_digest(truth_dir.path("groups_true.csv")),
        "truth/omega_true_edges.csv": file_digest(truth_dir.path("omega_true_edges.csv")),
    }

    roc_rows = []
    coherence_rows = []
    for index, directory in enumerate(args.estimate):
        estimate = ResultRepository(directory)
        summary = estimate.read_json("summary.json")
        k, lam = int(summary["k"]), float(summary["lam"])
        confusion = edge_confusion(estimate.read_edges("omega_edges.csv", k), omega_true)
        roc_rows.append((lam, confusion.sensitivity, confusion.specificity))
        rates = coherence_rates(estimate.read_groups("groups.csv", k=k), g_true)
        coherence_rows.extend((lam, group + 1, rate) for group, rate in enumerate(rates))
        for name in ("summary.json", "omega_edges.csv", "groups.csv"):
            inputs[f"estimate{index}/{name}"] = file_digest(estimate.path(name))

    roc_rows.sort(key=lambda row: -row[0])
    out, _ = _output(args)
    out.write_table("roc.csv", ("lambda", "sensitivity", "specificity"), roc_rows)
    out.write_table("coherence.csv", ("lambda", "group", "coherence"), coherence_rows)
    _write_manifest(out, "evaluate", {}, seeds=[], inputs=inputs, started=started)
    return 0


def _run_bic_scan(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    x, inputs = _load_input(args)
    grid = args.lambda_grid
    explicit = None if isinstance(grid, int) else grid
    grid_size = grid if isinstance(grid, int) else LAMBDA_GRID_SIZE
    # lam is a placeholder; every grid point overrides it
    cfg = _solver_config(args, k=min(args.k_grid), lam=1.0)
    selected, path, failures = scan(x, args.k_grid, explicit, cfg, grid_size=grid_size)

    out, _ = _output(args)
    out.write_table(
        "bic_path.csv",
        ("k", "lambda", "bic", "neg_log_lik", "s", "converged"),
        ((r.k, r.lam, r.bic, r.neg_log_lik, r.s, r.converged) for r in path),
    )
    out.write_table(
        "bic_failures.csv",
        ("k", "lambda", "error"),
        ((f.k, f.lam, f.error) for f in failures),
    )
    out.write_json("selected.json", selected)
    config = {
        **cfg.model_dump(mode="json", exclude={"k", "lam"}),
        "k_grid": sorted(args.k_grid),
        "lambda_grid": grid,
        "format": args.format.value,
        "standardize": not args.no_standardize,
    }
    seeds = [cfg.seed + r for r in range(cfg.restarts)]
    _write_manifest(out, "bic-scan", config, seeds=seeds, inputs=inputs, started=started)
    log.info("Selected K = %d, lambda = %g (BIC %.10g)", selected.k, selected.lam, selected.bic)
    return 0


def _run_experiment(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    spec = _simulation_spec(args)
    cfg = _solver_config(args, k=spec.k, lam=args.lam)
    grid = args.lambda_grid
    report = run_experiment(
        spec,
        cfg,
        args.repeats,
        roc_estimators=args.roc_estimators,
        roc_grid=None if isinstance(grid, int) else grid,
        grid_size=grid if isinstance(grid, int) else LAMBDA_GRID_SIZE,
    )
    out, _ = _output(args)
    out.write_json("report.json", report)
    config = {
        "spec": spec.model_dump(mode="json"),
        "solver": cfg.model_dump(mode="json"),
        "repeats": args.repeats,
        "roc_estimators": [e.value for e in args.roc_estimators],
        "lambda_grid": grid,
    }
    seeds = [spec.seed + r for r in range(args.repeats)]
    _write_manifest(out, "experiment", config, seeds=seeds, inputs={}, started=started)
    log.info(
        "Experiment finished: %.1f%% exact groups, %d failed repeat(s)",
        100.0 * report.exact_fraction, report.failures,
    )
    return 0


def _run_serve(args: argparse.Namespace) -> int:
    # Third party imports
    import uvicorn

    uvicorn.run("src.api.main:app", host=args.host, port=args.port)
    return 0


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="Data matrix, rows observations")
    parser.add_argument(
        "--format", type=MatrixFormat, choices=list(MatrixFormat), default=MatrixFormat.CSV
    )
    parser.add_argument(
        "--no-standardize", action="store_true", help="Fit the columns as given"
    )


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--estimator", type=Estimator, choices=list(Estimator), default=Estimator.SCIO
    )
    parser.add_argument(
        "--reassign-metric",
        type=ReassignMetric,
        choices=list(ReassignMetric),
        default=ReassignMetric.EUCLIDEAN,
    )
    parser.add_argument("--etol", type=_positive_float, default=E_TOL)
    parser.add_argument("--max-iter", type=_non_negative_int, default=MAX_ITER)
    parser.add_argument("--restarts", type=_positive_int, default=RESTARTS)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=_positive_int, default=THREADS)


def _add_spec_flags(parser: argparse.ArgumentParser) -> None:
    defaults = SimulationSpec()
    parser.add_argument("--n", type=_positive_int, default=defaults.n)
    parser.add_argument("--k", type=_positive_int, default=defaults.k)
    parser.add_argument("--block-size", type=_positive_int, default=defaults.block_size)
    parser.add_argument("--rho", type=float, default=defaults.rho)
    parser.add_argument("--replicates", type=_positive_int, default=defaults.replicates_per_node)
    parser.add_argument("--noise-sd", type=float, default=defaults.noise_sd)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROJECT_NAME,
        description="Hierarchical graphical models: grouping and sparse latent networks.",
    )
    parser.add_argument("--verbose", action="store_true", help="Log per-iteration progress")
    parser.add_argument("--version", action="version", version=f"{PROJECT_NAME} {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    # fit
    pf = sub.add_parser("fit", help="Fit groups, latent signals and the latent network")
    _add_input_flags(pf)
    pf.add_argument("--k", type=_positive_int, required=True, help="Number of groups")
    pf.add_argument("--lambda", dest="lam", type=_positive_float, required=True)
    _add_solver_flags(pf)
    pf.add_argument("--fixed-groups", default=None, help="groups.csv to hold fixed")
    pf.add_argument("--out-dir", required=True)
    pf.set_defaults(func=_run_fit)

    # simulate
    ps = sub.add_parser("simulate", help="Draw a block-diagonal benchmark dataset")
    _add_spec_flags(ps)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument(
        "--format", type=MatrixFormat, choices=list(MatrixFormat), default=MatrixFormat.CSV
    )
    ps.add_argument("--out-dir", required=True)
    ps.set_defaults(func=_run_simulate)

    # evaluate
    pe = sub.add_parser("evaluate", help="Score fit outputs against a simulated truth")
    pe.add_argument("--truth", required=True, help="Output directory of simulate")
    pe.add_argument("--estimate", required=True, nargs="+", help="Output directories of fit")
    pe.add_argument("--out-dir", required=True)
    pe.set_defaults(func=_run_evaluate)

    # bic-scan
    pb = sub.add_parser("bic-scan", help="Select K and lambda by BIC")
    _add_input_flags(pb)
    pb.add_argument("--k-grid", type=_int_list, required=True, help="Comma-separated K values")
    pb.add_argument(
        "--lambda-grid",
        type=_lambda_grid,
        default=LAMBDA_GRID_SIZE,
        help="Point count of the default grid, or comma-separated values",
    )
    _add_solver_flags(pb)
    pb.add_argument("--out-dir", required=True)
    pb.set_defaults(func=_run_bic_scan)

    # experiment
    px = sub.add_parser("experiment", help="Repeated simulation: group recovery and ROC")
    _add_spec_flags(px)
    px.add_argument("--lambda", dest="lam", type=_positive_float, required=True)
    _add_solver_flags(px)
    px.add_argument("--repeats", type=_positive_int, default=1)
    px.add_argument(
        "--roc-estimators",
        type=_estimator_list,
        default=[],
        help="Comma-separated estimators traced with the true groups held fixed",
    )
    px.add_argument("--lambda-grid", type=_lambda_grid, default=LAMBDA_GRID_SIZE)
    px.add_argument("--out-dir", required=True)
    px.set_defaults(func=_run_experiment)

    # serve
    pv = sub.add_parser("serve", help="Serve the HTTP API")
    pv.add_argument("--host", default="127.0.0.1")
    pv.add_argument("--port", type=_positive_int, default=8000)
    pv.set_defaults(func=_run_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    configure_logging("DEBUG" if args.verbose else "INFO")
    try:
        return int(args.func(args))
    except argparse.ArgumentError as e:
        parser.error(f"{args.command}: {e}")
    # a ValidationError here comes from library output, not from a flag
    except (HgmError, OSError, ValidationError) as e:
        log.error("%s failed: %s", args.command, e)
        return 1
    return 1


if __name__ == "__main__":
    raise SystemExit(main())

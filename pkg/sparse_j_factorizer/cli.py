"""CLI interface for the sparse J-factorizer."""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click

from sparse_j_factorizer.consensus import (
    build_schedule,
    cost_report,
    random_initial_state,
    schedule_product,
    simulate as run_simulation,
)
from sparse_j_factorizer.dshb import dshb_factorize
from sparse_j_factorizer.errors import (
    MatrixFormatError,
    NotPowerOfTwo,
    PartitionError,
    ShapeMismatch,
    VerificationFailure,
)
from sparse_j_factorizer.matrix import (
    d_max,
    is_doubly_stochastic,
    is_symmetric,
    matmul_chain,
    nnz,
    ones_J,
    residual,
)
from sparse_j_factorizer.matrix_io import read_matrix, write_matrix, write_metadata, write_schedule
from sparse_j_factorizer.models import (
    CliConfig,
    IntraMethod,
    Partition,
    Phase2Method,
    SparseMatrix,
)
from sparse_j_factorizer.partition import parse_parts, partition_from_base, partition_from_parts
from sparse_j_factorizer.rhb import rhb_factorize
from sparse_j_factorizer.reporting import (
    cost_report_csv,
    cost_report_json,
    format_cost_table,
    trace_csv,
)
from sparse_j_factorizer.sds import sds_factorize

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARTITION = 3
EXIT_IO = 4
EXIT_VERIFY = 5

OUTPUT_DIR_ENV = "JFACTOR_OUTPUT_DIR"

_METHODS = [m.value for m in Phase2Method]
_INTRA = [m.value for m in IntraMethod]


def _fail(message: str, code: int) -> int:
    click.echo(f"Error: {message}", err=True)
    return code


def _check_partition_flags(n: int | None, base: int | None, parts: str | None) -> None:
    """Exactly one of --parts or --n (optionally with --base) must be given."""
    if parts is not None and (n is not None or base is not None):
        raise click.UsageError("--parts cannot be combined with --n/--base")
    if parts is None and n is None:
        raise click.UsageError("give either --parts or --n")


def _parse_parts_option(parts: str | None) -> tuple[int, ...] | None:
    if parts is None:
        return None
    try:
        return parse_parts(parts)
    except MatrixFormatError as exc:
        raise click.BadParameter(str(exc), param_hint="--parts") from exc


def resolve_partition(config: CliConfig) -> Partition:
    """Partition named by ``config``: explicit parts, else base-p digits of n."""
    if config.parts is not None:
        return partition_from_parts(config.parts)
    if config.n is None:
        raise click.UsageError("give either --parts or --n")
    return partition_from_base(config.n, config.base if config.base is not None else 2)


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------


def _phase2_factor(partition: Partition, method: Phase2Method) -> SparseMatrix:
    """The single inter-cluster factor A named by ``method``."""
    if method == Phase2Method.RHB:
        return rhb_factorize(partition).A
    if method == Phase2Method.DSHB:
        return dshb_factorize(partition).A
    sds = sds_factorize(partition)
    return sds.a_right if method == Phase2Method.SDS_RIGHT else sds.a_left


def _run_partition(config: CliConfig, partition: Partition) -> int:
    click.echo(partition.to_text())
    for k in range(1, partition.tau + 1):
        click.echo(f"  k={k}  n_k={partition.part(k)}  m_k={partition.m(k)}")
    return EXIT_OK


def _factor_files(config: CliConfig, partition: Partition) -> tuple[dict[str, SparseMatrix], dict[str, Any]]:
    method = config.method
    files: dict[str, SparseMatrix] = {}
    extra: dict[str, Any] = {}

    if method == Phase2Method.RHB:
        rhb = rhb_factorize(partition)
        files["A"] = rhb.A
        for k, level in enumerate(rhb.sequence.matrices, start=1):
            files[f"A_level_{k}"] = level
        extra["alphas"] = [str(a) for a in rhb.alphas]
        extra["betas"] = [[str(b) for b in level] for level in rhb.betas]
        extra["denominator"] = rhb.denominator
    elif method == Phase2Method.DSHB:
        dshb = dshb_factorize(partition)
        files["A"] = dshb.A
        for k, level in enumerate(dshb.sequence.matrices, start=1):
            files[f"A_level_{k}"] = level
        for k, tilde in enumerate(dshb.scaled_sequence, start=1):
            files[f"A_tilde_{k}"] = tilde
        extra["scaling_factors"] = [str(c) for c in dshb.scaling_factors]
        extra["published_nnz"] = dshb.published_nnz
    else:
        sds = sds_factorize(partition)
        files["A"] = sds.a_right if method == Phase2Method.SDS_RIGHT else sds.a_left
        files["A_L"] = sds.a_left
        files["A_R"] = sds.a_right
        for k, (t, hat) in enumerate(zip(sds.t_factors, sds.hat_factors), start=1):
            files[f"T_{k}"] = t
            files[f"T_hat_{k}"] = hat
        extra["t_nnz"] = [nnz(t) for t in sds.t_factors]
    return files, extra


def _run_factorize(config: CliConfig, partition: Partition) -> int:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    files, extra = _factor_files(config, partition)
    written = [write_matrix(m, out / name, config.fmt).name for name, m in files.items()]
    a = files["A"]
    metadata = {
        "method": config.method.value,
        "partition": partition.to_text(),
        "format": config.fmt,
        "nnz": nnz(a),
        "d_max": d_max(a),
        "residual": str(residual(a, partition)),
        "files": written,
        **extra,
    }
    write_metadata(metadata, out / "metadata.json")
    click.echo(f"Wrote {len(written)} matrices and metadata.json to {out}")
    return EXIT_OK


def _run_verify(config: CliConfig, partition: Partition) -> int:
    if config.inputs:
        factors = [read_matrix(path) for path in config.inputs]
        a = matmul_chain(factors)
        source = ",".join(config.inputs)
    else:
        a = _phase2_factor(partition, config.method)
        source = config.method.value
    if a.shape != (partition.n, partition.n):
        raise MatrixFormatError(
            f"factor has shape {a.rows}x{a.cols}, partition has order {partition.n}"
        )

    diff = residual(a, partition)
    passed = diff == 0
    if config.report_format == "json":
        click.echo(
            json.dumps(
                {
                    "status": "PASS" if passed else "FAIL",
                    "partition": partition.to_text(),
                    "source": source,
                    "residual": str(diff),
                    "nnz": nnz(a),
                    "d_max": d_max(a),
                    "symmetric": is_symmetric(a),
                    "doubly_stochastic": is_doubly_stochastic(a),
                },
                indent=2,
            )
        )
    elif passed:
        click.echo(f"PASS: J0 A J0 = J for {partition} ({source})")
    else:
        click.echo(f"FAIL: max |J0 A J0 - J| = {diff} for {partition} ({source})")
    if not passed:
        raise VerificationFailure(diff)
    return EXIT_OK


def _run_stats(config: CliConfig, partition: Partition) -> int:
    report = cost_report(partition)
    if config.report_format == "json":
        click.echo(json.dumps(cost_report_json(report), indent=2))
    elif config.report_format == "csv":
        click.echo(cost_report_csv(report), nl=False)
    else:
        click.echo(format_cost_table(report), nl=False)
    return EXIT_OK


def _run_schedule(config: CliConfig, partition: Partition) -> int:
    schedule = build_schedule(partition, config.method, config.intra, config.t_order)
    exact = schedule_product(schedule) == ones_J(partition.n)
    manifest = write_schedule(schedule, config.output_dir, config.fmt)
    click.echo(f"Wrote {len(schedule)} rounds to {manifest.parent}")
    click.echo(f"Exact product equals J: {'yes' if exact else 'no'}")
    return EXIT_OK if exact else EXIT_VERIFY


def _run_simulate(config: CliConfig, partition: Partition) -> int:
    schedule = build_schedule(partition, config.method, config.intra, config.t_order)
    x0 = random_initial_state(partition.n, config.dim, config.seed)
    trace = run_simulation(schedule, x0, config.tolerance, seed=config.seed)

    if config.trace_path is not None:
        path = Path(config.trace_path)
    else:
        path = Path(config.output_dir) / "trace.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trace_csv(trace), encoding="utf-8")

    click.echo(f"Rounds: {len(schedule)}")
    click.echo(f"Final max error: {trace.final_error:.3e}")
    if not trace.consensus_reached:
        click.echo("Rounds to consensus: not reached")
        return _fail(
            f"consensus not reached within tolerance {config.tolerance:g}", EXIT_VERIFY
        )
    click.echo(f"Rounds to consensus: {trace.rounds_to_consensus}")
    click.echo(f"Trace written to {path}")
    return EXIT_OK


_HANDLERS: dict[str, Callable[[CliConfig, Partition], int]] = {
    "partition": _run_partition,
    "factorize": _run_factorize,
    "verify": _run_verify,
    "stats": _run_stats,
    "schedule": _run_schedule,
    "simulate": _run_simulate,
}


def run(config: CliConfig) -> int:
    """Execute one command and return its exit status.

    Diagnostics go to stderr; the exit status distinguishes invalid
    partitions, unusable flag combinations, I/O or format failures and
    failed verification.
    """
    if config.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    handler = _HANDLERS.get(config.command)
    if handler is None:
        return _fail(f"unknown command {config.command!r}", EXIT_USAGE)

    try:
        partition = resolve_partition(config)
    except PartitionError as exc:
        return _fail(str(exc), EXIT_PARTITION)
    logger.info("%s: partition %s", config.command, partition)

    try:
        return handler(config, partition)
    except VerificationFailure as exc:
        return _fail(str(exc), EXIT_VERIFY)
    except NotPowerOfTwo as exc:
        return _fail(f"{exc}; use --intra dense for this partition", EXIT_USAGE)
    except (MatrixFormatError, ShapeMismatch) as exc:
        return _fail(str(exc), EXIT_IO)
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)


def _invoke(config: CliConfig) -> None:
    code = run(config)
    if code:
        raise SystemExit(code)


# ---------------------------------------------------------------------------
# click surface
# ---------------------------------------------------------------------------


def partition_options(func: Callable[..., Any]) -> Callable[..., Any]:
    func = click.option("--parts", default=None, help="Comma-separated cluster sizes, e.g. 8,4,2,1.")(func)
    func = click.option("--base", default=None, type=click.IntRange(min=2), help="Base p for the digit partition of --n (default 2).")(func)
    func = click.option("--n", "n", default=None, type=click.IntRange(min=1), help="Order n; partitioned by its base-p digits.")(func)
    return func


def method_option(func: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--method",
        default=Phase2Method.DSHB.value,
        type=click.Choice(_METHODS),
        show_default=True,
        help="Inter-cluster factor.",
    )(func)


def output_dir_option(func: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--output-dir",
        default=".",
        envvar=OUTPUT_DIR_ENV,
        type=click.Path(file_okay=False),
        show_default=True,
        help=f"Output directory (also read from {OUTPUT_DIR_ENV}).",
    )(func)


def schedule_options(func: Callable[..., Any]) -> Callable[..., Any]:
    func = click.option("--t-order", default="left", type=click.Choice(["left", "right"]), show_default=True, help="T-factor order: left realizes A_L, right realizes A_R.")(func)
    func = click.option("--intra", default=IntraMethod.DENSE.value, type=click.Choice(_INTRA), show_default=True, help="Intra-cluster rounds for Phases 1 and 3.")(func)
    return func


@click.group()
@click.option("-v", "--verbose", is_flag=True, default=False, help="Enable progress logging on stderr.")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """Sparse factorizations of J and finite-time consensus schedules."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose


def _config(ctx: click.Context, command: str, n: int | None, base: int | None, parts: str | None, **kwargs: Any) -> CliConfig:
    _check_partition_flags(n, base, parts)
    return CliConfig(
        command=command,
        n=n,
        base=base,
        parts=_parse_parts_option(parts),
        verbose=bool(ctx.obj and ctx.obj.get("verbose")),
        **kwargs,
    )


@cli.command()
@partition_options
@click.pass_context
def partition(ctx: click.Context, n: int | None, base: int | None, parts: str | None) -> None:
    """Print the partition n = n_1 + ... + n_tau and its suffix sums."""
    _invoke(_config(ctx, "partition", n, base, parts))


@cli.command()
@partition_options
@method_option
@output_dir_option
@click.option("--format", "fmt", default="json", type=click.Choice(["json", "mtx"]), show_default=True, help="Matrix file format.")
@click.pass_context
def factorize(ctx: click.Context, n: int | None, base: int | None, parts: str | None, method: str, output_dir: str, fmt: str) -> None:
    """Write the factor, its intermediate matrices and metadata.json."""
    _invoke(
        _config(ctx, "factorize", n, base, parts, method=Phase2Method(method), output_dir=output_dir, fmt=fmt)
    )


@cli.command()
@partition_options
@method_option
@click.option("--input", "inputs", multiple=True, type=click.Path(dir_okay=False), help="Serialized factor to check; repeat to verify the product in the given order.")
@click.option("--format", "report_format", default="text", type=click.Choice(["text", "json"]), show_default=True, help="Report format.")
@click.pass_context
def verify(ctx: click.Context, n: int | None, base: int | None, parts: str | None, method: str, inputs: tuple[str, ...], report_format: str) -> None:
    """Check J0 A J0 = J in exact arithmetic and print PASS or FAIL."""
    _invoke(
        _config(ctx, "verify", n, base, parts, method=Phase2Method(method), inputs=inputs, report_format=report_format)
    )


@cli.command()
@partition_options
@click.option("--format", "report_format", default="text", type=click.Choice(["text", "csv", "json"]), show_default=True, help="Report format.")
@click.pass_context
def stats(ctx: click.Context, n: int | None, base: int | None, parts: str | None, report_format: str) -> None:
    """Print nnz, d_max and Phase-2 rounds for every inter-cluster factor."""
    _invoke(_config(ctx, "stats", n, base, parts, report_format=report_format))


@cli.command()
@partition_options
@method_option
@schedule_options
@output_dir_option
@click.option("--format", "fmt", default="mtx", type=click.Choice(["json", "mtx"]), show_default=True, help="Matrix file format.")
@click.pass_context
def schedule(ctx: click.Context, n: int | None, base: int | None, parts: str | None, method: str, intra: str, t_order: str, output_dir: str, fmt: str) -> None:
    """Write the three-phase mixing schedule with a JSON manifest."""
    _invoke(
        _config(
            ctx, "schedule", n, base, parts,
            method=Phase2Method(method), intra=IntraMethod(intra), t_order=t_order,
            output_dir=output_dir, fmt=fmt,
        )
    )


@cli.command()
@partition_options
@method_option
@schedule_options
@output_dir_option
@click.option("--dim", default=4, type=click.IntRange(min=1), show_default=True, help="Columns of the initial state.")
@click.option("--seed", default=0, type=int, show_default=True, help="Seed for the initial state.")
@click.option("--tolerance", default=1e-10, type=click.FloatRange(min=0, min_open=True), show_default=True, help="Consensus tolerance on the max deviation.")
@click.option("-o", "--output", "trace_path", default=None, type=click.Path(dir_okay=False), help="Trace CSV path. Defaults to trace.csv in the output directory.")
@click.pass_context
def simulate(
    ctx: click.Context,
    n: int | None,
    base: int | None,
    parts: str | None,
    method: str,
    intra: str,
    t_order: str,
    output_dir: str,
    dim: int,
    seed: int,
    tolerance: float,
    trace_path: str | None,
) -> None:
    """Simulate averaging over the schedule and report rounds to consensus."""
    _invoke(
        _config(
            ctx, "simulate", n, base, parts,
            method=Phase2Method(method), intra=IntraMethod(intra), t_order=t_order,
            output_dir=output_dir, dim=dim, seed=seed, tolerance=tolerance,
            trace_path=trace_path,
        )
    )

"""
pcsplit command line.

    pcsplit solve   PROBLEM [run options] [--out DIR] [--json]
    pcsplit trace   PROBLEM [run options] [--out DIR]
    pcsplit certify PROBLEM [run options] [--json] [--probes N]
    pcsplit compare PROBLEM --scheme S [--scheme S ...] [run options] [--out DIR] [--jobs N]
    pcsplit example [NAME] [--out FILE] [--list]

Exit codes: 0 converged (or certificate ok), 2 iteration cap, 1 any error.
Use `python -m pcsplit` or the `pcsplit` script, which enforce that
contract; click usage errors are mapped to 1 there.
"""

from __future__ import annotations

import io
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import click
import numpy as np

from pcsplit.__version__ import __distribution__, __version__
from pcsplit.config import DEFAULT_ALPHA, DEFAULT_MAX_ITERS, DEFAULT_NU, DEFAULT_TOL, configure_logging
from pcsplit.errors import ProblemFormatError
from pcsplit.matrices import Matrix
from pcsplit.problem import PredictorKind, ProblemInstance, load_matrix, load_problem, problem_to_json
from pcsplit.solver import (
    EXIT_ERROR, EXIT_ITERATION_CAP, EXIT_OK, RunConfig, RunStatus, SchemeName, compare, invoke_run,
    make_runner, run_guard, trace_writer, write_compare,
)
from pcsplit.utils import JsonObject, RunResult, write_json_file, write_response


class MatrixFileType(click.ParamType):
    """A JSON matrix file, loaded into a dense matrix."""
    name = 'matrix-file'

    def convert(self, value: Any, param: click.Parameter | None, ctx: click.Context | None) -> Matrix:
        if isinstance(value, np.ndarray):
            return value
        try:
            return load_matrix(Path(value))
        except (OSError, ProblemFormatError) as e:
            self.fail(f"{value}: {e}", param, ctx)


def run_options(f: Callable[..., Any]) -> Callable[..., Any]:
    """The options shared by solve, trace, certify and compare."""
    options = [
        click.option('--beta', type=float, default=1.0, show_default=True, help="Penalty parameter β > 0."),
        click.option('--mu', type=float, default=0.5, show_default=True, help="SC-PRSM damping μ ∈ (0,1)."),
        click.option('--nu', type=float, default=DEFAULT_NU, show_default=True, help="Preset parameter ν ∈ (0,1)."),
        click.option('--alpha', type=float, default=DEFAULT_ALPHA, show_default=True,
                     help="custom-split blend: D = α(Qᵀ+Q)."),
        click.option('--tol', type=float, default=DEFAULT_TOL, show_default=True, help="Stopping tolerance."),
        click.option('--max-iters', type=int, default=DEFAULT_MAX_ITERS, show_default=True, help="Iteration cap."),
        click.option('--seed', type=int, default=0, show_default=True, help="Seed for probe randomness."),
        click.option('--monitor', is_flag=True, help="Monitor the contraction inequality against an oracle."),
        click.option('--force', is_flag=True, help="Run even if the plan fails certification."),
        click.option('--dense', is_flag=True, help="Use the dense corrector instead of a structured one."),
        click.option('--predictor', type=click.Choice([k.value for k in PredictorKind]),
                     help="custom-split: the predictor to pair with the split."),
        click.option('--d-file', type=MatrixFileType(), help="custom-split: JSON file with D."),
        click.option('--g-file', type=MatrixFileType(), help="custom-split: JSON file with G."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


_SCHEME_CHOICE = click.Choice([s.value for s in SchemeName])


def _config(scheme: str, opts: dict[str, Any]) -> RunConfig:
    custom = scheme == SchemeName.CUSTOM
    return RunConfig(
        scheme=SchemeName(scheme),
        beta=opts['beta'],
        mu=opts['mu'],
        nu=opts['nu'],
        alpha=opts['alpha'],
        tol=opts['tol'],
        max_iters=opts['max_iters'],
        seed=opts['seed'],
        monitor=opts['monitor'],
        force=opts['force'],
        dense=opts['dense'],
        predictor=PredictorKind(opts['predictor']) if custom and opts['predictor'] else None,
        custom_d=opts['d_file'] if custom else None,
        custom_g=opts['g_file'] if custom else None,
    )


def _fail(message: str) -> None:
    click.echo(f"✗ {message}", err=True)


def _configs(ctx: click.Context, schemes: Sequence[str], opts: dict[str, Any]) -> list[RunConfig]:
    """Build run configurations, exiting with code 1 on out-of-range values."""
    try:
        return [_config(s, opts) for s in schemes]
    except ValueError as e:
        _fail(str(e))
        ctx.exit(EXIT_ERROR)
        raise


def _load(problem_file: str, build: Callable[[ProblemInstance], RunResult]) -> RunResult:
    with run_guard('load') as box:
        problem = load_problem(problem_file)
        box.append(build(problem))
    return box[0]


def _report_run(result: RunResult, as_json: bool, out: Path | None) -> int:
    if not result['success'] or 'result' not in result:
        _fail(result.get('error', 'unknown error'))
        return result.get('exit_code', EXIT_ERROR)
    solution = result['result']
    if out is not None:
        path = write_json_file(out / 'solution.json', solution)
        click.echo(f"✓ Solution written to: {path}", err=True)
    if as_json:
        write_response(solution)
    status = solution.get('status')
    iterations = solution.get('iterations')
    if status == RunStatus.CONVERGED:
        click.echo(f"✓ {solution['scheme']} converged after {iterations} iterations", err=as_json)
    else:
        click.echo(f"⚠  {solution['scheme']} stopped at the iteration cap ({iterations})", err=as_json)
    if not as_json:
        residuals = solution.get('residuals', {})
        assert isinstance(residuals, dict)
        click.echo(f"  primal {residuals.get('primal')}  dual {residuals.get('dual')}  "
                   f"complementarity {residuals.get('complementarity')}")
    return result.get('exit_code', EXIT_OK)


@click.group()
@click.version_option(version=__version__, prog_name=__distribution__)
@click.option('--log-level', type=click.Choice(['error', 'warning', 'info', 'debug']),
              help="Override PCSPLIT_LOG.")
def main(log_level: str | None) -> None:
    """
    Prediction-correction splitting for separable convex programs.

    Solve, certify, trace and compare ADMM-type schemes built from a
    predictor and a split of Qᵀ+Q.
    """
    configure_logging(log_level)  # type: ignore[arg-type]


@main.command()
@click.argument('problem_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--scheme', type=_SCHEME_CHOICE, default=SchemeName.GS3_ALG1.value, show_default=True)
@run_options
@click.option('--out', type=click.Path(file_okay=False, path_type=Path),
              help="Directory for solution.json (and trace.csv with --monitor).")
@click.option('--json', 'as_json', is_flag=True, help="Print the solution as JSON.")
@click.pass_context
def solve(ctx: click.Context, problem_file: str, scheme: str, out: Path | None, as_json: bool, **opts: Any) -> None:
    """
    Solve a problem with one scheme.
    """
    config, = _configs(ctx, [scheme], opts)

    def build(problem: ProblemInstance) -> RunResult:
        if config.monitor and out is not None:
            with trace_writer(out / 'trace.csv') as on_row:
                return invoke_run(problem, config, on_row=on_row)
        return invoke_run(problem, config)

    ctx.exit(_report_run(_load(problem_file, build), as_json, out))


@main.command()
@click.argument('problem_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--scheme', type=_SCHEME_CHOICE, default=SchemeName.GS3_ALG1.value, show_default=True)
@run_options
@click.option('--out', type=click.Path(file_okay=False, path_type=Path),
              help="Directory for trace.csv and solution.json; the trace goes to stdout otherwise.")
@click.pass_context
def trace(ctx: click.Context, problem_file: str, scheme: str, out: Path | None, **opts: Any) -> None:
    """
    Solve and write the per-iteration trace CSV.
    """
    config, = _configs(ctx, [scheme], opts)

    def build(problem: ProblemInstance) -> RunResult:
        target = out / 'trace.csv' if out is not None else sys.stdout
        with trace_writer(target) as on_row:
            return invoke_run(problem, config, on_row=on_row)

    result = _load(problem_file, build)
    if out is not None and result['success']:
        click.echo(f"✓ Trace written to: {out / 'trace.csv'}", err=True)
    ctx.exit(_report_trace(result, out))


def _report_trace(result: RunResult, out: Path | None) -> int:
    if not result['success'] or 'result' not in result:
        _fail(result.get('error', 'unknown error'))
        return result.get('exit_code', EXIT_ERROR)
    solution = result['result']
    if out is not None:
        write_json_file(out / 'solution.json', solution)
    click.echo(f"  {solution['scheme']}: {solution['status']} after {solution['iterations']} iterations", err=True)
    return result.get('exit_code', EXIT_OK)


def certificate_report(problem: ProblemInstance, config: RunConfig, probes: int) -> JsonObject:
    """Validation, plan certificate and optional prediction-VI probes, as JSON."""
    from pcsplit.certify import probe_prediction_vi
    from pcsplit.predictors import IterateState
    from pcsplit.problem import validate_problem

    runner = make_runner(problem, config)
    report = validate_problem(problem, runner.kind)
    report.raise_if_invalid()
    plan = runner.plan
    cert = plan.certificate
    out: JsonObject = {
        'scheme': str(config.scheme),
        'predictor': str(runner.kind),
        'validation': report.to_json(),
        'shapes': {name: list(getattr(plan, name).shape) for name in ('Q', 'D', 'G', 'M', 'H')},
        'certificate': cert.to_json(),
        'failures': list(cert.failures()),
        'ok': cert.ok,
    }
    if probes > 0:
        rng = np.random.default_rng(config.seed)
        w0 = rng.standard_normal(problem.n + problem.m)
        state = IterateState.from_point(problem, w0, runner.kind)
        pred = runner.predict(state)
        worst = probe_prediction_vi(problem, state, pred, runner.matrix, runner.v_of(state),
                                    config.beta, rng, count=probes)
        out['probes'] = {'count': probes, 'min_value': worst, 'ok': worst >= -1e-8}
        out['ok'] = cert.ok and worst >= -1e-8
    return out


@main.command()
@click.argument('problem_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--scheme', type=_SCHEME_CHOICE, default=SchemeName.GS3_ALG1.value, show_default=True)
@run_options
@click.option('--json', 'as_json', is_flag=True, help="Print the report as JSON.")
@click.option('--probes', type=click.IntRange(min=0), default=0, show_default=True,
              help="Also probe the prediction inequality at N random points.")
@click.pass_context
def certify(ctx: click.Context, problem_file: str, scheme: str, as_json: bool, probes: int, **opts: Any) -> None:
    """
    Certify the correction plan of a scheme on a problem.
    """
    config, = _configs(ctx, [scheme], opts)
    result = _load(problem_file, lambda p: {'success': True, 'result': certificate_report(p, config, probes)})
    if not result['success'] or 'result' not in result:
        _fail(result.get('error', 'unknown error'))
        ctx.exit(EXIT_ERROR)
    report = result['result']
    if as_json:
        write_response(report)
    else:
        shapes = report['shapes']
        cert = report['certificate']
        assert isinstance(shapes, dict) and isinstance(cert, dict)
        click.echo(f"Scheme: {report['scheme']} (predictor {report['predictor']})")
        for name, shape in shapes.items():
            assert isinstance(shape, list)
            click.echo(f"  {name}: {shape[0]}×{shape[1]}")
        click.echo(f"  hm_residual: {cert['hm_residual']:.3g}")
        for name in ('H', 'G', 'QtQ'):
            part = cert[name]
            assert isinstance(part, dict)
            click.echo(f"  min_eig({name}): {part['min_eig']:.6g}")
        if 'probes' in report:
            probe = report['probes']
            assert isinstance(probe, dict)
            click.echo(f"  prediction probes: {probe['count']}, min value {probe['min_value']:.3g}")
    if report['ok']:
        click.echo("✓ Certificate ok", err=as_json)
        ctx.exit(EXIT_OK)
    failures = report.get('failures') or []
    assert isinstance(failures, list)
    _fail(f"Certificate failed: {'; '.join(str(f) for f in failures) or 'prediction probe negative'}")
    ctx.exit(EXIT_ERROR)


@main.command(name='compare')
@click.argument('problem_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--scheme', 'schemes', type=_SCHEME_CHOICE, multiple=True, required=True,
              help="A scheme to run; repeat for several.")
@run_options
@click.option('--out', type=click.Path(file_okay=False, path_type=Path), help="Directory for compare.csv.")
@click.option('--jobs', type=click.IntRange(min=1), default=1, show_default=True,
              help="Schemes to run concurrently.")
@click.pass_context
def compare_command(ctx: click.Context, problem_file: str, schemes: tuple[str, ...], out: Path | None,
                    jobs: int, **opts: Any) -> None:
    """
    Run several schemes on one problem and tabulate the results.
    """
    configs = _configs(ctx, schemes, opts)
    rows = []

    def build(problem: ProblemInstance) -> RunResult:
        rows.extend(compare(problem, configs, jobs=jobs))
        return {'success': True, 'result': {}}

    result = _load(problem_file, build)
    if not result['success']:
        _fail(result.get('error', 'unknown error'))
        ctx.exit(EXIT_ERROR)
    buffer = io.StringIO()
    write_compare(rows, buffer)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / 'compare.csv').write_text(buffer.getvalue())
        click.echo(f"✓ Comparison written to: {out / 'compare.csv'}", err=True)
    else:
        click.echo(buffer.getvalue(), nl=False)
    if any(r.status is RunStatus.ITERATION_CAP for r in rows):
        ctx.exit(EXIT_ITERATION_CAP)
    ctx.exit(EXIT_OK)


@main.command()
@click.argument('name', required=False)
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), help="Write the problem file here.")
@click.option('--list', 'list_', is_flag=True, help="List the fixture problems.")
@click.pass_context
def example(ctx: click.Context, name: str | None, out: Path | None, list_: bool) -> None:
    """
    Write one of the built-in fixture problems as a problem file.
    """
    from pcsplit.fixtures import FIXTURES

    if list_ or name is None:
        for fixture in FIXTURES.values():
            click.echo(f"{fixture.name:14} {fixture.description}")
        ctx.exit(EXIT_OK)
    if name not in FIXTURES:
        _fail(f"Unknown fixture {name!r}; see `pcsplit example --list`")
        ctx.exit(EXIT_ERROR)
    data = problem_to_json(FIXTURES[name].problem)
    if out is not None:
        write_json_file(out, data)
        click.echo(f"✓ {name} written to: {out}", err=True)
    else:
        write_response(data)

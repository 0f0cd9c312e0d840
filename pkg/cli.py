"""
Command-line frontend.

Every command prints one report on stdout (``--format table`` for people,
``--format json`` for machines, key-sorted) and exits with 0 when its checks
pass, 1 when a check fails and 2 on usage errors. Logs go to stderr.

    python cli.py pigeonhole --scheme teleported --pair bc
    python cli.py pigeonhole --shots 100000 --seed 7 --format json
    python cli.py lhv-scan --lambda-bits 1
"""
from __future__ import annotations

import json
import logging
import sys
from functools import wraps
from typing import Any, Callable, Dict

import click

from config import ExitCodes, ExperimentConstants, ORACLE_HOSTS, get_config
from exceptions import AppError, exit_code_for
from services.experiment_service import ExperimentService, Report
from utils.formatting import render_report
from utils.logging_utils import setup_cli_logging

logger = logging.getLogger(__name__)

FORMATS = ('table', 'json')

format_option = click.option('--format', 'output_format', type=click.Choice(FORMATS),
                             default='table', show_default=True, help='Output format.')
scheme_option = click.option('--scheme', type=click.Choice(ExperimentConstants.SCHEMES),
                             default=ExperimentConstants.DEFAULT_SCHEME, show_default=True,
                             help='Parity-measurement scheme.')
pair_option = click.option('--pair', type=click.Choice(tuple(ExperimentConstants.PAIRS)),
                           default=ExperimentConstants.DEFAULT_PAIR, show_default=True,
                           help='Pair of data qubits whose parity is measured.')
oracle_host_option = click.option('--oracle-host', type=click.Choice(ORACLE_HOSTS), default=None,
                                  help='Layout of the teleported scheme (default from config).')


def emit(command: str, report: Report, output_format: str, indent: int) -> None:
    """Print ``report`` and exit with the check-derived status."""
    if output_format == 'json':
        click.echo(json.dumps(report.document, sort_keys=True, indent=indent))
    else:
        click.echo(render_report(command, report.document))
    sys.exit(ExitCodes.OK if report.passed else ExitCodes.CHECK_FAILED)


def handles_app_errors(f: Callable) -> Callable:
    """Turn domain exceptions into a stderr diagnostic and the mapped exit code."""
    @wraps(f)
    def decorated_function(*args: Any, **kwargs: Any) -> Any:
        try:
            return f(*args, **kwargs)
        except AppError as exc:
            logger.debug(f"{type(exc).__name__}: {exc.message}", exc_info=True)
            click.echo(f"error: {exc.message}", err=True)
            sys.exit(exit_code_for(exc))

    return decorated_function


@click.group()
@click.option('--config', 'config_name', default=None,
              help='Configuration name (default: $PIGEONHOLE_CONFIG or development).')
@click.option('--verbose', is_flag=True, help='Log DEBUG records to stderr.')
@click.pass_context
def cli(ctx: click.Context, config_name: str, verbose: bool) -> None:
    """Quantum pigeonhole simulator."""
    try:
        config_class = get_config(config_name)
        config_class.validate()
        service = ExperimentService.from_config(config_class)
    except AppError as exc:
        raise click.UsageError(exc.message) from exc
    setup_cli_logging(config_class, verbose)
    ctx.obj = {
        'service': service,
        'indent': config_class.JSON_INDENT,
    }


def _context() -> Dict[str, Any]:
    return click.get_current_context().obj


@cli.command()
@format_option
@handles_app_errors
def amplitudes(output_format: str) -> None:
    """Check the closed-form amplitude identities."""
    ctx = _context()
    emit('amplitudes', ctx['service'].amplitude_identities(), output_format, ctx['indent'])


@cli.command()
@scheme_option
@pair_option
@click.option('--shots', type=int, default=None, help='Sample this many shots.')
@click.option('--seed', type=int, default=None, help='Seed for sampling.')
@click.option('--exact', is_flag=True, help='Exact branch enumeration (the default).')
@oracle_host_option
@format_option
@handles_app_errors
def pigeonhole(scheme: str, pair: str, shots: int, seed: int, exact: bool,
               oracle_host: str, output_format: str) -> None:
    """Run the post-selected three-qubit experiment."""
    ctx = _context()
    service: ExperimentService = ctx['service']
    if exact and (shots is not None or seed is not None):
        raise click.UsageError('--exact cannot be combined with --shots or --seed')
    mode = service.resolve_mode(exact, shots, seed)
    emit('pigeonhole', service.pigeonhole(scheme, pair, mode, oracle_host),
         output_format, ctx['indent'])


@cli.command()
@scheme_option
@oracle_host_option
@format_option
@handles_app_errors
def counterfactual(scheme: str, oracle_host: str, output_format: str) -> None:
    """Conditional parity given all-Y-plus, for every pair."""
    ctx = _context()
    emit('counterfactual', ctx['service'].counterfactual(scheme, oracle_host),
         output_format, ctx['indent'])


@cli.command('parity-check')
@click.option('--states', type=int, default=None, help='Random data states to compare.')
@click.option('--seed', type=int, default=None, help='Seed of the random data states.')
@oracle_host_option
@click.option('--drop-conditional-z', is_flag=True, hidden=True)
@format_option
@handles_app_errors
def parity_check(states: int, seed: int, oracle_host: str, drop_conditional_z: bool,
                 output_format: str) -> None:
    """Compare every circuit scheme with the projector-based parity measurement."""
    ctx = _context()
    report = ctx['service'].parity_check(states, seed, oracle_host, drop_conditional_z)
    emit('parity-check', report, output_format, ctx['indent'])


@cli.command('lhv-scan')
@click.option('--lambda-bits', type=click.IntRange(0, 1), default=0, show_default=True,
              help='Shared ancilla bits available to the disturbance rule.')
@pair_option
@click.option('--with-control', is_flag=True,
              help='Inject a model copying the quantum statistics.')
@format_option
@handles_app_errors
def lhv_scan(lambda_bits: int, pair: str, with_control: bool, output_format: str) -> None:
    """Exhaustively test symmetric local disturbance models."""
    ctx = _context()
    emit('lhv-scan', ctx['service'].lhv_scan(lambda_bits, pair, with_control),
         output_format, ctx['indent'])


@cli.command('locc-trace')
@scheme_option
@pair_option
@oracle_host_option
@format_option
@handles_app_errors
def locc_trace(scheme: str, pair: str, oracle_host: str, output_format: str) -> None:
    """Site-annotated run of a parity circuit with its locality audit."""
    ctx = _context()
    emit('locc-trace', ctx['service'].locc_trace(scheme, pair, oracle_host),
         output_format, ctx['indent'])


@cli.command()
@click.argument('path', type=click.File('r'))
@format_option
@handles_app_errors
def parse(path, output_format: str) -> None:
    """Parse a circuit file and print its normalized form."""
    ctx = _context()
    emit('parse', ctx['service'].normalize_circuit(path.read()), output_format, ctx['indent'])


def main() -> None:
    cli(obj={})


if __name__ == '__main__':
    main()

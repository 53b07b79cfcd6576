"""
BellNoise - Command Line Front End
Dispatches subcommands to the library and emits CSV/JSON reports
"""
import csv
import io
import json
import logging
import math
import sys
from functools import wraps
from typing import List, NamedTuple, Optional, Sequence

import click
import numpy as np

import config
from config_file import MODEL_NAMES, load_breilmann_config, load_population_config, model_from_name
from correlation import (
    CorrelationModel,
    Settings4,
    SpinConvention,
    chsh,
    classical_angles_for_correlation,
    classical_joint,
    classical_match_delta,
    maximize_chsh,
    model_correlation,
    quantum_joint,
    standard_settings,
)
from distortion import (
    DistortionParams,
    InhibitionNetwork,
    affine_distort,
    clamp_renormalize,
    critical_visibility_chsh,
    inhibition_steady_state,
    misclassification_params,
    to_complement_form,
)
from errors import BellNoiseError
from quantum_state import maximally_mixed, separability_threshold, werner_separability_threshold
from trial_sim import breilmann_trial, estimate_chsh, masking_report

logger = logging.getLogger(__name__)

PROG_NAME = 'bellnoise'


class CurveRow(NamedTuple):
    delta: float
    e_classical: float
    e_quantum_half: float
    e_quantum_photon: float


def configure_logging(verbosity: int = 0):
    """Log to stderr so stdout carries only report data"""
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = config.log_level()
    logging.basicConfig(
        level=level,
        format=config.LOG_FORMAT,
        datefmt=config.LOG_DATE_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def handles_domain_errors(f):
    """Decorator mapping library errors to exit code 1"""
    @wraps(f)
    def decorated(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except BellNoiseError as e:
            logger.debug("domain error in %s", f.__name__, exc_info=True)
            raise click.ClickException(str(e))
    return decorated


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    else:
        click.echo(text, nl=False)


def _emit_json(payload, out: Optional[str]):
    _emit(json.dumps(payload, indent=2, allow_nan=False) + '\n', out)


def _angle(value: float, degrees: bool) -> float:
    return math.radians(value) if degrees else value


def _format(value: float) -> str:
    return f'{value:.{config.CSV_SIGNIFICANT_DIGITS}g}'


def curve_rows(steps: int) -> List[CurveRow]:
    classical = CorrelationModel.classical()
    half = CorrelationModel.quantum(SpinConvention.HALF)
    photon = CorrelationModel.quantum(SpinConvention.PHOTON)
    return [
        CurveRow(
            float(delta),
            model_correlation(classical, delta, 0.0),
            model_correlation(half, delta, 0.0),
            model_correlation(photon, delta, 0.0),
        )
        for delta in np.linspace(0.0, math.pi, steps + 1)
    ]


def emit_curve(steps: int) -> str:
    """CSV of E(delta) for every model on a grid of steps intervals over [0, pi]"""
    if steps < 2:
        raise click.BadParameter(f"steps must be at least 2, got {steps}", param_hint='--steps')
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(config.CSV_HEADER)
    for row in curve_rows(steps):
        writer.writerow([_format(v) for v in row])
    return buffer.getvalue()


out_option = click.option('--out', type=click.Path(dir_okay=False, writable=True),
                          help='Write to this file instead of standard output.')
degrees_option = click.option('--degrees', is_flag=True, help='Angles given in degrees.')
seed_option = click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1),
                           help=f'Master seed (default: config file, then ${config.SEED_ENV_VAR}).')
workers_option = click.option('--workers', type=click.IntRange(min=1),
                              help='Threads used for the simulation.')
config_option = click.option('--config', 'config_path', required=True,
                             type=click.Path(exists=True, dir_okay=False),
                             help='JSON config file (version 1).')


@click.group()
@click.option('-v', '--verbose', count=True, help='Log progress to stderr (repeat for debug).')
@handles_domain_errors
def cli(verbose: int):
    """Classical versus quantum correlations under noise and heterogeneity."""
    configure_logging(verbose)


# ==================== ANALYTIC ====================

@cli.command()
@click.option('--steps', type=int, default=180, show_default=True, help='Grid intervals over [0, pi].')
@out_option
def curve(steps: int, out: Optional[str]):
    """Correlation curves of the classical and quantum models."""
    _emit(emit_curve(steps), out)


@cli.command('chsh')
@click.option('--model', 'model_name', type=click.Choice(MODEL_NAMES), default='quantum-half', show_default=True)
@click.option('--visibility', type=float, help='White-noise visibility (Werner state visibility for --model werner).')
@click.option('--angles', type=float, nargs=4, help="Settings a a' b b'.")
@click.option('--optimize', is_flag=True, help='Search for the settings maximizing |S|.')
@degrees_option
@out_option
@handles_domain_errors
def chsh_command(model_name: str, visibility: Optional[float], angles: Optional[Sequence[float]],
                 optimize: bool, degrees: bool, out: Optional[str]):
    """CHSH value of a model at given or optimized settings."""
    model = model_from_name(model_name, visibility)
    if optimize:
        settings, value = maximize_chsh(model)
    else:
        if angles:
            settings = Settings4(*(_angle(v, degrees) for v in angles))
        else:
            spin = SpinConvention.PHOTON if model_name == 'quantum-photon' else SpinConvention.HALF
            settings = standard_settings(spin)
        value = chsh(model, settings)
    _emit_json({
        'model': model.label,
        'value': value,
        'settings': settings.to_dict(),
        'classical_bound': config.CLASSICAL_CHSH_BOUND,
        'violates': abs(value) > config.CLASSICAL_CHSH_BOUND + config.CHSH_BOUND_TOL,
    }, out)


@cli.command()
@click.option('--delta', type=float, help='Quantum angle difference to match.')
@click.option('--target', type=float, help='Correlation to reproduce classically.')
@click.option('--spin', type=click.Choice([s.value for s in SpinConvention]), default='half', show_default=True)
@degrees_option
@out_option
@handles_domain_errors
def match(delta: Optional[float], target: Optional[float], spin: str, degrees: bool, out: Optional[str]):
    """Classical angle difference reproducing a quantum setting or a correlation."""
    if (delta is None) == (target is None):
        raise click.UsageError('give exactly one of --delta or --target')
    if target is not None:
        delta_c = classical_angles_for_correlation(target)
        _emit_json({'target': target, 'delta_c': delta_c,
                    'classical_joint': list(classical_joint(delta_c, 0.0).cells)}, out)
        return

    convention = SpinConvention(spin)
    delta_q = _angle(delta, degrees)
    delta_c = classical_match_delta(delta_q, convention)
    _emit_json({
        'delta_q': delta_q,
        'spin': convention.value,
        'delta_c': delta_c,
        'quantum_joint': list(quantum_joint(delta_q, 0.0, convention).cells),
        'classical_joint': list(classical_joint(delta_c, 0.0).cells),
    }, out)


@cli.command()
@click.argument('probs', type=float, nargs=-1, required=True)
@click.option('--b-coef', type=float, help='Offset b of p\' = s*p - b.')
@click.option('--visibility', type=float, help='White-noise visibility (s = V).')
@click.option('--error-rate', type=float, help='Uniform misclassification rate.')
@out_option
@handles_domain_errors
def distort(probs: Sequence[float], b_coef: Optional[float], visibility: Optional[float],
            error_rate: Optional[float], out: Optional[str]):
    """Apply the affine distortion to a probability vector."""
    given = [v is not None for v in (b_coef, visibility, error_rate)]
    if sum(given) != 1:
        raise click.UsageError('give exactly one of --b-coef, --visibility or --error-rate')
    K = len(probs)
    if b_coef is not None:
        params = DistortionParams(b_coef, K)
    elif visibility is not None:
        params = DistortionParams.from_visibility(visibility, K)
    else:
        params = misclassification_params(error_rate, K)

    result = affine_distort(probs, params)
    payload = {
        'K': params.K,
        's': params.s,
        'b_coef': params.b_coef,
        'a_coef': to_complement_form(params).a_coef,
        'output': list(result.entries),
        'negative': result.negative,
    }
    if result.negative:
        payload['clamped'] = list(clamp_renormalize(result).entries)
    _emit_json(payload, out)


@cli.command()
@click.option('--family', type=click.Choice(['werner', 'mixed']), default='werner', show_default=True)
@click.option('--tol', type=float, default=1e-6, show_default=True)
@click.option('--chsh-window', is_flag=True, help='Also report the critical CHSH visibility.')
@click.option('--chsh-tol', type=float, default=1e-4, show_default=True)
@out_option
@handles_domain_errors
def separability(family: str, tol: float, chsh_window: bool, chsh_tol: float, out: Optional[str]):
    """Visibility where a noisy state family stops being entangled."""
    if family == 'werner':
        threshold = werner_separability_threshold(tol)
    else:
        threshold = separability_threshold(lambda V: maximally_mixed(), tol)
    payload = {'family': family, 'threshold': threshold}
    if chsh_window:
        payload['critical_visibility_chsh'] = critical_visibility_chsh(chsh_tol)
    _emit_json(payload, out)


@cli.command()
@click.argument('inputs', type=float, nargs=-1, required=True)
@click.option('--weight', type=float, help='Uniform all-to-all inhibition strength.')
@click.option('--weights', 'weights_json', help='Full weight matrix as a JSON array.')
@click.option('--rectified', is_flag=True, help='Clamp outputs at zero.')
@out_option
@handles_domain_errors
def inhibit(inputs: Sequence[float], weight: Optional[float], weights_json: Optional[str],
            rectified: bool, out: Optional[str]):
    """Steady state of a lateral inhibition network."""
    if (weight is None) == (weights_json is None):
        raise click.UsageError('give exactly one of --weight or --weights')
    if weight is not None:
        net = InhibitionNetwork.uniform(inputs, weight, rectified)
    else:
        try:
            W = json.loads(weights_json)
        except json.JSONDecodeError as e:
            raise click.BadParameter(f'not valid JSON: {e}', param_hint='--weights')
        net = InhibitionNetwork(inputs, W, rectified)
    y = inhibition_steady_state(net)
    _emit_json({'inputs': list(inputs), 'rectified': rectified, 'outputs': [float(v) for v in y]}, out)


# ==================== SIMULATION ====================

@cli.command()
@config_option
@seed_option
@workers_option
@degrees_option
@out_option
@handles_domain_errors
def trial(config_path: str, seed: Optional[int], workers: Optional[int], degrees: bool, out: Optional[str]):
    """Finite-sample CHSH estimate for a simulated population."""
    cfg = load_population_config(config_path, degrees=degrees, seed=seed, workers=workers)
    _emit_json(estimate_chsh(cfg).to_dict(), out)


@cli.command()
@config_option
@seed_option
@workers_option
@out_option
@handles_domain_errors
def breilmann(config_path: str, seed: Optional[int], workers: Optional[int], out: Optional[str]):
    """Selection-biased trial where compliance and outcome share a trait."""
    cfg = load_breilmann_config(config_path, seed=seed, workers=workers)
    _emit_json(breilmann_trial(cfg).to_dict(), out)


@cli.command()
@config_option
@click.option('--visibility', type=float, help='Distort the source by white noise of this visibility.')
@click.option('--b-coef', type=float, help='Distort the source by this offset instead.')
@seed_option
@workers_option
@degrees_option
@out_option
@handles_domain_errors
def masking(config_path: str, visibility: Optional[float], b_coef: Optional[float], seed: Optional[int],
            workers: Optional[int], degrees: bool, out: Optional[str]):
    """CHSH verdicts for raw, distorted, jittered and classically matched sources."""
    if visibility is not None and b_coef is not None:
        raise click.UsageError('give at most one of --visibility or --b-coef')
    cfg = load_population_config(config_path, degrees=degrees, seed=seed, workers=workers)
    if visibility is not None:
        params = DistortionParams.from_visibility(visibility)
    elif b_coef is not None:
        params = DistortionParams(b_coef)
    else:
        params = None
    _emit_json(masking_report(cfg, params).to_dict(), out)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Exit code: 0 success, 1 domain error, 2 usage error"""
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name=PROG_NAME,
                      standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo('Aborted!', err=True)
        return 1
    return rv if isinstance(rv, int) else 0

"""Command-line entry point: validate, simulate, transform and compare.

Every command takes a network (--network net.json) or a TOML run config
(--config run.toml) whose per-command table fills in any flag left unset.
Reports go to --out (stdout by default) as JSON (validate) or CSV.

Exit codes:
    0 success, 1 comparison failure, 2 bad command or flags,
    3 malformed config or network, 4 dimension mismatch,
    5 mathematical domain or assumption failure.
"""

import itertools
import json
import logging
import sys
from enum import Enum
from typing import Optional

import fire
import numpy as np
import tomli

from . import excursions, montecarlo, transforms
from .excursions import ExcursionChain, ExcursionError
from .fluctuation import (HorizonConfig, SummaryError, check_last_passage,
                          check_ordering, ordering_pairs)
from .levy import (DomainError, DriftError, PathConfig, exponent_handles,
                   sample_path)
from .model import (DimensionError, JumpLaw, PrioritySpec, SpecError,
                    TreeNetworkSpec, validate_network)
from .montecarlo import (EstimationError, NetworkSamples, SamplingConfig,
                         Tolerance, Verdict)
from .skorokhod import (ReflectionError, check_dynamics, reflect_explicit,
                        write_trajectory_csv)
from .transforms import TransformError
from .utils import reports
from .utils.log import set_up_logging
from .utils.parser import (ConfigError, load_network, load_run_config,
                           parse_vector)


logger = logging.getLogger(__name__)


class ComparisonFailure(Exception):
    """At least one analytic value disagreed with its estimate."""

    pass


EXIT_OK = 0
EXIT_COMPARISON = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DIMENSION = 4
EXIT_DOMAIN = 5

DOMAIN_ERRORS = (DomainError, DriftError, TransformError, ExcursionError,
                 SummaryError, ReflectionError, EstimationError)
CONFIG_ERRORS = (SpecError, ConfigError, json.JSONDecodeError,
                 tomli.TOMLDecodeError, FileNotFoundError)

GRID_LEVELS = (0.0, 0.5, 1.0)
FLUCTUATION_BETAS = (0.5, 1.0, 2.0)
BUSY_ALPHAS = (0.5, 1.0)
IDLE_LEVELS = (0.5, 1.0)
PRIORITY_LEVELS = (0.5, 1.0)
FULL_GRID_MAX_N = 2
_DEFAULT_PATHS = 10000
_DEFAULT_MU = 1.0
_DEFAULT_ZETA_RATE = 1.0
_DEFAULT_W_HIGH = 10.0


class TransformKind(str, Enum):
    """Analytic quantities the transform command evaluates."""

    WB = 'wb'
    XG = 'xg'
    SINGLE = 'single'
    IDLE = 'idle'
    BUSY = 'busy'
    FLUCTUATION = 'fluctuation'
    PRIORITY = 'priority'


DESCRIPTIONS = {
    TransformKind.WB: "E exp(-<omega, W> - <beta, B>) of a T1-T6 tandem.",
    TransformKind.XG: "E exp(-<alpha, G> - <beta, X-bar>) of a tandem.",
    TransformKind.SINGLE: "Per-station transforms of a T7-T8 tandem.",
    TransformKind.IDLE: "E exp(-<gamma, I>) of a T7-T8 tandem.",
    TransformKind.BUSY: "Per-station busy period transforms.",
    TransformKind.FLUCTUATION: "Per-station E exp(-alpha G - beta X-bar).",
    TransformKind.PRIORITY: "E exp(-<omega, W> - <beta, E>) of a priority "
                            "system.",
}

TRANSFORM_FIELDS = ['kind', 'station', 'alpha', 'beta', 'omega', 'gamma',
                    'value', 'form']
STATIONARY_SAMPLE_FIELDS = ['path', 'station'] + \
    list(montecarlo.STATE_FIELDS)


# ---------- Commands ---------- #
def validate(network: Optional[str] = None, config: Optional[str] = None,
             out: Optional[str] = None, log_file: Optional[str] = 'log.txt',
             log_to_stdout: bool = True, log_level: str = 'INFO'):
    """Check N1-N3 and T1-T8 and write the report as JSON.

    Args:
        network: JSON network (or priority system) file.
        config: TOML run config, alternative to the flags.
        out: report path, stdout if unset.
        log_file: log file path; None disables file logging.
        log_to_stdout: whether to log to the console as well.
        log_level: log level name.
    """
    set_up_logging(log_file, log_to_stdout, log_level)
    spec, opts = _resolve('validate', network, config, out=out)
    if isinstance(spec, PrioritySpec):
        document = validate_network(spec.to_tandem()).to_dict()
        document['priority'] = True
    else:
        document = validate_network(spec).to_dict()
    document['n'] = spec.n
    reports.write_json(opts['out'], document)


def simulate(network: Optional[str] = None, config: Optional[str] = None,
             seed: Optional[int] = None, horizon: Optional[float] = None,
             paths: Optional[int] = None, mode: Optional[str] = None,
             delta: Optional[float] = None, workers: Optional[int] = None,
             out: Optional[str] = None, log_file: Optional[str] = 'log.txt',
             log_to_stdout: bool = True, log_level: str = 'INFO'):
    """Simulate a network.

    mode 'trajectory' reflects one input path up to horizon and writes its
    knots (t, W, L); mode 'stationary' writes paths stationary samples of
    (W, B, I, W~, B~, I~, E), one row per path and station.

    Args:
        network: JSON network file.
        config: TOML run config.
        seed: master seed (mandatory).
        horizon: trajectory horizon.
        paths: number of stationary samples.
        mode: 'trajectory' or 'stationary'.
        delta: brownian grid step.
        workers: worker processes.
        out: CSV path, stdout if unset.
        log_file: log file path; None disables file logging.
        log_to_stdout: whether to log to the console as well.
        log_level: log level name.
    """
    set_up_logging(log_file, log_to_stdout, log_level)
    spec, opts = _resolve('simulate', network, config, seed=seed,
                          horizon=horizon, paths=paths, mode=mode,
                          delta=delta, workers=workers, out=out)
    spec = _as_network(spec)
    seed = _require_seed(opts)
    sampling = _sampling_config(opts, (log_file, log_to_stdout, log_level))

    mode = opts.get('mode') or 'trajectory'
    if mode == 'trajectory':
        if opts.get('horizon') is None:
            _config_error("simulate needs --horizon in trajectory mode")
        path = sample_path(spec, float(opts['horizon']), seed, sampling.path)
        result = reflect_explicit(spec, path)
        check_dynamics(result, spec.w0)
        write_trajectory_csv(result, opts['out'])
    elif mode == 'stationary':
        samples = montecarlo.estimate_stationary(spec, _paths(opts), seed,
                                                 sampling)
        rows = []
        for index in range(samples.n_paths):
            for station in range(spec.n):
                row = {'path': index, 'station': station + 1}
                row.update({name: samples[name][index, station]
                            for name in montecarlo.STATE_FIELDS})
                rows.append(row)
        reports.write_csv(opts['out'], STATIONARY_SAMPLE_FIELDS, rows)
    else:
        _config_error(f"Unknown simulate mode {mode!r}")


def transform(network: Optional[str] = None, config: Optional[str] = None,
              kind: Optional[str] = None, alpha=None, beta=None, omega=None,
              gamma=None, out: Optional[str] = None,
              log_file: Optional[str] = 'log.txt',
              log_to_stdout: bool = True, log_level: str = 'INFO'):
    """Evaluate closed-form transforms and write them as CSV.

    Args:
        network: JSON network (or priority system) file.
        config: TOML run config.
        kind: one of TransformKind ('wb' by default, 'priority' for
            priority systems).
        alpha: comma-separated argument of G / busy ages.
        beta: comma-separated argument of B, X-bar or E.
        omega: comma-separated argument of W.
        gamma: comma-separated argument of I.
        out: CSV path, stdout if unset.
        log_file: log file path; None disables file logging.
        log_to_stdout: whether to log to the console as well.
        log_level: log level name.
    """
    set_up_logging(log_file, log_to_stdout, log_level)
    spec, opts = _resolve('transform', network, config, kind=kind,
                          alpha=alpha, beta=beta, omega=omega, gamma=gamma,
                          out=out)
    default = TransformKind.PRIORITY if isinstance(spec, PrioritySpec) \
        else TransformKind.WB
    try:
        kind = TransformKind(opts.get('kind') or default)
    except ValueError as err:
        choices = [item.value for item in TransformKind]
        _config_error(f"Unknown transform kind {opts.get('kind')!r}; "
                      f"expected one of {choices}", err)
    query = transforms.TransformQuery.build(
        spec.n, opts.get('alpha'), opts.get('beta'), opts.get('omega'),
        opts.get('gamma'))
    rows = _transform_rows(spec, kind, query)
    reports.write_csv(opts['out'], TRANSFORM_FIELDS, rows)


def mc_compare(network: Optional[str] = None, config: Optional[str] = None,
               paths: Optional[int] = None, seed: Optional[int] = None,
               delta: Optional[float] = None, workers: Optional[int] = None,
               busy: Optional[bool] = None,
               convergence: Optional[bool] = None,
               w_high: Optional[str] = None, out: Optional[str] = None,
               log_file: Optional[str] = 'log.txt',
               log_to_stdout: bool = True, log_level: str = 'INFO'):
    """Compare every applicable transform with its Monte Carlo estimate.

    The report has one row per query (query, analytic, mc_mean, mc_se, z,
    verdict). It is written in full before the command fails on any
    failed verdict.

    Args:
        network: JSON network file.
        config: TOML run config.
        paths: number of stationary samples.
        seed: master seed (mandatory).
        delta: brownian grid step.
        workers: worker processes.
        busy: include busy period checks (direct simulation).
        convergence: include the empty-versus-w_high KS check of W(t).
        w_high: initial contents of that check (10 per station if unset).
        out: CSV path, stdout if unset.
        log_file: log file path; None disables file logging.
        log_to_stdout: whether to log to the console as well.
        log_level: log level name.
    """
    set_up_logging(log_file, log_to_stdout, log_level)
    spec, opts = _resolve('mc-compare', network, config, paths=paths,
                          seed=seed, delta=delta, workers=workers, busy=busy,
                          convergence=convergence, w_high=w_high, out=out)
    if isinstance(spec, PrioritySpec):
        verdicts = _priority_verdicts(spec, opts, (log_file, log_to_stdout,
                                                   log_level))
    else:
        verdicts = _network_verdicts(spec, opts, (log_file, log_to_stdout,
                                                  log_level))
    _finish_comparison(verdicts, opts['out'])


def excursion_check(network: Optional[str] = None,
                    config: Optional[str] = None,
                    paths: Optional[int] = None, seed: Optional[int] = None,
                    mu: Optional[float] = None,
                    zeta_rate: Optional[float] = None,
                    out: Optional[str] = None,
                    log_file: Optional[str] = 'log.txt',
                    log_to_stdout: bool = True, log_level: str = 'INFO'):
    """Compare excursion formulas of a T7-T8 tandem with simulation.

    Covers the undershoot transform of every station (identity marks), the
    exponential overshoot, the backward recurrence time of a rate mu
    Poisson process at an Exp(zeta_rate) time, and the nested excursion
    ends of the slowest station.

    Args:
        network: JSON network file satisfying T7-T8.
        config: TOML run config.
        paths: draws per check.
        seed: master seed (mandatory).
        mu: Poisson rate of the recurrence check.
        zeta_rate: rate of the exponential observation time.
        out: CSV path, stdout if unset.
        log_file: log file path; None disables file logging.
        log_to_stdout: whether to log to the console as well.
        log_level: log level name.
    """
    set_up_logging(log_file, log_to_stdout, log_level)
    spec, opts = _resolve('excursion-check', network, config, paths=paths,
                          seed=seed, mu=mu, zeta_rate=zeta_rate, out=out)
    spec = _as_network(spec)
    seed = _require_seed(opts)
    count = _paths(opts)
    chain = ExcursionChain.from_network(spec)
    tolerance = _tolerance(opts)
    verdicts = []

    for i in range(chain.n):
        model = chain.model(i)
        draws = montecarlo.simulate_excursions(model, count, seed + i)
        for beta, gamma, kappa in itertools.product(IDLE_LEVELS, IDLE_LEVELS,
                                                    (0.0, 0.5)):
            analytic = excursions.undershoot_transform(model, beta, gamma,
                                                       [kappa])
            estimate = montecarlo.undershoot_estimate(draws, beta, gamma,
                                                      [kappa])
            verdicts.append(montecarlo.compare(
                analytic, estimate, tolerance,
                f"undershoot station={i + 1} beta={beta} gamma={gamma} "
                f"kappa={kappa}"))
        lam = chain.intensity
        verdicts.append(montecarlo.compare(
            lam / (lam + 1.0),
            montecarlo.estimate_expectation(np.exp(-draws.overshoot)),
            tolerance, f"overshoot station={i + 1}"))
        ks = montecarlo.exponential_check(draws.overshoot, lam)
        logger.info(f"Overshoot KS at station {i + 1}: statistic "
                    f"{ks.statistic:.4g}, p-value {ks.pvalue:.4g}")

    mu = float(opts.get('mu') or _DEFAULT_MU)
    zeta_law = JumpLaw.exponential(
        float(opts.get('zeta_rate') or _DEFAULT_ZETA_RATE))
    recurrence = montecarlo.simulate_recurrence(mu, zeta_law, count,
                                                seed + chain.n)
    for s, beta, gamma in itertools.product((0.0, 0.5, 1.0), IDLE_LEVELS,
                                            IDLE_LEVELS):
        verdicts.append(montecarlo.compare(
            excursions.recurrence_transform(mu, zeta_law, s, beta, gamma),
            montecarlo.recurrence_estimate(recurrence, s, beta, gamma),
            tolerance, f"recurrence s={s} beta={beta} gamma={gamma}"))

    k = chain.n - 1
    structure = montecarlo.simulate_excursion_structure(chain, k, count,
                                                        seed + chain.n + 1)
    for level, gamma in itertools.product(IDLE_LEVELS, (0.0, 0.5)):
        beta = np.full(k, level)
        verdicts.append(montecarlo.compare(
            excursions.rho_transform(chain, k, beta, gamma),
            montecarlo.rho_estimate(structure, beta, gamma), tolerance,
            f"rho k={k + 1} beta={level} gamma={gamma}"))
    _finish_comparison(verdicts, opts['out'])


def priority(network: Optional[str] = None, config: Optional[str] = None,
             paths: Optional[int] = None, seed: Optional[int] = None,
             omega=None, beta=None, delta: Optional[float] = None,
             workers: Optional[int] = None, out: Optional[str] = None,
             log_file: Optional[str] = 'log.txt',
             log_to_stdout: bool = True, log_level: str = 'INFO'):
    """Compare the priority transform of (W, E) with simulation.

    Without omega and beta, the grid omega in {0.5, 1}^n, beta in {0, 0.5}
    (uniform) is used.

    Args:
        network: JSON priority system file.
        config: TOML run config.
        paths: number of stationary samples.
        seed: master seed (mandatory).
        omega: comma-separated argument of W.
        beta: comma-separated argument of E.
        delta: brownian grid step.
        workers: worker processes.
        out: CSV path, stdout if unset.
        log_file: log file path; None disables file logging.
        log_to_stdout: whether to log to the console as well.
        log_level: log level name.
    """
    set_up_logging(log_file, log_to_stdout, log_level)
    spec, opts = _resolve('priority', network, config, paths=paths,
                          seed=seed, omega=omega, beta=beta, delta=delta,
                          workers=workers, out=out)
    if not isinstance(spec, PrioritySpec):
        _config_error("priority needs a priority system document "
                      "({'rate', 'inputs'})")
    verdicts = _priority_verdicts(spec, opts, (log_file, log_to_stdout,
                                               log_level))
    _finish_comparison(verdicts, opts['out'])


COMMANDS = {
    'validate': validate,
    'simulate': simulate,
    'transform': transform,
    'mc-compare': mc_compare,
    'excursion-check': excursion_check,
    'priority': priority,
}


def run(argv: Optional[list[str]] = None) -> int:
    """Run one command and map its outcome to an exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        fire.Fire(COMMANDS, command=argv, name='levyfluid')
    except fire.core.FireExit as err:
        return EXIT_OK if err.code in (None, 0) else EXIT_USAGE
    except ComparisonFailure:
        return EXIT_COMPARISON
    except DimensionError:
        return EXIT_DIMENSION
    except CONFIG_ERRORS as err:
        logger.error(f"Configuration error: {err}")
        return EXIT_CONFIG
    except DOMAIN_ERRORS as err:
        logger.error(f"Domain error: {err}")
        return EXIT_DOMAIN
    return EXIT_OK


def cli_main():
    """Call run via command-line interface."""
    sys.exit(run())


# ---------- Verdict grids ---------- #
def _network_verdicts(spec: TreeNetworkSpec, opts: dict,
                      log_args: tuple) -> list[Verdict]:
    spec = _as_network(spec)
    seed = _require_seed(opts)
    sampling = _sampling_config(opts, log_args)
    tolerance = _tolerance(opts)
    report = validate_network(spec)
    samples = montecarlo.estimate_stationary(spec, _paths(opts), seed,
                                             sampling)
    verdicts = []
    n = spec.n
    handles = exponent_handles(spec)
    verdicts.append(montecarlo.law_verdict(
        "H>0 iff xbar=0", check_last_passage(samples['xbar'], samples['h']),
        samples.n_paths))

    for k, handle in enumerate(handles):
        for beta in FLUCTUATION_BETAS:
            weights = _unit(n, k, beta)
            verdicts.append(_paired(
                transforms.fluctuation_identity(handle, 0.0, beta),
                samples, {'xbar': weights}, tolerance,
                f"fluctuation station={k + 1} alpha=0 beta={beta}"))

    if _is_tandem(spec):
        alpha = np.full(n, 0.5)
        verdicts.append(_paired(
            transforms.quasi_product_XG(spec, alpha, alpha), samples,
            {'g': alpha, 'xbar': alpha}, tolerance,
            f"XG alpha={_label(alpha)} beta={_label(alpha)}"))
        for k in range(n - 1):
            weights = np.where(np.arange(n) > k, 0.5, 0.0)
            conditioned = montecarlo.conditional_samples(samples, k)
            verdicts.append(_paired(
                transforms.conditioned_XG(spec, k, weights, weights),
                conditioned, {'g': weights, 'xbar': weights}, tolerance,
                f"XG | xbar_{k + 1}=0 alpha={_label(weights)} "
                f"beta={_label(weights)}"))
        verdicts.append(montecarlo.law_verdict(
            "G ordering", check_ordering(samples['g'], ordering_pairs(spec)),
            samples.n_paths))

    if report.tandem_formulas and _is_tandem(spec):
        busy_field = 'b' if report.t1_strict else 'b_tilde'
        for omega, beta in _wb_grid(n):
            verdicts.append(_paired(
                transforms.tandem_WB(spec, omega, beta), samples,
                {'w': omega, busy_field: beta}, tolerance,
                f"WB omega={_label(omega)} beta={_label(beta)}"))
        for k in range(n):
            omega = _unit(n, k, np.inf)
            verdicts.append(_paired(
                transforms.tandem_WB(spec, omega, np.zeros(n)), samples,
                {'w': omega}, tolerance, f"P(W_{k + 1}=0)"))
    else:
        logger.warning("Tandem transforms skipped: T1-T6 or the tandem "
                       "shape do not hold")

    if report.single_input_formulas:
        chain = ExcursionChain.from_network(spec)
        for gamma in _uniform_or_full(n, IDLE_LEVELS):
            verdicts.append(_paired(
                transforms.idle_vector(spec, gamma), samples, {'i': gamma},
                tolerance, f"idle gamma={_label(gamma)}"))
        for k in range(n):
            gamma = np.full(k + 1, 0.5)
            conditioned = montecarlo.conditional_samples(samples, k)
            verdicts.append(_paired(
                excursions.H_transform_conditioned(chain, k, gamma),
                conditioned, {'h': np.concatenate([gamma,
                                                   np.zeros(n - k - 1)])},
                tolerance, f"H | xbar_{k + 1}=0 gamma={_label(gamma)}"))

    if opts.get('busy', True):
        for k, handle in enumerate(handles):
            elapsed, residual = montecarlo.busy_interval_samples(
                spec, k, sampling.observation_time,
                _busy_paths(opts), seed + 1 + k, sampling)
            for alpha in BUSY_ALPHAS:
                joint, length = transforms.busy_periods(handle, alpha,
                                                        alpha / 2)
                verdicts.append(montecarlo.compare(
                    length, montecarlo.estimate_expectation(
                        np.exp(-alpha * (elapsed + residual))),
                    tolerance, f"busy V station={k + 1} alpha={alpha}"))
                verdicts.append(montecarlo.compare(
                    joint, montecarlo.estimate_expectation(
                        np.exp(-alpha * elapsed - alpha / 2 * residual)),
                    tolerance,
                    f"busy B,D station={k + 1} alpha={alpha} "
                    f"beta={alpha / 2}"))

    if opts.get('convergence', False):
        w_high = _vector_or_fill(opts.get('w_high'), n, _DEFAULT_W_HIGH,
                                 'w_high')
        verdicts.extend(montecarlo.convergence_verdicts(
            spec, _busy_paths(opts), seed + 1 + n, w_high,
            opts.get('observation_time'), sampling))
    return verdicts


def _priority_verdicts(spec: PrioritySpec, opts: dict,
                       log_args: tuple) -> list[Verdict]:
    seed = _require_seed(opts)
    sampling = _sampling_config(opts, log_args)
    tolerance = _tolerance(opts)
    samples = montecarlo.estimate_stationary(spec.to_tandem(), _paths(opts),
                                             seed, sampling)
    n = spec.n
    if opts.get('omega') is not None or opts.get('beta') is not None:
        omega = _vector_or_zero(opts.get('omega'), n, 'omega')
        beta = _vector_or_zero(opts.get('beta'), n, 'beta')
        grid = [(omega, beta)]
    else:
        grid = [(np.array(omega, dtype=float), np.full(n, level))
                for omega in itertools.product(PRIORITY_LEVELS, repeat=n)
                for level in (0.0, 0.5)]
    return [_paired(transforms.priority_WE(spec, omega, beta), samples,
                    {'w': omega, 'e': beta}, tolerance,
                    f"priority omega={_label(omega)} beta={_label(beta)}")
            for omega, beta in grid]


def _paired(analytic: float, samples: NetworkSamples, query: dict,
            tolerance: Tolerance, label: str) -> Verdict:
    estimate = montecarlo.estimate_transform(samples, query)
    return montecarlo.compare(analytic, estimate, tolerance, label)


def _finish_comparison(verdicts: list[Verdict], out: Optional[str]):
    reports.write_csv(out, montecarlo.REPORT_FIELDS,
                      [item.as_row() for item in verdicts])
    if not montecarlo.compare_batch(verdicts):
        failed = [item.query for item in verdicts if not item.passed]
        reason = f"{len(failed)} comparisons failed: {failed}"
        logger.error(reason)
        raise ComparisonFailure(reason)


def _wb_grid(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """{0, 0.5, 1}^{2n} minus zero for small n, uniform vectors beyond."""
    if n <= FULL_GRID_MAX_N:
        points = itertools.product(GRID_LEVELS, repeat=2 * n)
        return [(np.array(point[:n]), np.array(point[n:]))
                for point in points if any(point)]
    return [(np.full(n, first), np.full(n, second))
            for first, second in itertools.product(GRID_LEVELS, repeat=2)
            if first or second]


def _uniform_or_full(n: int, levels: tuple) -> list[np.ndarray]:
    if n <= FULL_GRID_MAX_N:
        return [np.array(point) for point in itertools.product(levels,
                                                               repeat=n)]
    return [np.full(n, level) for level in levels]


# ---------- Transform rows ---------- #
def _transform_rows(spec, kind: TransformKind,
                    query: transforms.TransformQuery) -> list[dict]:
    base = {'kind': kind.value, 'alpha': query.alpha, 'beta': query.beta,
            'omega': query.omega, 'gamma': query.gamma}

    def row(value, form, station=None, **changes):
        item = dict(base, value=value, form=form,
                    station='' if station is None else station + 1)
        item.update(changes)
        return item

    if kind == TransformKind.PRIORITY:
        if not isinstance(spec, PrioritySpec):
            _config_error("kind 'priority' needs a priority system")
        return [row(transforms.priority_WE(spec, query.omega, query.beta),
                    'tandem plus corrections')]
    spec = _as_network(spec)
    if kind == TransformKind.WB:
        closed = transforms.tandem_WB_closed_form(spec, query.omega,
                                                  query.beta)
        value = transforms.tandem_WB(spec, query.omega, query.beta)
        form = 'ratio of marginals' if closed is None \
            else 'ratio of marginals, closed form agrees'
        return [row(value, form)]
    if kind == TransformKind.XG:
        return [row(transforms.quasi_product_XG(spec, query.alpha,
                                                query.beta), 'quasi-product')]
    if kind == TransformKind.IDLE:
        return [row(transforms.idle_vector(spec, query.gamma),
                    'conditioned last-passage starts')]

    rows = []
    handles = exponent_handles(spec)
    for i, handle in enumerate(handles):
        if kind == TransformKind.SINGLE:
            single = transforms.single_cp(spec, i, query.omega[i],
                                          query.beta[i])
            rows.append(row(single.joint, 'joint', i))
            rows.append(row(single.idle_probability, 'P(W=0)', i))
            if single.upstream_empty is not None:
                rows.append(row(single.upstream_empty, 'joint; upstream empty',
                                i))
        elif kind == TransformKind.BUSY:
            joint, length = transforms.busy_periods(handle, query.alpha[i],
                                                    query.beta[i])
            rows.append(row(joint, 'elapsed and residual', i))
            rows.append(row(length, 'length', i))
        else:
            rows.append(row(transforms.fluctuation_identity(
                handle, query.alpha[i], query.beta[i]), 'fluctuation', i))
    return rows


# ---------- Option handling ---------- #
def _resolve(command: str, network: Optional[str], config: Optional[str],
             **flags) -> tuple:
    """Network and options: explicit flags win over the run config."""
    opts = {}
    spec = None
    if config is not None:
        run_config = load_run_config(config)
        opts.update(run_config.for_command(command))
        spec = run_config.network
    opts.update({key: val for key, val in flags.items() if val is not None})
    if network is not None:
        spec = load_network(network)
    if spec is None:
        _config_error(f"{command} needs --network or a config with a "
                      "network")
    opts.setdefault('out', None)
    logger.debug(f"{command} options: {opts}")
    return spec, opts


def _as_network(spec) -> TreeNetworkSpec:
    if isinstance(spec, PrioritySpec):
        return spec.to_tandem()
    return spec


def _require_seed(opts: dict) -> int:
    if opts.get('seed') is None:
        _config_error("--seed is mandatory for stochastic commands")
    return int(opts['seed'])


def _paths(opts: dict) -> int:
    count = int(opts.get('paths') or _DEFAULT_PATHS)
    if count < 2:
        _config_error(f"--paths must be at least 2, got {count}")
    return count


def _busy_paths(opts: dict) -> int:
    return int(opts.get('busy_paths') or _paths(opts))


def _sampling_config(opts: dict, log_args: tuple) -> SamplingConfig:
    horizon = HorizonConfig(**opts.get('horizon_config', {}))
    path = PathConfig() if opts.get('delta') is None \
        else PathConfig(float(opts['delta']))
    extra = {key: opts[key] for key in ('chunk_size', 'censoring_ceiling',
                                        'max_attempts', 'observation_time')
             if key in opts}
    return SamplingConfig(workers=int(opts.get('workers') or 1),
                          horizon=horizon, path=path,
                          log_init_method=set_up_logging,
                          log_init_args=log_args, **extra)


def _tolerance(opts: dict) -> Tolerance:
    return Tolerance(float(opts.get('z_max', Tolerance.z_max)),
                     float(opts.get('rel_gap', Tolerance.rel_gap)))


def _is_tandem(spec: TreeNetworkSpec) -> bool:
    chain = np.diag(np.ones(spec.n - 1), k=1) != 0
    return bool(np.array_equal(spec.routing != 0, chain))


def _vector_or_zero(value, n: int, name: str) -> np.ndarray:
    return np.zeros(n) if value is None else parse_vector(value, n, name)


def _vector_or_fill(value, n: int, fill: float, name: str) -> np.ndarray:
    return np.full(n, fill) if value is None \
        else parse_vector(value, n, name)


def _unit(n: int, k: int, value: float) -> np.ndarray:
    vector = np.zeros(n)
    vector[k] = value
    return vector


def _label(vector) -> str:
    return str(reports.format_value(np.asarray(vector, dtype=float)))


def _config_error(reason: str, cause: Optional[Exception] = None):
    logger.error(reason)
    raise ConfigError(reason) from cause


if __name__ == '__main__':
    cli_main()

"""Monte Carlo estimation of stationary and excursion functionals.

Stationary samples come from the free process: for a stable network,
(W, B, I) is distributed as ((I-P') X-bar, G, H), so one path summary per
sample is enough. Direct simulation (reflection up to a time t) is used
where the free-process identity does not apply: priority ages, busy
intervals, and convergence probes.

Every path p draws from its own generator, seeded by (seed, p, attempt),
so results do not depend on worker count or scheduling. Workers are
spawned processes; they are given the parent's log initializer.
"""

import logging
import multiprocessing as mp
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .excursions import ExcursionChain, ExcursionModel
from .fluctuation import HorizonConfig, summarize_adaptive
from .levy import (PathConfig, exponent_handles, extend_path, path_rng,
                   sample_path)
from .model import (Condition, JumpLaw, SpecError, TreeNetworkSpec,
                    validate_network)
from .skorokhod import extract_ages, reflect_explicit


logger = logging.getLogger(__name__)


class EstimationError(Exception):
    """An estimate cannot be formed from the given samples."""

    pass


_CENSORING_CEILING = 1e-3
_MAX_ATTEMPTS = 20
_CHUNK_SIZE = 256
_Z_MAX = 3.0
_REL_GAP = 0.02
_OBSERVATION_TIME = 200.0
_ZERO_TOL = 1e-9
_MAX_LOOKAHEAD_DOUBLINGS = 20
_RELAXATION_FACTOR = 4.0
_KS_LEVEL = 0.01

STATIONARY_FIELDS = ('w', 'b', 'i', 'w_tilde', 'b_tilde', 'i_tilde', 'e',
                     'xbar', 'g', 'h')
STATE_FIELDS = ('w', 'b', 'i', 'w_tilde', 'b_tilde', 'i_tilde', 'e')
REPORT_FIELDS = ['query', 'analytic', 'mc_mean', 'mc_se', 'z', 'verdict']


@dataclass
class SamplingConfig:
    """Sampling parameters.

    Attributes:
        workers: worker processes (1 samples in-process).
        chunk_size: paths per work item.
        censoring_ceiling: highest censored fraction an estimate accepts.
        max_attempts: resampling attempts for an unconverged path.
        observation_time: time t of direct simulations (priority ages,
            busy intervals, convergence probes).
        horizon: adaptive horizon parameters.
        path: path sampling parameters.
        log_init_method: logging initializer run in each worker.
        log_init_args: its arguments.
    """

    workers: int = 1
    chunk_size: int = _CHUNK_SIZE
    censoring_ceiling: float = _CENSORING_CEILING
    max_attempts: int = _MAX_ATTEMPTS
    observation_time: float = _OBSERVATION_TIME
    horizon: HorizonConfig = field(default_factory=HorizonConfig)
    path: PathConfig = field(default_factory=PathConfig)
    log_init_method: Optional[Callable] = None
    log_init_args: Optional[tuple] = None


@dataclass
class Tolerance:
    """Acceptance band of a paired comparison."""

    z_max: float = _Z_MAX
    rel_gap: float = _REL_GAP


# ---------- Samples and estimates ---------- #
@dataclass(frozen=True, eq=False)
class NetworkSamples:
    """Per-path samples of network quantities.

    Attributes:
        values: (m, n) array per field name (see STATIONARY_FIELDS).
        censored_fraction: share of paths that needed resampling.
    """

    values: dict
    censored_fraction: float = 0.0

    @property
    def n_paths(self) -> int:
        first = next(iter(self.values.values()))
        return first.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self.values:
            reason = f"Unknown sample field {name}; have {list(self.values)}"
            logger.error(reason)
            raise EstimationError(reason)
        return self.values[name]

    def subset(self, mask: np.ndarray) -> 'NetworkSamples':
        return NetworkSamples({key: val[mask] for key, val
                               in self.values.items()},
                              self.censored_fraction)


@dataclass(frozen=True)
class TransformEstimate:
    """A Monte Carlo expectation with its standard error."""

    mean: float
    se: float
    n_paths: int
    censored_fraction: float = 0.0
    z: Optional[float] = None

    def paired(self, analytic: float) -> 'TransformEstimate':
        return replace(self, z=_z_score(analytic, self.mean, self.se))


@dataclass(frozen=True)
class Verdict:
    """Outcome of comparing an analytic value with an estimate."""

    query: str
    analytic: float
    mean: float
    se: float
    z: float
    rel_gap: float
    passed: bool

    def as_row(self) -> dict:
        return {'query': self.query, 'analytic': self.analytic,
                'mc_mean': self.mean, 'mc_se': self.se, 'z': self.z,
                'verdict': 'pass' if self.passed else 'fail'}


def estimate_expectation(values: np.ndarray, censored_fraction: float = 0.0,
                         ceiling: float = _CENSORING_CEILING
                         ) -> TransformEstimate:
    """Sample mean and plug-in standard error of per-path values.

    Raises:
        EstimationError for fewer than two samples or too much censoring.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    count = values.shape[0]
    if count < 2:
        reason = f"Need at least 2 samples for a standard error, got {count}"
        logger.error(reason)
        raise EstimationError(reason)
    if censored_fraction > ceiling:
        reason = (f"Censored fraction {censored_fraction:.2e} exceeds "
                  f"{ceiling:.2e}; lengthen the horizon")
        logger.error(reason)
        raise EstimationError(reason)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(count))
    return TransformEstimate(mean, se, count, censored_fraction)


def estimate_transform(samples: NetworkSamples, query: dict,
                       mask: Optional[np.ndarray] = None,
                       ceiling: float = _CENSORING_CEILING
                       ) -> TransformEstimate:
    """Estimate E exp(-sum over fields of <weights, field>).

    Args:
        samples: network samples.
        query: field name -> weight vector. An infinite weight turns the
            factor into the indicator that the entry is zero.
        mask: optional row selection (conditioning by rejection).
        ceiling: censoring ceiling.

    Returns:
        TransformEstimate.

    Raises:
        EstimationError for empty or singleton samples, unknown fields or
        NaN entries in a weighted column.
    """
    if samples.n_paths == 0:
        reason = "No samples to estimate from"
        logger.error(reason)
        raise EstimationError(reason)
    if mask is not None:
        samples = samples.subset(mask)

    exponent = np.zeros(samples.n_paths)
    indicator = np.ones(samples.n_paths, dtype=bool)
    for name, weights in query.items():
        data = samples[name]
        weights = np.asarray(weights, dtype=float).reshape(-1)
        used = weights != 0
        if not np.any(used):
            continue
        if np.any(np.isnan(data[:, used])):
            reason = f"Field {name} is not available on these samples"
            logger.error(reason)
            raise EstimationError(reason)
        finite = used & np.isfinite(weights)
        exponent += data[:, finite] @ weights[finite]
        infinite = used & ~np.isfinite(weights)
        indicator &= np.all(data[:, infinite] <= _ZERO_TOL, axis=1)
    values = np.where(indicator, np.exp(-exponent), 0.0)
    return estimate_expectation(values, samples.censored_fraction, ceiling)


def compare(analytic: float, estimate: TransformEstimate,
            tolerance: Optional[Tolerance] = None,
            query: str = '') -> Verdict:
    """Pass when |z| <= z_max and the relative gap is <= rel_gap."""
    tolerance = tolerance or Tolerance()
    z = _z_score(analytic, estimate.mean, estimate.se)
    scale = abs(analytic) if analytic != 0 else 1.0
    rel_gap = abs(analytic - estimate.mean) / scale
    passed = bool(abs(z) <= tolerance.z_max and
                  rel_gap <= tolerance.rel_gap)
    if not passed:
        logger.warning(f"Comparison failed for {query or 'query'}: analytic "
                       f"{analytic:.6g}, estimate {estimate.mean:.6g} +- "
                       f"{estimate.se:.3g} (z = {z:.3g}, gap = "
                       f"{rel_gap:.3g})")
    return Verdict(query, float(analytic), estimate.mean, estimate.se,
                   float(z), float(rel_gap), passed)


def law_verdict(query: str, violations: int, n_paths: int) -> Verdict:
    """Verdict of a pathwise law that must hold on every sample.

    The analytic value is 0 and the estimate is the share of violating
    paths; any violation fails.
    """
    share = violations / max(n_paths, 1)
    passed = violations == 0
    if not passed:
        logger.warning(f"{query} violated on {violations} of {n_paths} "
                       "paths")
    return Verdict(query, 0.0, share, 0.0, 0.0 if passed else np.inf,
                   share, passed)


def ks_verdict(query: str, result, level: float = _KS_LEVEL) -> Verdict:
    """Verdict of a KS test: passes when the p-value exceeds level.

    The analytic column holds level and the estimate the p-value; z and
    the gap are not defined.
    """
    passed = bool(result.pvalue > level)
    if not passed:
        logger.warning(f"{query}: KS statistic {result.statistic:.4g}, "
                       f"p-value {result.pvalue:.4g} <= {level}")
    return Verdict(query, float(level), float(result.pvalue), 0.0, np.nan,
                   np.nan, passed)


def compare_batch(verdicts: list[Verdict]) -> bool:
    """Whether every verdict passed."""
    failed = [item for item in verdicts if not item.passed]
    logger.info(f"{len(verdicts) - len(failed)} of {len(verdicts)} "
                "comparisons passed")
    return not failed


def _z_score(analytic: float, mean: float, se: float) -> float:
    if se > 0:
        return (analytic - mean) / se
    return 0.0 if analytic == mean else np.inf


# ---------- Parallel map ---------- #
def _chunks(n_paths: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(start, min(start + chunk_size, n_paths))
            for start in range(0, n_paths, chunk_size)]


def _map(func: Callable, items: list, config: SamplingConfig) -> list:
    """Map func over items in order, in spawned workers if configured."""
    if config.workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    ctx = mp.get_context('spawn')
    initargs = config.log_init_args if config.log_init_args else ()
    with ctx.Pool(config.workers, initializer=config.log_init_method,
                  initargs=initargs) as pool:
        return pool.map(func, items)


# ---------- Stationary samples ---------- #
def estimate_stationary(spec: TreeNetworkSpec, n_paths: int, seed: int,
                        config: Optional[SamplingConfig] = None
                        ) -> NetworkSamples:
    """Draw stationary (W, B, I, W~, B~, I~, E) through path summaries.

    W = (I-P') X-bar, B = B~ = G and I = I~ = H. Under weak T1 only the
    tilde ages are identified, so B and I are NaN.

    Raises:
        SpecError if the network is not stable or degenerate.
    """
    report = validate_network(spec)
    if not report.accepted:
        reason = ("Stationary sampling needs N1-N3 and T1-T4: " +
                  "; ".join(report.violations))
        logger.error(reason)
        raise SpecError(reason)
    if not report.conditions[Condition.ND]:
        reason = "Degenerate network: some station sees no random input"
        logger.error(reason)
        raise SpecError(reason)

    config = config or SamplingConfig()
    logger.info(f"Sampling {n_paths} stationary paths (seed {seed})")
    work = partial(_stationary_chunk, spec, seed, config)
    parts = _map(work, _chunks(n_paths, config.chunk_size), config)

    xbar = np.concatenate([part[0] for part in parts])
    g = np.concatenate([part[1] for part in parts])
    h = np.concatenate([part[2] for part in parts])
    resampled = sum(part[3] for part in parts)
    censored_fraction = resampled / max(n_paths, 1)
    if resampled:
        logger.warning(f"{resampled} of {n_paths} paths were resampled "
                       "after an unconverged maximum")

    w = xbar - xbar @ spec.routing
    busy, idle = g, h
    if not report.t1_strict:
        logger.warning("T1 holds only weakly: reporting tilde ages only")
        busy = np.full_like(g, np.nan)
        idle = np.full_like(h, np.nan)
    values = {'w': w, 'b': busy, 'i': idle, 'w_tilde': xbar,
              'b_tilde': g, 'i_tilde': h,
              'e': np.where(w > _ZERO_TOL, g, 0.0),
              'xbar': xbar, 'g': g, 'h': h}
    return NetworkSamples(values, censored_fraction)


def _stationary_chunk(spec: TreeNetworkSpec, seed: int,
                      config: SamplingConfig, bounds: tuple[int, int]):
    means = np.array([handle.mean for handle in exponent_handles(spec)])
    rows_xbar, rows_g, rows_h = [], [], []
    resampled = 0
    for index in range(*bounds):
        for attempt in range(config.max_attempts):
            summary = summarize_adaptive(spec, path_rng(seed, index, attempt),
                                         means, config.horizon, config.path)
            if np.all(summary.converged):
                break
        if attempt > 0 or not np.all(summary.converged):
            resampled += 1
        logger.trace(f"Path {index}: X-bar = {summary.xbar}")
        rows_xbar.append(summary.xbar)
        rows_g.append(summary.g)
        rows_h.append(summary.h)
    n = spec.n
    return (np.array(rows_xbar).reshape(-1, n),
            np.array(rows_g).reshape(-1, n),
            np.array(rows_h).reshape(-1, n), resampled)


def conditional_samples(samples: NetworkSamples, k: int) -> NetworkSamples:
    """Samples with X-bar_k = 0 (rejection on a positive-probability event).
    """
    kept = samples['xbar'][:, k] <= _ZERO_TOL
    logger.debug(f"Conditioning on X-bar_{k + 1} = 0 keeps {kept.sum()} of "
                 f"{kept.shape[0]} samples")
    return samples.subset(kept)


# ---------- Direct simulation ---------- #
def simulate_state(spec: TreeNetworkSpec, t: float, n_paths: int, seed: int,
                   config: Optional[SamplingConfig] = None,
                   w0: Optional[np.ndarray] = None) -> NetworkSamples:
    """Reflect n_paths independent paths up to t and read the state at t.

    Args:
        spec: a network passing N1-N3.
        t: observation time.
        n_paths: number of paths.
        seed: master seed.
        config: sampling parameters.
        w0: initial contents, overriding spec.w0.
    """
    config = config or SamplingConfig()
    if w0 is not None:
        spec = spec.with_initial(w0)
    work = partial(_state_chunk, spec, t, seed, config)
    parts = _map(work, _chunks(n_paths, config.chunk_size), config)
    values = {name: np.concatenate([part[name] for part in parts])
              for name in STATE_FIELDS}
    return NetworkSamples(values)


def _state_chunk(spec: TreeNetworkSpec, t: float, seed: int,
                 config: SamplingConfig, bounds: tuple[int, int]) -> dict:
    rows = {name: [] for name in STATE_FIELDS}
    for index in range(*bounds):
        path = sample_path(spec, t, path_rng(seed, index), config.path)
        ages = extract_ages(reflect_explicit(spec, path), t)
        rows['w'].append(ages.w)
        rows['b'].append(ages.busy)
        rows['i'].append(ages.idle)
        rows['w_tilde'].append(ages.w_tilde)
        rows['b_tilde'].append(ages.busy_tilde)
        rows['i_tilde'].append(ages.idle_tilde)
        rows['e'].append(ages.priority)
    return {name: np.array(val).reshape(-1, spec.n)
            for name, val in rows.items()}


def busy_interval_samples(spec: TreeNetworkSpec, i: int, t: float,
                          n_paths: int, seed: int,
                          config: Optional[SamplingConfig] = None
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Elapsed and residual parts (B_i, D_i) of the busy period at t.

    Both are 0 when station i is empty at t.
    """
    config = config or SamplingConfig()
    work = partial(_busy_chunk, spec, i, t, seed, config)
    parts = _map(work, _chunks(n_paths, config.chunk_size), config)
    return (np.concatenate([part[0] for part in parts]),
            np.concatenate([part[1] for part in parts]))


def _busy_chunk(spec: TreeNetworkSpec, i: int, t: float, seed: int,
                config: SamplingConfig, bounds: tuple[int, int]):
    mean = exponent_handles(spec)[i].mean
    elapsed, residual = [], []
    for index in range(*bounds):
        rng = path_rng(seed, index)
        lookahead = config.horizon.margin_scale / abs(mean)
        path = sample_path(spec, t + lookahead, rng, config.path)
        for __ in range(_MAX_LOOKAHEAD_DOUBLINGS):
            result = reflect_explicit(spec, path)
            ages = extract_ages(result, t)
            if ages.w[i] <= _ZERO_TOL:
                remaining = 0.0
                break
            after = (result.times > t) & (result.w[:, i] <= _ZERO_TOL)
            if np.any(after):
                remaining = float(result.times[np.argmax(after)] - t)
                break
            lookahead *= 2.0
            path = extend_path(spec, path, t + lookahead, rng, config.path)
        else:
            reason = f"Busy period at station {i + 1} did not end"
            logger.error(reason)
            raise EstimationError(reason)
        elapsed.append(ages.busy[i] if remaining > 0 else 0.0)
        residual.append(remaining)
    return np.array(elapsed), np.array(residual)


def relaxation_time(spec: TreeNetworkSpec, w_high: np.ndarray,
                    factor: float = _RELAXATION_FACTOR) -> float:
    """Time by which W(t) started from w_high has forgotten it.

    factor times the slowest drain time w~_k / |E X_k(1)|, where
    w~ = (I-P')^{-1} w_high are the initial aggregate contents.
    """
    w_tilde = spec.inverse_routing() @ np.asarray(w_high, dtype=float)
    means = np.array([handle.mean for handle in exponent_handles(spec)])
    if np.any(means >= 0):
        reason = f"Relaxation needs negative mean drifts, got {means}"
        logger.error(reason)
        raise SpecError(reason)
    return float(factor * np.max(w_tilde / -means))


def convergence_probe(spec: TreeNetworkSpec, t: Optional[float],
                      n_paths: int, seed: int, w_high: np.ndarray,
                      config: Optional[SamplingConfig] = None) -> list:
    """Two-sample KS tests of W(t) started empty versus from w_high.

    Args:
        t: observation time; relaxation_time(spec, w_high) if None.

    Returns:
        one scipy KS result per station.
    """
    if t is None:
        t = relaxation_time(spec, w_high)
    logger.info(f"Convergence check at t = {t:.4g} from {w_high}")
    low = simulate_state(spec, t, n_paths, seed, config,
                         w0=np.zeros(spec.n))
    high = simulate_state(spec, t, n_paths, seed + 1, config,
                          w0=np.asarray(w_high, dtype=float))
    return [stats.ks_2samp(low['w'][:, k], high['w'][:, k])
            for k in range(spec.n)]


def convergence_verdicts(spec: TreeNetworkSpec, n_paths: int, seed: int,
                         w_high: np.ndarray, t: Optional[float] = None,
                         config: Optional[SamplingConfig] = None,
                         level: float = _KS_LEVEL) -> list[Verdict]:
    """One KS verdict per station for the empty-versus-w_high check."""
    if t is None:
        t = relaxation_time(spec, w_high)
    results = convergence_probe(spec, t, n_paths, seed, w_high, config)
    return [ks_verdict(f"convergence station={k + 1} t={t:g}", result,
                       level) for k, result in enumerate(results)]


def exponential_check(samples: np.ndarray, rate: float):
    """KS test of samples against Exp(rate)."""
    return stats.kstest(samples, 'expon', args=(0.0, 1.0 / rate))


# ---------- Excursions ---------- #
@dataclass(frozen=True, eq=False)
class ExcursionSamples:
    """First excursions of Z = xi + jumps - c t to zero.

    Attributes:
        tau: excursion lengths.
        last_jump: epoch of the last jump before tau (0 if none).
        marks: (m, d) mark of that jump (or of xi).
        overshoot: time from tau to the next jump.
    """

    tau: np.ndarray
    last_jump: np.ndarray
    marks: np.ndarray
    overshoot: np.ndarray


def simulate_excursions(model: ExcursionModel, n: int,
                        seed: int) -> ExcursionSamples:
    """Simulate n excursions, each started at an independent jump xi."""
    rng = np.random.default_rng(seed)
    lam, c = model.intensity, model.drain
    tau = np.empty(n)
    last_jump = np.empty(n)
    overshoot = np.empty(n)
    marks = np.empty((n, model.mark_dimension))
    for idx in range(n):
        jump = model.jump_law.sample(rng, 1)[0]
        level, clock, epoch = jump, 0.0, 0.0
        mark = model.marks_of(jump)
        while True:
            wait = rng.exponential(1.0 / lam)
            if level / c <= wait:
                tau[idx] = clock + level / c
                overshoot[idx] = wait - level / c
                break
            clock += wait
            jump = model.jump_law.sample(rng, 1)[0]
            level += jump - c * wait
            epoch = clock
            mark = model.marks_of(jump)
        last_jump[idx] = epoch
        marks[idx] = mark
    return ExcursionSamples(tau, last_jump, marks, overshoot)


def undershoot_estimate(samples: ExcursionSamples, beta: float,
                        gamma: float, kappa: Optional[np.ndarray] = None
                        ) -> TransformEstimate:
    """MC of E exp(-beta (tau - T_N) - gamma tau - <kappa, M_N>)."""
    exponent = beta * (samples.tau - samples.last_jump) + gamma * samples.tau
    if kappa is not None:
        exponent = exponent + samples.marks @ np.asarray(kappa, dtype=float)
    return estimate_expectation(np.exp(-exponent))


@dataclass(frozen=True, eq=False)
class RecurrenceSamples:
    """Poisson counts N(zeta), ages A(zeta) and the times zeta."""

    count: np.ndarray
    age: np.ndarray
    zeta: np.ndarray


def simulate_recurrence(mu: float, zeta_law: JumpLaw, n: int,
                        seed: int) -> RecurrenceSamples:
    """Draw (N(zeta), A(zeta), zeta) for a rate mu Poisson process.

    Given N(zeta) = m > 0, the last point is the maximum of m uniforms on
    [0, zeta], drawn as zeta U^{1/m}.
    """
    rng = np.random.default_rng(seed)
    zeta = zeta_law.sample(rng, n)
    count = rng.poisson(mu * zeta)
    uniform = rng.uniform(size=n)
    with np.errstate(divide='ignore'):
        last = np.where(count > 0,
                        zeta * uniform ** (1.0 / np.maximum(count, 1)), 0.0)
    return RecurrenceSamples(count, zeta - last, zeta)


def recurrence_estimate(samples: RecurrenceSamples, s: float, beta: float,
                        gamma: float) -> TransformEstimate:
    """MC of E[s^N exp(-beta A - gamma zeta)]."""
    values = np.power(s, samples.count) * \
        np.exp(-beta * samples.age - gamma * samples.zeta)
    return estimate_expectation(values)


@dataclass(frozen=True, eq=False)
class ExcursionStructure:
    """Nested excursion ends (rho) and starts (sigma), stations 0..k.

    Times are measured from the jump that starts the first excursion of
    the slowest station k, so sigma_k = 0.
    """

    rho: np.ndarray
    sigma: np.ndarray


def simulate_excursion_structure(chain: ExcursionChain, k: int, n: int,
                                 seed: int) -> ExcursionStructure:
    """Simulate the first excursion of X_k and the last excursions of
    X_0..X_{k-1} within it."""
    chain._check_index(k)
    rng = np.random.default_rng(seed)
    drains = chain.drains[:k + 1]
    lam = chain.intensity
    rho = np.empty((n, k + 1))
    sigma = np.empty((n, k + 1))
    for idx in range(n):
        rho[idx], sigma[idx] = _excursion_structure_once(rng, drains, lam,
                                                         chain.jump_law)
    return ExcursionStructure(rho, sigma)


def _excursion_structure_once(rng: np.random.Generator, drains: np.ndarray,
                              lam: float, law: JumpLaw):
    count = drains.shape[0]
    value = np.full(count, law.sample(rng, 1)[0])
    floor = np.zeros(count)
    active = np.ones(count, dtype=bool)
    start = np.zeros(count)
    end = np.zeros(count)
    clock = 0.0
    while True:
        wait = rng.exponential(1.0 / lam)
        with np.errstate(invalid='ignore'):
            returns = np.where(active, (value - floor) / drains, np.inf)
        ending = active & (returns <= wait)
        end[ending] = clock + returns[ending]
        if ending[-1]:
            return end, start
        value -= drains * wait
        active &= ~ending
        clock += wait
        jump = law.sample(rng, 1)[0]
        starting = ~active
        floor[starting] = value[starting]
        start[starting] = clock
        active[:] = True
        value += jump


def rho_estimate(structure: ExcursionStructure, beta: np.ndarray,
                 gamma) -> TransformEstimate:
    """MC of E exp(-sum_j beta_j (rho_{j+1} - rho_j) - sum_j gamma_j
    (rho_j - sigma_j)); a scalar gamma weighs station k only."""
    rho, sigma = structure.rho, structure.sigma
    k = rho.shape[1] - 1
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim == 0:
        gamma = np.concatenate([np.zeros(k), [float(gamma)]])
    exponent = np.diff(rho, axis=1) @ np.asarray(beta, dtype=float) + \
        (rho - sigma) @ gamma
    return estimate_expectation(np.exp(-exponent))

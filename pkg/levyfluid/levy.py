"""Laplace exponents of the free process, their inverse, and input paths.

For station i the free process is X_i = ((I-P')^{-1} J)_i - r_i t, and its
Laplace exponent psi_i(beta) = log E exp(-beta X_i(1)) is a finite sum of
closed-form input terms. Phi_i, the inverse of psi_i on [0, inf), is found
by bracketing, bisection and a final Newton step.

Sample paths are exact and event-driven for compound Poisson, drift and
zero inputs. Brownian inputs are sampled on a uniform grid of step delta
and merged into the event list.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .model import (InputKind, LevyComponentSpec, TandemDerived,
                    TreeNetworkSpec)
from .utils import reports


logger = logging.getLogger(__name__)


class DomainError(Exception):
    """An exponent was evaluated outside of its domain."""

    pass


class DriftError(Exception):
    """Phi requested for a component without negative mean drift."""

    pass


# ---------- Exponents ---------- #
_BISECT_XTOL = 1e-13
_BRACKET_START = 1.0
_MAX_BRACKET_DOUBLINGS = 2000


@dataclass(frozen=True, eq=False)
class ExponentHandle:
    """Closed-form evaluators attached to one component X_i.

    Attributes:
        index: station index i.
        weights: row i of (I-P')^{-1}; X_i sees input j scaled by
            weights[j].
        inputs: all network inputs.
        drain: drain rate r_i.
        upsilon_drift: drift of Upsilon_i = J_i + (p r_{i-1} - r_i) t in a
            tandem, 0 for the root or outside of tandems.
    """

    index: int
    weights: np.ndarray
    inputs: tuple
    drain: float
    upsilon_drift: float = 0.0

    @property
    def own_input(self) -> LevyComponentSpec:
        return self.inputs[self.index]

    @property
    def mean(self) -> float:
        """E X_i(1)."""
        return float(sum(weight * item.mean() for weight, item
                         in zip(self.weights, self.inputs)) - self.drain)

    @property
    def has_gaussian_part(self) -> bool:
        return any(weight > 0 and item.kind == InputKind.BROWNIAN
                   for weight, item in zip(self.weights, self.inputs))

    @property
    def linear_coefficient(self) -> float:
        """lim psi_i(beta) / beta as beta -> inf (inf with a gaussian part)."""
        if self.has_gaussian_part:
            return np.inf
        return float(self.drain - sum(weight * item.drift for weight, item
                                      in zip(self.weights, self.inputs)))

    def psi(self, beta):
        beta = np.asarray(beta, dtype=float)
        out = self.drain * beta
        for weight, item in zip(self.weights, self.inputs):
            if weight != 0:
                out = out + item.log_laplace(weight * beta)
        return out if np.ndim(out) else float(out)

    def psi_prime(self, beta):
        beta = np.asarray(beta, dtype=float)
        out = self.drain + 0.0 * beta
        for weight, item in zip(self.weights, self.inputs):
            if weight != 0:
                out = out + weight * item.log_laplace_derivative(
                    weight * beta)
        return out if np.ndim(out) else float(out)

    def theta_input(self, u: float) -> float:
        """Cumulant theta^J_i(u) of the own input (u may be inf)."""
        return self.own_input.cumulant(u)

    def theta_upsilon(self, u: float) -> float:
        """Cumulant theta^Upsilon_i(u) = theta^J_i(u) + upsilon_i u."""
        if np.isinf(u):
            if self.upsilon_drift > 0:
                return np.inf
            return self.theta_input(u)
        return self.theta_input(u) + self.upsilon_drift * u


def exponent_handle(spec: TreeNetworkSpec, i: int,
                    derived: Optional[TandemDerived] = None
                    ) -> ExponentHandle:
    """Build the handle of component i of spec.

    Args:
        spec: the network (N1 assumed).
        i: station index, from 0.
        derived: tandem parameters, needed for theta^Upsilon.

    Returns:
        ExponentHandle of X_i.
    """
    if not 0 <= i < spec.n:
        reason = f"Station index {i} out of range for n = {spec.n}"
        logger.error(reason)
        raise DomainError(reason)
    weights = spec.inverse_routing()[i]
    weights.setflags(write=False)
    upsilon = 0.0 if derived is None else float(derived.upsilon_drift[i])
    return ExponentHandle(i, weights, spec.inputs,
                          float(spec.drain_rates[i]), upsilon)


def exponent_handles(spec: TreeNetworkSpec,
                     derived: Optional[TandemDerived] = None
                     ) -> list[ExponentHandle]:
    return [exponent_handle(spec, i, derived) for i in range(spec.n)]


def psi(handle: ExponentHandle, beta):
    """psi_i(beta) = log E exp(-beta X_i(1)).

    Raises:
        DomainError if beta < 0.
    """
    _check_nonnegative(beta, 'beta')
    return handle.psi(beta)


def psi_prime(handle: ExponentHandle, beta):
    _check_nonnegative(beta, 'beta')
    return handle.psi_prime(beta)


def phi(handle: ExponentHandle, q: float) -> float:
    """Inverse of psi_i on [0, inf).

    Args:
        handle: component exponent, with E X_i(1) < 0.
        q: nonnegative level (inf maps to inf).

    Returns:
        beta >= 0 with psi_i(beta) = q; Phi(0) = 0 exactly.

    Raises:
        DomainError if q < 0.
        DriftError if E X_i(1) >= 0.
    """
    _check_nonnegative(q, 'q')
    mean = handle.mean
    if mean >= 0:
        reason = (f"Assumption D violated: E X_{handle.index + 1}(1) = "
                  f"{mean} is not negative")
        logger.error(reason)
        raise DriftError(reason)
    if q == 0:
        return 0.0
    if np.isinf(q):
        return np.inf

    hi = _BRACKET_START
    for __ in range(_MAX_BRACKET_DOUBLINGS):
        if handle.psi(hi) >= q:
            break
        hi *= 2.0
    lo = 0.0 if hi == _BRACKET_START else hi / 2.0

    root = optimize.bisect(lambda beta: handle.psi(beta) - q, lo, hi,
                           xtol=_BISECT_XTOL)
    slope = handle.psi_prime(root)
    polished = root - (handle.psi(root) - q) / slope
    if lo <= polished <= hi and \
            abs(handle.psi(polished) - q) <= abs(handle.psi(root) - q):
        root = polished
    logger.trace(f"Phi_{handle.index + 1}({q}) = {root}")
    return float(root)


def phi_prime(handle: ExponentHandle, q: float) -> float:
    """Phi'(q) = 1 / psi'(Phi(q))."""
    return 1.0 / handle.psi_prime(phi(handle, q))


def _check_nonnegative(value, name: str):
    if np.any(np.asarray(value) < 0) or np.any(np.isnan(value)):
        reason = f"{name} must be >= 0, got {value}"
        logger.error(reason)
        raise DomainError(reason)


# ---------- Sample paths ---------- #
_GRID_STEP = 1e-3


@dataclass
class PathConfig:
    """Sampling parameters.

    Attributes:
        grid_step: brownian grid step delta. Extremum bias is O(sqrt(delta)).
    """

    grid_step: float = _GRID_STEP


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A piecewise linear path with jumps, in R^n.

    The value at t is sum of jumps at event times <= t plus drift * t.

    Attributes:
        horizon: T.
        times: strictly increasing event times in (0, T].
        jumps: (m, n) jump vectors.
        drift: constant drift vector between events.
        sources: input index behind each event (-1 when merged).
        marks: jump size of the source input per event (nan when merged).
        grid_step: brownian grid step, if a brownian input was sampled.
    """

    horizon: float
    times: np.ndarray
    jumps: np.ndarray
    drift: np.ndarray
    sources: np.ndarray
    marks: np.ndarray
    grid_step: Optional[float] = None

    @property
    def n(self) -> int:
        return self.drift.shape[0]

    @property
    def event_count(self) -> int:
        return self.times.shape[0]

    def post_values(self) -> np.ndarray:
        """Path value right after each event."""
        return np.cumsum(self.jumps, axis=0) + \
            self.times[:, None] * self.drift[None, :]

    def value_at(self, t: float) -> np.ndarray:
        idx = np.searchsorted(self.times, t, side='right')
        return self.jumps[:idx].sum(axis=0) + self.drift * t

    def knots(self) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints of the path.

        Returns:
            (times, values): times start at 0 and end at the horizon; each
            event contributes a pre-jump and a post-jump knot at the same
            time.
        """
        post = self.post_values()
        pre = post - self.jumps
        m, n = self.jumps.shape
        values = np.empty((2 * m, n))
        values[0::2] = pre
        values[1::2] = post
        times = np.repeat(self.times, 2)

        knot_times = [np.zeros(1), times]
        knot_values = [np.zeros((1, n)), values]
        if m == 0 or self.times[-1] < self.horizon:
            knot_times.append(np.array([self.horizon]))
            knot_values.append((self.drift * self.horizon)[None, :] +
                               self.jumps.sum(axis=0)[None, :])
        return np.concatenate(knot_times), np.concatenate(knot_values)

    def mapped(self, matrix: np.ndarray, drift: np.ndarray) -> 'SamplePath':
        """Linear image of this path: jumps -> matrix @ jumps, new drift."""
        return SamplePath(self.horizon, self.times, self.jumps @ matrix.T,
                          np.asarray(drift, dtype=float), self.sources,
                          self.marks, self.grid_step)


def path_rng(seed: int, index: int, attempt: int = 0
             ) -> np.random.Generator:
    """Counter-based generator for path index (and resampling attempt)."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(index, attempt)))


def sample_path(spec: TreeNetworkSpec, horizon: float, seed,
                config: Optional[PathConfig] = None) -> SamplePath:
    """Sample the input process J on [0, horizon].

    Args:
        spec: the network whose inputs are sampled.
        horizon: T > 0.
        seed: integer seed or a numpy Generator.
        config: sampling parameters.

    Returns:
        SamplePath of J, deterministic given (seed, grid step).
    """
    if not horizon > 0:
        reason = f"Horizon must be > 0, got {horizon}"
        logger.error(reason)
        raise DomainError(reason)
    config = config or PathConfig()
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)

    times, jumps, sources, marks = _sample_events(spec, 0.0, horizon, rng,
                                                  config.grid_step)
    path = SamplePath(float(horizon), times, jumps, spec.input_drifts(),
                      sources, marks, _grid_step_if_used(spec, config))
    _verify_subordinators(spec, path)
    logger.trace(f"Sampled {path.event_count} events on [0, {horizon}]")
    return path


def extend_path(spec: TreeNetworkSpec, path: SamplePath, horizon: float,
                rng: np.random.Generator,
                config: Optional[PathConfig] = None) -> SamplePath:
    """Continue path to a longer horizon with independent increments."""
    if horizon <= path.horizon:
        return path
    config = config or PathConfig(path.grid_step or _GRID_STEP)
    times, jumps, sources, marks = _sample_events(spec, path.horizon,
                                                  horizon, rng,
                                                  config.grid_step)
    extended = SamplePath(
        float(horizon), np.concatenate([path.times, times]),
        np.concatenate([path.jumps, jumps]), path.drift,
        np.concatenate([path.sources, sources]),
        np.concatenate([path.marks, marks]), path.grid_step)
    _verify_subordinators(spec, extended)
    return extended


def write_path_csv(path: SamplePath, out) -> None:
    """Dump events as (t, component, jump_size, drift_segment_rate) rows."""
    rows = []
    for time, jump in zip(path.times, path.jumps):
        for component in np.flatnonzero(jump):
            rows.append({'t': time,
                         'component': int(component) + 1,
                         'jump_size': jump[component],
                         'drift_segment_rate': path.drift[component]})
    reports.write_csv(out, PATH_CSV_FIELDS, rows)


PATH_CSV_FIELDS = ['t', 'component', 'jump_size', 'drift_segment_rate']


def _sample_events(spec: TreeNetworkSpec, start: float, stop: float,
                   rng: np.random.Generator, grid_step: float):
    n = spec.n
    all_times, all_sizes, all_sources = [], [], []
    for j, item in enumerate(spec.inputs):
        if item.kind == InputKind.COMPOUND_POISSON:
            count = rng.poisson(item.intensity * (stop - start))
            event_times = np.sort(rng.uniform(start, stop, count))
            sizes = item.jump_law.sample(rng, count)
        elif item.kind == InputKind.BROWNIAN:
            first = int(np.floor(start / grid_step)) + 1
            last = int(np.floor(stop / grid_step))
            steps = np.arange(first, last + 1)
            event_times = steps * grid_step
            sizes = rng.normal(0.0, np.sqrt(item.variance * grid_step),
                               steps.shape[0])
        else:
            continue
        all_times.append(event_times)
        all_sizes.append(sizes)
        all_sources.append(np.full(event_times.shape[0], j))

    if not all_times:
        return (np.zeros(0), np.zeros((0, n)), np.zeros(0, dtype=int),
                np.zeros(0))

    times = np.concatenate(all_times)
    sizes = np.concatenate(all_sizes)
    sources = np.concatenate(all_sources)

    unique_times, inverse, counts = np.unique(times, return_inverse=True,
                                              return_counts=True)
    jumps = np.zeros((unique_times.shape[0], n))
    np.add.at(jumps, (inverse, sources), sizes)

    merged_sources = np.empty(unique_times.shape[0], dtype=int)
    merged_marks = np.empty(unique_times.shape[0])
    merged_sources[inverse] = sources
    merged_marks[inverse] = sizes
    merged_sources[counts > 1] = -1
    merged_marks[counts > 1] = np.nan
    return unique_times, jumps, merged_sources, merged_marks


def _grid_step_if_used(spec: TreeNetworkSpec, config: PathConfig):
    if any(item.kind == InputKind.BROWNIAN for item in spec.inputs):
        return config.grid_step
    return None


def _verify_subordinators(spec: TreeNetworkSpec, path: SamplePath):
    for j, item in enumerate(spec.inputs):
        if item.is_subordinator and np.any(path.jumps[:, j] < 0):
            reason = f"Input {j + 1} is a subordinator but jumped downwards"
            logger.error(reason)
            raise DomainError(reason)

"""Free process X and its path functionals (running maximum, G, H).

For a stable network, the stationary aggregated contents, busy ages and
idle ages are distributed as (X-bar, G, H) of the free process
X = (I-P')^{-1} J - r t, so these functionals are all a simulation needs.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import levy
from .levy import PathConfig, SamplePath
from .model import TreeNetworkSpec


logger = logging.getLogger(__name__)


class SummaryError(Exception):
    """A path functional was requested for a non-drifting component."""

    pass


_MARGIN_SCALE = 10.0
_INITIAL_FACTOR = 2.0
_MAX_DOUBLINGS = 8


@dataclass
class HorizonConfig:
    """Adaptive horizon parameters.

    A component has converged once its terminal value lies margin_k =
    margin_scale / |E X_k(1)| below its running maximum. The first horizon
    is initial_factor * max_k margin_k / |E X_k(1)|; it is doubled until
    all components converge and the maxima stop changing.

    Attributes:
        margin_scale: numerator of the margin.
        initial_factor: multiple of the slowest descent time.
        max_doublings: doublings before giving up on a path.
    """

    margin_scale: float = _MARGIN_SCALE
    initial_factor: float = _INITIAL_FACTOR
    max_doublings: int = _MAX_DOUBLINGS

    def margins(self, means: np.ndarray) -> np.ndarray:
        return self.margin_scale / np.abs(means)

    def initial_horizon(self, means: np.ndarray) -> float:
        return float(self.initial_factor *
                     np.max(self.margins(means) / np.abs(means)))


@dataclass(frozen=True, eq=False)
class FluctuationSummary:
    """Functionals of one path of X.

    Attributes:
        xbar: running maxima over [0, horizon] (>= 0, X(0) = 0).
        g: first epochs at which X_k(t) or X_k(t-) equals xbar_k.
        h: first epochs after which the future supremum exceeds X_k(t).
        converged: per component, whether xbar_k is final.
        horizon: path horizon.
    """

    xbar: np.ndarray
    g: np.ndarray
    h: np.ndarray
    converged: np.ndarray
    horizon: float


def build_X(spec: TreeNetworkSpec, path: SamplePath) -> SamplePath:
    """Map an input path J to X = (I-P')^{-1} J - r t."""
    inverse = spec.inverse_routing()
    drift = inverse @ spec.input_drifts() - spec.drain_rates
    return path.mapped(inverse, drift)


def summarize_path(xpath: SamplePath, means: np.ndarray,
                   config: Optional[HorizonConfig] = None
                   ) -> FluctuationSummary:
    """Extract (X-bar, G, H) from a path of X.

    Args:
        xpath: path of X (from build_X).
        means: E X_k(1) for every component, all negative.
        config: horizon parameters (for the convergence margin).

    Returns:
        FluctuationSummary. H_k is the horizon, and the component
        unconverged, when no departure from the future supremum was seen.

    Raises:
        SummaryError if a mean is not negative.
    """
    means = np.asarray(means, dtype=float)
    if np.any(means >= 0):
        reason = f"Summaries need negative mean drifts, got {means}"
        logger.error(reason)
        raise SummaryError(reason)
    config = config or HorizonConfig()

    times, values = xpath.knots()
    xbar = np.maximum(0.0, values.max(axis=0))
    first = np.argmax(values >= xbar[None, :], axis=0)
    attained = np.any(values >= xbar[None, :], axis=0)
    g = np.where(attained, times[first], 0.0)

    h, found = _last_passage_starts(times, values)
    h = np.where(xbar > 0, 0.0, h)
    found = found | (xbar > 0)

    margins = config.margins(means)
    converged = found & (values[-1] < xbar - margins)
    return FluctuationSummary(xbar, g, np.where(found, h, xpath.horizon),
                              converged, xpath.horizon)


def _last_passage_starts(times: np.ndarray, values: np.ndarray
                         ) -> tuple[np.ndarray, np.ndarray]:
    """First t with sup_{s >= t} X(s) > X(t), per column.

    Linear pieces are scanned forward. On a piece [a, b) with slope > 0 the
    condition holds at a. Otherwise it holds from the first t where X(t)
    drops below the supremum of the knots after the piece.
    """
    start, end = values[:-1], values[1:]
    span = np.diff(times)[:, None]
    future = np.maximum.accumulate(values[::-1], axis=0)[::-1][1:]
    piece = span > 0

    rising = piece & (end > start)
    below_at_start = piece & (start < future)
    with np.errstate(divide='ignore', invalid='ignore'):
        slope = (end - start) / np.where(piece, span, 1.0)
        cross = times[:-1, None] + (start - future) / (-slope)
    below_later = piece & ~below_at_start & (end < future) & (slope < 0)

    candidate = np.full(start.shape, np.inf)
    candidate = np.where(below_later, cross, candidate)
    candidate = np.where(rising | below_at_start,
                         np.broadcast_to(times[:-1, None], start.shape),
                         candidate)
    h = candidate.min(axis=0)
    found = np.isfinite(h)
    return np.where(found, h, times[-1]), found


def summarize_adaptive(spec: TreeNetworkSpec, rng: np.random.Generator,
                       means: np.ndarray,
                       config: Optional[HorizonConfig] = None,
                       path_config: Optional[PathConfig] = None
                       ) -> FluctuationSummary:
    """Sample a path with doubling horizons until its summary is final.

    Returns the last summary; its converged flags are False when
    max_doublings was not enough.
    """
    config = config or HorizonConfig()
    horizon = config.initial_horizon(means)
    path = levy.sample_path(spec, horizon, rng, path_config)
    previous = summarize_path(build_X(spec, path), means, config)
    for __ in range(config.max_doublings):
        horizon *= 2.0
        path = levy.extend_path(spec, path, horizon, rng, path_config)
        current = summarize_path(build_X(spec, path), means, config)
        if np.all(current.converged) and \
                np.array_equal(current.xbar, previous.xbar):
            return current
        previous = current
    logger.debug(f"Path unconverged after {config.max_doublings} doublings "
                 f"(horizon {horizon})")
    return previous


def ordering_pairs(spec: TreeNetworkSpec) -> list[tuple[int, int]]:
    """Pairs (k, j) with X_k upstream of X_j (k feeds j, directly or not)."""
    reach = spec.inverse_routing()
    return [(k, j) for j in range(spec.n) for k in range(spec.n)
            if k != j and reach[j, k] > 0]


def check_ordering(g: np.ndarray, pairs: list[tuple[int, int]]) -> int:
    """Count samples violating G_k <= G_j over the given pairs.

    Args:
        g: (m, n) or (n,) G values.
        pairs: upstream/downstream pairs, e.g. from ordering_pairs().

    Returns:
        number of rows with at least one violation.
    """
    g = np.atleast_2d(g)
    violated = np.zeros(g.shape[0], dtype=bool)
    for k, j in pairs:
        violated |= g[:, k] > g[:, j]
    count = int(violated.sum())
    if count:
        logger.warning(f"G ordering violated on {count} of {g.shape[0]} "
                       "samples")
    return count


def check_last_passage(xbar: np.ndarray, h: np.ndarray) -> int:
    """Count samples where H_k > 0 and X-bar_k = 0 disagree for some k.

    Args:
        xbar: (m, n) or (n,) maxima.
        h: matching last-passage starts.

    Returns:
        number of rows with at least one violation, in either direction.
    """
    xbar, h = np.atleast_2d(xbar), np.atleast_2d(h)
    violated = np.any((h > 0) != (xbar <= 0), axis=1)
    count = int(violated.sum())
    if count:
        logger.warning(f"H > 0 iff X-bar = 0 violated on {count} of "
                       f"{xbar.shape[0]} samples")
    return count

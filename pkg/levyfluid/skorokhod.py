"""Skorokhod reflection of a tree network driver, and age processes.

Two independent solvers are provided:
- reflect_explicit(): L = 0 v sup(-(I-P')^{-1} Y - (I-P')^{-1} w), computed
  on the aggregated process W~ = (I-P')^{-1} W, whose coordinates are
  one-dimensional reflections of x + X.
- reflect_fixed_point(): L_i = 0 v sup((P'L)_i - w_i - Y_i), solved in
  station order (column 1 of P' is zero).

Both work on the knots of a piecewise linear path. Where a running
supremum is overtaken inside a linear piece, the crossing time is inserted
as a new knot, so the solution is exact at every knot and linear between
knots.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .levy import SamplePath
from .model import Condition, TreeNetworkSpec, validate_network
from .utils import reports


logger = logging.getLogger(__name__)


class ReflectionError(Exception):
    """Reflection requested on an unsupported network, or checks failed."""

    pass


ZERO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AgeSnapshot:
    """Buffer contents and ages at one time point."""

    w: np.ndarray
    busy: np.ndarray
    idle: np.ndarray
    w_tilde: np.ndarray
    busy_tilde: np.ndarray
    idle_tilde: np.ndarray
    priority: np.ndarray


@dataclass(frozen=True, eq=False)
class ReflectionResult:
    """Piecewise linear trajectories on a shared set of knots.

    A repeated knot time is a jump: the first value is the left limit, the
    second the value at the jump time.

    Attributes:
        times: (K,) nondecreasing knot times, from 0 to the horizon.
        w: (K, n) buffer contents W.
        l: (K, n) regulator L.
        w_tilde: (K, n) aggregated contents (I-P')^{-1} W.
        horizon: end of the trajectories.
    """

    times: np.ndarray
    w: np.ndarray
    l: np.ndarray
    w_tilde: np.ndarray
    horizon: float

    @property
    def n(self) -> int:
        return self.w.shape[1]

    @cached_property
    def _ages(self) -> tuple:
        return _ages(self.times, self.w)

    @cached_property
    def _ages_tilde(self) -> tuple:
        return _ages(self.times, self.w_tilde)

    @property
    def busy(self) -> np.ndarray:
        return self._ages[0]

    @property
    def idle(self) -> np.ndarray:
        return self._ages[1]

    @property
    def busy_tilde(self) -> np.ndarray:
        return self._ages_tilde[0]

    @property
    def idle_tilde(self) -> np.ndarray:
        return self._ages_tilde[1]

    @property
    def priority(self) -> np.ndarray:
        """E_j = B~_j 1{W_j > 0}."""
        return np.where(self.w > ZERO_TOL, self.busy_tilde, 0.0)

    def values_at(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Right-continuous (W, L) at the given times."""
        return (_evaluate(self.times, self.w, t),
                _evaluate(self.times, self.l, t))


def reflect_explicit(spec: TreeNetworkSpec, path: SamplePath
                     ) -> ReflectionResult:
    """Reflect the input path of spec through the explicit formula.

    Args:
        spec: a network passing N1-N3.
        path: a path of the input J (from levy.sample_path).

    Returns:
        ReflectionResult on [0, path.horizon].

    Raises:
        ReflectionError if N1-N3 fail.
    """
    _check_structure(spec, path)
    times, inputs = path.knots()
    inverse = spec.inverse_routing()

    # Z = (I-P')^{-1} w + X; each coordinate is reflected at zero.
    free = inputs @ inverse.T - times[:, None] * spec.drain_rates[None, :]
    start = inverse @ spec.w0
    z = start[None, :] + free

    crossings = _running_max_crossings(times, -z)
    times, (z,) = _insert_knots(times, [z], crossings)

    regulator = np.maximum(0.0, np.maximum.accumulate(-z, axis=0))
    w_tilde = z + regulator
    w = w_tilde - w_tilde @ spec.routing
    logger.trace(f"Explicit reflection on {times.shape[0]} knots "
                 f"({crossings.shape[0]} kinks)")
    return ReflectionResult(times, w, regulator, w_tilde, path.horizon)


def reflect_fixed_point(spec: TreeNetworkSpec, path: SamplePath
                        ) -> ReflectionResult:
    """Reflect the input path of spec by solving the fixed-point equation.

    Stations are processed in order; station i only needs L_j for j < i.
    """
    _check_structure(spec, path)
    n = spec.n
    times, inputs = path.knots()
    rates = spec.drain_rates
    routing = spec.routing

    # Y = J - (I-P') r t
    net_rates = rates - routing.T @ rates
    driver = inputs - times[:, None] * net_rates[None, :]
    regulator = np.zeros_like(driver)

    for i in range(n):
        push = regulator @ routing[:, i] - spec.w0[i] - driver[:, i]
        crossings = _running_max_crossings(times, push[:, None])
        if crossings.shape[0]:
            times, (driver, regulator) = _insert_knots(
                times, [driver, regulator], crossings)
            push = regulator @ routing[:, i] - spec.w0[i] - driver[:, i]
        regulator[:, i] = np.maximum(0.0, np.maximum.accumulate(push))

    w = spec.w0[None, :] + driver + regulator - regulator @ routing
    w_tilde = w @ spec.inverse_routing().T
    return ReflectionResult(times, w, regulator, w_tilde, path.horizon)


def extract_ages(result: ReflectionResult, t: float) -> AgeSnapshot:
    """Ages of busy and idle periods at time t.

    B_j(t) = t - sup{s <= t: W_j(s) = 0} and I_j(t) = t - sup{s <= t:
    W_j(s) > 0}, with sup of an empty set taken as 0. Values at a jump time
    are right-continuous.

    Raises:
        ReflectionError if t is outside of [0, horizon].
    """
    if not 0 <= t <= result.horizon:
        reason = f"t = {t} outside of [0, {result.horizon}]"
        logger.error(reason)
        raise ReflectionError(reason)

    times = result.times
    w, w_tilde = result.w, result.w_tilde
    if not np.any(times == t):
        times, (w, w_tilde) = _insert_knots(times, [w, w_tilde],
                                            np.array([t]))
    row = int(np.searchsorted(times, t, side='right')) - 1

    busy, idle = _ages(times[:row + 1], w[:row + 1])
    busy_t, idle_t = _ages(times[:row + 1], w_tilde[:row + 1])
    w_row = w[row]
    return AgeSnapshot(w_row, busy[-1], idle[-1], w_tilde[row], busy_t[-1],
                       idle_t[-1], np.where(w_row > ZERO_TOL, busy_t[-1], 0.0))


def check_dynamics(result: ReflectionResult,
                   w0: Optional[np.ndarray] = None,
                   tol: float = ZERO_TOL) -> None:
    """Assert S2-S4 on every knot and linear piece.

    Checks W >= 0, L(0) = 0, L nondecreasing, W(0) = w0 (if given), and
    that L_j only increases on pieces where W_j = 0.

    Raises:
        ReflectionError naming the first failed check.
    """
    def fail(reason: str):
        logger.error(reason)
        raise ReflectionError(reason)

    if np.any(result.w < -tol):
        fail(f"W < 0 (min {result.w.min()})")
    if np.any(np.abs(result.l[0]) > tol):
        fail(f"L(0) = {result.l[0]} is not 0")
    increments = np.diff(result.l, axis=0)
    if np.any(increments < -tol):
        fail(f"L decreases (min increment {increments.min()})")
    if w0 is not None and np.any(np.abs(result.w[0] - w0) > tol):
        fail(f"W(0) = {result.w[0]} differs from w0 = {w0}")

    pushing = increments > tol
    same_time = (np.diff(result.times) == 0)[:, None]
    positive_end = result.w[1:] > tol
    positive_start = result.w[:-1] > tol
    broken = pushing & (positive_end | (~same_time & positive_start))
    if np.any(broken):
        knot, station = np.argwhere(broken)[0]
        fail(f"L_{station + 1} increases while W_{station + 1} > 0 near "
             f"t = {result.times[knot]}")


def busy_sets_coincide(result: ReflectionResult,
                       tol: float = ZERO_TOL) -> bool:
    """Whether W_j = 0 iff W~_j = 0 at every knot."""
    return bool(np.array_equal(result.w <= tol, result.w_tilde <= tol))


def sup_distance(first: ReflectionResult, second: ReflectionResult
                 ) -> float:
    """Sup-norm distance of (W, L) over both knot sets and their midpoints."""
    times = np.union1d(first.times, second.times)
    probe = np.union1d(times, 0.5 * (times[:-1] + times[1:]))
    w_a, l_a = first.values_at(probe)
    w_b, l_b = second.values_at(probe)
    return float(max(np.abs(w_a - w_b).max(), np.abs(l_a - l_b).max()))


def write_trajectory_csv(result: ReflectionResult, out) -> None:
    """Dump knots as (t, W_1..W_n, L_1..L_n) rows."""
    n = result.n
    fields = (['t'] + [f"W_{k + 1}" for k in range(n)] +
              [f"L_{k + 1}" for k in range(n)])
    rows = []
    for time, w_row, l_row in zip(result.times, result.w, result.l):
        row = {'t': time}
        row.update({f"W_{k + 1}": w_row[k] for k in range(n)})
        row.update({f"L_{k + 1}": l_row[k] for k in range(n)})
        rows.append(row)
    reports.write_csv(out, fields, rows)


# ---------- Knot helpers ---------- #
def _check_structure(spec: TreeNetworkSpec, path: SamplePath):
    report = validate_network(spec)
    failed = [cond for cond in (Condition.N1, Condition.N2, Condition.N3)
              if not report.conditions[cond]]
    if failed:
        reason = "Reflection needs N1-N3: " + "; ".join(
            item for item in report.violations
            if item.split(':')[0] in [cond.value for cond in failed])
        logger.error(reason)
        raise ReflectionError(reason)
    if path.n != spec.n:
        reason = f"Path has {path.n} components, network has {spec.n}"
        logger.error(reason)
        raise ReflectionError(reason)


def _running_max_crossings(times: np.ndarray, values: np.ndarray
                           ) -> np.ndarray:
    """Times inside linear pieces where a column overtakes 0 v running max.

    Args:
        times: (K,) knot times.
        values: (K, m) knot values.

    Returns:
        sorted unique crossing times, strictly between knots.
    """
    level = np.maximum(0.0, np.maximum.accumulate(values, axis=0))[:-1]
    start, end = values[:-1], values[1:]
    span = np.diff(times)[:, None]
    crossing = (span > 0) & (start < level) & (end > level)
    if not np.any(crossing):
        return np.zeros(0)
    rows, cols = np.nonzero(crossing)
    frac = (level[rows, cols] - start[rows, cols]) / \
        (end[rows, cols] - start[rows, cols])
    found = times[rows] + frac * span[rows, 0]
    found = found[(found > times[rows]) & (found < times[rows + 1])]
    return np.unique(found)


def _insert_knots(times: np.ndarray, arrays: list[np.ndarray],
                  new_times: np.ndarray) -> tuple[np.ndarray, list]:
    """Insert knots by linear interpolation inside existing linear pieces."""
    new_times = np.unique(new_times)
    new_times = new_times[~np.isin(new_times, times) &
                          (new_times > times[0]) & (new_times < times[-1])]
    if new_times.shape[0] == 0:
        return times, arrays
    pos = np.searchsorted(times, new_times, side='right')
    left, right = pos - 1, pos
    frac = (new_times - times[left]) / (times[right] - times[left])

    out = []
    for arr in arrays:
        inserted = arr[left] + frac[:, None] * (arr[right] - arr[left])
        out.append(np.insert(arr, pos, inserted, axis=0))
    return np.insert(times, pos, new_times), out


def _evaluate(times: np.ndarray, values: np.ndarray, query) -> np.ndarray:
    """Right-continuous evaluation of a knot trajectory."""
    query = np.atleast_1d(np.asarray(query, dtype=float))
    idx = np.searchsorted(times, query, side='right') - 1
    idx = np.clip(idx, 0, times.shape[0] - 1)
    nxt = np.minimum(idx + 1, times.shape[0] - 1)
    span = times[nxt] - times[idx]
    with np.errstate(invalid='ignore', divide='ignore'):
        frac = np.where(span > 0, (query - times[idx]) / span, 0.0)
    return values[idx] + frac[:, None] * (values[nxt] - values[idx])


def _ages(times: np.ndarray, values: np.ndarray,
          tol: float = ZERO_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Busy and idle ages at every knot of a nonnegative trajectory."""
    count = times.shape[0]
    index = np.arange(count)[:, None]
    zero = values <= tol

    last_zero = np.maximum.accumulate(np.where(zero, index, -1), axis=0)
    zero_time = np.where(last_zero >= 0, times[np.maximum(last_zero, 0)],
                         0.0)
    busy = np.where(zero, 0.0, times[:, None] - zero_time)

    last_positive = np.maximum.accumulate(np.where(~zero, index, -1), axis=0)
    ended = np.minimum(last_positive + 1, count - 1)
    end_time = np.where(last_positive >= 0, times[ended], 0.0)
    idle = np.where(zero, times[:, None] - end_time, 0.0)
    return busy, idle

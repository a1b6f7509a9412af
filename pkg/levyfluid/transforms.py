"""Closed-form Laplace transforms of stationary tree network quantities.

Everything here is composed from the fluctuation identity

    E exp(-alpha G - beta X-bar) = -E X(1) (Phi(alpha) - beta) /
                                   (alpha - psi(beta))

of each component, evaluated with shifted arguments. Removable
singularities switch to their analytic limits inside a window of
SINGULAR_WINDOW, and infinite arguments are handled symbolically.

Stations are indexed from 0.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import excursions
from .levy import (ExponentHandle, exponent_handles, phi, phi_prime, psi,
                   psi_prime)
from .model import (PrioritySpec, TandemDerived, TreeNetworkSpec,
                    ValidationReport, derive_tandem, validate_network,
                    validate_priority)
from .utils.parser import parse_vector


logger = logging.getLogger(__name__)


class TransformError(Exception):
    """A transform is singular, unsupported or failed its cross-check."""

    pass


SINGULAR_WINDOW = 1e-8
CROSS_CHECK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TransformQuery:
    """Arguments of the network transforms, all nonnegative n-vectors.

    Attributes:
        alpha: argument of G.
        beta: argument of X-bar (XG transforms) or of busy ages.
        omega: argument of buffer contents.
        gamma: argument of idle ages.
        kappa: mark argument.
    """

    alpha: np.ndarray
    beta: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    kappa: np.ndarray

    @classmethod
    def build(cls, n: int, alpha=None, beta=None, omega=None, gamma=None,
              kappa=None) -> 'TransformQuery':
        """Parse and check every argument (missing ones are zero)."""
        def vector(value, name):
            if value is None:
                return np.zeros(n)
            return parse_vector(value, n, name)

        kappa = np.zeros(1) if kappa is None else parse_vector(kappa,
                                                               name='kappa')
        return cls(vector(alpha, 'alpha'), vector(beta, 'beta'),
                   vector(omega, 'omega'), vector(gamma, 'gamma'), kappa)


# ---------- Single component ---------- #
def fluctuation_identity(handle: ExponentHandle, alpha: float,
                         beta: float) -> float:
    """E exp(-alpha G - beta X-bar) of one component.

    Args:
        handle: a component with negative mean and no negative jumps.
        alpha: argument of G (inf allowed).
        beta: argument of X-bar (inf allowed).

    Returns:
        value in (0, 1] (P(X-bar = 0) for an infinite argument).
    """
    _check_nonnegative(alpha=alpha, beta=beta)
    if np.isinf(alpha) or np.isinf(beta):
        return empty_probability(handle)
    if alpha == 0 and beta == 0:
        return 1.0
    mean = handle.mean
    root = phi(handle, alpha)
    if abs(beta - root) < SINGULAR_WINDOW:
        return float(-mean / psi_prime(handle, beta))
    return float(-mean * (root - beta) / (alpha - psi(handle, beta)))


def empty_probability(handle: ExponentHandle) -> float:
    """P(X-bar = 0) = -E X(1) / c, with c the linear coefficient of psi."""
    coefficient = handle.linear_coefficient
    if np.isinf(coefficient):
        return 0.0
    mean = handle.mean
    if mean >= 0:
        reason = (f"Component {handle.index + 1} has nonnegative mean "
                  f"{mean}")
        logger.error(reason)
        raise TransformError(reason)
    return float(-mean / coefficient)


def busy_periods(handle: ExponentHandle, alpha: float,
                 beta: float) -> tuple[float, float]:
    """Transforms of the busy period straddling a stationary time.

    Returns:
        (E exp(-alpha B - beta D), E exp(-alpha V)) where B is the elapsed
        and D the residual part of the busy period V = B + D.
    """
    _check_nonnegative(alpha=alpha, beta=beta)
    mean = handle.mean
    length = float(-mean * phi_prime(handle, alpha))
    if abs(alpha - beta) < SINGULAR_WINDOW:
        joint = length
    else:
        joint = float(-mean * (phi(handle, alpha) - phi(handle, beta)) /
                      (alpha - beta))
    return joint, length


def busy_age_transform(handle: ExponentHandle, alpha: float) -> float:
    """E exp(-alpha B) of the stationary busy age."""
    return fluctuation_identity(handle, alpha, 0.0)


# ---------- Tandem transforms ---------- #
def _tandem_setup(spec: TreeNetworkSpec, report: ValidationReport = None):
    derived = derive_tandem(spec, report)
    return derived, exponent_handles(spec, derived)


def _xg_factors(handles: list[ExponentHandle], derived: TandemDerived,
                alpha: np.ndarray, beta: np.ndarray):
    """Numerator and denominator transforms of the quasi-product form.

    N_m = F_m(sum_{l>=m} alpha_l + sum_{l>m} theta_l, u_m),
    D_j = F_j(sum_{l>j} alpha_l + sum_{l>j} theta_l, u_j - beta_j),
    with u_l = sum_{k>=l} K_l^k beta_k and theta_l = theta^Upsilon_l(u_l).
    """
    n = len(handles)
    kpow = derived.kpow
    u = kpow @ beta
    theta = np.array([0.0] + [handles[ell].theta_upsilon(u[ell])
                              for ell in range(1, n)])
    alpha_tail = np.concatenate([np.cumsum(alpha[::-1])[::-1], [0.0]])
    theta_tail = np.concatenate([np.cumsum(theta[::-1])[::-1], [0.0]])

    numerators = [fluctuation_identity(handles[m],
                                       alpha_tail[m] + theta_tail[m + 1],
                                       u[m])
                  for m in range(n)]
    denominators = [fluctuation_identity(handles[j],
                                         alpha_tail[j + 1] +
                                         theta_tail[j + 1],
                                         kpow[j, j + 1:] @ beta[j + 1:])
                    for j in range(n - 1)]
    return numerators, denominators


def quasi_product_XG(spec: TreeNetworkSpec, alpha, beta) -> float:
    """E exp(-<alpha, G> - <beta, X-bar>) of a tandem free process.

    Raises:
        SpecError if spec is not a tandem.
        TransformError if a denominator transform vanishes.
    """
    derived, handles = _tandem_setup(spec)
    alpha = parse_vector(alpha, spec.n, 'alpha')
    beta = parse_vector(beta, spec.n, 'beta')
    numerators, denominators = _xg_factors(handles, derived, alpha, beta)
    value = numerators[0]
    for j, denominator in enumerate(denominators):
        value *= numerators[j + 1] / _nonzero(denominator, j)
    logger.debug(f"Quasi-product XG({alpha}, {beta}) = {value}")
    return float(value)


def conditioned_XG(spec: TreeNetworkSpec, k: int, alpha, beta) -> float:
    """E[exp(-<alpha, G> - <beta, X-bar>) | X-bar_k = 0] of a tandem.

    Only stations after k carry weight: given X-bar_k = 0, G_l and X-bar_l
    vanish for l <= k.
    """
    derived, handles = _tandem_setup(spec)
    if not 0 <= k < spec.n:
        reason = f"Station {k} out of range for n = {spec.n}"
        logger.error(reason)
        raise TransformError(reason)
    alpha = parse_vector(alpha, spec.n, 'alpha')
    beta = parse_vector(beta, spec.n, 'beta')
    numerators, denominators = _xg_factors(handles, derived, alpha, beta)
    value = 1.0
    for j in range(k, spec.n - 1):
        value *= numerators[j + 1] / _nonzero(denominators[j], j)
    return float(value)


def tandem_WB(spec: TreeNetworkSpec, omega, beta,
              cross_check: bool = True) -> float:
    """E exp(-<omega, W> - <beta, B>) at stationarity, for T1-T6 tandems.

    Evaluates the ratio-of-marginals form. With cross_check, the
    independently coded Phi/psi form must agree to CROSS_CHECK_TOL
    (skipped near its singularities). Under weak T1, B is to be read as
    B~, the busy ages of the aggregated contents.

    Raises:
        TransformError if T1-T6 fail, a factor is singular or the two forms
        disagree.
    """
    report = _require_tandem_formulas(spec)
    derived, handles = _tandem_setup(spec, report)
    omega = parse_vector(omega, spec.n, 'omega')
    beta = parse_vector(beta, spec.n, 'beta')
    value = _wb_first_form(handles, derived, omega, beta)

    if cross_check and np.all(np.isfinite(omega)) and \
            np.all(np.isfinite(beta)):
        closed = _wb_second_form(handles, derived, omega, beta)
        if closed is None:
            logger.debug("Closed-form cross-check skipped near a "
                         "singularity")
        elif abs(closed - value) > CROSS_CHECK_TOL * max(1.0, abs(value)):
            reason = (f"Tandem transform forms disagree: {value} vs "
                      f"{closed}")
            logger.error(reason)
            raise TransformError(reason)
    logger.debug(f"Tandem WB({omega}, {beta}) = {value}")
    return float(value)


def tandem_WB_closed_form(spec: TreeNetworkSpec, omega, beta
                          ) -> Optional[float]:
    """The Phi/psi form of tandem_WB, or None near its singularities."""
    report = _require_tandem_formulas(spec)
    derived, handles = _tandem_setup(spec, report)
    omega = parse_vector(omega, spec.n, 'omega')
    beta = parse_vector(beta, spec.n, 'beta')
    return _wb_second_form(handles, derived, omega, beta)


def _wb_shifts(handles: list[ExponentHandle], omega: np.ndarray,
               beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """A_j = sum_{l>j} theta^Upsilon_l(omega_l); S_j = sum_{l>=j} beta_l."""
    n = len(handles)
    theta = np.array([0.0] + [handles[ell].theta_upsilon(omega[ell])
                              for ell in range(1, n)])
    shifts = np.concatenate([np.cumsum(theta[::-1])[::-1][1:], [0.0]])
    beta_tail = np.concatenate([np.cumsum(beta[::-1])[::-1], [0.0]])
    return shifts, beta_tail


def _wb_first_form(handles: list[ExponentHandle], derived: TandemDerived,
                   omega: np.ndarray, beta: np.ndarray) -> float:
    n = len(handles)
    shifts, beta_tail = _wb_shifts(handles, omega, beta)
    value = fluctuation_identity(handles[-1], beta[-1], omega[-1])
    for j in range(n - 1):
        numerator = fluctuation_identity(handles[j], shifts[j] + beta_tail[j],
                                         omega[j])
        denominator = fluctuation_identity(
            handles[j], shifts[j] + beta_tail[j + 1],
            derived.chain[j] * omega[j + 1])
        value *= numerator / _nonzero(denominator, j)
    return float(value)


def _wb_second_form(handles: list[ExponentHandle], derived: TandemDerived,
                    omega: np.ndarray, beta: np.ndarray) -> Optional[float]:
    n = len(handles)
    shifts, beta_tail = _wb_shifts(handles, omega, beta)

    last = handles[-1]
    if omega[-1] == 0 and beta[-1] == 0:
        value = 1.0
    else:
        root = phi(last, beta[-1])
        gap = beta[-1] - psi(last, omega[-1])
        if abs(root - omega[-1]) < SINGULAR_WINDOW or \
                abs(gap) < SINGULAR_WINDOW:
            return None
        value = -last.mean * (root - omega[-1]) / gap

    for j in range(n - 1):
        handle = handles[j]
        upper = shifts[j] + beta_tail[j]
        lower = shifts[j] + beta_tail[j + 1]
        passed = derived.chain[j] * omega[j + 1]
        phi_ratio_den = phi(handle, lower) - passed
        psi_ratio_den = upper - psi(handle, omega[j])
        if abs(phi_ratio_den) < SINGULAR_WINDOW or \
                abs(psi_ratio_den) < SINGULAR_WINDOW:
            return None
        value *= (phi(handle, upper) - omega[j]) / phi_ratio_den
        value *= (lower - psi(handle, passed)) / psi_ratio_den
    return float(value)


# ---------- Single compound Poisson input ---------- #
@dataclass(frozen=True)
class SingleInputTransform:
    """Transforms of station i in a T7-T8 tandem.

    Attributes:
        joint: E exp(-omega W_i - beta B_i).
        idle_probability: P(W_i = 0).
        upstream_empty: E[exp(-omega W_i - beta B_i); W_{i-1} = 0], None
            for the root station.
    """

    joint: float
    idle_probability: float
    upstream_empty: Optional[float]


def single_cp(spec: TreeNetworkSpec, i: int, omega: float,
              beta: float) -> SingleInputTransform:
    """Marginal transforms of a tandem fed by one compound Poisson input.

    For i >= 1, with s = (r_{i-1} - r_i) omega + beta,

        joint = -E X_i(1) (Phi_i(beta) - omega) / s
                * Phi_{i-1}(s) / (Phi_{i-1}(s) - omega),
        upstream_empty = E X_i(1) / (d - r_{i-1})
                * (Phi_i(beta) - omega) / (Phi_{i-1}(s) - omega).

    Station 0 uses the fluctuation identity directly.

    Raises:
        TransformError if T7-T8 fail.
    """
    report = validate_network(spec)
    if not report.single_input_formulas:
        _fail_conditions("Single-input transforms need T1-T4 and T7-T8",
                         report)
    derived, handles = _tandem_setup(spec, report)
    if not 0 <= i < spec.n:
        reason = f"Station {i} out of range for n = {spec.n}"
        logger.error(reason)
        raise TransformError(reason)
    _check_nonnegative(omega=omega, beta=beta)

    handle = handles[i]
    drift = derived.root_drift
    idle_probability = float(handle.mean / (drift - spec.drain_rates[i]))
    if i == 0:
        return SingleInputTransform(
            fluctuation_identity(handle, beta, omega), idle_probability, None)

    upstream = handles[i - 1]
    gap = spec.drain_rates[i - 1] - spec.drain_rates[i]
    shifted = gap * omega + beta
    if omega == 0 and beta == 0:
        return SingleInputTransform(1.0, idle_probability,
                                    empty_probability(upstream))

    root = phi(handle, beta)
    upstream_root = phi(upstream, shifted)
    if abs(upstream_root - omega) < SINGULAR_WINDOW:
        # Phi_{i-1}(s) = omega exactly when Phi_i(beta) = omega.
        current = fluctuation_identity(handle, beta, omega)
        upstream_ratio = fluctuation_identity(upstream, shifted, omega)
        joint = (fluctuation_identity(upstream, shifted, 0.0) /
                 upstream_ratio * current)
        empty = empty_probability(upstream) * current / upstream_ratio
    else:
        joint = (-handle.mean * (root - omega) / shifted *
                 upstream_root / (upstream_root - omega))
        empty = (handle.mean / (drift - spec.drain_rates[i - 1]) *
                 (root - omega) / (upstream_root - omega))
    return SingleInputTransform(float(joint), idle_probability, float(empty))


def upstream_empty_transform(spec: TreeNetworkSpec, i: int, omega: float,
                             beta: float) -> float:
    """E[exp(-omega W_i - beta B_i); W_{i-1} = 0] for i >= 1."""
    if i == 0:
        reason = "The root station has no upstream buffer"
        logger.error(reason)
        raise TransformError(reason)
    return single_cp(spec, i, omega, beta).upstream_empty


def idle_vector(spec: TreeNetworkSpec, gamma) -> float:
    """E exp(-<gamma, I>) at stationarity, for T7-T8 tandems.

    1 - sum_k P(W_k = 0) E_k[exp(-sum_{l<k} gamma_l H_l)
                              (1 - exp(-gamma_k H_k))],
    with E_k the law given X-bar_k = 0.
    """
    report = validate_network(spec)
    if not report.single_input_formulas:
        _fail_conditions("The idle transform needs T1-T4 and T7-T8", report)
    gamma = parse_vector(gamma, spec.n, 'gamma')
    chain = excursions.ExcursionChain.from_network(spec)
    __, handles = _tandem_setup(spec, report)

    value = 1.0
    for k in range(spec.n):
        if gamma[k] == 0:
            continue
        lower = gamma[:k + 1].copy()
        lower[k] = 0.0
        term = (excursions.H_transform_conditioned(chain, k, lower) -
                excursions.H_transform_conditioned(chain, k, gamma[:k + 1]))
        value -= empty_probability(handles[k]) * term
    return float(value)


# ---------- Priority ---------- #
def priority_WE(spec: PrioritySpec, omega, beta) -> float:
    """E exp(-<omega, W> - <beta, E>) of a preemptive priority system.

    E_j = B~_j 1{W_j > 0}. The value is the tandem transform of (W, B~) plus
    one correction per lower class j:

        WB(omega_{<j}, inf, ...; beta_{<j}, 0, 0, ...)
        - WB(omega_{<j}, inf, ...; beta_{<j}, beta_j, 0, ...)

    with infinite omega entries evaluated symbolically. The corrections
    vanish when classes 2..n have strictly increasing inputs. They account
    exactly for the event {W_j = ... = W_n = 0} only when n = 2.

    Raises:
        SpecError if P1-P3 fail.
        TransformError if a correction needs P(X-bar = 0) = 0 in a
        denominator.
    """
    report = validate_priority(spec)
    tandem = spec.to_tandem()
    derived, handles = _tandem_setup(tandem, report)
    omega = parse_vector(omega, spec.n, 'omega')
    beta = parse_vector(beta, spec.n, 'beta')

    value = tandem_WB(tandem, omega, beta)
    if all(item.is_strictly_increasing for item in spec.inputs[1:]):
        logger.debug("Strictly increasing lower classes: no corrections")
        return value
    if spec.n > 2:
        logger.warning("Priority corrections are exact for two classes; "
                       f"using them for {spec.n}")

    for j in range(1, spec.n):
        if beta[j] == 0:
            continue
        limit = omega.copy()
        limit[j:] = np.inf
        without = beta.copy()
        without[j:] = 0.0
        with_j = without.copy()
        with_j[j] = beta[j]
        correction = (_wb_first_form(handles, derived, limit, without) -
                      _wb_first_form(handles, derived, limit, with_j))
        logger.trace(f"Priority correction for class {j + 1}: {correction}")
        value += correction
    return float(value)


# ---------- Helpers ---------- #
def _require_tandem_formulas(spec: TreeNetworkSpec) -> ValidationReport:
    report = validate_network(spec)
    if not report.tandem_formulas:
        _fail_conditions("Tandem transforms need T1-T6", report)
    return report


def _fail_conditions(prefix: str, report: ValidationReport):
    reason = prefix + ": " + "; ".join(report.violations)
    logger.error(reason)
    raise TransformError(reason)


def _nonzero(denominator: float, j: int) -> float:
    if denominator == 0:
        reason = (f"Singular factor at station {j + 1}: the denominator "
                  "transform vanishes")
        logger.error(reason)
        raise TransformError(reason)
    return denominator


def _check_nonnegative(**values):
    for name, value in values.items():
        if np.any(np.asarray(value) < 0) or np.any(np.isnan(value)):
            reason = f"{name} must be >= 0, got {value}"
            logger.error(reason)
            raise TransformError(reason)

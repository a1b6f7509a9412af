"""Excursions of compound Poisson processes with linear drain.

Z(t) = xi + (sum of jumps up to t) - c t starts at an independent jump xi
and is followed until it first hits zero, at tau. This module gives the
joint transform of the last inter-jump stretch before tau and the last
mark, the transform of the backward recurrence time of a Poisson process
at an independent time, and, for a chain of such processes sharing one
jump stream (c_1 > c_2 > ... > c_n), the joint transform of the nested
excursion ends that feeds the idle-period formula of a tandem.

Stations are indexed from 0.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .levy import ExponentHandle, phi
from .model import (Condition, JumpLaw, LevyComponentSpec, TreeNetworkSpec,
                    derive_tandem, validate_network)


logger = logging.getLogger(__name__)


class ExcursionError(Exception):
    """Excursion quantity requested outside of its domain."""

    pass


CROSS_CHECK_TOL = 1e-10


class MarkCoupling(str, Enum):
    """How the mark M_i is produced from the i-th jump."""

    IDENTITY = 'identity'
    CONSTANT = 'constant'


DESCRIPTIONS = {
    MarkCoupling.IDENTITY: "M_i is the jump size itself.",
    MarkCoupling.CONSTANT: "M_i is a fixed vector, whatever the jump.",
}


@dataclass(frozen=True, eq=False)
class ExcursionModel:
    """A compound Poisson process with linear drain c.

    Attributes:
        drain: c > 0.
        intensity: jump rate lambda.
        jump_law: law of the jumps, and of the initial value xi.
        mark: coupling of marks to jumps.
        constant_marks: mark vector of the constant coupling.
    """

    drain: float
    intensity: float
    jump_law: JumpLaw
    mark: MarkCoupling = MarkCoupling.IDENTITY
    constant_marks: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'mark', MarkCoupling(self.mark))
        if not self.drain > 0 or not self.intensity > 0:
            _fail(f"Excursion model needs c > 0 and lambda > 0, got "
                  f"c = {self.drain}, lambda = {self.intensity}")
        if not self.intensity * self.jump_law.mean() < self.drain:
            _fail(f"Unstable excursion model: lambda E xi = "
                  f"{self.intensity * self.jump_law.mean()} >= c = "
                  f"{self.drain}")
        if self.mark == MarkCoupling.CONSTANT and not self.constant_marks:
            _fail("Constant mark coupling needs constant_marks")

    @property
    def handle(self) -> ExponentHandle:
        """Exponent of the free process (jumps - c t)."""
        root = LevyComponentSpec.compound_poisson(self.intensity,
                                                  self.jump_law)
        return ExponentHandle(0, np.ones(1), (root,), self.drain)

    @property
    def mark_dimension(self) -> int:
        if self.mark == MarkCoupling.IDENTITY:
            return 1
        return len(self.constant_marks)

    def marks_of(self, jump: float) -> np.ndarray:
        if self.mark == MarkCoupling.IDENTITY:
            return np.array([jump])
        return np.asarray(self.constant_marks, dtype=float)

    def mark_transform(self, s: float, kappa: np.ndarray) -> float:
        """E exp(-s xi - <kappa, M>) for a jump xi and its mark M."""
        kappa = _kappa(self, kappa)
        if self.mark == MarkCoupling.IDENTITY:
            return self.jump_law.laplace(s + kappa[0])
        marks = np.asarray(self.constant_marks, dtype=float)
        with np.errstate(invalid='ignore'):
            penalty = np.where(kappa == 0, 0.0, kappa * marks).sum()
        return self.jump_law.laplace(s) * float(np.exp(-penalty))


def undershoot_transform(model: ExcursionModel, beta: float, gamma: float,
                         kappa: Optional[np.ndarray] = None,
                         cross_check: bool = True) -> float:
    """Joint transform of (tau - T_N, tau, M_N) started from xi.

    T_N is the last jump epoch before the excursion ends (0 when it ends
    before any jump) and M_N the mark of that jump (or of xi).

    Args:
        model: a stable excursion model.
        beta: argument of tau - T_N.
        gamma: argument of tau.
        kappa: mark argument (zeros by default; inf entries allowed).
        cross_check: also evaluate the form through E exp(-gamma tau) and
            require agreement.

    Returns:
        E exp(-beta (tau - T_N) - gamma tau - <kappa, M_N>).
    """
    _check_nonnegative(beta=beta, gamma=gamma)
    lam, c = model.intensity, model.drain
    s = (beta + gamma + lam) / c
    marked = model.mark_transform(s, kappa)
    denominator = beta + lam * model.jump_law.laplace(s)
    root = phi(model.handle, gamma)
    value = (beta + gamma - c * root + lam) * marked / denominator

    if cross_check:
        second = (beta + lam * excursion_length_from_jump_law(model, gamma)) \
            * marked / denominator
        if abs(second - value) > CROSS_CHECK_TOL * max(1.0, abs(value)):
            _fail(f"Undershoot transform forms disagree: {value} vs {second}")
    logger.trace(f"Undershoot transform({beta}, {gamma}) = {value}")
    return float(value)


def recurrence_transform(mu: float, zeta_law: JumpLaw, s: float,
                         beta: float, gamma: float) -> float:
    """E[s^N(zeta) exp(-beta A(zeta) - gamma zeta)].

    N is a Poisson process of rate mu, zeta an independent positive time and
    A(zeta) the time since the last point of N before zeta (zeta itself if
    there is none).
    """
    if not mu > 0:
        _fail(f"mu must be > 0, got {mu}")
    if not 0 <= s <= 1:
        _fail(f"s must lie in [0, 1], got {s}")
    _check_nonnegative(beta=beta, gamma=gamma)
    weight = beta + s * mu
    if weight == 0:
        return float(zeta_law.laplace(gamma + mu))
    return float(beta / weight * zeta_law.laplace(beta + gamma + mu) +
                 s * mu / weight * zeta_law.laplace(gamma + (1 - s) * mu))


def excursion_length_from_jump_law(model: ExcursionModel,
                                   gamma: float) -> float:
    """E exp(-gamma tau) from xi, as F^(Phi(gamma))."""
    return float(model.jump_law.laplace(phi(model.handle, gamma)))


def characteristic_residual(model: ExcursionModel, gamma: float) -> float:
    """gamma - c Phi(gamma) - lambda (F^(Phi(gamma)) - 1); zero up to
    rounding."""
    root = phi(model.handle, gamma)
    return float(gamma - model.drain * root -
                 model.intensity * (model.jump_law.laplace(root) - 1.0))


# ---------- Chains sharing one jump stream ---------- #
@dataclass(frozen=True, eq=False)
class ExcursionChain:
    """Processes X_i = Pi - c_i t with c_0 > c_1 > ... > c_{n-1} > 0.

    Attributes:
        drains: the c_i.
        intensity: jump rate lambda of Pi.
        jump_law: jump law of Pi.
    """

    drains: np.ndarray
    intensity: float
    jump_law: JumpLaw

    def __post_init__(self):
        drains = np.array(self.drains, dtype=float).reshape(-1)
        if drains.shape[0] < 1 or np.any(drains <= 0) or \
                np.any(np.diff(drains) >= 0):
            _fail(f"Chain drains must be positive and strictly decreasing, "
                  f"got {drains}")
        drains.setflags(write=False)
        object.__setattr__(self, 'drains', drains)
        # Stability of the slowest component covers every component.
        self.model(drains.shape[0] - 1)

    @property
    def n(self) -> int:
        return self.drains.shape[0]

    def model(self, i: int) -> ExcursionModel:
        self._check_index(i)
        return ExcursionModel(float(self.drains[i]), self.intensity,
                              self.jump_law)

    def handle(self, i: int) -> ExponentHandle:
        return self.model(i).handle

    def _check_index(self, i: int):
        if not 0 <= i < self.drains.shape[0]:
            _fail(f"Station index {i} out of range for a chain of "
                  f"{self.drains.shape[0]}")

    @classmethod
    def from_network(cls, spec: TreeNetworkSpec) -> 'ExcursionChain':
        """Chain of a network satisfying T7-T8 (c_i = r_i - d)."""
        report = validate_network(spec)
        if not (report.conditions[Condition.T7] and
                report.conditions[Condition.T8]):
            _fail("Excursion chain needs T7-T8: " +
                  "; ".join(item for item in report.violations
                            if item.startswith(('T7', 'T8'))))
        derived = derive_tandem(spec, report)
        root = spec.inputs[0]
        return cls(derived.drains, root.intensity, root.jump_law)


@dataclass(frozen=True, eq=False)
class ExcursionCoefficients:
    """Shift coefficients of a chain up to station k.

    Attributes:
        k: the slowest station considered.
        c: C_j^k(beta) for j = 0..k.
        d: D_j^k(gamma) for j = 0..k, when built from gamma.
    """

    k: int
    c: np.ndarray
    d: Optional[np.ndarray] = None

    @classmethod
    def from_beta(cls, chain: ExcursionChain, k: int,
                  beta: np.ndarray) -> 'ExcursionCoefficients':
        return cls(k, chain_coefficients(chain, k, beta))

    @classmethod
    def from_gamma(cls, chain: ExcursionChain, k: int,
                   gamma: np.ndarray) -> 'ExcursionCoefficients':
        beta = np.cumsum(np.asarray(gamma, dtype=float))
        return cls(k, chain_coefficients(chain, k, beta),
                   idle_coefficients(chain, k, gamma))


def chain_coefficients(chain: ExcursionChain, k: int,
                       beta: np.ndarray) -> np.ndarray:
    """C_j^k(beta) = c_j sum_{l=j}^{k-1} (1/c_{l+1} - 1/c_l)(lambda + beta_l).

    Args:
        chain: the chain.
        k: slowest station.
        beta: at least k entries (beta_0..beta_{k-1}).

    Returns:
        array of C_j^k for j = 0..k (C_k^k = 0).
    """
    chain._check_index(k)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] < k:
        _fail(f"beta needs {k} entries, got {beta.shape[0]}")
    c = chain.drains[:k + 1]
    terms = (1.0 / c[1:] - 1.0 / c[:-1]) * (chain.intensity + beta[:k])
    tails = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]])
    return c * tails


def idle_coefficients(chain: ExcursionChain, k: int,
                      gamma: np.ndarray) -> np.ndarray:
    """D_j^k(gamma) = C_j^k(beta) with beta_l = gamma_0 + ... + gamma_l."""
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    return chain_coefficients(chain, k, np.cumsum(gamma))


def excursion_length_transform(chain: ExcursionChain, i: int,
                               gamma: float) -> float:
    """L_i(gamma) = E exp(-gamma (rho_i - sigma_i)) for the excursion of X_i
    started by a jump: (lambda + gamma - c_i Phi_i(gamma)) / lambda."""
    _check_nonnegative(gamma=gamma)
    lam = chain.intensity
    c_i = chain.drains[i]
    return float((lam + gamma - c_i * phi(chain.handle(i), gamma)) / lam)


def rho_recursion_step(chain: ExcursionChain, i: int, beta: np.ndarray,
                       gamma: np.ndarray,
                       lower: Callable[[np.ndarray, np.ndarray], float]
                       ) -> float:
    """One step of the recursion for T_i(beta, gamma).

    T_i(beta, gamma) = E exp(-sum_{j<i} beta_j (rho_{j+1} - rho_j)
                             - sum_{j<=i} gamma_j (rho_j - sigma_j))
    over the nested excursions ending with the first excursion of X_i.

    Args:
        chain: the chain.
        i: level, >= 1.
        beta: i entries.
        gamma: i + 1 entries.
        lower: T_{i-1}, called with (beta[:i-1], shifted gamma[:i]).

    Returns:
        T_i(beta, gamma).
    """
    chain._check_index(i)
    if i < 1:
        _fail("The recursion starts at level 1")
    beta = np.asarray(beta, dtype=float).reshape(-1)
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    if beta.shape[0] != i or gamma.shape[0] != i + 1:
        _fail(f"Level {i} needs {i} beta and {i + 1} gamma entries")

    lam = chain.intensity
    ratio_c = chain.drains[i - 1] / chain.drains[i]
    shift = (ratio_c - 1.0) * (lam + beta[i - 1]) + ratio_c * gamma[i]
    factor = ((beta[i - 1] + lam * excursion_length_transform(
                  chain, i, gamma[i])) /
              (beta[i - 1] + lam * excursion_length_transform(
                  chain, i - 1, shift)))
    shifted = gamma[:i].copy()
    shifted[i - 1] += shift
    return float(factor * lower(beta[:i - 1], shifted))


def rho_recursion(chain: ExcursionChain, i: int, beta: np.ndarray,
                  gamma: np.ndarray) -> float:
    """T_i by applying rho_recursion_step down to T_0 = L_0."""
    if i == 0:
        return excursion_length_transform(chain, 0,
                                          float(np.asarray(gamma)[0]))
    return rho_recursion_step(
        chain, i, beta, gamma,
        lambda lower_beta, lower_gamma: rho_recursion(
            chain, i - 1, lower_beta, lower_gamma))


def rho_transform(chain: ExcursionChain, k: int, beta: np.ndarray,
                  gamma: float) -> float:
    """Closed product form of T_k(beta, (0, ..., 0, gamma)).

    prod_{j<k} [beta_j + lambda L_{j+1}(C_{j+1} + c_{j+1} gamma / c_k)] /
               [beta_j + lambda L_j(C_j + c_j gamma / c_k)]
    times L_0(C_0 + c_0 gamma / c_k).
    """
    chain._check_index(k)
    _check_nonnegative(gamma=gamma)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != k:
        _fail(f"rho_transform at level {k} needs {k} beta entries")
    _check_nonnegative(beta=beta)

    lam = chain.intensity
    drains = chain.drains
    coeffs = chain_coefficients(chain, k, beta)
    args = coeffs + drains[:k + 1] / drains[k] * gamma
    lengths = [excursion_length_transform(chain, j, args[j])
               for j in range(k + 1)]
    value = lengths[0]
    for j in range(k):
        value *= (beta[j] + lam * lengths[j + 1]) / \
            (beta[j] + lam * lengths[j])
    return float(value)


def H_transform_conditioned(chain: ExcursionChain, k: int,
                            gamma: np.ndarray,
                            printed_index: bool = False) -> float:
    """E exp(-sum_{l<=k} gamma_l H_l) given X-bar_k = 0.

    Evaluated in the D-coefficient form

        (lambda + sum_{l<k} gamma_l (1 - c_k/c_l) - c_k Phi_0(D_0)) /
        (lambda + sum_{l<=k} gamma_l)
        * prod_{j<k} (E_j - c_k Phi_{j+1}(D_{j+1})) /
                     (E_j' - c_k Phi_j(D_j)),

    with E_j = lambda + sum_{l<k} gamma_l - sum_{l=j+1}^{k-1} c_k/c_l
    gamma_l. E_j' equals E_j; with printed_index the sum in E_j' runs up to
    l = k instead, which breaks the telescoping at gamma_{<k} = 0.

    Args:
        chain: the chain.
        k: the conditioning station.
        gamma: k + 1 nonnegative entries.
        printed_index: use the alternative denominator index.
    """
    chain._check_index(k)
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    if gamma.shape[0] != k + 1:
        _fail(f"H transform at station {k} needs {k + 1} gamma entries")
    _check_nonnegative(gamma=gamma)

    lam = chain.intensity
    drains = chain.drains
    c_k = drains[k]
    d = idle_coefficients(chain, k, gamma)
    roots = [phi(chain.handle(j), d[j]) for j in range(k + 1)]
    weights = c_k / drains[:k + 1]

    lower_sum = lam + gamma[:k].sum()
    first = (lam + (gamma[:k] * (1.0 - weights[:k])).sum() -
             c_k * roots[0]) / (lam + gamma.sum())
    value = first
    upper = k + 1 if printed_index else k
    for j in range(k):
        shared = lower_sum - (weights[j + 1:k] * gamma[j + 1:k]).sum()
        below = lower_sum - (weights[j + 1:upper] * gamma[j + 1:upper]).sum()
        value *= (shared - c_k * roots[j + 1]) / (below - c_k * roots[j])
    return float(value)


def H_transform_via_rho(chain: ExcursionChain, k: int,
                        gamma: np.ndarray) -> float:
    """Same quantity as H_transform_conditioned, through rho_transform."""
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    beta = np.cumsum(gamma)[:k]
    lam = chain.intensity
    return lam / (lam + gamma.sum()) * rho_transform(chain, k, beta, 0.0)


# ---------- Helpers ---------- #
def _kappa(model: ExcursionModel, kappa) -> np.ndarray:
    dim = model.mark_dimension
    if kappa is None:
        return np.zeros(dim)
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    if kappa.shape[0] != dim:
        _fail(f"kappa needs {dim} entries, got {kappa.shape[0]}")
    _check_nonnegative(kappa=kappa)
    return kappa


def _check_nonnegative(**values):
    for name, value in values.items():
        if np.any(np.asarray(value) < 0) or np.any(np.isnan(value)):
            _fail(f"{name} must be >= 0, got {value}")


def _fail(reason: str):
    logger.error(reason)
    raise ExcursionError(reason)

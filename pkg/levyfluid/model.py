"""Tree fluid network specifications, their validation and derived parameters.

A network is described by a routing matrix P, drain rates r, one Lévy input
per station and initial buffer contents w0. This module checks the
structural conditions (N1-N3) and the modelling conditions (T1-T8) on such
a network, and derives the chain parameterization used by the tandem
formulas (K coefficients, Upsilon drifts, and for single compound Poisson
input the drain offsets c_j).

Stations are indexed from 0 in code. Condition names and JSON documents
follow the usual 1-based numbering of the literature only in messages.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional

import numpy as np


logger = logging.getLogger(__name__)


class SpecError(Exception):
    """A network specification is malformed or fails a requirement."""

    pass


class DimensionError(SpecError):
    """A vector argument does not match the network dimension."""

    pass


# ---------- Jump laws ---------- #
class JumpKind(str, Enum):
    """Supported positive jump distributions."""

    EXPONENTIAL = 'exponential'
    CONSTANT = 'constant'
    MIXTURE = 'finite-mixture'


_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class JumpLaw:
    """Law of a strictly positive jump, with a closed-form Laplace transform.

    Attributes:
        kind: which variant this is.
        rate: rate mu of the exponential variant.
        size: atom a of the constant variant.
        mixture: (weight, JumpLaw) pairs of the finite-mixture variant.
    """

    kind: JumpKind
    rate: float = 0.0
    size: float = 0.0
    mixture: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'kind', JumpKind(self.kind))
        if self.kind == JumpKind.EXPONENTIAL and not self.rate > 0:
            _fail(f"jump_law.rate must be > 0, got {self.rate}")
        if self.kind == JumpKind.CONSTANT and not self.size > 0:
            _fail(f"jump_law.size must be > 0, got {self.size}")
        if self.kind == JumpKind.MIXTURE:
            if len(self.mixture) == 0:
                _fail("jump_law.components must not be empty")
            weights = np.array([weight for weight, __ in self.mixture])
            if np.any(weights <= 0):
                _fail(f"jump_law.components weights must be > 0: {weights}")
            if abs(weights.sum() - 1.0) > _WEIGHT_SUM_TOL:
                _fail("jump_law.components weights must sum to 1, got "
                      f"{weights.sum()}")
            for __, law in self.mixture:
                if not isinstance(law, JumpLaw):
                    _fail("jump_law.components entries must be jump laws")

    @classmethod
    def exponential(cls, rate: float) -> 'JumpLaw':
        return cls(JumpKind.EXPONENTIAL, rate=float(rate))

    @classmethod
    def constant(cls, size: float) -> 'JumpLaw':
        return cls(JumpKind.CONSTANT, size=float(size))

    @classmethod
    def finite_mixture(cls, components: list[tuple[float, 'JumpLaw']]
                       ) -> 'JumpLaw':
        return cls(JumpKind.MIXTURE,
                   mixture=tuple((float(w), law) for w, law in components))

    def mean(self) -> float:
        """Expected jump size."""
        if self.kind == JumpKind.EXPONENTIAL:
            return 1.0 / self.rate
        if self.kind == JumpKind.CONSTANT:
            return self.size
        return sum(weight * law.mean() for weight, law in self.mixture)

    def laplace(self, beta):
        """Laplace transform F^(beta) = E exp(-beta * jump).

        Accepts scalars or arrays; beta = inf maps to 0.
        """
        beta = np.asarray(beta, dtype=float)
        if self.kind == JumpKind.EXPONENTIAL:
            with np.errstate(invalid='ignore'):
                out = np.where(np.isinf(beta), 0.0,
                               self.rate / (self.rate + beta))
        elif self.kind == JumpKind.CONSTANT:
            out = np.exp(-self.size * beta)
        else:
            out = sum(weight * law.laplace(beta)
                      for weight, law in self.mixture)
        return out if out.ndim else float(out)

    def laplace_derivative(self, beta):
        """Derivative of the Laplace transform with respect to beta."""
        beta = np.asarray(beta, dtype=float)
        if self.kind == JumpKind.EXPONENTIAL:
            out = -self.rate / (self.rate + beta) ** 2
        elif self.kind == JumpKind.CONSTANT:
            out = -self.size * np.exp(-self.size * beta)
        else:
            out = sum(weight * law.laplace_derivative(beta)
                      for weight, law in self.mixture)
        return out if np.ndim(out) else float(out)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw count independent jump sizes."""
        if self.kind == JumpKind.EXPONENTIAL:
            return rng.exponential(1.0 / self.rate, count)
        if self.kind == JumpKind.CONSTANT:
            return np.full(count, self.size)

        weights = np.array([weight for weight, __ in self.mixture])
        choice = rng.choice(len(weights), size=count, p=weights)
        out = np.empty(count)
        for idx, (__, law) in enumerate(self.mixture):
            mask = choice == idx
            out[mask] = law.sample(rng, int(mask.sum()))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> 'JumpLaw':
        """Build from the JSON form, e.g. {"variant": "exponential",
        "rate": 2}."""
        try:
            variant = JumpKind(data['variant'])
        except (KeyError, TypeError, ValueError):
            _fail(f"jump_law.variant missing or unknown in {data}")
        if variant == JumpKind.EXPONENTIAL:
            return cls.exponential(_number(data, 'rate', 'jump_law'))
        if variant == JumpKind.CONSTANT:
            return cls.constant(_number(data, 'size', 'jump_law'))
        components = data.get('components')
        if not isinstance(components, list):
            _fail("jump_law.components must be a list")
        return cls.finite_mixture(
            [(_number(item, 'weight', 'jump_law.components'),
              cls.from_dict(item.get('law'))) for item in components])

    def to_dict(self) -> dict:
        if self.kind == JumpKind.EXPONENTIAL:
            return {'variant': self.kind.value, 'rate': self.rate}
        if self.kind == JumpKind.CONSTANT:
            return {'variant': self.kind.value, 'size': self.size}
        return {'variant': self.kind.value,
                'components': [{'weight': weight, 'law': law.to_dict()}
                               for weight, law in self.mixture]}


# ---------- Lévy inputs ---------- #
class InputKind(str, Enum):
    """Supported Lévy input kinds."""

    COMPOUND_POISSON = 'compound-poisson'
    BROWNIAN = 'brownian'
    DRIFT = 'deterministic-drift'
    ZERO = 'zero'


@dataclass(frozen=True)
class LevyComponentSpec:
    """One external input J_j.

    Attributes:
        kind: the input kind.
        drift: linear rate (content/time), may be 0.
        intensity: jump rate lambda (compound Poisson only).
        jump_law: law of the jumps (compound Poisson only).
        variance: sigma^2 (brownian only).
    """

    kind: InputKind
    drift: float = 0.0
    intensity: float = 0.0
    jump_law: Optional[JumpLaw] = None
    variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', InputKind(self.kind))
        kind = self.kind
        if kind == InputKind.COMPOUND_POISSON:
            if not self.intensity > 0:
                _fail(f"inputs.intensity must be > 0, got {self.intensity}")
            if self.jump_law is None:
                _fail("inputs.jump_law is required for compound-poisson")
        elif self.intensity != 0 or self.jump_law is not None:
            _fail(f"inputs.intensity/jump_law only apply to compound-poisson,"
                  f" not {kind.value}")
        if kind == InputKind.BROWNIAN:
            if not self.variance > 0:
                _fail(f"inputs.variance must be > 0, got {self.variance}")
        elif self.variance != 0:
            _fail(f"inputs.variance only applies to brownian, "
                  f"not {kind.value}")
        if kind == InputKind.ZERO and self.drift != 0:
            _fail("inputs.drift must be 0 for a zero input")
        if not np.isfinite(self.drift):
            _fail(f"inputs.drift must be finite, got {self.drift}")

    @classmethod
    def compound_poisson(cls, intensity: float, jump_law: JumpLaw,
                         drift: float = 0.0) -> 'LevyComponentSpec':
        return cls(InputKind.COMPOUND_POISSON, drift=float(drift),
                   intensity=float(intensity), jump_law=jump_law)

    @classmethod
    def brownian(cls, variance: float, drift: float = 0.0
                 ) -> 'LevyComponentSpec':
        return cls(InputKind.BROWNIAN, drift=float(drift),
                   variance=float(variance))

    @classmethod
    def deterministic(cls, drift: float) -> 'LevyComponentSpec':
        return cls(InputKind.DRIFT, drift=float(drift))

    @classmethod
    def zero(cls) -> 'LevyComponentSpec':
        return cls(InputKind.ZERO)

    @property
    def is_subordinator(self) -> bool:
        """Nondecreasing paths: nonnegative drift and positive jumps only."""
        if self.kind == InputKind.BROWNIAN:
            return False
        return self.drift >= 0

    @property
    def is_strictly_increasing(self) -> bool:
        return self.is_subordinator and self.drift > 0

    @property
    def is_random(self) -> bool:
        return self.kind in (InputKind.COMPOUND_POISSON, InputKind.BROWNIAN)

    def mean(self) -> float:
        """E J(1)."""
        if self.kind == InputKind.COMPOUND_POISSON:
            return self.drift + self.intensity * self.jump_law.mean()
        return self.drift

    def log_laplace(self, u):
        """log E exp(-u J(1)), for u >= 0 (scalar or array)."""
        u = np.asarray(u, dtype=float)
        out = -self.drift * u + 0.5 * self.variance * u ** 2
        if self.kind == InputKind.COMPOUND_POISSON:
            out = out - self.intensity * (1.0 - self.jump_law.laplace(u))
        return out if out.ndim else float(out)

    def log_laplace_derivative(self, u):
        u = np.asarray(u, dtype=float)
        out = -self.drift + self.variance * u
        if self.kind == InputKind.COMPOUND_POISSON:
            out = out + self.intensity * self.jump_law.laplace_derivative(u)
        return out if np.ndim(out) else float(out)

    def cumulant(self, u: float) -> float:
        """theta(u) = -log E exp(-u J(1)) for a subordinator.

        u = inf is evaluated symbolically: a positive drift gives inf, a
        driftless compound Poisson input gives its intensity, zero gives 0.
        """
        if not self.is_subordinator:
            _fail(f"cumulant requested for a {self.kind.value} input, which "
                  "is not a subordinator")
        if np.isinf(u):
            if self.drift > 0:
                return np.inf
            return self.intensity
        return -self.log_laplace(u)

    @classmethod
    def from_dict(cls, data: dict) -> 'LevyComponentSpec':
        """Build from the JSON form, e.g. {"kind": "compound-poisson",
        "intensity": 1, "jump_law": {...}, "drift": 0.1}."""
        if not isinstance(data, dict):
            _fail(f"inputs entries must be objects, got {data!r}")
        try:
            kind = InputKind(data['kind'])
        except (KeyError, ValueError):
            _fail(f"inputs.kind missing or unknown in {data}")
        law = data.get('jump_law')
        return cls(kind,
                   drift=float(data.get('drift', 0.0)),
                   intensity=float(data.get('intensity', 0.0)),
                   jump_law=None if law is None else JumpLaw.from_dict(law),
                   variance=float(data.get('variance', 0.0)))

    def to_dict(self) -> dict:
        out = {'kind': self.kind.value, 'drift': self.drift}
        if self.kind == InputKind.COMPOUND_POISSON:
            out['intensity'] = self.intensity
            out['jump_law'] = self.jump_law.to_dict()
        if self.kind == InputKind.BROWNIAN:
            out['variance'] = self.variance
        return out


# ---------- Networks ---------- #
@dataclass(frozen=True, eq=False)
class TreeNetworkSpec:
    """An n-station fluid network with Lévy inputs.

    Attributes:
        routing: n x n matrix P of routing fractions p_ij >= 0.
        drain_rates: n drain rates r_i > 0.
        inputs: n external inputs J_1..J_n.
        w0: n initial buffer contents >= 0.
    """

    routing: np.ndarray
    drain_rates: np.ndarray
    inputs: tuple
    w0: np.ndarray = None

    def __post_init__(self):
        routing = np.array(self.routing, dtype=float)
        if routing.ndim != 2 or routing.shape[0] != routing.shape[1]:
            _fail(f"P must be a square matrix, got shape {routing.shape}")
        n = routing.shape[0]
        if n < 1:
            _fail("n must be >= 1")
        if np.any(~np.isfinite(routing)) or np.any(routing < 0):
            _fail("P entries must be finite and >= 0")

        rates = np.array(self.drain_rates, dtype=float).reshape(-1)
        if rates.shape != (n,):
            _fail(f"r must have {n} entries, got {rates.shape[0]}")
        if np.any(~(rates > 0)) or np.any(~np.isfinite(rates)):
            _fail(f"r entries must be finite and > 0, got {rates}")

        inputs = tuple(self.inputs)
        if len(inputs) != n:
            _fail(f"inputs must have {n} entries, got {len(inputs)}")
        if not all(isinstance(item, LevyComponentSpec) for item in inputs):
            _fail("inputs entries must be LevyComponentSpec values")

        w0 = (np.zeros(n) if self.w0 is None
              else np.array(self.w0, dtype=float).reshape(-1))
        if w0.shape != (n,):
            _fail(f"w0 must have {n} entries, got {w0.shape[0]}")
        if np.any(~(w0 >= 0)) or np.any(~np.isfinite(w0)):
            _fail(f"w0 entries must be finite and >= 0, got {w0}")

        for arr in (routing, rates, w0):
            arr.setflags(write=False)
        object.__setattr__(self, 'routing', routing)
        object.__setattr__(self, 'drain_rates', rates)
        object.__setattr__(self, 'inputs', inputs)
        object.__setattr__(self, 'w0', w0)

    @property
    def n(self) -> int:
        return self.routing.shape[0]

    def input_means(self) -> np.ndarray:
        return np.array([item.mean() for item in self.inputs])

    def input_drifts(self) -> np.ndarray:
        return np.array([item.drift for item in self.inputs])

    def inverse_routing(self) -> np.ndarray:
        """(I - P')^{-1} as the exact Neumann sum I + P' + ... + P'^{n-1}.

        Only meaningful for strictly upper triangular P (N1).
        """
        n = self.n
        term = np.eye(n)
        total = np.eye(n)
        for __ in range(n - 1):
            term = term @ self.routing.T
            total = total + term
        return total

    def reflection_matrix(self) -> np.ndarray:
        """I - P'."""
        return np.eye(self.n) - self.routing.T

    def with_initial(self, w0) -> 'TreeNetworkSpec':
        return replace(self, w0=np.asarray(w0, dtype=float))

    @classmethod
    def from_dict(cls, data: dict) -> 'TreeNetworkSpec':
        """Build from the JSON document {"n", "P", "r", "inputs", "w0"}."""
        if not isinstance(data, dict):
            _fail("network document must be a JSON object")
        for key in ('P', 'r', 'inputs'):
            if key not in data:
                _fail(f"{key} is missing from the network document")
        if not isinstance(data['inputs'], list):
            _fail("inputs must be a list")
        try:
            routing = np.array(data['P'], dtype=float)
            rates = np.array(data['r'], dtype=float)
        except (TypeError, ValueError) as err:
            _fail(f"P and r must be numeric arrays ({err})")
        inputs = [LevyComponentSpec.from_dict(item) for item in data['inputs']]
        spec = cls(routing, rates, tuple(inputs), data.get('w0'))
        if 'n' in data and int(data['n']) != spec.n:
            _fail(f"n = {data['n']} does not match P of size {spec.n}")
        return spec

    def to_dict(self) -> dict:
        return {'n': self.n,
                'P': self.routing.tolist(),
                'r': self.drain_rates.tolist(),
                'inputs': [item.to_dict() for item in self.inputs],
                'w0': self.w0.tolist()}

    @classmethod
    def load(cls, path: str) -> 'TreeNetworkSpec':
        """Load a network from a JSON file."""
        logger.debug(f"Loading network from {path}")
        with open(path, 'r') as file:
            return cls.from_dict(json.load(file))


@dataclass(frozen=True, eq=False)
class PrioritySpec:
    """Single station of rate r serving n classes under preemptive priority.

    Class 0 has the highest priority. Its buffer dynamics coincide with a
    tandem network with all drain rates r and p_{i,i+1} = 1.
    """

    rate: float
    inputs: tuple
    w0: np.ndarray = None

    def __post_init__(self):
        if not self.rate > 0:
            _fail(f"rate must be > 0, got {self.rate}")
        object.__setattr__(self, 'inputs', tuple(self.inputs))
        if len(self.inputs) < 1:
            _fail("inputs must not be empty")

    @property
    def n(self) -> int:
        return len(self.inputs)

    def to_tandem(self) -> TreeNetworkSpec:
        n = self.n
        routing = np.diag(np.ones(n - 1), k=1) if n > 1 else np.zeros((1, 1))
        return TreeNetworkSpec(routing, np.full(n, float(self.rate)),
                               self.inputs, self.w0)

    @classmethod
    def from_dict(cls, data: dict) -> 'PrioritySpec':
        """Build from {"rate": r, "inputs": [...], "w0": [...]}."""
        if not isinstance(data, dict) or 'rate' not in data \
                or 'inputs' not in data:
            _fail("priority document needs 'rate' and 'inputs'")
        inputs = [LevyComponentSpec.from_dict(item) for item in data['inputs']]
        return cls(float(data['rate']), tuple(inputs), data.get('w0'))

    @classmethod
    def load(cls, path: str) -> 'PrioritySpec':
        with open(path, 'r') as file:
            return cls.from_dict(json.load(file))


# ---------- Validation ---------- #
class Condition(str, Enum):
    """Conditions checked by validate_network."""

    N1 = 'N1'
    N2 = 'N2'
    N3 = 'N3'
    T1 = 'T1'
    T2 = 'T2'
    T3 = 'T3'
    T4 = 'T4'
    T5 = 'T5'
    T6 = 'T6'
    T7 = 'T7'
    T8 = 'T8'
    ND = 'ND'


DESCRIPTIONS = {
    Condition.N1: "P is strictly upper triangular.",
    Condition.N2: "Every column j >= 2 of P has exactly one positive entry.",
    Condition.N3: "Y_j = J_j - ((I-P')r)_j t is nondecreasing for j >= 2.",
    Condition.T1: "p_ij > 0 implies p_ij >= r_j / r_i.",
    Condition.T2: "Inputs 2..n are subordinators.",
    Condition.T3: "J is an n-dimensional Lévy process.",
    Condition.T4: "Stability: (I-P')^{-1} E J(1) < r componentwise.",
    Condition.T5: "Input components are mutually independent.",
    Condition.T6: "Input 1 has no negative jumps.",
    Condition.T7: "Tandem with p_{i,i+1} = 1 and no other routing.",
    Condition.T8: "Single compound Poisson root input with drift >= 0, "
                  "zero inputs elsewhere, strictly decreasing r.",
    Condition.ND: "Every station sees a random input (no trivial queue).",
}

# Conditions required before a network may be simulated.
SIMULATION_CONDITIONS = (Condition.N1, Condition.N2, Condition.N3,
                         Condition.T1, Condition.T2, Condition.T3,
                         Condition.T4)


@dataclass
class ValidationReport:
    """Outcome of validate_network.

    Attributes:
        conditions: pass/fail per condition.
        violations: human-readable reason per failed condition.
        t1_strict_edges: for every routing edge (i, j), whether
            p_ij > r_j / r_i holds strictly.
    """

    conditions: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    t1_strict_edges: dict = field(default_factory=dict)

    @property
    def t1_strict(self) -> bool:
        return all(self.t1_strict_edges.values())

    @property
    def accepted(self) -> bool:
        """N1-N3 and T1-T4 hold: the network may be simulated."""
        return all(self.conditions[cond] for cond in SIMULATION_CONDITIONS)

    @property
    def tandem_formulas(self) -> bool:
        """T1-T6 hold (tandem transforms are callable)."""
        return self.accepted and self.conditions[Condition.T5] and \
            self.conditions[Condition.T6]

    @property
    def single_input_formulas(self) -> bool:
        """T7-T8 hold (single compound Poisson and idle formulas)."""
        return self.accepted and self.conditions[Condition.T7] and \
            self.conditions[Condition.T8]

    def failed(self) -> list[Condition]:
        return [cond for cond, ok in self.conditions.items() if not ok]

    def to_dict(self) -> dict:
        return {
            'accepted': self.accepted,
            'conditions': {cond.value: ok
                           for cond, ok in self.conditions.items()},
            'capabilities': {
                'tandem_formulas': self.tandem_formulas,
                'single_input_formulas': self.single_input_formulas,
                't1_strict': self.t1_strict,
            },
            't1_strict_edges': {f"{i + 1}->{j + 1}": strict for (i, j), strict
                                in self.t1_strict_edges.items()},
            'violations': list(self.violations),
        }


def validate_network(spec: TreeNetworkSpec) -> ValidationReport:
    """Check N1-N3 and T1-T8 on a network.

    Malformed fields (non-square P, non-positive r, bad jump laws) never get
    this far: TreeNetworkSpec rejects them on construction. Here, every
    condition is evaluated and recorded; T7-T8 (and ND) are capability flags
    rather than requirements.

    Args:
        spec: the network to check.

    Returns:
        A ValidationReport listing every violated condition.
    """
    report = ValidationReport()
    n = spec.n
    routing = spec.routing
    rates = spec.drain_rates

    def record(cond: Condition, ok: bool, reason: str = ''):
        report.conditions[cond] = bool(ok)
        if not ok:
            report.violations.append(f"{cond.value}: {reason}")

    lower = np.argwhere(np.tril(routing) != 0)
    record(Condition.N1, len(lower) == 0,
           "non-zero entries on or below the diagonal at " +
           ", ".join(f"P[{i + 1}][{j + 1}]" for i, j in lower))

    bad_columns = [j + 1 for j in range(1, n)
                   if np.count_nonzero(routing[:, j] > 0) != 1]
    record(Condition.N2, not bad_columns,
           f"columns without exactly one feeder: {bad_columns}")

    # Y_j drift = J_j drift + (P'r)_j - r_j, which must be >= 0 with no
    # gaussian part.
    y_drift = spec.input_drifts() + routing.T @ rates - rates
    bad_n3 = [j + 1 for j in range(1, n)
              if spec.inputs[j].kind == InputKind.BROWNIAN or
              y_drift[j] < 0]
    record(Condition.N3, not bad_n3,
           f"Y_j decreases for stations {bad_n3}")

    violations_t1 = []
    for i, j in np.argwhere(routing > 0):
        lhs, rhs = routing[i, j] * rates[i], rates[j]
        report.t1_strict_edges[(int(i), int(j))] = bool(lhs > rhs)
        if lhs < rhs:
            violations_t1.append(f"p[{i + 1}][{j + 1}]")
    record(Condition.T1, not violations_t1,
           f"p_ij < r_j / r_i at {violations_t1}")

    bad_t2 = [j + 1 for j in range(1, n)
              if not spec.inputs[j].is_subordinator]
    record(Condition.T2, not bad_t2, f"inputs {bad_t2} are not subordinators")

    record(Condition.T3, True)

    if report.conditions[Condition.N1]:
        load = spec.inverse_routing() @ spec.input_means()
        unstable = [k + 1 for k in range(n) if not load[k] < rates[k]]
        record(Condition.T4, not unstable,
               f"(I-P')^-1 E J(1) = {load.tolist()} is not < r = "
               f"{rates.tolist()} at stations {unstable}")
    else:
        record(Condition.T4, False, "stability needs N1")

    record(Condition.T5, True)
    record(Condition.T6, True)

    chain = np.diag(np.ones(n - 1), k=1) if n > 1 else np.zeros((1, 1))
    record(Condition.T7, np.array_equal(routing, chain),
           "routing is not the unit tandem chain")

    root = spec.inputs[0]
    t8_reasons = []
    if root.kind != InputKind.COMPOUND_POISSON or root.drift < 0:
        t8_reasons.append("root is not compound Poisson with drift >= 0")
    if any(item.kind != InputKind.ZERO for item in spec.inputs[1:]):
        t8_reasons.append("non-root inputs are not zero")
    if np.any(np.diff(rates) >= 0):
        t8_reasons.append("r is not strictly decreasing")
    if not root.mean() < rates[-1]:
        t8_reasons.append("E J_1(1) >= r_n")
    record(Condition.T8, not t8_reasons, "; ".join(t8_reasons))

    if report.conditions[Condition.N1]:
        reach = spec.inverse_routing()
        random_inputs = np.array([item.is_random for item in spec.inputs])
        trivial = [k + 1 for k in range(n)
                   if not np.any((reach[k] > 0) & random_inputs)]
    else:
        trivial = list(range(1, n + 1))
    record(Condition.ND, not trivial,
           f"stations {trivial} see no random input")

    logger.debug(f"Validation: accepted={report.accepted}, "
                 f"failed={[cond.value for cond in report.failed()]}")
    return report


def validate_priority(spec: PrioritySpec) -> ValidationReport:
    """Check P1-P3 of a priority system through its tandem equivalent.

    P1-P3 amount to T1-T6 of the mapped tandem network, with T1 holding
    only weakly (p_ij = r_j / r_i on every edge).

    Raises:
        SpecError if P1-P3 fail.
    """
    report = validate_network(spec.to_tandem())
    if not report.tandem_formulas:
        reason = ("Priority system fails P1-P3: " +
                  "; ".join(report.violations))
        logger.error(reason)
        raise SpecError(reason)
    return report


# ---------- Tandem parameterization ---------- #
@dataclass(frozen=True, eq=False)
class TandemDerived:
    """Chain parameters of a tandem network X_{j+1} = K_{j+1} X_j + Upsilon.

    Attributes:
        chain: K_{j+1} = p_{j,j+1}, j = 0..n-2.
        kpow: K_j^l = prod_{i=j+1}^l K_i for l >= j (0 below the diagonal).
        upsilon_drift: p_{l-1,l} r_{l-1} - r_l (0 for the root).
        drains: c_j = r_j - d for T7-T8 networks, else None.
        intensity: root jump intensity for T7-T8 networks, else None.
        root_drift: root drift d for T7-T8 networks, else None.
    """

    chain: np.ndarray
    kpow: np.ndarray
    upsilon_drift: np.ndarray
    drains: Optional[np.ndarray] = None
    intensity: Optional[float] = None
    root_drift: Optional[float] = None


_KPOW_TOL = 1e-12


def derive_tandem(spec: TreeNetworkSpec,
                  report: Optional[ValidationReport] = None) -> TandemDerived:
    """Derive the chain parameterization of a tandem network.

    Args:
        spec: a network whose only routing entries are p_{i,i+1} > 0.
        report: a precomputed validation report, to avoid recomputing it.

    Returns:
        TandemDerived for spec.

    Raises:
        SpecError naming the offending routing entry if spec is not a tandem.
    """
    n = spec.n
    routing = spec.routing
    for i, j in np.argwhere(routing != 0):
        if j != i + 1:
            _fail(f"P[{i + 1}][{j + 1}] = {routing[i, j]} breaks the tandem "
                  "shape")
    chain = np.array([routing[i, i + 1] for i in range(n - 1)])
    if np.any(chain <= 0):
        idx = int(np.argmin(chain)) + 1
        _fail(f"P[{idx}][{idx + 1}] must be > 0 in a tandem")

    kpow = np.zeros((n, n))
    for j in range(n):
        kpow[j, j] = 1.0
        for ell in range(j + 1, n):
            kpow[j, ell] = kpow[j, ell - 1] * chain[ell - 1]
    for j in range(n):
        for ell in range(j, n):
            for m in range(ell, n):
                if abs(kpow[j, ell] * kpow[ell, m] - kpow[j, m]) > \
                        _KPOW_TOL * max(1.0, abs(kpow[j, m])):
                    _fail(f"K table is not multiplicative at ({j}, {ell}, "
                          f"{m})")

    rates = spec.drain_rates
    upsilon = np.zeros(n)
    upsilon[1:] = chain * rates[:-1] - rates[1:]

    report = report or validate_network(spec)
    drains = intensity = root_drift = None
    if report.conditions[Condition.T7] and report.conditions[Condition.T8]:
        root = spec.inputs[0]
        root_drift = root.drift
        drains = rates - root_drift
        intensity = root.intensity
        logger.debug(f"Single-input tandem: c = {drains}, "
                     f"lambda = {intensity}")

    for arr in (chain, kpow, upsilon):
        arr.setflags(write=False)
    return TandemDerived(chain, kpow, upsilon, drains, intensity, root_drift)


# ---------- Helpers ---------- #
def _fail(reason: str):
    logger.error(reason)
    raise SpecError(reason)


def _number(data: Any, key: str, where: str) -> float:
    try:
        return float(data[key])
    except (KeyError, TypeError, ValueError):
        _fail(f"{where}.{key} missing or not a number in {data}")

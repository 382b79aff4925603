"""Purifying noisy pair ancillas by pairwise parity checks.

A noisy preparation of the pair ancilla |00> + |01> + |10> stays inside the
two-dimensional span of the ideal state and |11>, so it is summarized by
three coefficients (a1, a2, a3) in the operator form

    rho  =  P + a1 |P><11| + a2 |11><P| + a3 |11><11|,      P = |pair><pair|

with the pair vector kept unnormalized (squared norm 3).  The purification
step takes two such states, checks both cross parities, and disentangles one
copy; on success the coefficients multiply componentwise, so the |11>
contamination squares each round while the ideal part is untouched.

Both faces are provided: the closed-form coefficient algebra (`combine`,
`MixedAncilla`) and the explicit four-qubit circuit (`combine_states`),
which must agree and are tested against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    QuantumState,
    apply_gate,
    drop_qubit,
    measure_operator,
    tensor,
    z_product,
)

PAIR_VECTOR = np.array([1.0, 1.0, 1.0, 0.0], dtype=np.complex128)
_ELEVEN = np.array([0.0, 0.0, 0.0, 1.0], dtype=np.complex128)
_BASIS = np.stack([PAIR_VECTOR, _ELEVEN], axis=1)          # 4 x 2
_BASIS_PINV = np.linalg.pinv(_BASIS)                       # 2 x 4


@dataclass(frozen=True)
class MixedAncilla:
    """Coefficients (a1, a2, a3) of a noisy pair ancilla in operator form."""

    a1: complex
    a2: complex
    a3: complex

    @classmethod
    def ideal(cls) -> "MixedAncilla":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_phase_angle(cls, sigma: float) -> "MixedAncilla":
        """Projector onto |pair> + i tan(sigma) |11> (coherent contamination)."""
        t = math.tan(sigma)
        return cls(-1j * t, 1j * t, t * t)

    @classmethod
    def from_excess_weight(cls, a3: float) -> "MixedAncilla":
        """Incoherent |11> contamination only (decoherent preparation noise)."""
        return cls(0.0, 0.0, a3)

    @property
    def weight(self) -> complex:
        """Trace of the operator form: 3 + a3."""
        return 3.0 + self.a3

    def fidelity_to_pair(self) -> float:
        """Overlap with the ideal pair state: 3 / (3 + a3)."""
        val = 3.0 / (3.0 + complex(self.a3))
        if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
            raise ValueError("fidelity undefined: a3 is not real")
        return float(val.real)

    def is_physical(self, tol: float = 1e-12) -> bool:
        """Positive-semidefinite and Hermitian as an actual density operator."""
        a1, a2, a3 = complex(self.a1), complex(self.a2), complex(self.a3)
        if abs(a2 - a1.conjugate()) > tol or abs(a3.imag) > tol:
            return False
        return a3.real >= abs(a1) ** 2 - tol

    def to_state(self, labels: Sequence[str] = ("a", "b")) -> QuantumState:
        coeff = np.array([[1.0, self.a1], [self.a2, self.a3]], dtype=np.complex128)
        rho = _BASIS @ coeff @ _BASIS.conj().T
        return QuantumState.from_density(labels, rho)

    @classmethod
    def from_state(cls, state: QuantumState, tol: float = 1e-9
                   ) -> Tuple["MixedAncilla", complex]:
        """Decompose a two-qubit state back into (coefficients, overall scale).

        The scale is the coefficient on the ideal-pair projector, so a noisy
        preparation with weight w on the ideal part returns scale w and
        coefficients normalized to it.  Raises if the state leaves the
        span of the pair vector and |11>.
        """
        if state.n_qubits != 2:
            raise ValueError("expected a two-qubit state")
        rho = state.data if state.is_density else np.outer(state.data, state.data.conj())
        coeff = _BASIS_PINV @ rho @ _BASIS_PINV.conj().T
        residual = np.max(np.abs(_BASIS @ coeff @ _BASIS.conj().T - rho))
        if residual > tol * max(1.0, float(np.max(np.abs(rho)))):
            raise ValueError("state has support outside the pair/|11> span")
        scale = coeff[0, 0]
        if abs(scale) < 1e-14:
            raise ValueError("state has no ideal-pair component; coefficients undefined")
        return cls(coeff[0, 1] / scale, coeff[1, 0] / scale, coeff[1, 1] / scale), scale


def success_probability(x: MixedAncilla, y: MixedAncilla) -> float:
    """Chance both parity checks pass: (3 + a3 a3') / ((3 + a3)(3 + a3'))."""
    val = (3.0 + complex(x.a3) * complex(y.a3)) / (complex(x.weight) * complex(y.weight))
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ValueError("success probability undefined for non-real a3")
    return float(val.real)


def combine(x: MixedAncilla, y: MixedAncilla) -> Tuple[MixedAncilla, float]:
    """One purification step in coefficient form.

    Returns the post-success coefficients (componentwise products) and the
    success probability of the two parity checks.
    """
    out = MixedAncilla(x.a1 * y.a1, x.a2 * y.a2, x.a3 * y.a3)
    return out, success_probability(x, y)


def combine_states(x: QuantumState, y: QuantumState) -> Tuple[QuantumState, float]:
    """One purification step as an explicit circuit on two two-qubit states.

    Postselects both cross parities at +1, copies the survivor's bits out of
    the second pair with two CNOTs, and removes the second pair, which is
    left exactly in |00>.  Returns the surviving state (on `x`'s labels,
    norm convention unrenormalized) and the success probability.
    """
    if x.n_qubits != 2 or y.n_qubits != 2:
        raise ValueError("combine_states expects two-qubit states")
    a, b = x.labels
    c, d = y.labels
    joint = tensor(x, y)
    joint, rec1 = measure_operator(joint, z_product(a, c), postselect=+1)
    joint, rec2 = measure_operator(joint, z_product(b, d), postselect=+1)
    joint = apply_gate(joint, "CNOT", a, c)
    joint = apply_gate(joint, "CNOT", b, d)
    out = drop_qubit(joint, c, expected_bit=0)
    out = drop_qubit(out, d, expected_bit=0)
    return out, rec1.probability * rec2.probability


def combined_after_rounds(x: MixedAncilla, rounds: int) -> MixedAncilla:
    """Coefficients after `rounds` balanced purification rounds from copies of x."""
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    power = 2**rounds
    return MixedAncilla(complex(x.a1) ** power, complex(x.a2) ** power,
                        complex(x.a3) ** power)


def fidelity_after_rounds(a3: complex, rounds: int) -> float:
    """Fidelity to the ideal pair after balanced rounds: 3 / (3 + a3^(2^rounds))."""
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    val = 3.0 / (3.0 + complex(a3) ** (2**rounds))
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ValueError("fidelity undefined: contamination power is not real")
    return float(val.real)


# -- running a purification tree by sampling -----------------------------------

Supply = Union[Iterable[MixedAncilla], Callable[[], MixedAncilla]]


@dataclass(frozen=True)
class DistillOutcome:
    ancilla: MixedAncilla
    level: int
    combine_attempts: int
    combine_successes: int
    leaves_used: int


def distill_tree(supply: Supply, level: int, *,
                 rng: Optional[np.random.Generator] = None,
                 max_attempts: int = 100_000) -> DistillOutcome:
    """Produce one level-`level` ancilla, retrying failed parity checks.

    `supply` provides raw (level-0) ancillas: either a finite iterable,
    which raises RuntimeError when exhausted, or a callable invoked per
    leaf.  Each combine succeeds with its coefficient-form probability,
    decided against `rng`; on failure both inputs are discarded and rebuilt.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if level > 0 and rng is None:
        raise ValueError("rng is required to sample parity-check outcomes")
    if callable(supply):
        draw = supply
    else:
        iterator = iter(supply)

        def draw() -> MixedAncilla:
            try:
                return next(iterator)
            except StopIteration:
                raise RuntimeError("ancilla supply exhausted mid-tree") from None

    counters = {"attempts": 0, "successes": 0, "leaves": 0}

    def build(lvl: int) -> MixedAncilla:
        if lvl == 0:
            counters["leaves"] += 1
            return draw()
        while True:
            left = build(lvl - 1)
            right = build(lvl - 1)
            out, prob = combine(left, right)
            counters["attempts"] += 1
            if counters["attempts"] > max_attempts:
                raise RuntimeError(f"purification exceeded {max_attempts} combine attempts")
            if rng.random() < prob:
                # counts every passed parity check, including ones whose
                # output a later parent failure throws away
                counters["successes"] += 1
                return out

    ancilla = build(level)
    return DistillOutcome(ancilla, level, counters["attempts"],
                          counters["successes"], counters["leaves"])


# -- operation-count calculus ---------------------------------------------------

@dataclass(frozen=True)
class CostParams:
    """Knobs of the expected-operations recurrence.

    success_probability: chance one combine's parity checks both pass.
    measurement_ratio:  extra operations charged per produced ancilla for
        repeating measurements until their error is negligible at the
        working accuracy (log target error / log per-measurement error).
    """

    success_probability: float = 1.0 / 3.0
    measurement_ratio: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.success_probability <= 1.0:
            raise ValueError("success probability must be in (0, 1]")
        if self.measurement_ratio < 0.0:
            raise ValueError("measurement ratio must be >= 0")


def expected_ops(rounds: int, params: CostParams = CostParams()) -> float:
    """Expected operations to produce one ancilla purified through `rounds`.

    Solves G(0) = 1, G(k) = (2/P) G(k-1) + ratio in closed form:
    G(N) = (2/P)^N + ((2/P)^N - 1) / ((2/P) - 1) * ratio.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    r = 2.0 / params.success_probability
    growth = r**rounds
    return growth + (growth - 1.0) / (r - 1.0) * params.measurement_ratio


def expected_ops_recurrence(rounds: int, params: CostParams = CostParams()) -> float:
    """Same as `expected_ops`, by direct iteration (cross-check)."""
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    g = 1.0
    for _ in range(rounds):
        g = (2.0 / params.success_probability) * g + params.measurement_ratio
    return g


def measurement_majority_repeats(eps: float, eps_m: float) -> int:
    """Odd repetition count making measurement error negligible at accuracy eps.

    A single measurement errs with probability ~eps_m; majority voting over
    r repeats suppresses that to ~eps_m^r, so r = ceil(log eps / log eps_m),
    bumped to the next odd integer so the vote cannot tie.
    """
    if not 0.0 < eps < 1.0 or not 0.0 < eps_m < 1.0:
        raise ValueError("error rates must be in (0, 1)")
    ratio = math.log(eps) / math.log(eps_m)
    r = max(1, math.ceil(ratio - 1e-9))
    if r % 2 == 0:
        r += 1
    return r


def pair_supply(noise: MixedAncilla = MixedAncilla.ideal()) -> Callable[[], MixedAncilla]:
    """Endless supply of identically prepared raw ancillas."""
    return lambda: noise


__all__ = [
    "MixedAncilla",
    "CostParams",
    "DistillOutcome",
    "PAIR_VECTOR",
    "combine",
    "combine_states",
    "combined_after_rounds",
    "distill_tree",
    "expected_ops",
    "expected_ops_recurrence",
    "fidelity_after_rounds",
    "measurement_majority_repeats",
    "pair_supply",
    "success_probability",
]

"""Pauli-string observables, exact expectation values and shot sampling.

A readout observable is a real-weighted sum of Pauli strings
``O = sum_i gamma_i P_i``.  Real weights on Hermitian terms make ``O``
Hermitian, so every expectation value is real and the readout has valid
measurement semantics.  Expectations are evaluated term by term without
building the ``2**n x 2**n`` matrix: each ``P_i`` is applied to a copy of
the state and contracted with the original.

Shot sampling uses one counter-based Philox stream per
``(seed, sample, timestep, term)`` coordinate, so parallel evaluation of
different samples or timesteps can never perturb each other's draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .statevector import StateVector, apply_pauli_kernel

_PAULI_CHARS = frozenset("IXYZ")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis; ``labels[j]`` acts on qubit j."""

    labels: str

    def __post_init__(self):
        if not self.labels or not set(self.labels) <= _PAULI_CHARS:
            raise ConfigError(f"Pauli labels must be over I/X/Y/Z, got {self.labels!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    @property
    def is_identity(self) -> bool:
        return set(self.labels) == {"I"}

    def __str__(self) -> str:
        return self.labels


def apply_pauli_string(amps: np.ndarray, n_qubits: int, pauli: PauliString) -> np.ndarray:
    """Return ``P @ amps`` as a new array (last axis = basis index)."""
    out = amps.copy()
    for qubit, label in enumerate(pauli.labels):
        if label != "I":
            apply_pauli_kernel(out, n_qubits, label, qubit)
    return out


def pauli_expectation(state: StateVector, pauli: PauliString) -> float:
    """<psi|P|psi>, a real number in [-1, +1]."""
    if pauli.n_qubits != state.n_qubits:
        raise ShapeError(
            f"Pauli string has {pauli.n_qubits} qubits, state has {state.n_qubits}"
        )
    transformed = apply_pauli_string(state.amplitudes, state.n_qubits, pauli)
    return float(np.vdot(state.amplitudes, transformed).real)


@dataclass(frozen=True)
class Observable:
    """Hermitian observable ``sum_i gammas[i] * paulis[i]``."""

    gammas: np.ndarray
    paulis: tuple[PauliString, ...]
    n_qubits: int

    @property
    def terms(self) -> list[tuple[float, PauliString]]:
        return [(float(g), p) for g, p in zip(self.gammas, self.paulis)]


def build_observable(gammas, pauli_set: list[PauliString]) -> Observable:
    """Combine real weights and Pauli strings into a Hermitian observable."""
    g = np.asarray(gammas, dtype=np.float64)
    if g.ndim != 1 or len(g) != len(pauli_set):
        raise ShapeError(
            f"got {g.shape[0] if g.ndim == 1 else g.shape} weights for {len(pauli_set)} Pauli strings"
        )
    if not np.all(np.isfinite(g)):
        raise NumericError("observable weights must be finite")
    if not pauli_set:
        raise ShapeError("observable needs at least one term")
    n = pauli_set[0].n_qubits
    for p in pauli_set:
        if p.n_qubits != n:
            raise ShapeError("all Pauli strings in an observable must share n_qubits")
    return Observable(g, tuple(pauli_set), n)


def expectation_exact(state: StateVector, obs: Observable) -> float:
    """<psi|O|psi> = sum_i gamma_i <psi|P_i|psi>."""
    if obs.n_qubits != state.n_qubits:
        raise ShapeError(
            f"observable has {obs.n_qubits} qubits, state has {state.n_qubits}"
        )
    total = 0.0
    for g, p in zip(obs.gammas, obs.paulis):
        total += g * pauli_expectation(state, p)
    return total


def pool_expectations(state: StateVector, pool: list[PauliString]) -> np.ndarray:
    """Vector of <psi|P_i|psi> over a shared Pauli pool.

    The recurrence readout evaluates many observables built over one pool
    against the same state; computing the per-term expectations once and
    weighting them classically is algebraically identical to evaluating
    each observable separately.
    """
    return np.array([pauli_expectation(state, p) for p in pool])


# ---------------------------------------------------------------------------
# Shot sampling.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShotConfig:
    """Measurement settings: exact expectations or an m-shot estimator."""

    mode: Literal["exact", "sampled"] = "exact"
    shots_per_term: int = 1024
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ConfigError(f"shot mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.mode == "sampled" and self.shots_per_term < 1:
            raise ConfigError(
                f"shots_per_term must be >= 1 in sampled mode, got {self.shots_per_term}"
            )


_U64 = 0xFFFFFFFFFFFFFFFF


def shot_stream(seed: int, sample_index: int, timestep: int, term_index: int) -> np.random.Generator:
    """Philox stream for one (seed, sample, timestep, term) coordinate.

    Stream derivation: key = (seed, sample_index); the 256-bit counter
    starts at ``timestep * 2**192 + term_index * 2**128``.  Draws advance
    the low counter words, so distinct coordinates can never overlap.
    """
    key = np.array([seed & _U64, sample_index & _U64], dtype=np.uint64)
    counter = np.array([0, 0, term_index & _U64, timestep & _U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def sample_term_mean(
    expectation: float, m: int, rng: np.random.Generator
) -> float:
    """Average of m simulated +-1 measurement outcomes with mean ``expectation``."""
    p_plus = min(max(0.5 * (1.0 + expectation), 0.0), 1.0)
    n_plus = int(np.count_nonzero(rng.random(m) < p_plus))
    return (2 * n_plus - m) / m


def expectation_sampled(
    state: StateVector,
    obs: Observable,
    cfg: ShotConfig,
    *,
    sample_index: int = 0,
    timestep: int = 0,
) -> float:
    """m-shot estimate of <psi|O|psi>; unbiased, deterministic given the seed.

    Each term is measured in its own eigenbasis: m independent +-1
    outcomes with ``P(+1) = (1 + <P_i>)/2``, averaged, then weighted by
    gamma_i.  The estimator variance is ``sum_i gamma_i^2 (1 - <P_i>^2) / m``.
    """
    if cfg.mode != "sampled":
        raise ConfigError("expectation_sampled requires ShotConfig(mode='sampled')")
    if obs.n_qubits != state.n_qubits:
        raise ShapeError(
            f"observable has {obs.n_qubits} qubits, state has {state.n_qubits}"
        )
    total = 0.0
    for i, (g, p) in enumerate(zip(obs.gammas, obs.paulis)):
        exact = pauli_expectation(state, p)
        rng = shot_stream(cfg.rng_seed, sample_index, timestep, i)
        total += g * sample_term_mean(exact, cfg.shots_per_term, rng)
    return total


def sampling_std(state: StateVector, obs: Observable, m: int) -> float:
    """Predicted standard deviation of the m-shot estimator."""
    var = 0.0
    for g, p in zip(obs.gammas, obs.paulis):
        e = pauli_expectation(state, p)
        var += g * g * (1.0 - e * e) / m
    return float(np.sqrt(max(var, 0.0)))


# ---------------------------------------------------------------------------
# Default measurement pool.
# ---------------------------------------------------------------------------

def default_pauli_pool(n_qubits: int) -> list[PauliString]:
    """Z and X on every qubit plus nearest-neighbour ZZ ring pairs.

    Ordering: Z_0..Z_{n-1}, X_0..X_{n-1}, then Z_j Z_{j+1} around the
    ring.  On two qubits the ring closes on itself, so the single pair
    appears once; one qubit has no pairs.  Pool size is 2n plus the
    number of distinct adjacent pairs.
    """
    if n_qubits < 1:
        raise ConfigError(f"n_qubits must be positive, got {n_qubits}")

    def single(label: str, j: int) -> PauliString:
        chars = ["I"] * n_qubits
        chars[j] = label
        return PauliString("".join(chars))

    pool = [single("Z", j) for j in range(n_qubits)]
    pool += [single("X", j) for j in range(n_qubits)]
    if n_qubits >= 2:
        seen = set()
        for j in range(n_qubits):
            pair = frozenset((j, (j + 1) % n_qubits))
            if len(pair) == 2 and pair not in seen:
                seen.add(pair)
                chars = ["I"] * n_qubits
                chars[j] = "Z"
                chars[(j + 1) % n_qubits] = "Z"
                pool.append(PauliString("".join(chars)))
    return pool

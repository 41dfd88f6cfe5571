"""The full recurrence: embed tokens, evolve quantum memory, read it out
through query-conditioned observables, classify from the final readouts.

Per timestep t (causal, left to right):

    e_t   = embed_w * x_t + embed_b          classical token embedding
    psi   <- U_var(theta) U_enc(e_t) psi     quantum memory update
    q_t   = W_Q e_t                          query (no bias)
    gamma = MLP_head(q_t)                    observable weights, one per head
    r_t[h] = sum_i gamma_i <psi| P_i |psi>   readout over the shared Pauli pool

The classifier consumes the last `t_keep` readout vectors (default 1,
"the final readout"), concatenated oldest first.  The quantum memory is
a single 2**n amplitude vector regardless of sequence length; the trace
never stores per-token states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import AnsatzConfig, CircuitParams, step
from .errors import ConfigError, NumericError, ShapeError, ValidationError
from .observables import (
    Observable,
    PauliString,
    ShotConfig,
    build_observable,
    default_pauli_pool,
    pool_expectations,
    sample_term_mean,
    shot_stream,
)
from .statevector import StateVector, new_zero_state


@dataclass(frozen=True)
class CellConfig:
    """Structural hyperparameters of one recurrence cell."""

    n_qubits: int = 4
    n_layers: int = 2
    entangler: str = "ring"
    d_query: int = 8
    n_heads: int = 8
    decoder_hidden: int = 16
    t_keep: int = 1
    n_classes: int = 10
    clamp_tokens: bool = False

    def __post_init__(self):
        for name in ("d_query", "n_heads", "decoder_hidden", "t_keep", "n_classes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        self.ansatz  # circuit-shape checks live in AnsatzConfig

    @property
    def ansatz(self) -> AnsatzConfig:
        return AnsatzConfig(self.n_qubits, self.n_layers, self.entangler)

    @property
    def pool(self) -> list[PauliString]:
        return default_pauli_pool(self.n_qubits)

    @property
    def pool_size(self) -> int:
        return len(self.pool)

    @property
    def feature_dim(self) -> int:
        return self.n_heads * self.t_keep


@dataclass
class QlamParams:
    """Every trainable array of the hybrid model."""

    embed_w: np.ndarray  # (n_qubits,)
    embed_b: np.ndarray  # (n_qubits,)
    theta: np.ndarray    # (n_layers * 2 * n_qubits,)
    w_q: np.ndarray      # (d_query, n_qubits)
    dec_w1: np.ndarray   # (n_heads, decoder_hidden, d_query)
    dec_b1: np.ndarray   # (n_heads, decoder_hidden)
    dec_w2: np.ndarray   # (n_heads, pool_size, decoder_hidden)
    dec_b2: np.ndarray   # (n_heads, pool_size)
    cls_w: np.ndarray    # (n_classes, n_heads * t_keep)
    cls_b: np.ndarray    # (n_classes,)

    _KEYS = (
        "embed_w", "embed_b", "theta", "w_q",
        "dec_w1", "dec_b1", "dec_w2", "dec_b2", "cls_w", "cls_b",
    )

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in self._KEYS}

    @classmethod
    def from_dict(cls, arrays: dict[str, np.ndarray]) -> "QlamParams":
        missing = set(cls._KEYS) - set(arrays)
        if missing:
            raise ShapeError(f"parameter dict is missing {sorted(missing)}")
        return cls(**{k: np.asarray(arrays[k], dtype=np.float64) for k in cls._KEYS})

    @property
    def circuit(self) -> CircuitParams:
        return CircuitParams(self.theta)

    def copy(self) -> "QlamParams":
        return QlamParams(**{k: getattr(self, k).copy() for k in self._KEYS})

    def validate(self, cfg: CellConfig) -> None:
        n, p = cfg.n_qubits, cfg.pool_size
        expected = {
            "embed_w": (n,),
            "embed_b": (n,),
            "theta": (cfg.n_layers * 2 * n,),
            "w_q": (cfg.d_query, n),
            "dec_w1": (cfg.n_heads, cfg.decoder_hidden, cfg.d_query),
            "dec_b1": (cfg.n_heads, cfg.decoder_hidden),
            "dec_w2": (cfg.n_heads, p, cfg.decoder_hidden),
            "dec_b2": (cfg.n_heads, p),
            "cls_w": (cfg.n_classes, cfg.feature_dim),
            "cls_b": (cfg.n_classes,),
        }
        for key, shape in expected.items():
            arr = getattr(self, key)
            if arr.shape != shape:
                raise ShapeError(f"{key} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"{key} contains non-finite values")


def init_qlam_params(rng: np.random.Generator, cfg: CellConfig) -> QlamParams:
    """Fan-in uniform init for affine maps; small uniform circuit angles.

    Angles start in (-0.1, 0.1) so the initial memory stays near the
    all-zeros state instead of a flat-expectation plateau.
    """
    from .nn import init_affine

    n, p, h = cfg.n_qubits, cfg.pool_size, cfg.n_heads
    ew, eb = init_affine(rng, n, 1)
    wq, _ = init_affine(rng, cfg.d_query, n)
    w1 = np.empty((h, cfg.decoder_hidden, cfg.d_query))
    b1 = np.empty((h, cfg.decoder_hidden))
    w2 = np.empty((h, p, cfg.decoder_hidden))
    b2 = np.empty((h, p))
    for i in range(h):
        w1[i], b1[i] = init_affine(rng, cfg.decoder_hidden, cfg.d_query)
        w2[i], b2[i] = init_affine(rng, p, cfg.decoder_hidden)
    cw, cb = init_affine(rng, cfg.n_classes, cfg.feature_dim)
    theta = rng.uniform(-0.1, 0.1, size=cfg.ansatz.n_params)
    return QlamParams(
        embed_w=ew[:, 0], embed_b=eb, theta=theta, w_q=wq,
        dec_w1=w1, dec_b1=b1, dec_w2=w2, dec_b2=b2, cls_w=cw, cls_b=cb,
    )


def embed_token(token: float, params: QlamParams) -> np.ndarray:
    return params.embed_w * token + params.embed_b


def query(token_embedding: np.ndarray, params: QlamParams) -> np.ndarray:
    """q_t = W_Q e_t, a pure linear map with no bias."""
    e = np.asarray(token_embedding, dtype=np.float64)
    if e.shape != (params.w_q.shape[1],):
        raise ShapeError(
            f"embedding has shape {e.shape}, query map expects ({params.w_q.shape[1]},)"
        )
    return params.w_q @ e


def decoder_gammas(q: np.ndarray, head: int, params: QlamParams) -> np.ndarray:
    """Observable weights for one head: two-layer tanh perceptron of the query."""
    hidden = np.tanh(params.dec_w1[head] @ q + params.dec_b1[head])
    return params.dec_w2[head] @ hidden + params.dec_b2[head]


def all_head_gammas(q: np.ndarray, params: QlamParams) -> np.ndarray:
    """(n_heads, pool_size) weight matrix; heads share the query."""
    hidden = np.tanh(params.dec_w1 @ q + params.dec_b1)
    return np.einsum("hps,hs->hp", params.dec_w2, hidden) + params.dec_b2


def decode_observable(
    q: np.ndarray, head: int, params: QlamParams, pool: list[PauliString]
) -> Observable:
    """Hermitian observable conditioned on the query: sum_i gamma_i(q) P_i."""
    gammas = decoder_gammas(q, head, params)
    if len(gammas) != len(pool):
        raise ShapeError(
            f"decoder emits {len(gammas)} weights but the pool has {len(pool)} strings"
        )
    return build_observable(gammas, pool)


def validate_tokens(tokens, clamp: bool) -> np.ndarray:
    x = np.asarray(tokens, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 1:
        raise ShapeError(f"tokens must be a non-empty vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError("tokens must be finite")
    if clamp:
        return np.clip(x, 0.0, 1.0)
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValidationError(
            f"tokens must lie in [0, 1], got range [{x.min():.6g}, {x.max():.6g}]"
        )
    return x


@dataclass
class ReadoutTrace:
    """Forward-pass outputs.  Holds one readout vector per step and the
    final 2**n-amplitude memory; deliberately no per-token state cache."""

    readouts: np.ndarray  # (T, n_heads)
    features: np.ndarray  # (t_keep * n_heads,)
    logits: np.ndarray    # (n_classes,)
    final_state: StateVector


def readout_features(readouts: np.ndarray, t_keep: int) -> np.ndarray:
    """Concatenate the last t_keep readout vectors, oldest first."""
    if readouts.shape[0] < t_keep:
        raise ShapeError(
            f"sequence of length {readouts.shape[0]} is shorter than t_keep={t_keep}"
        )
    return readouts[readouts.shape[0] - t_keep:].reshape(-1)


def forward(
    tokens,
    params: QlamParams,
    cfg: CellConfig,
    shot: ShotConfig = ShotConfig(),
    *,
    sample_index: int = 0,
) -> ReadoutTrace:
    """Run the full causal recurrence and classify.

    In sampled mode every pool term is measured once per step with
    shots_per_term simulated shots; heads reuse the same outcomes, as
    they would on hardware reading one measurement register.
    """
    x = validate_tokens(tokens, cfg.clamp_tokens)
    params.validate(cfg)
    pool = cfg.pool
    ansatz = cfg.ansatz
    circuit = params.circuit
    psi = new_zero_state(cfg.n_qubits)
    readouts = np.empty((x.shape[0], cfg.n_heads))
    for t, x_t in enumerate(x):
        e_t = embed_token(float(x_t), params)
        step(psi, e_t, ansatz, circuit)
        q_t = query(e_t, params)
        gammas = all_head_gammas(q_t, params)
        exps = pool_expectations(psi, pool)
        if shot.mode == "sampled":
            exps = np.array([
                sample_term_mean(
                    e, shot.shots_per_term,
                    shot_stream(shot.rng_seed, sample_index, t, i),
                )
                for i, e in enumerate(exps)
            ])
        readouts[t] = gammas @ exps
    features = readout_features(readouts, cfg.t_keep)
    logits = params.cls_w @ features + params.cls_b
    return ReadoutTrace(readouts, features, logits, psi)


def final_logits(
    tokens,
    params: QlamParams,
    cfg: CellConfig,
    shot: ShotConfig = ShotConfig(),
    *,
    sample_index: int = 0,
) -> np.ndarray:
    """Logits only, skipping readouts at steps the classifier never sees.

    Identical result to `forward(...).logits`; the evaluation loop uses
    this path because measuring the pool at every step roughly doubles
    the cost of a forward pass.
    """
    x = validate_tokens(tokens, cfg.clamp_tokens)
    params.validate(cfg)
    pool = cfg.pool
    ansatz = cfg.ansatz
    circuit = params.circuit
    psi = new_zero_state(cfg.n_qubits)
    first_kept = x.shape[0] - cfg.t_keep
    if first_kept < 0:
        raise ShapeError(
            f"sequence of length {x.shape[0]} is shorter than t_keep={cfg.t_keep}"
        )
    readouts = np.empty((cfg.t_keep, cfg.n_heads))
    for t, x_t in enumerate(x):
        e_t = embed_token(float(x_t), params)
        step(psi, e_t, ansatz, circuit)
        if t < first_kept:
            continue
        q_t = query(e_t, params)
        gammas = all_head_gammas(q_t, params)
        exps = pool_expectations(psi, pool)
        if shot.mode == "sampled":
            exps = np.array([
                sample_term_mean(
                    e, shot.shots_per_term,
                    shot_stream(shot.rng_seed, sample_index, t, i),
                )
                for i, e in enumerate(exps)
            ])
        readouts[t - first_kept] = gammas @ exps
    features = readouts.reshape(-1)
    return params.cls_w @ features + params.cls_b


def predict(tokens, params: QlamParams, cfg: CellConfig) -> int:
    """Class index with the largest logit; ties go to the lowest index."""
    return int(np.argmax(final_logits(tokens, params, cfg)))

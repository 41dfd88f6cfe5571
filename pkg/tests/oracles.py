"""Independent oracles for the test suite.

Everything here is deliberately brute force: dense Kronecker matrices,
explicit matrix products, and straight-line re-implementations.  None of
it shares code with the package's stride-kernel fast paths, so agreement
is evidence, not tautology.  Qubit 0 is the least-significant bit of the
basis index, matching the package convention: the dense operator for a
per-qubit list [op_0 ... op_{n-1}] is kron(op_{n-1}, ..., op_0).
"""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=np.complex128)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def dense_ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def dense_rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(+0.5j * angle)])


def dense_1q(matrix: np.ndarray, target: int, n_qubits: int) -> np.ndarray:
    ops = [I2] * n_qubits
    ops[target] = matrix
    out = ops[n_qubits - 1]
    for j in range(n_qubits - 2, -1, -1):
        out = np.kron(out, ops[j])
    return out


def dense_cnot(control: int, target: int, n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(dim):
        j = i ^ (1 << target) if (i >> control) & 1 else i
        out[j, i] = 1.0
    return out


def dense_pauli_string(labels: str) -> np.ndarray:
    out = PAULI[labels[-1]]
    for ch in labels[-2::-1]:
        out = np.kron(out, PAULI[ch])
    return out


def dense_step_matrix(cfg, theta: np.ndarray, embedding: np.ndarray) -> np.ndarray:
    """Full 2**n x 2**n matrix of one recurrence step: encoding RY on each
    qubit, then per layer RY/RZ per qubit and the CNOT entangler."""
    n = cfg.n_qubits
    u = np.eye(1 << n, dtype=np.complex128)
    for j in range(n):
        u = dense_1q(dense_ry(embedding[j]), j, n) @ u
    layered = np.asarray(theta, dtype=np.float64).reshape(cfg.n_layers, n, 2)
    for layer in range(cfg.n_layers):
        for j in range(n):
            u = dense_1q(dense_ry(layered[layer, j, 0]), j, n) @ u
            u = dense_1q(dense_rz(layered[layer, j, 1]), j, n) @ u
        if n > 1:
            if cfg.entangler == "ring":
                pairs = [(j, (j + 1) % n) for j in range(n)]
            else:
                pairs = [(j, j + 1) for j in range(n - 1)]
            for control, target in pairs:
                u = dense_cnot(control, target, n) @ u
    return u


def dense_observable_matrix(gammas, labels_list) -> np.ndarray:
    terms = [g * dense_pauli_string(labels) for g, labels in zip(gammas, labels_list)]
    return np.sum(terms, axis=0)


def dense_expectation(amps: np.ndarray, matrix: np.ndarray) -> float:
    return float(np.real(np.conj(amps) @ matrix @ amps))


def dense_recurrence_readouts(tokens, params, cfg) -> np.ndarray:
    """(T, n_heads) readouts computed entirely with dense matrices and a
    straight-line decoder re-evaluation; the independent model oracle."""
    from qlam.observables import default_pauli_pool

    pool = [p.labels for p in default_pauli_pool(cfg.n_qubits)]
    dim = 1 << cfg.n_qubits
    psi = np.zeros(dim, dtype=np.complex128)
    psi[0] = 1.0
    x = np.asarray(tokens, dtype=np.float64)
    readouts = np.empty((x.shape[0], cfg.n_heads))
    for t, x_t in enumerate(x):
        e_t = params.embed_w * x_t + params.embed_b
        psi = dense_step_matrix(cfg.ansatz, params.theta, e_t) @ psi
        q_t = params.w_q @ e_t
        for h in range(cfg.n_heads):
            hidden = np.tanh(params.dec_w1[h] @ q_t + params.dec_b1[h])
            gam = params.dec_w2[h] @ hidden + params.dec_b2[h]
            obs = dense_observable_matrix(gam, pool)
            readouts[t, h] = dense_expectation(psi, obs)
    return readouts


# ---------------------------------------------------------------------------
# Numerical differentiation.
# ---------------------------------------------------------------------------

def central_diff(f, x: float, h: float = 1e-5) -> float:
    return (f(x + h) - f(x - h)) / (2 * h)


def rel_err(a: float, b: float, floor: float = 1e-4) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def fd_grad_dict(loss_fn, params, h: float = 1e-5) -> dict[str, np.ndarray]:
    """Central-difference gradient for every entry of a QlamParams-like
    object with ndarray attributes, mutating in place and restoring."""
    out = {}
    for key, arr in params.as_dict().items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_fn()
            flat[i] = orig - h
            lm = loss_fn()
            flat[i] = orig
            gflat[i] = (lp - lm) / (2 * h)
        out[key] = g
    return out

"""Query-conditioned observable readout.

The readout side of the model: a classical decoder turns a query vector
into real coefficients over a fixed Pauli pool, and the head's value is
the expectation of that Hermitian combination. This script prints the
pool, decodes observables for a few random queries, and checks
Hermiticity and the mixing bound |<O>| <= sum |gamma_i|.
"""

import numpy as np

from qlam.cell import CellConfig, all_head_gammas, init_qlam_params
from qlam.observables import build_observable, expectation_exact
from qlam.statevector import new_zero_state, apply_ry_kernel


def dense(labels, n):
    mats = {
        "I": np.eye(2), "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Z": np.diag([1.0, -1.0]).astype(complex),
    }
    out = np.array([[1.0 + 0j]])
    # Kronecker order: the last factor acts on qubit 0 (the low bit).
    for q in reversed(range(n)):
        out = np.kron(out, mats[labels[q]])
    return out


def main():
    cfg = CellConfig(n_qubits=3, n_heads=2, d_query=4, decoder_hidden=8,
                     n_classes=4)
    print(f"Pauli pool for {cfg.n_qubits} qubits "
          f"({len(cfg.pool)} terms):")
    for term in cfg.pool:
        print("  ", term.labels)

    rng = np.random.default_rng(11)
    params = init_qlam_params(rng, cfg)

    state = new_zero_state(cfg.n_qubits)
    for q in range(cfg.n_qubits):
        apply_ry_kernel(state.amplitudes, cfg.n_qubits, q,
                        float(rng.uniform(0, np.pi)))

    for trial in range(3):
        q_vec = rng.normal(size=cfg.d_query)
        gammas = all_head_gammas(q_vec, params)
        for head in range(cfg.n_heads):
            matrix = sum(g * dense(t.labels, cfg.n_qubits)
                         for g, t in zip(gammas[head], cfg.pool))
            defect = np.abs(matrix - matrix.conj().T).max()
            obs = build_observable(gammas[head], cfg.pool)
            value = expectation_exact(state, obs)
            bound = np.abs(gammas[head]).sum()
            print(f"query {trial} head {head}: readout {value:+.4f}, "
                  f"|gamma|_1 bound {bound:.4f}, "
                  f"Hermiticity defect {defect:.1e}")
            assert defect < 1e-14 and abs(value) <= bound + 1e-12


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Generate 2-qubit H2 Hamiltonians (STO-3G, parity mapping, two-qubit reduction).

Writes one `<bond_length>.ham` file per grid point into the output directory.
Each file lists `<coefficient> <pauli_string>` lines in Hartree, leftmost
character acting on qubit 0. The identity term includes the nuclear repulsion.

Usage: gen_h2_hamiltonians.py OUT_DIR [R_MIN R_MAX STEP]   (Bohr)
"""
import itertools
import math
import os
import sys

import numpy as np
from scipy.special import erf

# STO-3G hydrogen 1s, zeta = 1.24
ALPHA = np.array([3.42525091, 0.62391373, 0.16885540])
COEF = np.array([0.15432897, 0.53532814, 0.44463454])
NORM = COEF * (2.0 * ALPHA / math.pi) ** 0.75


def boys0(t):
    if t < 1e-12:
        return 1.0 - t / 3.0
    return 0.5 * math.sqrt(math.pi / t) * erf(math.sqrt(t))


def prim_s(a, b, rab2):
    return (math.pi / (a + b)) ** 1.5 * math.exp(-a * b / (a + b) * rab2)


def prim_t(a, b, rab2):
    p = a + b
    return a * b / p * (3.0 - 2.0 * a * b / p * rab2) * (math.pi / p) ** 1.5 * math.exp(-a * b / p * rab2)


def prim_v(a, b, ra, rb, rc, zc):
    p = a + b
    rp = (a * ra + b * rb) / p
    rab2 = float(np.sum((ra - rb) ** 2))
    rpc2 = float(np.sum((rp - rc) ** 2))
    return -2.0 * math.pi / p * zc * math.exp(-a * b / p * rab2) * boys0(p * rpc2)


def prim_eri(a, b, c, d, ra, rb, rc, rd):
    p, q = a + b, c + d
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    rab2 = float(np.sum((ra - rb) ** 2))
    rcd2 = float(np.sum((rc - rd) ** 2))
    rpq2 = float(np.sum((rp - rq) ** 2))
    pref = 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))
    return pref * math.exp(-a * b / p * rab2 - c * d / q * rcd2) * boys0(p * q / (p + q) * rpq2)


def ao_integrals(r):
    centers = [np.zeros(3), np.array([0.0, 0.0, r])]
    s = np.zeros((2, 2))
    h = np.zeros((2, 2))
    eri = np.zeros((2, 2, 2, 2))
    for i, j in itertools.product(range(2), repeat=2):
        ri, rj = centers[i], centers[j]
        rij2 = float(np.sum((ri - rj) ** 2))
        for pa in range(3):
            for pb in range(3):
                a, b = ALPHA[pa], ALPHA[pb]
                nn = NORM[pa] * NORM[pb]
                s[i, j] += nn * prim_s(a, b, rij2)
                h[i, j] += nn * prim_t(a, b, rij2)
                for c in centers:
                    h[i, j] += nn * prim_v(a, b, ri, rj, c, 1.0)
    for i, j, k, l in itertools.product(range(2), repeat=4):
        ri, rj, rk, rl = (centers[x] for x in (i, j, k, l))
        total = 0.0
        for pa, pb, pc, pd in itertools.product(range(3), repeat=4):
            total += (NORM[pa] * NORM[pb] * NORM[pc] * NORM[pd]
                      * prim_eri(ALPHA[pa], ALPHA[pb], ALPHA[pc], ALPHA[pd], ri, rj, rk, rl))
        eri[i, j, k, l] = total
    return s, h, eri


def qubit_hamiltonian(r):
    s, h_ao, eri_ao = ao_integrals(r)
    # symmetry-adapted MOs: sigma_g, sigma_u
    c = np.array([[1.0, 1.0], [1.0, -1.0]])
    c[:, 0] /= math.sqrt(2.0 * (1.0 + s[0, 1]))
    c[:, 1] /= math.sqrt(2.0 * (1.0 - s[0, 1]))
    h = c.T @ h_ao @ c
    eri = np.einsum("pi,qj,rk,sl,pqrs->ijkl", c, c, c, c, eri_ao)
    e_nuc = 1.0 / r
    g, u = 0, 1
    j_gg, j_uu, j_gu, k_gu = eri[g, g, g, g], eri[u, u, u, u], eri[g, g, u, u], eri[g, u, g, u]
    # determinant basis indexed by qubit bits (q0 = n_g_alpha, q1 = 1 - n_g_beta)
    m = np.zeros((4, 4))
    idx = lambda q0, q1: q0 + 2 * q1
    closed_g, closed_u = idx(1, 0), idx(0, 1)
    open_a, open_b = idx(1, 1), idx(0, 0)
    m[closed_g, closed_g] = 2 * h[g, g] + j_gg
    m[closed_u, closed_u] = 2 * h[u, u] + j_uu
    m[closed_g, closed_u] = m[closed_u, closed_g] = k_gu
    m[open_a, open_a] = m[open_b, open_b] = h[g, g] + h[u, u] + j_gu
    m[open_a, open_b] = m[open_b, open_a] = k_gu
    m += e_nuc * np.eye(4)
    paulis = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.array([[1, 0], [0, -1]]),
    }
    terms = []
    for p0, p1 in itertools.product("IXYZ", repeat=2):
        # basis index = q0 + 2 q1, so the matrix is kron(P_q1, P_q0)
        op = np.kron(paulis[p1], paulis[p0])
        coeff = np.trace(op @ m).real / 4.0
        if abs(coeff) > 1e-14:
            terms.append((coeff, p0 + p1))
    return terms, np.linalg.eigvalsh(m)[0]


def main():
    out = sys.argv[1]
    r_min, r_max, step = (float(x) for x in (sys.argv[2:5] if len(sys.argv) >= 5 else (0.5, 4.5, 0.01)))
    os.makedirs(out, exist_ok=True)
    n = int(round((r_max - r_min) / step))
    for i in range(n + 1):
        r = r_min + i * step
        terms, e0 = qubit_hamiltonian(r)
        with open(os.path.join(out, f"{r:.2f}.ham"), "w") as f:
            f.write(f"# H2 STO-3G parity-reduced, bond_length {r:.2f} Bohr\n")
            f.write(f"# exact ground-state energy {e0:.12f} Hartree\n")
            for coeff, label in terms:
                f.write(f"{coeff:.15e} {label}\n")


if __name__ == "__main__":
    main()

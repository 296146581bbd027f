#!/usr/bin/env python3
"""Prototype the N=4 annealing solve against exact diagonalization.
Device convention: H = sum_{i<j} V_ij n_i n_j + (Omega/2) sum X - sum delta_i n_i, 2*pi in propagator.
Realization of -H_C (up to X-sign gauge and constant):
  V_ij = -4 W_ij  (W = 2J per unordered pair)
  Omega(tmax) = U/2
  delta_i(tmax) = 0.5 * sum_j V_ij + 2 h_i ,  h_i = z_i Wbar mbar
  delta_start = +5 MHz so |g...g> is the TOP of the initial spectrum.
"""
import numpy as np
import scipy.linalg as sla
from proto_ssmf import square_cluster, free_G, spin_ops, hc_matrix

C6 = 1947e3


def anneal_once(U, mbar, t=1/3.0, tau_max=4.0, dt=0.001, delta_start=5.0):
    n, bonds, z = square_cluster(2, 2)
    tmat = np.zeros((n, n))
    for (a, b) in bonds:
        tmat[a, b] = tmat[b, a] = -t
    G = free_G(tmat)
    J = 2.0 * tmat * G
    W = 2.0 * J
    Wbar = np.mean([W[a, b] for (a, b) in bonds])
    # exact-geometry square register: nn distance from C6/r^6 = -4W
    r = (C6 / (-4.0 * Wbar)) ** (1 / 6.0)
    pos = np.array([[0, 0], [r, 0], [0, r], [r, r]], dtype=float)
    V = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            if a != b:
                d = np.hypot(*(pos[a] - pos[b]))
                V[a, b] = C6 / d**6
    h = z * Wbar * mbar
    delta_end = 0.5 * V.sum(axis=1) + 2.0 * h
    Zs, Xs = spin_ops(n)
    dim = 2**n
    # static pieces
    diag_int = np.zeros(dim)
    for a in range(n):
        for b in range(a + 1, n):
            na = (np.array([(s >> a) & 1 for s in range(dim)]))
            nb = (np.array([(s >> b) & 1 for s in range(dim)]))
            diag_int += V[a, b] * na * nb
    ns = [np.array([(s >> i) & 1 for s in range(dim)], dtype=float) for i in range(n)]
    Hx = np.zeros((dim, dim))
    for i in range(n):
        Hx += (Xs[i]).toarray()
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    nsteps = int(round(tau_max / dt))
    for k in range(nsteps):
        tau = (k + 0.5) * dt
        fr = tau / tau_max
        om = (U / 2.0) * fr
        dl = delta_start + fr * (delta_end - delta_start)
        Hd = diag_int - sum(dl[i] * ns[i] for i in range(n))
        H = np.diag(Hd) + (om / 2.0) * Hx
        psi = sla.expm(-2j * np.pi * dt * H) @ psi
    # final realized Hamiltonian & its top state
    Hfin = np.diag(diag_int - sum(delta_end[i] * ns[i] for i in range(n))) + (U / 4.0) * Hx
    w, v = np.linalg.eigh(Hfin)
    top = v[:, -1]
    fid = abs(np.vdot(top, psi)) ** 2
    p = np.abs(psi) ** 2
    mi = np.array([np.sum(p * Zs[i]) for i in range(n)])
    m_dev = np.mean(mi)
    # exact H_C ground state for comparison
    Wm = np.zeros((n, n))
    for (a, b) in bonds:
        Wm[a, b] = Wm[b, a] = W[a, b]
    Hc = hc_matrix(n, bonds, Wm, U, h, Zs, Xs).toarray()
    wc, vc = np.linalg.eigh(Hc)
    pc = np.abs(vc[:, 0]) ** 2
    m_ex = np.mean([np.sum(pc * Zs[i]) for i in range(n)])
    return fid, m_dev, m_ex


if __name__ == "__main__":
    # device gauge starts from |g..g> = all spins down -> mbar < 0 branch
    for U in [0.5, 1.0, 2.0, 3.0, 3.5, 4.0, 4.5, 5.0]:
        fid, m_dev, m_ex = anneal_once(U, mbar=-0.9)
        print(f"U={U:4.1f}: fidelity={fid:.5f}  |m_dev|={abs(m_dev):.4f} |m_ex(+0.9 field)|... exact branch |m|={abs(m_ex):.4f}")

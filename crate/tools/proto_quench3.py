#!/usr/bin/env python3
"""Quench with self-consistent time-dependent mean field h_i(tau) = z_i Wbar mbar(tau)."""
import numpy as np
import scipy.sparse as sp
from proto_ssmf import square_cluster, free_G, spin_ops, hc_matrix


def quench_sc(nx, ny, Uf, t=1.0, horizon=4.0, dt_out=0.01, dt=0.001, sc=True):
    n, bonds, z = square_cluster(nx, ny)
    tmat = np.zeros((n, n))
    for (a, b) in bonds:
        tmat[a, b] = tmat[b, a] = -t
    Zs, Xs = spin_ops(n)
    G = free_G(tmat)
    J = 2.0 * tmat * G
    W = 2.0 * J
    Wbar = np.mean([W[a, b] for (a, b) in bonds])
    dim = 2**n
    diag_zz = np.zeros(dim)
    for (a, b) in bonds:
        diag_zz += W[a, b] * Zs[a] * Zs[b]
    Hx = sp.csr_matrix((dim, dim))
    for i in range(n):
        Hx = Hx + (Uf / 4.0) * Xs[i]
    zfield = np.array(Zs)  # n x dim
    zw = z * Wbar

    def rhs(psi):
        p = np.abs(psi) ** 2
        mbar = np.mean(p @ zfield.T) if False else np.mean([np.sum(p * Zs[i]) for i in range(n)])
        if not sc:
            mbar_eff = 1.0
        else:
            mbar_eff = mbar
        hdiag = diag_zz + sum(zw[i] * mbar_eff * Zs[i] for i in range(n))
        return -2j * np.pi * (hdiag * psi + Hx @ psi)

    psi = np.zeros(dim, dtype=complex)
    psi[dim - 1] = 1.0
    steps_per_out = int(round(dt_out / dt))
    nout = int(round(horizon / dt_out)) + 1
    Zt = np.empty(nout)
    mt = np.empty(nout)
    for k in range(nout):
        p = np.abs(psi) ** 2
        mi = np.array([np.sum(p * Zs[i]) for i in range(n)])
        mt[k] = np.mean(mi)
        Zt[k] = mt[k] ** 2
        if k == nout - 1:
            break
        for _ in range(steps_per_out):
            k1 = rhs(psi)
            k2 = rhs(psi + 0.5 * dt * k1)
            k3 = rhs(psi + 0.5 * dt * k2)
            k4 = rhs(psi + dt * k3)
            psi = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return Zt, mt


def peaks(x, dt, label, fmin=0.0):
    n = len(x)
    freqs = np.fft.rfftfreq(n, d=dt)
    amp = np.abs(np.fft.rfft(x - x.mean()))
    loc = [k for k in range(2, len(amp) - 1) if amp[k] > amp[k - 1] and amp[k] >= amp[k + 1] and freqs[k] >= fmin]
    loc.sort(key=lambda k: -amp[k])
    tops = [(round(freqs[k], 3), round(amp[k], 2)) for k in loc[:6]]
    print(f"  {label}: {tops}")


if __name__ == "__main__":
    for Uf in [2.0, 13.0, 25.0]:
        Zt, mt = quench_sc(3, 2, Uf, sc=True)
        print(f"N=6 selfcons Uf={Uf}: final-mean {Zt[-100:].mean():.3f}")
        peaks(Zt, 0.01, "Z ", fmin=0.3)
        peaks(mt, 0.01, "m ", fmin=0.3)

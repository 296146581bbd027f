#!/usr/bin/env python3
"""Closer look at quench spectra: detrending options, N=12, where peaks land."""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from proto_ssmf import square_cluster, free_G, spin_ops, hc_matrix


def quench_series(nx, ny, Uf, t=1.0, horizon=4.0, dt=0.01):
    n, bonds, z = square_cluster(nx, ny)
    tmat = np.zeros((n, n))
    for (a, b) in bonds:
        tmat[a, b] = tmat[b, a] = -t
    Zs, Xs = spin_ops(n)
    G = free_G(tmat)
    J = 2.0 * tmat * G
    W = 2.0 * J
    Wbar = np.mean([W[a, b] for (a, b) in bonds])
    h = z * Wbar * 1.0
    H = hc_matrix(n, bonds, W, Uf, h, Zs, Xs)
    dim = 2**n
    psi = np.zeros(dim, dtype=complex)
    psi[dim - 1] = 1.0
    taus = np.arange(0.0, horizon + 1e-9, dt)
    Zt = np.empty(len(taus))
    mt = np.empty(len(taus))
    U_step = None
    Hc = (-2j * np.pi * dt) * H.tocsc()
    for k, tau in enumerate(taus):
        p = np.abs(psi) ** 2
        mi = np.array([np.sum(p * Zs[i]) for i in range(n)])
        mt[k] = np.mean(mi)
        Zt[k] = mt[k] ** 2
        psi = spla.expm_multiply(Hc, psi)
    return taus, Zt, mt


def peaks(x, dt, label, fmin=0.0):
    n = len(x)
    freqs = np.fft.rfftfreq(n, d=dt)
    amp = np.abs(np.fft.rfft(x - x.mean()))
    # local maxima
    loc = [k for k in range(2, len(amp) - 1) if amp[k] > amp[k - 1] and amp[k] >= amp[k + 1] and freqs[k] >= fmin]
    loc.sort(key=lambda k: -amp[k])
    tops = [(round(freqs[k], 3), round(amp[k], 3)) for k in loc[:6]]
    print(f"  {label}: top local maxima {tops}")
    return freqs, amp


for (nx, ny, name) in [(3, 2, "N=6"), (4, 3, "N=12")]:
    for Uf in [2.0, 13.0, 25.0]:
        taus, Zt, mt = quench_series(nx, ny, Uf)
        print(f"{name} Uf={Uf}: Z range [{Zt.min():.3f},{Zt.max():.3f}] final mean {Zt[-100:].mean():.3f}")
        peaks(Zt, 0.01, "Z  raw ", fmin=0.3)
        peaks(mt, 0.01, "mbar  ", fmin=0.3)

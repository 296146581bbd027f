#!/usr/bin/env python3
"""Prototype: (a) N=6 quench spectra, (b) ferro/antiferro 3x3 CMFT correlation lengths."""
import numpy as np
import scipy.sparse as sp
from proto_ssmf import square_cluster, free_G, spin_ops, hc_matrix

# ---------------- quench, N=6 exact ----------------


def quench(nx, ny, Uf, t=1.0, horizon=4.0, dt=0.01):
    n, bonds, z = square_cluster(nx, ny)
    tmat = np.zeros((n, n))
    for (a, b) in bonds:
        tmat[a, b] = tmat[b, a] = -t
    Zs, Xs = spin_ops(n)
    # U=0 equilibrium: Q=t, polarized spins, mbar=1
    G = free_G(tmat)
    J = 2.0 * tmat * G
    W = 2.0 * J
    Wbar = np.mean([W[a, b] for (a, b) in bonds])
    mbar = 1.0
    h = z * Wbar * mbar
    H = hc_matrix(n, bonds, W, Uf, h, Zs, Xs).toarray()
    w, v = np.linalg.eigh(H)
    psi0 = np.zeros(2**n)
    psi0[2**n - 1] = 1.0  # all spins up (all bits 1)
    c = v.T.conj() @ psi0
    taus = np.arange(0, horizon + 1e-9, dt)
    Zt = []
    for tau in taus:
        psi = v @ (c * np.exp(-1j * 2 * np.pi * w * tau))
        p = np.abs(psi) ** 2
        mi = np.array([np.sum(p * Zs[i]) for i in range(n)])
        Zt.append(np.mean(mi) ** 2)
    Zt = np.array(Zt)
    # DFT amplitude
    nn = len(Zt)
    freqs = np.fft.rfftfreq(nn, d=dt)
    amp = np.abs(np.fft.rfft(Zt - Zt.mean()))
    kmax = np.argmax(amp[1:]) + 1
    print(f"Uf={Uf}: dominant peak at f={freqs[kmax]:.3f} MHz (bin {1/horizon:.3f});"
          f" amp(Uf)={amp[int(round(Uf*horizon))] if Uf*horizon < len(amp) else -1:.3f}"
          f" amp(Uf/2)={amp[int(round(Uf/2*horizon))]:.3f} max={amp[kmax]:.3f}")
    # check peaks against eigenenergy differences
    return freqs, amp, w


# ---------------- ferro/antiferro 3x3 CMFT ----------------


def cmft_ising(sign, U, eta=1e-4, kmax=200):
    nx = ny = 3
    n, bonds, z = square_cluster(nx, ny)
    J = sign * 1.0  # -1 ferro, +1 antiferro
    Zs, Xs = spin_ops(n)
    m = 0.5
    for it in range(kmax):
        h = z * J * m
        W = np.zeros((n, n))
        for (a, b) in bonds:
            W[a, b] = W[b, a] = J
        H = hc_matrix(n, bonds, W, 4.0 * U, h, Zs, Xs)  # U here = transverse coeff
        wv, v = np.linalg.eigh(H.toarray())
        psi = v[:, 0]
        p = np.abs(psi) ** 2
        mi = np.array([np.sum(p * Zs[i]) for i in range(n)])
        m_new = np.mean(mi)
        if abs(m_new - m) < eta:
            m = m_new
            break
        m = 0.5 * m + 0.5 * m_new
    # correlators on final ground state: X-axis correlators per the appendix
    dim = 2**n
    # <Xi>, <Xi Xj> need the state, not just |psi|^2
    Xi = []
    for i in range(n):
        rows = np.arange(dim) ^ (1 << i)
        Xi.append(psi[rows])  # X_i |psi> in amplitude form
    xs = np.array([np.real(np.vdot(psi, Xi[i])) for i in range(n)])
    coords = [(i % 3, i // 3) for i in range(n)]
    data = {}
    for a in range(n):
        for b in range(a + 1, n):
            d = np.hypot(coords[a][0] - coords[b][0], coords[a][1] - coords[b][1])
            rows = np.arange(dim) ^ (1 << a) ^ (1 << b)
            xx = np.real(np.vdot(psi, psi[rows]))
            cab = xx - xs[a] * xs[b]
            data.setdefault(round(d, 6), []).append(cab)
    ds = sorted(data)
    cs = [np.mean(data[d]) for d in ds]
    pos = [(d, c) for d, c in zip(ds, cs) if c > 1e-12]
    if len(pos) < 3:
        xi = 0.0
    else:
        ls = np.array([d for d, _ in pos])
        lc = np.log([c for _, c in pos])
        slope = np.polyfit(ls, lc, 1)[0]
        xi = -1.0 / slope if slope < 0 else np.inf
    return m, xi


if __name__ == "__main__":
    print("=== quench N=6 ===")
    for Uf in [2.0, 13.0, 25.0]:
        quench(3, 2, Uf)
    print("=== ferro 3x3 ===")
    xis = []
    for U in np.arange(0.2, 4.01, 0.2):
        m, xi = cmft_ising(-1.0, U)
        xis.append((U, abs(m), xi))
        print(f"U={U:4.1f} |m|={abs(m):.4f} xi={xi:.3f}")
    print("=== antiferro 3x3 ===")
    for U in np.arange(0.2, 4.01, 0.2):
        m, xi = cmft_ising(+1.0, U)
        print(f"U={U:4.1f} |m|={abs(m):.4f} xi={xi:.3f}")

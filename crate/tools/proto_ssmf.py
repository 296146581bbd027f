#!/usr/bin/env python3
"""Prototype of the slave-spin CMFT solver to pin conventions before the real build.
Convention under test:
  J_ij = 2 t_ij G_ij  (per ordered pair, as in the text)
  cluster spin H:  H_C = sum_{i<j} W_ij Z_i Z_j + (U/4) sum X_i + sum h_i Z_i
      with W = 2 J (unordered-pair coupling) and h_i = z_i * Wbar * mbar
  Z|1> = +1 convention. Fractional filling of degenerate Fermi shells.
"""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def square_cluster(nx, ny):
    n = nx * ny
    idx = lambda x, y: y * nx + x
    bonds = []
    for y in range(ny):
        for x in range(nx):
            if x + 1 < nx:
                bonds.append((idx(x, y), idx(x + 1, y)))
            if y + 1 < ny:
                bonds.append((idx(x, y), idx(x, y + 1)))
    z = np.zeros(n, dtype=int)
    for y in range(ny):
        for x in range(nx):
            deg = sum(1 for (a, b) in bonds if a == idx(x, y) or b == idx(x, y))
            z[idx(x, y)] = 4 - deg
    return n, bonds, z


def free_G(Q):
    """one-particle density matrix, half filling, fractional degenerate shell."""
    w, v = np.linalg.eigh(Q)
    n = len(w)
    nocc = n // 2  # per spin
    occ = np.zeros(n)
    # group degenerate shells
    tol = 1e-9
    i = 0
    left = nocc
    while i < n and left > 0:
        j = i
        while j < n and abs(w[j] - w[i]) < tol:
            j += 1
        shell = j - i
        take = min(left, shell)
        occ[i:j] = take / shell
        left -= take
        i = j
    return (v * occ) @ v.T.conj()


def spin_ops(n):
    Zs, Xs = [], []
    dim = 2**n
    for i in range(n):
        zdiag = np.array([1.0 if (b >> i) & 1 else -1.0 for b in range(dim)])
        Zs.append(zdiag)
        rows = np.arange(dim) ^ (1 << i)
        Xs.append(sp.csr_matrix((np.ones(dim), (rows, np.arange(dim))), shape=(dim, dim)))
    return Zs, Xs


def hc_matrix(n, bonds, W, U, h, Zs, Xs):
    dim = 2**n
    diag = np.zeros(dim)
    for (a, b) in bonds:
        diag += W[a, b] * Zs[a] * Zs[b]
    for i in range(n):
        diag += h[i] * Zs[i]
    H = sp.diags(diag).tocsr()
    for i in range(n):
        H = H + (U / 4.0) * Xs[i]
    return H


def ground(H):
    if H.shape[0] <= 512:
        w, v = np.linalg.eigh(H.toarray())
        return w[0], v[:, 0]
    w, v = spla.eigsh(H, k=1, which="SA")
    return w[0], v[:, 0]


def solve_ssmf(nx, ny, U, t=1.0, eta=0.01, k=5, m0=0.5, verbose=False):
    n, bonds, z = square_cluster(nx, ny)
    tmat = np.zeros((n, n))
    for (a, b) in bonds:
        tmat[a, b] = tmat[b, a] = -t
    Zs, Xs = spin_ops(n)
    Q = tmat.copy()
    corr = None
    mbar = m0
    for outer in range(k):
        G = free_G(Q)
        J = 2.0 * tmat * G
        W = 2.0 * J
        Wbar = np.mean([W[a, b] for (a, b) in bonds])
        mbar_in = mbar if outer == 0 else mbar
        for inner in range(k):
            h = z * Wbar * mbar_in
            H = hc_matrix(n, bonds, W, U, h, Zs, Xs)
            _, psi = ground(H)
            p = np.abs(psi) ** 2
            mi = np.array([np.sum(p * Zs[i]) for i in range(n)])
            m_new = np.mean(mi)
            dm = abs(m_new - mbar_in)
            mbar_in = m_new
            if dm < eta:
                break
        mbar = mbar_in
        corr = np.zeros((n, n))
        for a in range(n):
            for b in range(n):
                corr[a, b] = np.sum(p * Zs[a] * Zs[b]) if a != b else 1.0
        Qn = tmat * corr
        dq = np.linalg.norm(Qn - Q)
        Q = Qn
        if dq < eta:
            break
    return abs(mbar) ** 2, corr


if __name__ == "__main__":
    import sys
    mode = sys.argv[1] if len(sys.argv) > 1 else "n4"
    if mode == "n4":
        for U in [0.0, 2, 4, 6, 8, 10, 11, 12, 13, 14, 15, 16, 18]:
            Z, _ = solve_ssmf(2, 2, U)
            print(f"U={U:5.1f}  Z={Z:.4f}")
    elif mode == "n12":
        for U in [8, 10, 11, 12, 12.5, 13, 13.5, 14, 15, 16]:
            Z, _ = solve_ssmf(4, 3, U)
            print(f"U={U:5.1f}  Z={Z:.4f}")
    elif mode == "n6":
        for U in [8, 10, 11, 12, 13, 14, 15, 16]:
            Z, _ = solve_ssmf(3, 2, U)
            print(f"U={U:5.1f}  Z={Z:.4f}")

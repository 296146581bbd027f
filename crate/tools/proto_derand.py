#!/usr/bin/env python3
"""Prototype greedy derandomization + hit estimator on the LiH file."""
import numpy as np

AXES = "XYZ"


def load(path):
    terms, nq = [], None
    for line in open(path):
        line = line.split("#")[0].strip()
        if not line:
            continue
        if line.startswith("qubits:"):
            nq = int(line.split(":")[1])
            continue
        parts = line.split()
        coeff = float(parts[0])
        ops = tuple(sorted((int(p[1:]), p[0]) for p in parts[1:]))
        terms.append((coeff, ops))
    return nq, terms


def greedy(nq, terms, m_slots, eps):
    cs = np.array([abs(c) for c, _ in terms])
    cmax = cs.max()
    # skip the identity term (empty support) in planning
    obs = [(i, dict(ops)) for i, (c, ops) in enumerate(terms) if ops]
    eps_p = {i: eps * cmax / max(abs(terms[i][0]), 1e-12) for i, _ in obs}
    V = {i: 0.0 for i, _ in obs}  # accumulated hit weight from fixed slots
    bases = []
    for s in range(m_slots):
        # within-slot partial product starts at 1 for every term
        part = {i: 1.0 for i, _ in obs}
        basis = []
        for q in range(nq):
            best_axis, best_score = None, None
            for ax in AXES:
                score = 0.0
                for i, s_ops in obs:
                    p = part[i]
                    if p == 0.0:
                        w = 0.0
                    else:
                        w = p
                        if q in s_ops:
                            w = 0.0 if s_ops[q] != ax else w
                        # remaining unassigned qubits of this slot
                        rem = sum(1 for qq in s_ops if qq > q)
                        w *= (1.0 / 3.0) ** rem
                    # future slots all random
                    fut = (m_slots - s - 1) * (1.0 / 3.0) ** len(s_ops)
                    e2 = eps_p[i] ** 2 / 2.0
                    score += np.exp(-e2 * (V[i] + w + fut))
                if best_score is None or score < best_score - 1e-15:
                    best_axis, best_score = ax, score
            basis.append(best_axis)
            for i, s_ops in obs:
                if q in s_ops and s_ops[q] != best_axis:
                    part[i] = 0.0
        for i, s_ops in obs:
            V[i] += part[i]
        bases.append("".join(basis))
    return bases, V


def hits(basis, ops):
    return all(basis[q] == a for q, a in ops)


def simulate(nq, terms, bases, psi, rng):
    # group identical bases
    from collections import Counter
    groups = Counter(bases)
    I2 = np.eye(2, dtype=complex)
    Ux = np.array([[1, -1], [1, 1]], dtype=complex) / np.sqrt(2)
    Uy = np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2)
    rot = {"X": Ux, "Y": Uy, "Z": I2}
    num = {i: 0.0 for i in range(len(terms))}
    den = {i: 0 for i in range(len(terms))}
    for basis, reps in groups.items():
        U = np.array([[1.0 + 0j]])
        for q in reversed(range(nq)):
            U = np.kron(U, rot[basis[q]])
        phi = U @ psi
        p = np.abs(phi) ** 2
        p = p / p.sum()
        counts = rng.multinomial(reps, p)
        for i, (c, ops) in enumerate(terms):
            if not ops or not hits(basis, ops):
                continue
            for b, cnt in enumerate(counts):
                if cnt == 0:
                    continue
                prod = 1.0
                for q, a in ops:
                    prod *= 1.0 if (b >> q) & 1 else -1.0
                num[i] += cnt * prod
            den[i] += reps
    e = 0.0
    for i, (c, ops) in enumerate(terms):
        if not ops:
            e += c
        elif den[i] > 0:
            e += c * num[i] / den[i]
    return e


if __name__ == "__main__":
    nq, terms = load("/root/crate/data/lih_1.5A.ham")
    I2 = np.eye(2, dtype=complex)
    Z = np.diag([-1.0, 1.0]).astype(complex)
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
    M = {"X": X, "Y": Y, "Z": Z}
    H = np.zeros((64, 64), dtype=complex)
    for coeff, key in terms:
        ops = [I2] * nq
        for q, a in key:
            ops[q] = M[a]
        full = np.array([[coeff]], dtype=complex)
        for q in reversed(range(nq)):
            full = np.kron(full, ops[q])
        H += full
    w, v = np.linalg.eigh(H)
    psi = v[:, 0]
    e0 = w[0]
    for slots in [500, 1000, 3000]:
        bases, V = greedy(nq, terms, slots, 0.05)
        distinct = len(set(bases))
        unhit = sum(1 for i, (c, ops) in enumerate(terms) if ops and V[i] == 0)
        rng = np.random.default_rng(7)
        errs = [abs(simulate(nq, terms, bases, psi, rng) - e0) / abs(e0) for _ in range(20)]
        print(f"slots={slots}: distinct={distinct} unhit={unhit} "
              f"median rel err={np.median(errs)*100:.2f}% max={max(errs)*100:.2f}%")

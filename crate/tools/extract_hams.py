#!/usr/bin/env python3
"""One-off: extract the LiH / BeH2 Pauli Hamiltonians from the thesis LaTeX
into the .ham text format. Not part of the deliverable build."""
import re
import sys

TXT = open("/root/crate/paper.md").read()


def grab_equation(marker):
    i = TXT.index(marker)
    j = TXT.index(r"\end{split}", i)
    return TXT[i:j]


def parse_terms(body):
    body = body.replace("\\\\", " ").replace("&", " ")
    # tokens like:  +{\bf 0.05393}Z_0 Z_1   or  - {\bf (4\times 10^{-5})}X_0 X_1 X_2
    pat = re.compile(
        r"([+-]?)\s*\{\\bf\s*\(?\s*([+-]?[0-9]*\.?[0-9]+(?:\\times\s*10\^\{-?\d+\})?)\s*\)?\s*\}"
        r"((?:\s*[XYZ]_[0-9])*)"
    )
    terms = []
    for m in pat.finditer(body):
        outer, val, ops = m.group(1), m.group(2), m.group(3)
        em = re.match(r"([+-]?[0-9]*\.?[0-9]+)\\times\s*10\^\{(-?\d+)\}", val)
        if em:
            coeff = float(em.group(1)) * 10.0 ** int(em.group(2))
        else:
            coeff = float(val)
        if outer == "-":
            coeff = -coeff
        axes = re.findall(r"([XYZ])_([0-9])", ops)
        key = tuple(sorted((int(q), a) for a, q in axes))
        terms.append((coeff, key))
    return terms


def write_ham(path, title, terms, nq):
    keys = [k for _, k in terms]
    assert len(keys) == len(set(keys)), "duplicate strings found"
    with open(path, "w") as f:
        f.write(f"# {title}\n")
        f.write(f"qubits: {nq}\n")
        for coeff, key in terms:
            ops = " ".join(f"{a}{q}" for q, a in key)
            # plain decimal, no exponent
            c = f"{coeff:.10f}".rstrip("0")
            if c.endswith("."):
                c += "0"
            f.write(f"{c} {ops}".rstrip() + "\n")
    print(path, len(terms), "terms")


lih = parse_terms(grab_equation(r"H_\mathrm{LiH}"))
beh2 = parse_terms(grab_equation(r"H_{\text{BeH}_\text{2}}"))
print("LiH terms:", len(lih), " BeH2 terms:", len(beh2))
write_ham("/root/crate/data/lih_1.5A.ham", "LiH, inter-atomic distance 1.5 A, 6-qubit encoding", lih, 6)
write_ham("/root/crate/data/beh2_1.17A.ham", "BeH2, inter-atomic distance 1.17 A, 6-qubit encoding", beh2, 6)

# quick diagonalization cross-check values to freeze into tests
import numpy as np

I2 = np.eye(2, dtype=complex)
# convention: Z|1> = +|1>, qubit 0 = least significant bit
Z = np.diag([-1.0, 1.0]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
M = {"X": X, "Y": Y, "Z": Z}


def dense(terms, nq):
    H = np.zeros((2**nq, 2**nq), dtype=complex)
    for coeff, key in terms:
        ops = [I2] * nq
        for q, a in key:
            ops[q] = M[a]
        full = np.array([[coeff]], dtype=complex)
        # qubit 0 = LSB -> it is the *last* factor in the kron chain
        for q in reversed(range(nq)):
            full = np.kron(full, ops[q])
        H += full
    return H


for name, terms in [("LiH", lih), ("BeH2", beh2)]:
    H = dense(terms, 6)
    assert np.max(np.abs(H - H.conj().T)) < 1e-12
    w = np.linalg.eigvalsh(H)
    print(f"{name}: ground={w[0]:.9f} first_excited={w[1]:.9f} max={w[-1]:.9f}")

//! Pauli-string algebra: Hamiltonians as weighted sums of Pauli strings,
//! the coefficient-file format, dense realization and an exact-diagonalization
//! oracle.
//!
//! Sign convention: bit 1 denotes the excited state |r> and `Z|r> = +|r>`,
//! so the single-qubit Z matrix is `diag(-1, +1)` over basis index (0, 1)
//! and `n = (1 + Z)/2` counts excitations. Qubit 0 is the least-significant
//! bit of a basis-state index. Coefficients are linear frequencies in MHz;
//! propagators multiply by 2*pi.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{Scalar, C};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest qubit count for which dense 2^N storage is permitted.
pub const DENSE_QUBIT_GUARD: usize = 14;

/// One single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn symbol(self) -> char {
        match self {
            PauliAxis::I => 'I',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliAxis::I),
            'X' => Some(PauliAxis::X),
            'Y' => Some(PauliAxis::Y),
            'Z' => Some(PauliAxis::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-qubit Paulis, one axis per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    axes: Vec<PauliAxis>,
}

impl PauliString {
    pub fn identity(len: usize) -> Self {
        Self { axes: vec![PauliAxis::I; len] }
    }

    pub fn new(axes: Vec<PauliAxis>) -> Self {
        Self { axes }
    }

    /// Build from (qubit, axis) pairs; rejects duplicate qubit assignments.
    pub fn from_ops(len: usize, ops: &[(usize, PauliAxis)]) -> Result<Self> {
        let mut axes = vec![PauliAxis::I; len];
        for &(q, a) in ops {
            if q >= len {
                return Err(Error::InvalidInput(format!(
                    "qubit index {q} out of range for {len} qubits"
                )));
            }
            if axes[q] != PauliAxis::I {
                return Err(Error::InvalidInput(format!(
                    "duplicate axis assignment on qubit {q}"
                )));
            }
            axes[q] = a;
        }
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axis(&self, qubit: usize) -> PauliAxis {
        self.axes[qubit]
    }

    pub fn axes(&self) -> &[PauliAxis] {
        &self.axes
    }

    /// Qubits carrying a non-identity axis.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.axes
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != PauliAxis::I)
            .map(|(q, _)| q)
    }

    pub fn support_len(&self) -> usize {
        self.axes.iter().filter(|a| **a != PauliAxis::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.axes.iter().all(|a| *a == PauliAxis::I)
    }

    fn mask(&self, want: PauliAxis) -> usize {
        let mut m = 0usize;
        for (q, a) in self.axes.iter().enumerate() {
            if *a == want {
                m |= 1 << q;
            }
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for (q, a) in self.axes.iter().enumerate() {
            if *a != PauliAxis::I {
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}{}", a.symbol(), q)?;
                first = false;
            }
        }
        Ok(())
    }
}

/// A Pauli string with a real coefficient (MHz).
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm<S> {
    pub coefficient: S,
    pub string: PauliString,
}

/// Weighted sum of Pauli strings over a fixed register size.
///
/// Terms with identical strings are merged on construction; insertion order
/// of distinct strings is preserved so files round-trip verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian<S> {
    qubit_count: usize,
    terms: Vec<PauliTerm<S>>,
}

impl<S: Scalar> PauliHamiltonian<S> {
    pub fn new(qubit_count: usize) -> Self {
        Self { qubit_count, terms: Vec::new() }
    }

    pub fn from_terms(qubit_count: usize, terms: Vec<PauliTerm<S>>) -> Result<Self> {
        let mut h = Self::new(qubit_count);
        for t in terms {
            h.push(t.coefficient, t.string)?;
        }
        Ok(h)
    }

    /// Add a term, merging with an existing identical string.
    pub fn push(&mut self, coefficient: S, string: PauliString) -> Result<()> {
        if string.len() != self.qubit_count {
            return Err(Error::DimensionMismatch(format!(
                "string length {} vs qubit count {}",
                string.len(),
                self.qubit_count
            )));
        }
        if !coefficient.is_finite() {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        if let Some(t) = self.terms.iter_mut().find(|t| t.string == string) {
            t.coefficient = t.coefficient + coefficient;
        } else {
            self.terms.push(PauliTerm { coefficient, string });
        }
        Ok(())
    }

    pub fn push_ops(&mut self, coefficient: S, ops: &[(usize, PauliAxis)]) -> Result<()> {
        let s = PauliString::from_ops(self.qubit_count, ops)?;
        self.push(coefficient, s)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dim(&self) -> usize {
        1 << self.qubit_count
    }

    pub fn terms(&self) -> &[PauliTerm<S>] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn max_abs_coefficient(&self) -> S {
        self.terms
            .iter()
            .map(|t| t.coefficient.abs())
            .fold(S::zero(), S::max)
    }

    pub fn scaled(&self, factor: S) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliTerm { coefficient: t.coefficient * factor, string: t.string.clone() })
            .collect();
        Self { qubit_count: self.qubit_count, terms }
    }

    /// `a*self + b*other` with term merging.
    pub fn linear_combination(&self, a: S, other: &Self, b: S) -> Result<Self> {
        if self.qubit_count != other.qubit_count {
            return Err(Error::DimensionMismatch("qubit counts differ".into()));
        }
        let mut out = self.scaled(a);
        for t in &other.terms {
            out.push(t.coefficient * b, t.string.clone())?;
        }
        Ok(out)
    }

    /// Parse the coefficient-file text format.
    ///
    /// Header `qubits: N`; one term per line `coeff AX0 AX1 ...` with axis
    /// tokens like `Z0`, `X3`; a bare coefficient is the constant term;
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut qubits: Option<usize> = None;
        let mut h: Option<PauliHamiltonian<S>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("qubits:") {
                if qubits.is_some() {
                    return Err(Error::Parse { line: line_no, msg: "duplicate qubits header".into() });
                }
                let n: usize = rest.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad qubit count '{}'", rest.trim()),
                })?;
                if n == 0 {
                    return Err(Error::Parse { line: line_no, msg: "qubit count must be positive".into() });
                }
                qubits = Some(n);
                h = Some(PauliHamiltonian::new(n));
                continue;
            }
            let n = qubits.ok_or(Error::Parse {
                line: line_no,
                msg: "term before 'qubits: N' header".into(),
            })?;
            let mut parts = line.split_whitespace();
            let coeff_tok = parts.next().unwrap();
            let coeff = coeff_tok.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad coefficient '{coeff_tok}'"),
            })?;
            let mut ops = Vec::new();
            for tok in parts {
                let mut chars = tok.chars();
                let axis = chars
                    .next()
                    .and_then(PauliAxis::from_symbol)
                    .filter(|a| *a != PauliAxis::I)
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("bad axis token '{tok}'"),
                    })?;
                let q: usize = chars.as_str().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad qubit index in '{tok}'"),
                })?;
                if q >= n {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("qubit index {q} >= declared count {n}"),
                    });
                }
                ops.push((q, axis));
            }
            let s = PauliString::from_ops(n, &ops).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            h.as_mut().unwrap().push(S::of(coeff), s).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        h.ok_or(Error::Parse { line: 0, msg: "missing 'qubits: N' header".into() })
    }

    /// Canonical text serialization; parsing it back reproduces the
    /// Hamiltonian exactly (shortest round-trip float formatting).
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits: {}\n", self.qubit_count);
        for t in &self.terms {
            if t.string.is_identity() {
                out.push_str(&format!("{}\n", t.coefficient));
            } else {
                out.push_str(&format!("{} {}\n", t.coefficient, t.string));
            }
        }
        out
    }

    /// Compile into a fast-apply form.
    pub fn compiled(&self) -> CompiledHamiltonian<S> {
        CompiledHamiltonian::new(self)
    }

    /// Dense 2^N x 2^N complex matrix (row-major).
    pub fn dense_matrix(&self) -> Result<Matrix<C<S>>> {
        if self.qubit_count > DENSE_QUBIT_GUARD {
            return Err(Error::GuardExceeded(format!(
                "dense matrix requested for {} qubits (guard {})",
                self.qubit_count, DENSE_QUBIT_GUARD
            )));
        }
        let dim = self.dim();
        let mut m = Matrix::zeros(dim);
        let compiled = self.compiled();
        for (b, d) in compiled.diagonal.iter().enumerate() {
            m[(b, b)] = m[(b, b)] + C::new(*d, S::zero());
        }
        for term in &compiled.off_diagonal {
            for b in 0..dim {
                let amp = term.amplitude(b);
                let target = b ^ term.flip_mask;
                m[(target, b)] = m[(target, b)] + amp;
            }
        }
        Ok(m)
    }

    /// `<state|H|state>` for a pure state; the imaginary residue must stay
    /// below 1e-10 of the magnitude scale and is discarded after the check.
    pub fn expectation(&self, amplitudes: &[C<S>]) -> Result<S> {
        if amplitudes.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs operator dim {}",
                amplitudes.len(),
                self.dim()
            )));
        }
        let compiled = self.compiled();
        let mut out = vec![C::new(S::zero(), S::zero()); amplitudes.len()];
        compiled.accumulate(amplitudes, &mut out);
        let mut acc = C::new(S::zero(), S::zero());
        for (a, b) in amplitudes.iter().zip(out.iter()) {
            acc = acc + a.conj() * *b;
        }
        let scale = S::one().max(acc.norm());
        if acc.im.abs() > S::of(1e-10) * scale {
            return Err(Error::Linalg(format!(
                "expectation has imaginary residue {:e}",
                acc.im.to_f64_lossy()
            )));
        }
        Ok(acc.re)
    }

    /// Expectation against a density matrix: `tr(H rho)` (real part after
    /// a hermiticity-residue check).
    pub fn expectation_density(&self, rho: &Matrix<C<S>>) -> Result<S> {
        if rho.n != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "density dim {} vs operator dim {}",
                rho.n,
                self.dim()
            )));
        }
        let compiled = self.compiled();
        let dim = rho.n;
        // tr(H rho) = sum_b (H rho)[b, b]; use column application of H on rho columns.
        let mut acc = C::new(S::zero(), S::zero());
        let mut col = vec![C::new(S::zero(), S::zero()); dim];
        let mut out = vec![C::new(S::zero(), S::zero()); dim];
        for b in 0..dim {
            for r in 0..dim {
                col[r] = rho[(r, b)];
            }
            for o in out.iter_mut() {
                *o = C::new(S::zero(), S::zero());
            }
            compiled.accumulate(&col, &mut out);
            acc = acc + out[b];
        }
        let scale = S::one().max(acc.norm());
        if acc.im.abs() > S::of(1e-8) * scale {
            return Err(Error::Linalg(format!(
                "trace has imaginary residue {:e}",
                acc.im.to_f64_lossy()
            )));
        }
        Ok(acc.re)
    }

    /// Minimal eigenvalue and a unit-norm ground eigenvector.
    ///
    /// A dense solve is used through dimension 128 and a Lanczos iteration
    /// with full reorthogonalization beyond it. Degenerate ground spaces
    /// return an arbitrary member vector.
    pub fn ground_energy_exact(&self) -> Result<(S, Vec<C<S>>)> {
        if self.qubit_count > DENSE_QUBIT_GUARD {
            return Err(Error::GuardExceeded(format!(
                "exact diagonalization requested for {} qubits (guard {})",
                self.qubit_count, DENSE_QUBIT_GUARD
            )));
        }
        let dim = self.dim();
        let compiled = self.compiled();
        if dim <= 128 {
            let dense = self.dense_matrix()?;
            let (vals, vecs) = linalg::eigh_complex(&dense)?;
            let vec = vecs.column(0);
            Ok((vals[0], vec))
        } else {
            let (val, vec) = linalg::lanczos_ground(dim, |x, y| compiled.accumulate(x, y))?;
            Ok((val, vec))
        }
    }

    /// All eigenvalues (ascending). Requires a real-symmetric realization,
    /// which every Hermitian Pauli sum with real coefficients and even
    /// Y-counts per string has; others are rejected.
    pub fn eigenvalues(&self) -> Result<Vec<S>> {
        let dense = self.dense_matrix()?;
        let real = linalg::require_real(&dense)?;
        let (vals, _) = linalg::eigh_real(&real)?;
        Ok(vals)
    }
}

/// Off-diagonal Pauli string compiled to bit masks.
#[derive(Debug, Clone)]
pub struct CompiledString<S> {
    pub coefficient: S,
    pub flip_mask: usize,
    z_mask: usize,
    y_mask: usize,
    /// i^(|Y| mod 4)
    y_phase: C<S>,
}

impl<S: Scalar> CompiledString<S> {
    fn new(coefficient: S, string: &PauliString) -> Self {
        let x = string.mask(PauliAxis::X);
        let y = string.mask(PauliAxis::Y);
        let z = string.mask(PauliAxis::Z);
        let y_phase = match y.count_ones() % 4 {
            0 => C::new(S::one(), S::zero()),
            1 => C::new(S::zero(), S::one()),
            2 => C::new(-S::one(), S::zero()),
            _ => C::new(S::zero(), -S::one()),
        };
        Self { coefficient, flip_mask: x | y, z_mask: z, y_mask: y, y_phase }
    }

    /// Amplitude of `P|b>` on the flipped target state.
    #[inline]
    pub fn amplitude(&self, b: usize) -> C<S> {
        // Z on a 0-bit and our Y convention on a 0-bit each contribute -1;
        // the remaining Y structure is the global i^|Y| factor.
        let neg = ((!b & self.z_mask).count_ones() + (!b & self.y_mask).count_ones()) & 1;
        let sign = if neg == 1 { -S::one() } else { S::one() };
        C::new(self.coefficient * sign, S::zero()) * self.y_phase
    }
}

/// Pauli sum compiled for repeated application: all diagonal strings are
/// merged into one diagonal vector, off-diagonal strings kept individually.
#[derive(Debug, Clone)]
pub struct CompiledHamiltonian<S> {
    pub dim: usize,
    pub diagonal: Vec<S>,
    pub off_diagonal: Vec<CompiledString<S>>,
}

impl<S: Scalar> CompiledHamiltonian<S> {
    pub fn new(h: &PauliHamiltonian<S>) -> Self {
        let dim = h.dim();
        let mut diagonal = vec![S::zero(); dim];
        let mut off = Vec::new();
        for t in &h.terms {
            let has_flip = t
                .string
                .axes()
                .iter()
                .any(|a| matches!(a, PauliAxis::X | PauliAxis::Y));
            if has_flip {
                off.push(CompiledString::new(t.coefficient, &t.string));
            } else {
                let z = t.string.mask(PauliAxis::Z);
                for (b, d) in diagonal.iter_mut().enumerate() {
                    let neg = (!b & z).count_ones() & 1;
                    *d = *d + if neg == 1 { -t.coefficient } else { t.coefficient };
                }
            }
        }
        Self { dim, diagonal, off_diagonal: off }
    }

    /// `out += H * psi`
    pub fn accumulate(&self, psi: &[C<S>], out: &mut [C<S>]) {
        debug_assert_eq!(psi.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for b in 0..self.dim {
            out[b] = out[b] + psi[b].scale(self.diagonal[b]);
        }
        for term in &self.off_diagonal {
            for b in 0..self.dim {
                let amp = term.amplitude(b);
                out[b ^ term.flip_mask] = out[b ^ term.flip_mask] + amp * psi[b];
            }
        }
    }
}

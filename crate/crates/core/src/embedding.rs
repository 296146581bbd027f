//! Atom-coordinate optimization: make the register's van der Waals
//! interaction matrix reproduce a target coupling matrix, for the chemistry
//! score and for the spin-coupling cost of the Hubbard pipeline.

use crate::device::{AtomRegister, DeviceConstants};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::optimize;
use crate::paulialg::{PauliAxis, PauliHamiltonian};
use crate::rng;
use crate::scalar::Scalar;
use rand::Rng;

/// Which residual the optimizer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingMode {
    /// chemistry score: sum_{i<j} (T_ij - C6/r^6)^2 over the target entries
    ChemistryScore,
    /// spin cost: sqrt( sum_{i != j} (C6/r^6 + 4 K_ij)^2 )
    SlaveSpinCost,
}

/// Geometry-optimization problem.
#[derive(Debug, Clone)]
pub struct EmbeddingProblem<S> {
    /// Symmetric target matrix, zero diagonal. Chemistry mode reads it as
    /// the wanted interaction strengths; slave-spin mode as the coupling
    /// matrix K with C6/r^6 aimed at -4 K_ij.
    pub target: Matrix<S>,
    pub constants: DeviceConstants<S>,
    /// coordinate box, um
    pub bounds_um: (S, S),
    pub min_distance_um: S,
    pub mode: EmbeddingMode,
    /// optional starting layout (one per restart seed 0; other seeds jitter it)
    pub initial: Option<Vec<[S; 2]>>,
}

impl<S: Scalar> EmbeddingProblem<S> {
    pub fn new(target: Matrix<S>, constants: DeviceConstants<S>, mode: EmbeddingMode) -> Result<Self> {
        if target.max_abs_asymmetry() > S::of(1e-9) {
            return Err(Error::InvalidInput("target matrix must be symmetric".into()));
        }
        for i in 0..target.n {
            if target[(i, i)].abs() > S::of(1e-12) {
                return Err(Error::InvalidInput("target diagonal must be zero".into()));
            }
        }
        let min_distance_um = constants.min_distance_um;
        Ok(Self {
            target,
            constants,
            bounds_um: (S::zero(), S::of(100.0)),
            min_distance_um,
            mode,
            initial: None,
        })
    }

    pub fn atoms(&self) -> usize {
        self.target.n
    }

    fn residual_positions(&self, pos: &[[S; 2]]) -> S {
        let n = self.atoms();
        let c6 = self.constants.c6_over_h;
        let mut acc = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = pos[i][0] - pos[j][0];
                let dy = pos[i][1] - pos[j][1];
                let r2 = dx * dx + dy * dy;
                let v = c6 / (r2 * r2 * r2);
                let d = match self.mode {
                    EmbeddingMode::ChemistryScore => self.target[(i, j)] - v,
                    EmbeddingMode::SlaveSpinCost => v + S::of(4.0) * self.target[(i, j)],
                };
                acc = acc + d * d;
            }
        }
        match self.mode {
            EmbeddingMode::ChemistryScore => acc,
            // ordered-pair sum inside the square root
            EmbeddingMode::SlaveSpinCost => (acc * S::of(2.0)).sqrt(),
        }
    }

    /// Residual for an existing register.
    pub fn residual(&self, register: &AtomRegister<S>) -> S {
        self.residual_positions(&register.positions_um)
    }
}

/// Optimized register plus the achieved residual.
#[derive(Debug, Clone)]
pub struct EmbeddingResult<S> {
    pub register: AtomRegister<S>,
    pub residual: S,
    pub evaluations: usize,
    /// set when the evaluation budget ran out before simplex convergence
    pub budget_exhausted: bool,
    /// per-evaluation residual trace of the winning restart
    pub residual_log: Vec<S>,
}

/// Square-lattice starting distance from the strongest coupling entry:
/// `max_ij (C6 / |4 K_ij|)^(1/6)` over nonzero entries.
pub fn r_init<S: Scalar>(coupling: &Matrix<S>, constants: &DeviceConstants<S>) -> Result<S> {
    let mut best: Option<S> = None;
    for i in 0..coupling.n {
        for j in 0..coupling.n {
            if i != j && coupling[(i, j)].abs() > S::of(1e-15) {
                let r = (constants.c6_over_h / (S::of(4.0) * coupling[(i, j)].abs()))
                    .powf(S::one() / S::of(6.0));
                best = Some(best.map_or(r, |b: S| b.max(r)));
            }
        }
    }
    best.ok_or_else(|| Error::InvalidInput("coupling matrix has no nonzero entries".into()))
}

/// Positive coefficients of the exactly-two-Z strings of a Hamiltonian,
/// arranged as a symmetric interaction target.
pub fn chemistry_target_matrix<S: Scalar>(h: &PauliHamiltonian<S>) -> Matrix<S> {
    let n = h.qubit_count();
    let mut m = Matrix::zeros(n);
    for t in h.terms() {
        if t.coefficient <= S::zero() {
            continue;
        }
        let s = &t.string;
        if s.support_len() != 2 {
            continue;
        }
        let sup: Vec<usize> = s.support().collect();
        if s.axis(sup[0]) == PauliAxis::Z && s.axis(sup[1]) == PauliAxis::Z {
            m[(sup[0], sup[1])] = t.coefficient;
            m[(sup[1], sup[0])] = t.coefficient;
        }
    }
    m
}

/// Push pairs sitting under the distance floor apart symmetrically until
/// the layout is feasible (a handful of passes suffices for the small
/// violations the penalty search leaves behind).
fn repair_min_distance<S: Scalar>(pos: &mut [[S; 2]], dmin: S) {
    for _ in 0..32 {
        let mut clean = true;
        for i in 0..pos.len() {
            for j in (i + 1)..pos.len() {
                let dx = pos[j][0] - pos[i][0];
                let dy = pos[j][1] - pos[i][1];
                let d = (dx * dx + dy * dy).sqrt();
                if d >= dmin {
                    continue;
                }
                clean = false;
                let (ux, uy) = if d > S::of(1e-9) {
                    (dx / d, dy / d)
                } else {
                    (S::one(), S::zero())
                };
                let push = (dmin - d) * S::of(0.5) + S::of(1e-9);
                pos[i][0] = pos[i][0] - ux * push;
                pos[i][1] = pos[i][1] - uy * push;
                pos[j][0] = pos[j][0] + ux * push;
                pos[j][1] = pos[j][1] + uy * push;
            }
        }
        if clean {
            break;
        }
    }
}

fn flatten<S: Scalar>(pos: &[[S; 2]]) -> Vec<S> {
    pos.iter().flat_map(|p| [p[0], p[1]]).collect()
}

fn unflatten<S: Scalar>(x: &[S]) -> Vec<[S; 2]> {
    x.chunks(2).map(|c| [c[0], c[1]]).collect()
}

/// Multi-start Nelder-Mead coordinate optimization. Returns the best
/// restart; positions always satisfy the minimum-distance floor (violations
/// are penalized during the search and rejected on output).
pub fn optimize_positions<S: Scalar>(
    problem: &EmbeddingProblem<S>,
    seed: u64,
    max_evals: usize,
) -> Result<EmbeddingResult<S>> {
    let n = problem.atoms();
    if n < 2 {
        return Err(Error::InvalidInput("embedding needs at least two atoms".into()));
    }
    let restarts = 8usize;
    let per_restart = (max_evals / restarts).max(50);
    let (lo, hi) = problem.bounds_um;
    let bounds = vec![(lo, hi); 2 * n];
    let dmin = problem.min_distance_um;
    let mut best: Option<EmbeddingResult<S>> = None;

    for restart in 0..restarts {
        let mut rng = rng::derive(seed, &[0xe3bed, restart as u64]);
        let start: Vec<[S; 2]> = match (&problem.initial, restart) {
            (Some(init), 0) => init.clone(),
            (Some(init), _) => init
                .iter()
                .map(|p| {
                    let jitter = S::of(0.08) * (hi - lo);
                    [
                        (p[0] + jitter * S::of(rng.gen_range(-1.0..1.0))).max(lo).min(hi),
                        (p[1] + jitter * S::of(rng.gen_range(-1.0..1.0))).max(lo).min(hi),
                    ]
                })
                .collect(),
            (None, _) => (0..n)
                .map(|_| {
                    [
                        lo + (hi - lo) * S::of(rng.gen_range(0.0..1.0)),
                        lo + (hi - lo) * S::of(rng.gen_range(0.0..1.0)),
                    ]
                })
                .collect(),
        };
        let mut log: Vec<S> = Vec::new();
        let objective = |x: &[S]| -> S {
            let pos = unflatten(x);
            let mut penalty = S::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    let dx = pos[i][0] - pos[j][0];
                    let dy = pos[i][1] - pos[j][1];
                    let d = (dx * dx + dy * dy).sqrt();
                    if d < dmin {
                        penalty = penalty + (dmin - d) * S::of(1e6);
                    }
                }
            }
            problem.residual_positions(&pos) + penalty
        };
        let traced = |x: &[S]| -> S {
            let v = objective(x);
            log.push(v);
            v
        };
        let out = optimize::nelder_mead(traced, &flatten(&start), &bounds, per_restart, S::of(1e-14));
        let mut pos = unflatten(&out.best_x);
        repair_min_distance(&mut pos, dmin);
        let register = match AtomRegister::new(pos, dmin * (S::one() - S::of(1e-9))) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let residual = problem.residual(&register);
        let exhausted = out.evaluations >= per_restart;
        let result = EmbeddingResult {
            register,
            residual,
            evaluations: out.evaluations,
            budget_exhausted: exhausted,
            residual_log: log,
        };
        best = match best {
            Some(b) if b.residual <= result.residual => Some(b),
            _ => Some(result),
        };
    }
    best.ok_or_else(|| {
        Error::NonConverged("every embedding restart violated the distance floor".into())
    })
}

/// Two-parameter triangular-cluster embedding: an inner triangular patch at
/// spacing `beta` with the degree-2 outer sites placed at leg length `alpha`
/// over their two inner neighbors. Returns the register and the L1 residual
/// `sum_{i != j} |C6/r^6 + 4 K_ij|`.
pub fn parameterized_embedding_triangular<S: Scalar>(
    alpha_um: S,
    beta_um: S,
    cluster: &crate::slavespin::ClusterModel<S>,
    coupling: &Matrix<S>,
    constants: &DeviceConstants<S>,
) -> Result<(AtomRegister<S>, S)> {
    let dmin = constants.min_distance_um;
    if alpha_um <= dmin || beta_um <= dmin {
        return Err(Error::InvalidInput("shell parameters must exceed the distance floor".into()));
    }
    let n = cluster.sites;
    let degree: Vec<usize> = (0..n)
        .map(|i| cluster.nn_pairs.iter().filter(|&&(a, b)| a == i || b == i).count())
        .collect();
    // inner sites: degree > 2; outer: degree == 2 attached to two inner sites
    let unit = &cluster.unit_positions;
    let centroid = {
        let mut cx = S::zero();
        let mut cy = S::zero();
        for p in unit {
            cx = cx + p[0];
            cy = cy + p[1];
        }
        [cx / S::of(n as f64), cy / S::of(n as f64)]
    };
    let mut pos = vec![[S::zero(), S::zero()]; n];
    for i in 0..n {
        if degree[i] > 2 {
            pos[i] = [
                centroid[0] + (unit[i][0] - centroid[0]) * beta_um,
                centroid[1] + (unit[i][1] - centroid[1]) * beta_um,
            ];
        }
    }
    for i in 0..n {
        if degree[i] > 2 {
            continue;
        }
        let neigh: Vec<usize> = cluster
            .nn_pairs
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        if neigh.len() != 2 || degree[neigh[0]] <= 2 || degree[neigh[1]] <= 2 {
            return Err(Error::InvalidInput(
                "triangular embedding expects degree-2 sites bonded to two inner sites".into(),
            ));
        }
        let (p, q) = (pos[neigh[0]], pos[neigh[1]]);
        let mid = [(p[0] + q[0]) * S::of(0.5), (p[1] + q[1]) * S::of(0.5)];
        let half = ((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1])).sqrt()
            * S::of(0.5);
        if alpha_um <= half {
            return Err(Error::InvalidInput(
                "alpha shorter than half the inner bond; geometry collapses".into(),
            ));
        }
        let height = (alpha_um * alpha_um - half * half).sqrt();
        // place away from the centroid along the perpendicular bisector
        let mut nx = -(p[1] - q[1]);
        let mut ny = p[0] - q[0];
        let nn = (nx * nx + ny * ny).sqrt();
        nx = nx / nn;
        ny = ny / nn;
        let outward = (mid[0] - centroid[0]) * nx + (mid[1] - centroid[1]) * ny;
        let sgn = if outward >= S::zero() { S::one() } else { -S::one() };
        pos[i] = [mid[0] + sgn * nx * height, mid[1] + sgn * ny * height];
    }
    let register = AtomRegister::new(pos, dmin)?;
    let v = register.interaction_matrix(constants);
    let mut res = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                res = res + (v[(i, j)] + S::of(4.0) * coupling[(i, j)]).abs();
            }
        }
    }
    Ok((register, res))
}

/// Optimize the (alpha, beta) shell parameters by Nelder-Mead.
pub fn optimize_triangular_shells<S: Scalar>(
    cluster: &crate::slavespin::ClusterModel<S>,
    coupling: &Matrix<S>,
    constants: &DeviceConstants<S>,
    max_evals: usize,
) -> Result<(AtomRegister<S>, S)> {
    let start = r_init(coupling, constants)?;
    let dmin = constants.min_distance_um;
    let objective = |x: &[S]| -> S {
        match parameterized_embedding_triangular(x[0], x[1], cluster, coupling, constants) {
            Ok((_, res)) => res,
            Err(_) => S::of(1e12),
        }
    };
    let lo = dmin * S::of(1.05);
    let hi = start * S::of(4.0);
    let out = optimize::nelder_mead(
        objective,
        &[start, start],
        &[(lo, hi), (lo, hi)],
        max_evals,
        S::of(1e-12),
    );
    parameterized_embedding_triangular(out.best_x[0], out.best_x[1], cluster, coupling, constants)
}

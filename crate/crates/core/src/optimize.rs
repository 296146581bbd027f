//! Derivative-free optimizers: a Nelder-Mead simplex with box bounds, a
//! Powell-style cyclic line search with a fixed evaluation quota, and a
//! small differential-evolution search. All are deterministic for a fixed
//! seed and tolerate noisy objectives.

use crate::rng;
use crate::scalar::Scalar;
use rand::Rng;

pub struct OptimOutcome<S> {
    pub best_x: Vec<S>,
    pub best_f: S,
    pub evaluations: usize,
}

fn clamp<S: Scalar>(x: &mut [S], bounds: &[(S, S)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds.iter()) {
        *v = (*v).max(lo).min(hi);
    }
}

/// Nelder-Mead simplex minimization within a box; the starting simplex is
/// built around `x0` with per-coordinate steps of a tenth of the box width.
pub fn nelder_mead<S: Scalar>(
    mut f: impl FnMut(&[S]) -> S,
    x0: &[S],
    bounds: &[(S, S)],
    max_evals: usize,
    tol: S,
) -> OptimOutcome<S> {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[S], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut simplex: Vec<Vec<S>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let width = bounds[i].1 - bounds[i].0;
        let step = width * S::of(0.1);
        v[i] = v[i] + if v[i] + step <= bounds[i].1 { step } else { -step };
        clamp(&mut v, bounds);
        simplex.push(v);
    }
    let mut values: Vec<S> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (S::of(1.0), S::of(2.0), S::of(0.5), S::of(0.5));
    while evals < max_evals {
        // sort ascending
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let spread = values[n] - values[0];
        if spread.abs() < tol {
            break;
        }
        // centroid of all but the worst
        let mut centroid = vec![S::zero(); n];
        for v in simplex.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(v.iter()) {
                *c = *c + *x;
            }
        }
        for c in centroid.iter_mut() {
            *c = *c / S::of(n as f64);
        }
        let worst = simplex[n].clone();
        let mut reflected: Vec<S> =
            centroid.iter().zip(worst.iter()).map(|(&c, &w)| c + alpha * (c - w)).collect();
        clamp(&mut reflected, bounds);
        let fr = eval(&reflected, &mut evals);
        if fr < values[0] {
            let mut expanded: Vec<S> =
                centroid.iter().zip(worst.iter()).map(|(&c, &w)| c + gamma * (c - w)).collect();
            clamp(&mut expanded, bounds);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let mut contracted: Vec<S> =
                centroid.iter().zip(worst.iter()).map(|(&c, &w)| c + rho * (w - c)).collect();
            clamp(&mut contracted, bounds);
            let fc = eval(&contracted, &mut evals);
            if fc < values[n] {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                // shrink toward the best vertex
                let best = simplex[0].clone();
                for i in 1..=n {
                    for (x, b) in simplex[i].iter_mut().zip(best.iter()) {
                        *x = *b + sigma * (*x - *b);
                    }
                    let vi = simplex[i].clone();
                    values[i] = eval(&vi, &mut evals);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    OptimOutcome { best_x: simplex[best].clone(), best_f: values[best], evaluations: evals }
}

/// Powell-style bounded minimization: cyclic golden-section line searches
/// along the coordinate axes, stopping exactly at the evaluation quota.
pub fn powell_quota<S: Scalar>(
    mut f: impl FnMut(&[S]) -> S,
    x0: &[S],
    bounds: &[(S, S)],
    quota: usize,
) -> OptimOutcome<S> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut evals = 0usize;
    let mut fx = {
        evals += 1;
        f(&x)
    };
    let golden = S::of(0.381_966_011_250_105);
    let mut dir = 0usize;
    let mut span: Vec<S> = bounds.iter().map(|&(lo, hi)| (hi - lo) * S::of(0.25)).collect();
    // each line search costs at least two probes
    while evals + 2 <= quota {
        let i = dir % n;
        dir += 1;
        let lo = bounds[i].0.max(x[i] - span[i]);
        let hi = bounds[i].1.min(x[i] + span[i]);
        if hi - lo < S::of(1e-12) {
            if dir > 4 * n {
                break;
            }
            continue;
        }
        let mut a = lo;
        let mut b = hi;
        let mut x1 = a + golden * (b - a);
        let mut x2 = b - golden * (b - a);
        let probe = |x: &mut Vec<S>, i: usize, v: S, f: &mut dyn FnMut(&[S]) -> S| {
            let old = x[i];
            x[i] = v;
            let r = f(x);
            x[i] = old;
            r
        };
        evals += 1;
        let mut f1 = probe(&mut x, i, x1, &mut f);
        evals += 1;
        let mut f2 = probe(&mut x, i, x2, &mut f);
        for _ in 0..4 {
            if evals + 1 > quota {
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = a + golden * (b - a);
                evals += 1;
                f1 = probe(&mut x, i, x1, &mut f);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = b - golden * (b - a);
                evals += 1;
                f2 = probe(&mut x, i, x2, &mut f);
            }
        }
        let (xv, fv) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if fv < fx {
            x[i] = xv;
            fx = fv;
        } else {
            span[i] = span[i] * S::of(0.6);
        }
    }
    OptimOutcome { best_x: x, best_f: fx, evaluations: evals }
}

/// Differential evolution (rand/1/bin) within a box.
pub fn differential_evolution<S: Scalar>(
    mut f: impl FnMut(&[S]) -> S,
    bounds: &[(S, S)],
    population: usize,
    generations: usize,
    seed: u64,
) -> OptimOutcome<S> {
    let n = bounds.len();
    let pop = population.max(4);
    let mut rng = rng::derive(seed, &[0xde]);
    let mut xs: Vec<Vec<S>> = (0..pop)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * S::of(rng.gen_range(0.0..1.0)))
                .collect()
        })
        .collect();
    let mut evals = 0usize;
    let mut fs: Vec<S> = xs
        .iter()
        .map(|x| {
            evals += 1;
            f(x)
        })
        .collect();
    let fweight = S::of(0.7);
    let cross = 0.9;
    for _gen in 0..generations {
        for i in 0..pop {
            let mut pick = || loop {
                let k = rng.gen_range(0..pop);
                if k != i {
                    return k;
                }
            };
            let (a, b, c) = (pick(), pick(), pick());
            let jrand = rng.gen_range(0..n);
            let mut trial = xs[i].clone();
            for j in 0..n {
                if j == jrand || rng.gen_range(0.0..1.0) < cross {
                    trial[j] = xs[a][j] + fweight * (xs[b][j] - xs[c][j]);
                }
            }
            clamp(&mut trial, bounds);
            evals += 1;
            let ft = f(&trial);
            if ft <= fs[i] {
                xs[i] = trial;
                fs[i] = ft;
            }
        }
    }
    let mut best = 0;
    for i in 1..pop {
        if fs[i] < fs[best] {
            best = i;
        }
    }
    OptimOutcome { best_x: xs[best].clone(), best_f: fs[best], evaluations: evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum()
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let bounds = vec![(-2.0, 2.0); 3];
        let out = nelder_mead(sphere, &[1.5, -1.0, 0.0], &bounds, 600, 1e-12);
        for v in out.best_x {
            assert!((v - 0.3).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn powell_respects_quota() {
        let bounds = vec![(-2.0, 2.0); 2];
        let out = powell_quota(sphere, &[1.0, -1.0], &bounds, 20);
        assert!(out.evaluations <= 20 && out.evaluations >= 19, "evals {}", out.evaluations);
        assert!(out.best_f < sphere(&[1.0, -1.0]));
    }

    #[test]
    fn differential_evolution_finds_global_min() {
        // two-well function, global minimum at 1.2
        let f = |x: &[f64]| {
            let v = x[0];
            (v * v - 1.44).powi(2) + 0.3 * (v - 1.2).abs()
        };
        let out = differential_evolution(f, &[(-3.0, 3.0)], 12, 40, 7);
        assert!((out.best_x[0] - 1.2).abs() < 1e-2, "{}", out.best_x[0]);
    }

    #[test]
    fn differential_evolution_is_seed_deterministic() {
        let f = |x: &[f64]| x[0].powi(2);
        let a = differential_evolution(f, &[(-1.0, 1.0)], 8, 10, 3);
        let b = differential_evolution(f, &[(-1.0, 1.0)], 8, 10, 3);
        assert_eq!(a.best_x, b.best_x);
    }
}

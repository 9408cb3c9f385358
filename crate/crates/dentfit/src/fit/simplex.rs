//! Derivative-free simplex minimizer.
//!
//! Standard Nelder-Mead moves (reflect α=1, expand γ=2, contract ρ=0.5,
//! shrink σ=0.5) over an unconstrained vector; bound handling is the
//! caller's job via reparameterization. Fully deterministic: no restarts,
//! no randomness, stable ordering.

/// Stop conditions and initial simplex shape.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Hard cap on objective evaluations.
    pub max_evals: usize,
    /// Converged when the worst-best objective spread falls below this.
    pub spread_tol: f64,
    /// Per-dimension offsets of the initial simplex vertices.
    pub initial_steps: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let n = x0.len();
    assert_eq!(
        opts.initial_steps.len(),
        n,
        "one initial step per dimension"
    );

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((eval(x0, &mut evals), x0.to_vec()));
    for dim in 0..n {
        let mut vertex = x0.to_vec();
        vertex[dim] += opts.initial_steps[dim];
        simplex.push((eval(&vertex, &mut evals), vertex));
    }
    simplex.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut converged = false;
    while evals < opts.max_evals {
        let spread = simplex[n].0 - simplex[0].0;
        if spread.abs() <= opts.spread_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for (_, vertex) in simplex.iter().take(n) {
            for (c, &v) in centroid.iter_mut().zip(vertex) {
                *c += v;
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }

        let worst = simplex[n].1.clone();
        let blend = |a: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(&c, &w)| c + a * (c - w))
                .collect()
        };

        let reflected = blend(ALPHA);
        let f_reflected = eval(&reflected, &mut evals);

        if f_reflected < simplex[0].0 {
            let expanded = blend(GAMMA);
            let f_expanded = eval(&expanded, &mut evals);
            simplex[n] = if f_expanded < f_reflected {
                (f_expanded, expanded)
            } else {
                (f_reflected, reflected)
            };
        } else if f_reflected < simplex[n - 1].0 {
            simplex[n] = (f_reflected, reflected);
        } else {
            let (contracted, f_contracted) = if f_reflected < simplex[n].0 {
                let outside = blend(RHO);
                let v = eval(&outside, &mut evals);
                (outside, v)
            } else {
                let inside = blend(-RHO);
                let v = eval(&inside, &mut evals);
                (inside, v)
            };
            if f_contracted < simplex[n].0.min(f_reflected) {
                simplex[n] = (f_contracted, contracted);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    if evals >= opts.max_evals {
                        break;
                    }
                    let mut vertex = entry.1.clone();
                    for (v, &b) in vertex.iter_mut().zip(&best) {
                        *v = b + SIGMA * (*v - b);
                    }
                    let value = eval(&vertex, &mut evals);
                    *entry = (value, vertex);
                }
            }
        }
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let best = simplex.into_iter().next().expect("non-empty simplex");
    SimplexResult {
        x: best.1,
        value: best.0,
        evaluations: evals,
        converged,
    }
}

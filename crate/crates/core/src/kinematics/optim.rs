//! Bound-constrained local minimizer used by the finger phase of the inverse
//! kinematics: sequential quadratic models with a BFGS Hessian estimate,
//! finite-difference gradients and projected backtracking steps.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    /// Hard cap on objective evaluations, gradient probes included.
    pub max_evals: usize,
    /// Stop once an accepted step changes the objective by less than this
    /// (relative to `1 + |f|`).
    pub function_tol: f64,
    /// Stop once the projected gradient infinity-norm drops below this.
    pub optimality_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_evals: 500,
            function_tol: 1e-1,
            optimality_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Optimality,
    FunctionTolerance,
    StepTooSmall,
    EvaluationBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimReport {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub reason: StopReason,
}

impl OptimReport {
    pub fn converged(&self) -> bool {
        self.reason != StopReason::EvaluationBudget
    }
}

struct Counted<F> {
    f: F,
    evals: usize,
    max: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.max {
            return None;
        }
        self.evals += 1;
        let v = (self.f)(x);
        if v < self.best_f {
            self.best_f = v;
            self.best_x.copy_from_slice(x);
        }
        Some(v)
    }
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// Minimize `f` on the box `[lo, hi]` starting from `x0`.
pub fn minimize_box<F>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &OptimOptions) -> OptimReport
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut obj = Counted {
        f,
        evals: 0,
        max: opts.max_evals.max(1),
        best_x: x.clone(),
        best_f: f64::INFINITY,
    };
    let budget = |obj: &Counted<F>, iterations| OptimReport {
        x: obj.best_x.clone(),
        f: obj.best_f,
        evals: obj.evals,
        iterations,
        reason: StopReason::EvaluationBudget,
    };

    let Some(mut fx) = obj.eval(&x) else {
        return budget(&obj, 0);
    };
    // inverse Hessian estimate
    let mut h_inv = vec![vec![0.0; n]; n];
    for (i, row) in h_inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let gradient = |obj: &mut Counted<F>, x: &[f64]| -> Option<Vec<f64>> {
        let mut g = vec![0.0; n];
        let mut xp = x.to_vec();
        for i in 0..n {
            let h = 1e-6 * x[i].abs().max(1.0);
            let up = (x[i] + h).min(hi[i]);
            let dn = (x[i] - h).max(lo[i]);
            xp[i] = up;
            let fu = obj.eval(&xp)?;
            xp[i] = dn;
            let fd = obj.eval(&xp)?;
            xp[i] = x[i];
            g[i] = if up > dn { (fu - fd) / (up - dn) } else { 0.0 };
        }
        Some(g)
    };

    let Some(mut g) = gradient(&mut obj, &x) else {
        return budget(&obj, 0);
    };
    let mut iterations = 0;
    loop {
        // projected gradient: components pushing against an active bound vanish
        let pg_norm = (0..n)
            .map(|i| {
                let step = (x[i] - g[i]).clamp(lo[i], hi[i]);
                (step - x[i]).abs()
            })
            .fold(0.0, f64::max);
        if pg_norm <= opts.optimality_tol {
            return OptimReport {
                x,
                f: fx,
                evals: obj.evals,
                iterations,
                reason: StopReason::Optimality,
            };
        }
        iterations += 1;

        let mut d: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| h_inv[i][j] * g[j]).sum::<f64>())
            .collect();
        // free variables at an active bound cannot move outward
        for i in 0..n {
            if (x[i] <= lo[i] && d[i] < 0.0) || (x[i] >= hi[i] && d[i] > 0.0) {
                d[i] = 0.0;
            }
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // reset to steepest descent
            for (i, row) in h_inv.iter_mut().enumerate() {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[i] = 1.0;
            }
            d = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            project(&mut xn, lo, hi);
            let Some(fn_) = obj.eval(&xn) else {
                return budget(&obj, iterations);
            };
            if fn_ <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fn_));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            return OptimReport {
                x,
                f: fx,
                evals: obj.evals,
                iterations,
                reason: StopReason::StepTooSmall,
            };
        };
        let Some(gn) = gradient(&mut obj, &xn) else {
            return budget(&obj, iterations);
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h_inv[i][j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] += (sy + yhy) * s[i] * s[j] / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }

        let df = (fx - fnew).abs();
        x = xn;
        g = gn;
        let prev = fx;
        fx = fnew;
        if df < opts.function_tol * (1.0 + prev.abs()) {
            return OptimReport {
                x,
                f: fx,
                evals: obj.evals,
                iterations,
                reason: StopReason::FunctionTolerance,
            };
        }
    }
}

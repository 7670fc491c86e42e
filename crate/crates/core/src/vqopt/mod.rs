//! Derivative-free parameter optimization: full grid search over a box,
//! followed by a bounded Nelder–Mead simplex refinement with a deterministic
//! initial simplex. Everything maximizes.

pub mod experiments;

use rayon::prelude::*;

use crate::{Error, Result};

/// A box-constrained maximization problem.
pub struct OptProblem<F: Fn(&[f64]) -> f64 + Sync> {
    pub names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    /// Grid resolution per axis (>= 2).
    pub grid: Vec<usize>,
    /// Maximum number of objective evaluations, counting the grid.
    pub budget: usize,
    pub objective: F,
}

/// Log of an optimization run.
#[derive(Clone, Debug, Default)]
pub struct OptTrace {
    /// Every evaluation in order: (parameters, value).
    pub evaluations: Vec<(Vec<f64>, f64)>,
    pub best_params: Vec<f64>,
    pub best_value: f64,
}

impl OptTrace {
    pub fn new() -> Self {
        OptTrace { evaluations: Vec::new(), best_params: Vec::new(), best_value: f64::NEG_INFINITY }
    }

    fn record(&mut self, params: Vec<f64>, value: f64) {
        if value > self.best_value {
            self.best_value = value;
            self.best_params = params.clone();
        }
        self.evaluations.push((params, value));
    }

    /// Running maximum of the recorded values.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.evaluations
            .iter()
            .map(|(_, v)| {
                best = best.max(*v);
                best
            })
            .collect()
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> OptProblem<F> {
    fn validate(&self) -> Result<()> {
        let d = self.bounds.len();
        if d == 0 || self.grid.len() != d {
            return Err(Error::InvalidArgument("empty or inconsistent search space".into()));
        }
        if self.grid.iter().any(|&g| g < 2) {
            return Err(Error::InvalidArgument("grid resolution must be >= 2 per axis".into()));
        }
        if self.bounds.iter().any(|(lo, hi)| lo >= hi || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidArgument("bounds must be finite and ordered".into()));
        }
        let grid_size: usize = self.grid.iter().product();
        if self.budget < grid_size {
            return Err(Error::InvalidArgument(format!(
                "budget {} below grid size {grid_size}",
                self.budget
            )));
        }
        Ok(())
    }

    fn grid_point(&self, mut index: usize) -> Vec<f64> {
        let mut point = Vec::with_capacity(self.bounds.len());
        for (axis, &(lo, hi)) in self.bounds.iter().enumerate() {
            let res = self.grid[axis];
            let step = index % res;
            index /= res;
            point.push(lo + (hi - lo) * step as f64 / (res - 1) as f64);
        }
        point
    }

    fn clamp(&self, point: &mut [f64]) {
        for (x, &(lo, hi)) in point.iter_mut().zip(&self.bounds) {
            *x = x.clamp(lo, hi);
        }
    }

    /// Evaluates the full Cartesian grid (in parallel, merged in grid order)
    /// and returns the best point.
    pub fn grid_search(&self, trace: &mut OptTrace) -> Result<Vec<f64>> {
        self.validate()?;
        let grid_size: usize = self.grid.iter().product();
        let values: Vec<(Vec<f64>, f64)> = (0..grid_size)
            .into_par_iter()
            .map(|i| {
                let p = self.grid_point(i);
                let v = (self.objective)(&p);
                (p, v)
            })
            .collect();
        for (p, v) in values {
            trace.record(p, v);
        }
        Ok(trace.best_params.clone())
    }

    /// Bounded Nelder–Mead from `start`: deterministic initial simplex with
    /// per-axis steps of 5% of the box width, candidates clamped into the
    /// box, terminating when the simplex diameter drops below 1e-4 or the
    /// budget is exhausted. The recorded best value never decreases.
    pub fn local_refine(&self, start: &[f64], trace: &mut OptTrace) -> Result<()> {
        self.validate()?;
        if start.len() != self.bounds.len() {
            return Err(Error::DimensionMismatch { expected: self.bounds.len(), got: start.len() });
        }
        let d = self.bounds.len();
        let mut remaining = self.budget.saturating_sub(trace.evaluations.len());
        let eval = |p: &[f64], trace: &mut OptTrace, remaining: &mut usize| -> Option<f64> {
            if *remaining == 0 {
                return None;
            }
            *remaining -= 1;
            let v = (self.objective)(p);
            trace.record(p.to_vec(), v);
            Some(v)
        };

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
        let mut start = start.to_vec();
        self.clamp(&mut start);
        simplex.push(start.clone());
        for axis in 0..d {
            let (lo, hi) = self.bounds[axis];
            let step = 0.05 * (hi - lo);
            let mut v = start.clone();
            v[axis] = if v[axis] + step <= hi { v[axis] + step } else { v[axis] - step };
            simplex.push(v);
        }
        let mut values: Vec<f64> = Vec::with_capacity(d + 1);
        for v in &simplex {
            match eval(v, trace, &mut remaining) {
                Some(val) => values.push(val),
                None => return Ok(()),
            }
        }

        const ALPHA: f64 = 1.0;
        const GAMMA: f64 = 2.0;
        const RHO: f64 = 0.5;
        const SIGMA: f64 = 0.5;
        loop {
            let mut order: Vec<usize> = (0..simplex.len()).collect();
            order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
            let simplex_sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
            let values_sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
            simplex = simplex_sorted;
            values = values_sorted;

            let diameter = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diameter < 1e-4 || remaining == 0 {
                return Ok(());
            }

            let worst = simplex.len() - 1;
            let centroid: Vec<f64> = (0..d)
                .map(|axis| simplex[..worst].iter().map(|v| v[axis]).sum::<f64>() / worst as f64)
                .collect();
            let mut reflected: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + ALPHA * (c - w))
                .collect();
            self.clamp(&mut reflected);
            let fr = match eval(&reflected, trace, &mut remaining) {
                Some(v) => v,
                None => return Ok(()),
            };

            if fr > values[0] {
                let mut expanded: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(c, w)| c + GAMMA * (c - w))
                    .collect();
                self.clamp(&mut expanded);
                let fe = match eval(&expanded, trace, &mut remaining) {
                    Some(v) => v,
                    None => return Ok(()),
                };
                if fe > fr {
                    simplex[worst] = expanded;
                    values[worst] = fe;
                } else {
                    simplex[worst] = reflected;
                    values[worst] = fr;
                }
            } else if fr > values[worst - 1] {
                simplex[worst] = reflected;
                values[worst] = fr;
            } else {
                let mut contracted: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(c, w)| c + RHO * (w - c))
                    .collect();
                self.clamp(&mut contracted);
                let fc = match eval(&contracted, trace, &mut remaining) {
                    Some(v) => v,
                    None => return Ok(()),
                };
                if fc > values[worst] {
                    simplex[worst] = contracted;
                    values[worst] = fc;
                } else {
                    // Shrink toward the best vertex.
                    for i in 1..simplex.len() {
                        let shrunk: Vec<f64> = simplex[i]
                            .iter()
                            .zip(&simplex[0])
                            .map(|(x, b)| b + SIGMA * (x - b))
                            .collect();
                        simplex[i] = shrunk;
                        values[i] = match eval(&simplex[i], trace, &mut remaining) {
                            Some(v) => v,
                            None => return Ok(()),
                        };
                    }
                }
            }
        }
    }

    /// Grid search, optional extra candidate starts, then refinement from the
    /// best point seen.
    pub fn run(&self, extra_starts: &[Vec<f64>]) -> Result<OptTrace> {
        let mut trace = OptTrace::new();
        self.grid_search(&mut trace)?;
        for start in extra_starts {
            if trace.evaluations.len() >= self.budget {
                break;
            }
            let mut p = start.clone();
            self.clamp(&mut p);
            let v = (self.objective)(&p);
            trace.record(p, v);
        }
        let best = trace.best_params.clone();
        self.local_refine(&best, &mut trace)?;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_finds_exact_point_of_quadratic() {
        let problem = OptProblem {
            names: vec!["beta".into()],
            bounds: vec![(0.0, 1.0)],
            grid: vec![11],
            budget: 600,
            objective: |p: &[f64]| -(p[0] - 0.3) * (p[0] - 0.3),
        };
        let mut trace = OptTrace::new();
        let best = problem.grid_search(&mut trace).unwrap();
        assert!((best[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn separable_quadratic_lands_on_nearest_grid_point() {
        let problem = OptProblem {
            names: vec!["a".into(), "b".into()],
            bounds: vec![(-1.0, 1.0), (-1.0, 1.0)],
            grid: vec![5, 5],
            budget: 600,
            objective: |p: &[f64]| {
                -(p[0] - 0.42) * (p[0] - 0.42) - (p[1] + 0.77) * (p[1] + 0.77)
            },
        };
        let mut trace = OptTrace::new();
        let best = problem.grid_search(&mut trace).unwrap();
        // Grid: -1, -0.5, 0, 0.5, 1.
        assert_eq!(best, vec![0.5, -1.0]);
    }

    #[test]
    fn refinement_converges_on_smooth_concave_objective() {
        let problem = OptProblem {
            names: vec!["x".into()],
            bounds: vec![(0.0, 1.0)],
            grid: vec![11],
            budget: 600,
            objective: |p: &[f64]| -(p[0] - 0.637) * (p[0] - 0.637),
        };
        let trace = problem.run(&[]).unwrap();
        assert!((trace.best_params[0] - 0.637).abs() < 1e-3);
        assert!(trace.best_value > -1e-6);
    }

    #[test]
    fn rosenbrock_improves_ninety_percent_of_gap() {
        let problem = OptProblem {
            names: vec!["x".into(), "y".into()],
            bounds: vec![(-2.0, 2.0), (-2.0, 2.0)],
            grid: vec![2, 2],
            budget: 500,
            objective: |p: &[f64]| {
                let (x, y) = (p[0], p[1]);
                -((1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x))
            },
        };
        // Start the refinement at (0, 0): value -1, optimum 0.
        let mut trace = OptTrace::new();
        trace.record(vec![0.0, 0.0], (problem.objective)(&[0.0, 0.0]));
        problem.local_refine(&[0.0, 0.0], &mut trace).unwrap();
        assert!(trace.best_value >= -0.1, "best {}", trace.best_value);
    }

    #[test]
    fn best_so_far_is_monotone_even_with_noisy_objective() {
        let problem = OptProblem {
            names: vec!["x".into(), "y".into()],
            bounds: vec![(-1.0, 1.0), (-1.0, 1.0)],
            grid: vec![5, 5],
            budget: 200,
            objective: |p: &[f64]| {
                let base = -(p[0] * p[0] + p[1] * p[1]);
                base + 0.01 * (1e5 * (p[0] + 2.0 * p[1])).sin()
            },
        };
        let trace = problem.run(&[]).unwrap();
        let series = trace.best_so_far();
        for w in series.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let grid_best = trace.evaluations[..25].iter().map(|(_, v)| *v).fold(f64::MIN, f64::max);
        assert!(trace.best_value >= grid_best);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let make = || OptProblem {
            names: vec!["x".into(), "y".into()],
            bounds: vec![(-1.5, 1.2), (-0.4, 2.0)],
            grid: vec![7, 7],
            budget: 300,
            objective: |p: &[f64]| (p[0] * 3.1).sin() * (p[1] * 1.7).cos() - p[0] * p[0] * 0.2,
        };
        let a = make().run(&[vec![0.1, 0.2]]).unwrap();
        let b = make().run(&[vec![0.1, 0.2]]).unwrap();
        assert_eq!(a.evaluations.len(), b.evaluations.len());
        for ((pa, va), (pb, vb)) in a.evaluations.iter().zip(&b.evaluations) {
            assert_eq!(pa, pb);
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }

    #[test]
    fn budget_below_grid_is_rejected() {
        let problem = OptProblem {
            names: vec!["x".into()],
            bounds: vec![(0.0, 1.0)],
            grid: vec![11],
            budget: 5,
            objective: |_: &[f64]| 0.0,
        };
        let mut trace = OptTrace::new();
        assert!(problem.grid_search(&mut trace).is_err());
    }
}

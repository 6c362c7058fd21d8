use std::io::Write;

use serde::Serialize;

use super::fb::{build_newton_matrix, reformulate, ComponentDeriv};
use super::linalg::{factor_in_place, lu_solve};
use super::{DenseMatrix, McProblem, McSolution, McpError, SolveStatus, SolverOptions};

/// Merit level below which smoothing is switched off.
const SMOOTHING_CUTOFF_MERIT: f64 = 1e-4;
/// Largest Levenberg shift tried before giving up on the Newton system.
const LEVENBERG_MAX: f64 = 1e2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionKind {
    SmoothedNewton,
    Newton,
    Gradient,
}

/// One accepted iteration of the solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `½‖Φ‖²` at the accepted iterate (no smoothing).
    pub merit: f64,
    pub residual_inf_norm: f64,
    pub step_length: f64,
    pub mu: f64,
    /// Levenberg shift used for the direction, zero when none was needed.
    pub levenberg: f64,
    pub direction: DirectionKind,
}

/// Writes each [`IterationRecord`] as one JSON line.
pub struct JsonLinesTrace<W: Write> {
    sink: W,
}

impl<W: Write> JsonLinesTrace<W> {
    pub fn new(sink: W) -> Self {
        Self { sink }
    }

    pub fn record(&mut self, rec: &IterationRecord) {
        // Trace output is best effort.
        if let Ok(line) = serde_json::to_string(rec) {
            let _ = writeln!(self.sink, "{line}");
        }
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

/// Solves the MCP from `w0` with a damped semismooth Newton method.
///
/// Errors are reserved for malformed input; numerical failure is reported in
/// [`McSolution::status`] together with the best iterate.
pub fn solve_mcp<P: McProblem>(
    problem: &P,
    w0: &[f64],
    options: &SolverOptions,
) -> Result<McSolution, McpError> {
    solve_mcp_traced(problem, w0, options, &mut |_| {})
}

/// Same as [`solve_mcp`], reporting every accepted iteration to `trace`.
pub fn solve_mcp_traced<P: McProblem>(
    problem: &P,
    w0: &[f64],
    options: &SolverOptions,
    trace: &mut dyn FnMut(&IterationRecord),
) -> Result<McSolution, McpError> {
    options.validate()?;
    let n = problem.dim();
    if w0.len() != n || problem.bounds().len() != n {
        return Err(McpError::Dimension {
            expected: n,
            got: w0.len(),
        });
    }
    let mut ws = Workspace::new(problem, options);
    ws.w.copy_from_slice(w0);
    problem.bounds().clamp(&mut ws.w);
    Ok(ws.run(trace))
}

struct Evaluation {
    phi: Vec<f64>,
    merit: f64,
    inf: f64,
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n && order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

struct Workspace<'a, P> {
    problem: &'a P,
    opts: &'a SolverOptions,
    n: usize,
    w: Vec<f64>,
    f: Vec<f64>,
    jac: DenseMatrix,
    newton: DenseMatrix,
    lu: DenseMatrix,
    order: Option<Vec<usize>>,
    /// Inverse of `order`: where each variable sits in the reordered system.
    position: Vec<usize>,
    rhs_perm: Vec<f64>,
    dir_perm: Vec<f64>,
    derivs: Vec<ComponentDeriv>,
    trial: Vec<f64>,
}

impl<'a, P: McProblem> Workspace<'a, P> {
    fn new(problem: &'a P, opts: &'a SolverOptions) -> Self {
        let n = problem.dim();
        let order = problem.ordering().filter(|o| is_permutation(o, n));
        let mut position = vec![0; n];
        if let Some(o) = &order {
            for (i, &v) in o.iter().enumerate() {
                position[v] = i;
            }
        }
        Self {
            problem,
            opts,
            n,
            w: vec![0.0; n],
            f: vec![0.0; n],
            jac: DenseMatrix::zeros(n, n),
            newton: DenseMatrix::zeros(n, n),
            lu: DenseMatrix::zeros(n, n),
            order,
            position,
            rhs_perm: vec![0.0; n],
            dir_perm: vec![0.0; n],
            derivs: Vec::with_capacity(n),
            trial: vec![0.0; n],
        }
    }

    fn evaluate(&mut self, at_trial: bool) -> Evaluation {
        let w = if at_trial { &self.trial } else { &self.w };
        self.problem.residual(w, &mut self.f);
        let phi = reformulate(self.problem, w, &self.f, 0.0, None);
        summarize(phi)
    }

    fn run(&mut self, trace: &mut dyn FnMut(&IterationRecord)) -> McSolution {
        let mut current = self.evaluate(false);
        let mut mu = self.opts.fb_smoothing_start;
        let mut iterations = 0;
        let mut rhs = vec![0.0; self.n];
        let mut grad = vec![0.0; self.n];
        let mut dir = vec![0.0; self.n];
        let mut recent = std::collections::VecDeque::with_capacity(self.opts.nonmonotone_memory);

        let status = loop {
            if !current.merit.is_finite() {
                break SolveStatus::LineSearchFailure;
            }
            if current.inf <= self.opts.tol_residual {
                break SolveStatus::Converged;
            }
            if iterations == self.opts.max_iterations {
                break SolveStatus::MaxIterations;
            }
            if current.merit < SMOOTHING_CUTOFF_MERIT {
                mu = 0.0;
            }
            // Keep the smoothing error √(2μ) an order below the residual, so
            // starts close to a solution are not pushed away from it.
            mu = mu.min(0.5 * (0.1 * current.inf).powi(2));

            // `self.f` holds F at the current iterate.
            self.jac.fill(0.0);
            self.problem.jacobian(&self.w, &mut self.jac);

            // ∇(½‖Φ‖²) = H₀ᵀ Φ with H₀ the unsmoothed Newton matrix.
            reformulate(self.problem, &self.w, &self.f, 0.0, Some(&mut self.derivs));
            let derivs0 = self.derivs.clone();
            self.jac.mul_transpose_vec(
                &current
                    .phi
                    .iter()
                    .zip(&derivs0)
                    .map(|(p, d)| p * d.df)
                    .collect::<Vec<_>>(),
                &mut grad,
            );
            for ((g, p), d) in grad.iter_mut().zip(&current.phi).zip(&derivs0) {
                *g += p * d.dw;
            }

            if recent.len() == self.opts.nonmonotone_memory {
                recent.pop_front();
            }
            recent.push_back(current.merit);
            let reference = recent.iter().fold(current.merit, |m: f64, v| m.max(*v));
            let mut accepted = None;
            let mut any_direction = false;
            let kinds: &[DirectionKind] = if mu > 0.0 {
                &[DirectionKind::SmoothedNewton, DirectionKind::Newton, DirectionKind::Gradient]
            } else {
                &[DirectionKind::Newton, DirectionKind::Gradient]
            };
            for &kind in kinds {
                let levenberg = match kind {
                    DirectionKind::Gradient => {
                        dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
                        0.0
                    }
                    DirectionKind::SmoothedNewton => {
                        let phi_mu = reformulate(self.problem, &self.w, &self.f, mu, Some(&mut self.derivs));
                        rhs.iter_mut().zip(&phi_mu).for_each(|(r, p)| *r = -p);
                        build_newton_matrix(&self.jac, &self.derivs, &mut self.newton);
                        match self.solve_regularized(&rhs, &mut dir) {
                            Some(l) => l,
                            None => continue,
                        }
                    }
                    DirectionKind::Newton => {
                        rhs.iter_mut().zip(&current.phi).for_each(|(r, p)| *r = -p);
                        build_newton_matrix(&self.jac, &derivs0, &mut self.newton);
                        match self.solve_regularized(&rhs, &mut dir) {
                            Some(l) => l,
                            None => continue,
                        }
                    }
                };
                any_direction = true;
                if let Some((eval, t)) = self.line_search(reference, &grad, &dir) {
                    accepted = Some((eval, t, kind, levenberg));
                    break;
                }
            }

            let Some((eval, t, kind, levenberg)) = accepted else {
                break if any_direction {
                    SolveStatus::LineSearchFailure
                } else {
                    SolveStatus::SingularSystem
                };
            };
            std::mem::swap(&mut self.w, &mut self.trial);
            current = eval;
            iterations += 1;
            trace(&IterationRecord {
                iteration: iterations,
                merit: current.merit,
                residual_inf_norm: current.inf,
                step_length: t,
                mu,
                levenberg,
                direction: kind,
            });
            mu *= self.opts.fb_smoothing_shrink;
        };

        McSolution {
            w_star: self.w.clone(),
            status,
            residual_inf_norm: current.inf,
            iterations,
        }
    }

    /// Solves `(H + λI) d = rhs`, escalating λ from zero through
    /// `levenberg_lambda0 · 10^k`. Returns the shift used.
    fn solve_regularized(&mut self, rhs: &[f64], dir: &mut [f64]) -> Option<f64> {
        let mut lambda = 0.0;
        loop {
            match &self.order {
                Some(order) => {
                    // Scatter the nonzeros; Newton rows are sparse.
                    self.lu.fill(0.0);
                    for (i, &oi) in order.iter().enumerate() {
                        let dst = self.lu.row_mut(i);
                        for (j, &v) in self.newton.row(oi).iter().enumerate() {
                            if v != 0.0 {
                                dst[self.position[j]] = v;
                            }
                        }
                        self.rhs_perm[i] = rhs[oi];
                    }
                }
                None => {
                    self.lu.copy_from(&self.newton);
                    self.rhs_perm.copy_from_slice(rhs);
                }
            }
            if lambda > 0.0 {
                for i in 0..self.n {
                    self.lu[(i, i)] += lambda;
                }
            }
            if let Ok(pivots) = factor_in_place(&mut self.lu) {
                lu_solve(&self.lu, &pivots, &self.rhs_perm, &mut self.dir_perm);
                match &self.order {
                    Some(order) => {
                        for (i, &oi) in order.iter().enumerate() {
                            dir[oi] = self.dir_perm[i];
                        }
                    }
                    None => dir.copy_from_slice(&self.dir_perm),
                }
                if dir.iter().all(|d| d.is_finite()) {
                    return Some(lambda);
                }
            }
            lambda = if lambda == 0.0 {
                self.opts.levenberg_lambda0
            } else {
                lambda * 10.0
            };
            if lambda > LEVENBERG_MAX * (1.0 + 1e-12) {
                return None;
            }
        }
    }

    /// Armijo backtracking on `½‖Φ‖²` against the largest recent merit.
    /// Leaves the accepted point in `trial`.
    fn line_search(&mut self, reference: f64, grad: &[f64], dir: &[f64]) -> Option<(Evaluation, f64)> {
        let slope: f64 = grad.iter().zip(dir).map(|(g, d)| g * d).sum();
        let gnorm = norm(grad);
        let dnorm = norm(dir);
        if !(slope < -1e-14 * gnorm * dnorm) || dnorm == 0.0 {
            return None;
        }
        let mut t = 1.0;
        while t >= self.opts.line_search_min_step {
            for ((x, w), d) in self.trial.iter_mut().zip(&self.w).zip(dir) {
                *x = w + t * d;
            }
            let eval = self.evaluate(true);
            if eval.merit.is_finite() && eval.merit <= reference + self.opts.armijo_c * t * slope {
                return Some((eval, t));
            }
            t *= self.opts.line_search_backtrack;
        }
        None
    }
}

fn summarize(phi: Vec<f64>) -> Evaluation {
    let merit = 0.5 * phi.iter().map(|p| p * p).sum::<f64>();
    let inf = phi.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    let inf = if phi.iter().any(|p| p.is_nan()) { f64::NAN } else { inf };
    Evaluation { phi, merit, inf }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

use super::{BoundKind, DenseMatrix, McProblem, McpError};

/// Smoothed Fischer–Burmeister function `a + b − √(a² + b² + 2μ)`.
///
/// With `mu = 0` it vanishes exactly when `a ≥ 0`, `b ≥ 0` and `a·b = 0`.
pub fn fischer_burmeister(a: f64, b: f64, mu: f64) -> f64 {
    let r = (a * a + b * b + 2.0 * mu).sqrt();
    // Cancellation-free form when both arguments are positive.
    if a > 0.0 && b > 0.0 {
        (2.0 * a * b - 2.0 * mu) / (a + b + r)
    } else {
        a + b - r
    }
}

/// Partial derivatives `(∂φ/∂a, ∂φ/∂b)`. At the kink `a = b = μ = 0` the
/// element `(1 − 1/√2, 1 − 1/√2)` of the generalized gradient is returned.
pub fn fischer_burmeister_grad(a: f64, b: f64, mu: f64) -> (f64, f64) {
    let r = (a * a + b * b + 2.0 * mu).sqrt();
    if r > 1e-300 {
        (1.0 - a / r, 1.0 - b / r)
    } else {
        let c = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        (c, c)
    }
}

/// Derivative data for one reformulated component: `Φ_j = d_w·(w_j) + d_f·F_j`
/// to first order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ComponentDeriv {
    pub dw: f64,
    pub df: f64,
}

/// Reformulated value of component `j` and its derivative weights.
pub(crate) fn component(
    kind: BoundKind,
    w: f64,
    l: f64,
    u: f64,
    f: f64,
    mu: f64,
) -> (f64, ComponentDeriv) {
    match kind {
        BoundKind::Free => (f, ComponentDeriv { dw: 0.0, df: 1.0 }),
        BoundKind::Lower => {
            let a = w - l;
            let (da, db) = fischer_burmeister_grad(a, f, mu);
            (fischer_burmeister(a, f, mu), ComponentDeriv { dw: da, df: db })
        }
        BoundKind::Upper => {
            // −φ(u − w, −F)
            let a = u - w;
            let (da, db) = fischer_burmeister_grad(a, -f, mu);
            (-fischer_burmeister(a, -f, mu), ComponentDeriv { dw: da, df: db })
        }
        BoundKind::Both => {
            // φ(w − l, −φ(u − w, −F))
            let a_in = u - w;
            let inner = -fischer_burmeister(a_in, -f, mu);
            let (dai, dbi) = fischer_burmeister_grad(a_in, -f, mu);
            let a = w - l;
            let (dao, dbo) = fischer_burmeister_grad(a, inner, mu);
            (
                fischer_burmeister(a, inner, mu),
                ComponentDeriv {
                    dw: dao + dbo * dai,
                    df: dbo * dbi,
                },
            )
        }
    }
}

fn check_dim(problem: &dyn McProblem, w: &[f64]) -> Result<(), McpError> {
    if w.len() != problem.dim() || problem.bounds().len() != problem.dim() {
        return Err(McpError::Dimension {
            expected: problem.dim(),
            got: w.len(),
        });
    }
    Ok(())
}

/// Evaluates `Φ(w)` for the given smoothing `mu`.
pub fn semismooth_residual<P: McProblem>(
    problem: &P,
    w: &[f64],
    mu: f64,
) -> Result<Vec<f64>, McpError> {
    check_dim(problem, w)?;
    let n = problem.dim();
    let mut f = vec![0.0; n];
    problem.residual(w, &mut f);
    Ok(reformulate(problem, w, &f, mu, None))
}

/// Evaluates an element of the generalized Jacobian of `Φ` at `w`.
pub fn semismooth_jacobian<P: McProblem>(
    problem: &P,
    w: &[f64],
    mu: f64,
) -> Result<DenseMatrix, McpError> {
    check_dim(problem, w)?;
    let n = problem.dim();
    let mut f = vec![0.0; n];
    problem.residual(w, &mut f);
    let mut jac = DenseMatrix::zeros(n, n);
    problem.jacobian(w, &mut jac);
    let mut derivs = Vec::with_capacity(n);
    reformulate(problem, w, &f, mu, Some(&mut derivs));
    let mut h = DenseMatrix::zeros(n, n);
    build_newton_matrix(&jac, &derivs, &mut h);
    Ok(h)
}

pub(crate) fn reformulate(
    problem: &dyn McProblem,
    w: &[f64],
    f: &[f64],
    mu: f64,
    mut derivs: Option<&mut Vec<ComponentDeriv>>,
) -> Vec<f64> {
    let b = problem.bounds();
    if let Some(d) = derivs.as_deref_mut() {
        d.clear();
    }
    (0..w.len())
        .map(|j| {
            let (phi, d) = component(b.kind(j), w[j], b.lower()[j], b.upper()[j], f[j], mu);
            if let Some(ds) = derivs.as_deref_mut() {
                ds.push(d);
            }
            phi
        })
        .collect()
}

/// `H[j,:] = df_j · J[j,:] + dw_j · e_j`
pub(crate) fn build_newton_matrix(jac: &DenseMatrix, derivs: &[ComponentDeriv], h: &mut DenseMatrix) {
    for (j, d) in derivs.iter().enumerate() {
        let src = jac.row(j);
        let dst = h.row_mut(j);
        if d.df == 1.0 {
            dst.copy_from_slice(src);
        } else {
            for (o, &s) in dst.iter_mut().zip(src) {
                *o = d.df * s;
            }
        }
        dst[j] += d.dw;
    }
}

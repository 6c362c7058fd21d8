use super::{DenseMatrix, McProblem};

/// Compares the analytic Jacobian of `F` against central differences with
/// step `h`, returning the worst relative error over entries whose magnitude
/// exceeds `1e-8`.
///
/// The relative error of an entry is `|analytic − numeric| / max(1, |analytic|)`
/// so entries of order one or smaller are compared absolutely.
pub fn check_jacobian<P: McProblem>(problem: &P, w: &[f64], h: f64) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let n = problem.dim();
    assert_eq!(w.len(), n);
    let mut analytic = DenseMatrix::zeros(n, n);
    problem.jacobian(w, &mut analytic);

    let mut x = w.to_vec();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut worst = 0.0_f64;
    for j in 0..n {
        x[j] = w[j] + h;
        problem.residual(&x, &mut plus);
        x[j] = w[j] - h;
        problem.residual(&x, &mut minus);
        x[j] = w[j];
        for i in 0..n {
            let numeric = (plus[i] - minus[i]) / (2.0 * h);
            let exact = analytic[(i, j)];
            if exact.abs().max(numeric.abs()) <= 1e-8 {
                continue;
            }
            let err = (exact - numeric).abs() / exact.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    worst
}

//! Lowest eigenpairs of the symmetric-definite problem `A x = lambda B x`.

use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 2000;
/// Convergence threshold on the B-norm change of successive unit iterates.
const VECTOR_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Normalized to `x^T B x = 1`.
    pub vector: DVector<f64>,
}

/// `count` smallest eigenpairs by inverse iteration, deflating each new
/// iterate against the pairs already found in the `B` inner product.
///
/// `A` must be positive definite (it is factorized once) and `B` positive
/// semidefinite. Returns `None` when `A` has no Cholesky factor.
pub fn smallest_eigenpairs(a: &DMatrix<f64>, b: &DMatrix<f64>, count: usize) -> Result<Option<Vec<EigenPair>>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidInput(
            "eigenproblem matrices must be square and equal size".into(),
        ));
    }
    if count == 0 || count > n {
        return Err(Error::InvalidInput(format!(
            "cannot extract {count} eigenpairs from size {n}"
        )));
    }
    let Some(chol): Option<Cholesky<f64, Dyn>> = a.clone().cholesky() else {
        return Ok(None);
    };

    let mut found: Vec<EigenPair> = Vec::with_capacity(count);
    for j in 0..count {
        // Deterministic start with components along every low mode.
        let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i + j) % 7) as f64);
        let mut prev: Option<DVector<f64>> = None;
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            deflate(&mut x, b, &found);
            let norm = x.dot(&(b * &x)).sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvalidInput("iterate has zero B-norm".into()));
            }
            x /= norm;
            if let Some(p) = &prev {
                // Inverse iteration can flip sign between iterates.
                let s = if x.dot(&(b * p)) < 0.0 { -1.0 } else { 1.0 };
                let d = &x * s - p;
                if d.dot(&(b * &d)).sqrt() <= VECTOR_TOL {
                    x *= s;
                    converged = true;
                    break;
                }
            }
            prev = Some(x.clone());
            x = chol.solve(&(b * &x));
        }
        if !converged {
            return Err(Error::InvalidInput(format!(
                "inverse iteration did not converge for eigenpair {j}"
            )));
        }
        let value = (a * &x).dot(&x);
        found.push(EigenPair { value, vector: x });
    }
    Ok(Some(found))
}

fn deflate(x: &mut DVector<f64>, b: &DMatrix<f64>, found: &[EigenPair]) {
    for p in found {
        let c = (b * &p.vector).dot(x);
        x.axpy(-c, &p.vector, 1.0);
    }
}

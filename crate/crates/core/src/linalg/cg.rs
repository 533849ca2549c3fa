use super::{dot, norm2, CsrMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct CgOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub relative_residual: T,
    pub converged: bool,
}

/// Conjugate gradients with diagonal (Jacobi) preconditioning for symmetric
/// positive definite `a`. Stops when the *true* residual satisfies
/// `|b - A x| <= tol |b|`; the recursive residual is re-synchronised a few
/// times if it drifts.
pub fn pcg_jacobi<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &[T],
    x0: Option<&[T]>,
    tol: T,
    max_iter: usize,
) -> CgOutcome<T> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return CgOutcome {
            x,
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
        };
    }
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| {
            if d > T::zero() {
                T::one() / d
            } else {
                T::one()
            }
        })
        .collect();

    let mut total = 0;
    let mut ap = vec![T::zero(); n];
    let mut rel = T::infinity();
    // restarts guard against loss of orthogonality near the 1e-12 level
    // the last pass only measures the true residual
    for restart in 0..5 {
        a.mul_vec_into(&x, &mut ap);
        let mut r: Vec<T> = b.iter().zip(&ap).map(|(&bi, &ai)| bi - ai).collect();
        rel = norm2(&r) / bnorm;
        if rel <= tol || total >= max_iter || restart == 4 {
            break;
        }
        let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        // iterate on the recursive residual to a slightly tighter target
        let target = tol * T::lit(0.1) * bnorm;
        while total < max_iter {
            a.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > T::zero()) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            total += 1;
            if norm2(&r) <= target {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    CgOutcome {
        converged: rel <= tol,
        x,
        iterations: total,
        relative_residual: rel,
    }
}

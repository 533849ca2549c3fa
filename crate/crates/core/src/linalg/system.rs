use super::{norm2, pcg_jacobi, BandedLu, CsrMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::collections::BTreeMap;

/// Which factorisation / iteration handled a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Pick conjugate gradients for symmetric matrices and LU otherwise.
    Auto,
    Cg,
    Lu,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, bound(deserialize = "T: Scalar + serde::Deserialize<'de>"))]
pub struct LinearSettings<T: Scalar> {
    pub tol: T,
    pub max_iter: usize,
    pub path: SolverPath,
}

impl<T: Scalar> Default for LinearSettings<T> {
    fn default() -> Self {
        LinearSettings {
            tol: T::lit(1e-11),
            max_iter: 50_000,
            path: SolverPath::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub path: SolverPath,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Matrix, right-hand side and the set of constrained unknowns with their
/// prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    pub constrained: BTreeMap<usize, T>,
}

impl<T: Scalar> SparseSystem<T> {
    pub fn new(matrix: CsrMatrix<T>, rhs: Vec<T>) -> Self {
        assert_eq!(matrix.nrows(), rhs.len());
        SparseSystem {
            matrix,
            rhs,
            constrained: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Imposes `x_i = value` for every pair. Constrained rows become identity
    /// rows; the corresponding columns are eliminated into the right-hand side
    /// so a symmetric matrix stays symmetric. Re-applying a constraint is a no-op.
    pub fn constrain(&mut self, dofs: impl IntoIterator<Item = (usize, T)>) {
        let mut fresh = BTreeMap::new();
        for (i, v) in dofs {
            if !self.constrained.contains_key(&i) {
                fresh.insert(i, v);
            }
        }
        if fresh.is_empty() {
            return;
        }
        let n = self.dim();
        for i in 0..n {
            if fresh.contains_key(&i) || self.constrained.contains_key(&i) {
                continue;
            }
            let (cols, vals) = self.matrix.row_mut(i);
            let mut shift = T::zero();
            for (&j, v) in cols.iter().zip(vals.iter_mut()) {
                if let Some(&g) = fresh.get(&j) {
                    shift += *v * g;
                    *v = T::zero();
                }
            }
            self.rhs[i] -= shift;
        }
        for (&i, &g) in &fresh {
            let (cols, vals) = self.matrix.row_mut(i);
            for (&j, v) in cols.iter().zip(vals.iter_mut()) {
                *v = if j == i { T::one() } else { T::zero() };
            }
            self.rhs[i] = g;
        }
        self.constrained.extend(fresh);
    }

    pub fn residual_norm(&self, x: &[T]) -> T {
        let ax = self.matrix.mul_vec(x);
        let r: Vec<T> = ax.iter().zip(&self.rhs).map(|(&a, &b)| b - a).collect();
        norm2(&r)
    }

    pub fn solve(&self, settings: &LinearSettings<T>) -> Result<(Vec<T>, SolveReport)> {
        let bnorm = norm2(&self.rhs);
        let path = match settings.path {
            SolverPath::Auto => {
                let scale = self.matrix.max_abs();
                if self.matrix.asymmetry() <= T::lit(1e-14) * scale {
                    SolverPath::Cg
                } else {
                    SolverPath::Lu
                }
            }
            p => p,
        };
        let to_f64 = |t: T| t.to_f64().unwrap_or(f64::NAN);
        match path {
            SolverPath::Cg | SolverPath::Auto => {
                let out = pcg_jacobi(
                    &self.matrix,
                    &self.rhs,
                    None,
                    settings.tol,
                    settings.max_iter,
                );
                if !out.converged || out.x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::LinearSolver {
                        reason: "conjugate gradients did not reach the tolerance".into(),
                        iterations: out.iterations,
                        residual: to_f64(out.relative_residual),
                    });
                }
                Ok((
                    out.x,
                    SolveReport {
                        path: SolverPath::Cg,
                        iterations: out.iterations,
                        relative_residual: to_f64(out.relative_residual),
                    },
                ))
            }
            SolverPath::Lu => {
                let lu = BandedLu::factor(&self.matrix)?;
                let mut x = lu.solve(&self.rhs);
                let mut rel = if bnorm > T::zero() {
                    self.residual_norm(&x) / bnorm
                } else {
                    T::zero()
                };
                let mut steps = 0;
                // iterative refinement
                while rel > settings.tol && steps < 3 {
                    let ax = self.matrix.mul_vec(&x);
                    let r: Vec<T> = self.rhs.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
                    let dx = lu.solve(&r);
                    x.iter_mut().zip(&dx).for_each(|(xi, &d)| *xi += d);
                    rel = self.residual_norm(&x) / bnorm;
                    steps += 1;
                }
                if !(rel <= settings.tol) {
                    return Err(Error::LinearSolver {
                        reason: "LU solve residual above tolerance".into(),
                        iterations: steps,
                        residual: to_f64(rel),
                    });
                }
                Ok((
                    x,
                    SolveReport {
                        path: SolverPath::Lu,
                        iterations: steps,
                        relative_residual: to_f64(rel),
                    },
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SparseSystem<f64> {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        );
        SparseSystem::new(a, vec![1.0, 1.0, 1.0])
    }

    #[test]
    fn constraint_rows_become_identity_and_symmetry_kept() {
        let mut s = small();
        s.constrain([(0, 0.5)]);
        assert_eq!(s.matrix.row(0).1, &[1.0, 0.0]);
        assert_eq!(s.matrix.asymmetry(), 0.0);
        assert_eq!(s.rhs, vec![0.5, 1.5, 1.0]);
        let before = s.clone();
        s.constrain([(0, 0.5)]);
        assert_eq!(s, before);
        let (x, _) = s.solve(&LinearSettings::default()).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn lu_path_for_nonsymmetric() {
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 3.0), (0, 1, 1.0), (1, 0, -1.0), (1, 1, 2.0)]);
        let s = SparseSystem::new(a, vec![1.0, 2.0]);
        let (x, rep) = s.solve(&LinearSettings::default()).unwrap();
        assert_eq!(rep.path, SolverPath::Lu);
        assert!(s.residual_norm(&x) <= 1e-12 * 5f64.sqrt());
    }
}

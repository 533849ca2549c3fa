use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering of the symmetrised sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for nb in adj.iter_mut() {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // start each component from a minimum-degree vertex
        let start = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited vertex exists");
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Banded LU factorisation without pivoting on an RCM-permuted matrix.
///
/// Pivoting is not needed for the systems assembled here: every operator has a
/// positive definite symmetric part on the free unknowns, so all leading
/// principal minors are nonzero.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    lower: usize,
    upper: usize,
    band: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Argument("LU needs a square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut lower, mut upper) = (0usize, 0usize);
        for i in 0..n {
            for &j in a.row(i).0 {
                let (pi, pj) = (inv[i], inv[j]);
                if pi > pj {
                    lower = lower.max(pi - pj);
                } else {
                    upper = upper.max(pj - pi);
                }
            }
        }
        let width = lower + upper + 1;
        let mut band = vec![T::zero(); n * width];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (pi, pj) = (inv[i], inv[j]);
                band[pi * width + (pj + lower - pi)] += v;
            }
        }
        let idx = |i: usize, j: usize| i * width + (j + lower - i);
        for k in 0..n {
            let pivot = band[idx(k, k)];
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::LinearSolver {
                    reason: format!("zero pivot in row {k} (singular matrix)"),
                    iterations: k,
                    residual: f64::NAN,
                });
            }
            let jmax = (k + upper).min(n - 1);
            for i in (k + 1)..=(k + lower).min(n - 1) {
                let l = band[idx(i, k)] / pivot;
                if l == T::zero() {
                    continue;
                }
                band[idx(i, k)] = l;
                for j in (k + 1)..=jmax {
                    let ukj = band[idx(k, j)];
                    band[idx(i, j)] -= l * ukj;
                }
            }
        }
        Ok(BandedLu {
            n,
            lower,
            upper,
            band,
            perm,
        })
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let (n, lower, upper) = (self.n, self.lower, self.upper);
        let width = lower + upper + 1;
        let idx = |i: usize, j: usize| i * width + (j + lower - i);
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(lower)..i {
                s -= self.band[idx(i, k)] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..=(i + upper).min(n.saturating_sub(1)) {
                s -= self.band[idx(i, j)] * y[j];
            }
            y[i] = s / self.band[idx(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

//! Small shared numeric helpers.
//!
//! Singular value decompositions go through a one-sided Jacobi
//! implementation: it delivers high relative accuracy on the
//! rank-deficient matrices this crate produces in bulk (idempotents,
//! commutators, residual bases), where the builtin bidiagonalization
//! SVD was observed to lose several digits.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic per-task RNG: one master seed, independent streams.
pub fn subseeded(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Singular value decomposition a = u * diag(sigma) * v^T with
/// singular values sorted descending. `u` is m x min(m, n) with zero
/// columns in place of directions whose singular value vanishes; `v` is
/// n x min(m, n) and always orthonormal on the columns paired with
/// nonzero singular values.
#[derive(Debug, Clone)]
pub struct JacobiSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD.
pub fn jacobi_svd(a: &DMatrix<f64>) -> JacobiSvd {
    if a.nrows() < a.ncols() {
        let t = jacobi_svd(&a.transpose());
        return JacobiSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let m = a.nrows();
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    if n > 0 {
        let eps = 1e-15;
        // Columns whose squared norm falls below this floor are
        // numerically zero; rotating against them only stirs noise and
        // stalls convergence. Squared column norms are cached (and
        // refreshed with exact values whenever a pair is examined) so a
        // dead pair is skipped without touching the column data.
        let frob2: f64 = w.iter().map(|x| x * x).sum();
        let floor = frob2 * 1e-30;
        let mut colnorm2: Vec<f64> = (0..n).map(|j| w.column(j).norm_squared()).collect();
        for _sweep in 0..60 {
            let mut rotated = false;
            for i in 0..n - 1 {
                for j in (i + 1)..n {
                    if colnorm2[i].min(colnorm2[j]) <= floor {
                        continue;
                    }
                    let mut aii = 0.0;
                    let mut ajj = 0.0;
                    let mut aij = 0.0;
                    for r in 0..m {
                        let x = w[(r, i)];
                        let y = w[(r, j)];
                        aii += x * x;
                        ajj += y * y;
                        aij += x * y;
                    }
                    colnorm2[i] = aii;
                    colnorm2[j] = ajj;
                    if aij.abs() <= eps * (aii * ajj).sqrt() || aii.min(ajj) <= floor {
                        continue;
                    }
                    rotated = true;
                    let zeta = (ajj - aii) / (2.0 * aij);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    // Refresh the cached norms from the rotated data:
                    // the closed-form update cancels catastrophically on
                    // draining rotations and can freeze a column at a
                    // spurious residual.
                    let mut ni = 0.0;
                    let mut nj = 0.0;
                    for r in 0..m {
                        let x = w[(r, i)];
                        let y = w[(r, j)];
                        let xn = c * x - s * y;
                        let yn = s * x + c * y;
                        w[(r, i)] = xn;
                        w[(r, j)] = yn;
                        ni += xn * xn;
                        nj += yn * yn;
                    }
                    for r in 0..n {
                        let x = v[(r, i)];
                        let y = v[(r, j)];
                        v[(r, i)] = c * x - s * y;
                        v[(r, j)] = s * x + c * y;
                    }
                    colnorm2[i] = ni;
                    colnorm2[j] = nj;
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut sigma = DVector::<f64>::zeros(n);
    let mut vv = DMatrix::<f64>::zeros(n, n);
    for (pos, &j) in order.iter().enumerate() {
        sigma[pos] = norms[j];
        vv.set_column(pos, &v.column(j));
        if norms[j] > 0.0 {
            u.set_column(pos, &(w.column(j) / norms[j]));
        }
    }
    JacobiSvd {
        u,
        singular_values: sigma,
        v: vv,
    }
}

/// Singular values only, sorted descending.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    jacobi_svd(a).singular_values
}

/// Rank: number of singular values above `tol`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

/// Compare two sorted multisets entrywise within `tol`.
pub fn multiset_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Orthonormal basis of the column space of `m` (columns of the result),
/// keeping singular directions with singular value > `tol`.
pub fn column_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = jacobi_svd(m);
    let cols: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::<f64>::zeros(m.nrows(), cols.len());
    for (j, &c) in cols.iter().enumerate() {
        basis.set_column(j, &svd.u.column(c));
    }
    basis
}

/// Orthonormal basis of the null space of `m` (columns of the result).
/// Requires nrows >= ncols so the right singular basis is complete.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    assert!(
        m.nrows() >= m.ncols(),
        "null_space needs a square or tall matrix"
    );
    let svd = jacobi_svd(m);
    let n = m.ncols();
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let mut basis = DMatrix::<f64>::zeros(n, n - rank);
    for (j, col) in (rank..n).enumerate() {
        basis.set_column(j, &svd.v.column(col));
    }
    basis
}

/// Orthonormal basis of the intersection of two subspaces given by
/// orthonormal column bases, via principal vectors with cosine within
/// `tol` of 1.
pub fn subspace_intersection(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return DMatrix::<f64>::zeros(a.nrows(), 0);
    }
    let cross = a.transpose() * b;
    let svd = jacobi_svd(&cross);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 1.0 - tol)
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::<f64>::zeros(a.nrows(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        let dir = a * svd.u.column(k);
        let norm = dir.norm();
        basis.set_column(j, &(dir / norm));
    }
    basis
}

/// Compensated (Kahan) summation.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_values(m)[0]
}

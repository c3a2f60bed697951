//! Projection families on finite-dimensional normed spaces and their
//! averaged-iteration convergence certificates.
//!
//! Operator norms on general p-normed spaces are certified as intervals
//! (a power-method lower bound and a Riesz–Thorin interpolation upper
//! bound); all inequality checks feeding certificates use the upper
//! bound, and exact singular values where the norm is Euclidean or a
//! weighted 2-norm.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{column_space, null_space, spectral_norm, subseeded, subspace_intersection};

/// Idempotency tolerance for supplied projection matrices.
pub const PROJECTION_TOL: f64 = 1e-10;

/// Tolerance on the absorption identities of meet projections.
pub const MEET_TOL: f64 = 1e-8;

/// The norm carried by a [`NormedSpace`].
#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// The l^p norm, 1 <= p <= infinity.
    P(f64),
    /// A weighted 2-norm with positive weights.
    Weighted2(Vec<f64>),
}

/// A finite-dimensional real normed space.
#[derive(Debug, Clone, PartialEq)]
pub struct NormedSpace {
    dim: usize,
    kind: NormKind,
}

impl NormedSpace {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            dim,
            kind: NormKind::P(2.0),
        }
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::BadNormExponent(p));
        }
        Ok(Self {
            dim,
            kind: NormKind::P(p),
        })
    }

    pub fn weighted2(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "weights must be positive and finite".into(),
            ));
        }
        Ok(Self {
            dim: weights.len(),
            kind: NormKind::Weighted2(weights),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// Whether operator norms on this space reduce to singular values.
    pub fn is_euclidean_like(&self) -> bool {
        matches!(self.kind, NormKind::Weighted2(_))
            || matches!(self.kind, NormKind::P(p) if p == 2.0)
    }

    pub fn vector_norm(&self, v: &DVector<f64>) -> f64 {
        match &self.kind {
            NormKind::P(p) if *p == f64::INFINITY => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::P(p) if *p == 2.0 => v.norm(),
            NormKind::P(p) if *p == 1.0 => v.iter().map(|x| x.abs()).sum(),
            NormKind::P(p) => v
                .iter()
                .map(|x| x.abs().powf(*p))
                .sum::<f64>()
                .powf(1.0 / p),
            NormKind::Weighted2(w) => v
                .iter()
                .zip(w)
                .map(|(x, wi)| wi * x * x)
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Conjugate a matrix into the Euclidean frame where the norm is the
    /// plain 2-norm (identity for P(2)).
    fn euclidean_frame(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.kind {
            NormKind::Weighted2(w) => {
                let mut out = m.clone();
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        out[(i, j)] *= (w[i] / w[j]).sqrt();
                    }
                }
                out
            }
            _ => m.clone(),
        }
    }
}

/// A certified interval around an operator norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBounds {
    pub lower: f64,
    pub upper: f64,
}

impl NormBounds {
    fn exact(value: f64) -> Self {
        Self {
            lower: value,
            upper: value,
        }
    }
}

fn max_column_abs_sum(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_row_abs_sum(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dual vector of y under the l^p pairing, normalized so its dual norm
/// is 1 and <y, dual(y)> = ||y||_p.
fn lp_dual_vector(y: &DVector<f64>, p: f64) -> DVector<f64> {
    let norm = y.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    if norm == 0.0 {
        return DVector::zeros(y.len());
    }
    DVector::from_iterator(
        y.len(),
        y.iter()
            .map(|&x| x.signum() * (x.abs() / norm).powf(p - 1.0)),
    )
}

fn lp_norm(v: &DVector<f64>, p: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Power-method lower bound for the l^p -> l^p operator norm, one start.
fn p_norm_power_method(m: &DMatrix<f64>, p: f64, start: DVector<f64>) -> f64 {
    let q = p / (p - 1.0);
    let mt = m.transpose();
    let mut x = &start / lp_norm(&start, p);
    let mut best = 0.0f64;
    for _ in 0..64 {
        let y = m * &x;
        let g = lp_norm(&y, p);
        if g < 1e-300 {
            break;
        }
        best = best.max(g);
        let z = &mt * lp_dual_vector(&y, p);
        let zq = lp_norm(&z, q);
        if zq <= z.dot(&x) * (1.0 + 1e-12) {
            break;
        }
        x = lp_dual_vector(&z, q);
    }
    best
}

/// Certified bounds on the operator norm of `a` on `space`.
///
/// Euclidean-like norms give the exact largest singular value; other p
/// give a multi-start power-method lower bound and the interpolation
/// bound ||A||_1^{1/p} ||A||_inf^{1-1/p} as the upper end.
pub fn op_norm(a: &DMatrix<f64>, space: &NormedSpace, seed: u64) -> Result<NormBounds> {
    if a.nrows() != space.dim() || a.ncols() != space.dim() {
        return Err(Error::InvalidInput(format!(
            "matrix is {}x{}, space dimension is {}",
            a.nrows(),
            a.ncols(),
            space.dim()
        )));
    }
    match &space.kind {
        NormKind::Weighted2(_) => Ok(NormBounds::exact(spectral_norm(&space.euclidean_frame(a)))),
        NormKind::P(p) if *p == 2.0 => Ok(NormBounds::exact(spectral_norm(a))),
        NormKind::P(p) if *p == 1.0 => Ok(NormBounds::exact(max_column_abs_sum(a))),
        NormKind::P(p) if *p == f64::INFINITY => Ok(NormBounds::exact(max_row_abs_sum(a))),
        NormKind::P(p) if *p > 1.0 && p.is_finite() => {
            let p = *p;
            let upper =
                max_column_abs_sum(a).powf(1.0 / p) * max_row_abs_sum(a).powf(1.0 - 1.0 / p);
            let n = a.ncols();
            // Deterministic restarts: all-ones, the heaviest column, and
            // seeded Gaussian starts.
            let heaviest = (0..n)
                .max_by(|&i, &j| {
                    lp_norm(&a.column(i).clone_owned(), p)
                        .total_cmp(&lp_norm(&a.column(j).clone_owned(), p))
                })
                .unwrap_or(0);
            let mut fixed_starts = vec![DVector::from_element(n, 1.0)];
            let mut e = DVector::zeros(n);
            e[heaviest] = 1.0;
            fixed_starts.push(e);
            let lower_fixed = fixed_starts
                .into_iter()
                .map(|s| p_norm_power_method(a, p, s))
                .fold(0.0, f64::max);
            let lower_random = (0..16u64)
                .into_par_iter()
                .map(|k| {
                    let mut rng = subseeded(seed, 0x6e06 + k);
                    let start =
                        DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
                    p_norm_power_method(a, p, start)
                })
                .reduce(|| 0.0, f64::max);
            let lower = lower_fixed.max(lower_random).min(upper);
            Ok(NormBounds { lower, upper })
        }
        NormKind::P(p) => Err(Error::BadNormExponent(*p)),
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn check_idempotent(p: &DMatrix<f64>, what: &str) -> Result<()> {
    let defect = max_abs(&(p * p - p));
    if defect > PROJECTION_TOL {
        return Err(Error::BadProjection(format!(
            "{what} is not idempotent (defect {defect:.3e})"
        )));
    }
    Ok(())
}

fn check_meet(p1: &DMatrix<f64>, p2: &DMatrix<f64>, p12: &DMatrix<f64>) -> Result<()> {
    check_idempotent(p12, "meet projection")?;
    // Absorption P12 P_i = P12 and image containment P_i P12 = P12.
    for (m, what) in [
        (p12 * p1 - p12, "P12*P1 = P12"),
        (p12 * p2 - p12, "P12*P2 = P12"),
        (p1 * p12 - p12, "P1*P12 = P12"),
        (p2 * p12 - p12, "P2*P12 = P12"),
    ] {
        let defect = max_abs(&m);
        if defect > MEET_TOL {
            return Err(Error::BadProjection(format!(
                "meet identity {what} fails (defect {defect:.3e})"
            )));
        }
    }
    Ok(())
}

/// Friedrichs angle of two projections through a compatible meet:
/// max of ||P1 (P2 - P12)|| and ||P2 (P1 - P12)||.
///
/// Exact for Euclidean-like norms, the certified upper bound otherwise.
/// No clamp is applied; values above 1 are possible for oblique
/// projections.
pub fn cos_angle(
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    p12: &DMatrix<f64>,
    space: &NormedSpace,
    seed: u64,
) -> Result<f64> {
    check_idempotent(p1, "P1")?;
    check_idempotent(p2, "P2")?;
    check_meet(p1, p2, p12)?;
    let a = op_norm(&(p1 * (p2 - p12)), space, seed)?;
    let b = op_norm(&(p2 * (p1 - p12)), space, seed)?;
    Ok(a.upper.max(b.upper))
}

/// Result of a commutator-ratio computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CommutatorRatio {
    /// Exact value (Euclidean-like norms).
    Exact(f64),
    /// The commutator does not vanish on ker(P1 - P2); no finite ratio.
    Unbounded,
    /// Multi-start observed lower bound (general p-norms).
    LowerBound(f64),
}

impl CommutatorRatio {
    pub fn value(&self) -> Option<f64> {
        match self {
            CommutatorRatio::Exact(v) | CommutatorRatio::LowerBound(v) => Some(*v),
            CommutatorRatio::Unbounded => None,
        }
    }
}

/// Least gamma with ||(P1 P2 - P2 P1) v|| <= gamma ||(P1 - P2) v|| for
/// all v.
///
/// On Euclidean-like spaces this is solved exactly by a generalized
/// singular-value computation restricted to the complement of
/// ker(P1 - P2); on other norms a seeded multi-start maximization of the
/// ratio reports a lower bound.
pub fn commutator_ratio(
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    space: &NormedSpace,
    seed: u64,
) -> Result<CommutatorRatio> {
    check_idempotent(p1, "P1")?;
    check_idempotent(p2, "P2")?;
    let comm = p1 * p2 - p2 * p1;
    let diff = p1 - p2;
    if space.is_euclidean_like() {
        let c = space.euclidean_frame(&comm);
        let d = space.euclidean_frame(&diff);
        let scale = spectral_norm(&d).max(1.0);
        let tol = 1e-12 * scale;
        let kernel = null_space(&d, tol);
        if kernel.ncols() > 0 && spectral_norm(&(&c * &kernel)) > 1e-8 {
            return Ok(CommutatorRatio::Unbounded);
        }
        // Restrict to the row space of d: with d = U S V^T of rank k,
        // the ratio sup ||c v|| / ||d v|| over v outside the kernel
        // equals sigma_max(c V_k S_k^{-1}).
        let svd = crate::numeric::jacobi_svd(&d);
        let kept: Vec<usize> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > tol)
            .map(|(i, _)| i)
            .collect();
        if kept.is_empty() {
            // P1 = P2: the commutator vanishes identically.
            return Ok(CommutatorRatio::Exact(0.0));
        }
        let n = d.nrows();
        let mut scaled = DMatrix::<f64>::zeros(n, kept.len());
        for (j, &k) in kept.iter().enumerate() {
            let v = svd.v.column(k) / svd.singular_values[k];
            scaled.set_column(j, &v);
        }
        Ok(CommutatorRatio::Exact(spectral_norm(&(&c * scaled))))
    } else {
        let n = space.dim();
        let best = (0..16u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = subseeded(seed, 0xc033 + k);
                let mut v = DVector::from_iterator(
                    n,
                    (0..n).map(|_| -> f64 { StandardNormal.sample(&mut rng) }),
                );
                let ratio = |v: &DVector<f64>| -> f64 {
                    let den = space.vector_norm(&(&diff * v));
                    if den < 1e-12 {
                        return 0.0;
                    }
                    space.vector_norm(&(&comm * v)) / den
                };
                let mut best = ratio(&v);
                let mut step = 0.5f64;
                for _ in 0..400 {
                    let dir = DVector::from_iterator(
                        n,
                        (0..n).map(|_| -> f64 { StandardNormal.sample(&mut rng) }),
                    );
                    let cand = &v + step * dir;
                    let r = ratio(&cand);
                    if r > best {
                        best = r;
                        v = cand;
                    } else {
                        step *= 0.99;
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max);
        Ok(CommutatorRatio::LowerBound(best))
    }
}

/// Upper bound on the commutator ratio from the angle:
/// 2 (1 + beta) cos / (1 - cos), valid when cos < 1.
pub fn commutator_bound_from_angle(cos: f64, beta: f64) -> Option<f64> {
    if cos < 1.0 {
        Some(2.0 * (1.0 + beta) * cos / (1.0 - cos))
    } else {
        None
    }
}

/// A family of projections on a common normed space, with optional meet
/// projections per pair.
#[derive(Debug, Clone)]
pub struct ProjectionFamily {
    space: NormedSpace,
    projections: Vec<DMatrix<f64>>,
    meets: BTreeMap<(usize, usize), DMatrix<f64>>,
    beta: f64,
    cos_max: Option<f64>,
    alpha: Option<f64>,
}

impl ProjectionFamily {
    /// Validate and assemble a family. Supplied meets are checked
    /// against the absorption identities; on Euclidean-like spaces
    /// missing meets are synthesized as orthogonal projections onto the
    /// image intersections and kept only if they satisfy the identities.
    pub fn new(
        space: NormedSpace,
        projections: Vec<DMatrix<f64>>,
        meets: Option<BTreeMap<(usize, usize), DMatrix<f64>>>,
        seed: u64,
    ) -> Result<Self> {
        if projections.is_empty() {
            return Err(Error::BadProjection("empty family".into()));
        }
        let dim = space.dim();
        for (i, p) in projections.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(Error::BadProjection(format!(
                    "projection {i} has shape {}x{}, expected {dim}x{dim}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            check_idempotent(p, &format!("projection {i}"))?;
        }
        let n = projections.len();
        let mut all_meets = BTreeMap::new();
        if let Some(supplied) = meets {
            for ((i, j), m) in supplied {
                if i >= j || j >= n {
                    return Err(Error::BadProjection(format!(
                        "meet index ({i}, {j}) invalid"
                    )));
                }
                check_meet(&projections[i], &projections[j], &m)?;
                all_meets.insert((i, j), m);
            }
        }
        if space.is_euclidean_like() {
            for i in 0..n {
                for j in (i + 1)..n {
                    if all_meets.contains_key(&(i, j)) {
                        continue;
                    }
                    let m = synthesize_orthogonal_meet(&space, &projections[i], &projections[j]);
                    if check_meet(&projections[i], &projections[j], &m).is_ok() {
                        all_meets.insert((i, j), m);
                    }
                }
            }
        }

        let beta = projections
            .iter()
            .map(|p| op_norm(p, &space, seed).map(|b| b.upper))
            .try_fold(0.0f64, |acc, b| b.map(|b| acc.max(b)))?;

        let cos_max =
            if n >= 2 && (0..n).all(|i| ((i + 1)..n).all(|j| all_meets.contains_key(&(i, j)))) {
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let c = cos_angle(
                            &projections[i],
                            &projections[j],
                            &all_meets[&(i, j)],
                            &space,
                            seed,
                        )?;
                        worst = worst.max(c);
                    }
                }
                Some(worst)
            } else if n < 2 {
                Some(0.0)
            } else {
                None
            };

        // alpha: exact on Euclidean-like spaces, otherwise the angle
        // bound when every pair has a meet with cos < 1.
        let alpha = if space.is_euclidean_like() {
            let mut worst: f64 = 0.0;
            let mut ok = true;
            for i in 0..n {
                for j in (i + 1)..n {
                    match commutator_ratio(&projections[i], &projections[j], &space, seed)? {
                        CommutatorRatio::Exact(v) => worst = worst.max(v),
                        _ => {
                            ok = false;
                        }
                    }
                }
            }
            ok.then_some(worst)
        } else {
            cos_max.and_then(|c| commutator_bound_from_angle(c, beta))
        };

        Ok(Self {
            space,
            projections,
            meets: all_meets,
            beta,
            cos_max,
            alpha,
        })
    }

    pub fn space(&self) -> &NormedSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    pub fn projection(&self, i: usize) -> &DMatrix<f64> {
        &self.projections[i]
    }

    pub fn projections(&self) -> &[DMatrix<f64>] {
        &self.projections
    }

    pub fn meet(&self, i: usize, j: usize) -> Option<&DMatrix<f64>> {
        self.meets.get(&(i, j))
    }

    /// Max certified operator norm over the family.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Max Friedrichs angle cosine over pairs, when every pair has a
    /// meet.
    pub fn cos_max(&self) -> Option<f64> {
        self.cos_max
    }

    /// Max commutator ratio over pairs (exact or angle-derived bound).
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// The averaged operator (P1 + ... + PN) / N.
    pub fn averaged_operator(&self) -> DMatrix<f64> {
        let n = self.space.dim();
        let mut t = DMatrix::<f64>::zeros(n, n);
        for p in &self.projections {
            t += p;
        }
        t / self.projections.len() as f64
    }

    /// Sum of ||(P_i - P_j) v|| over pairs i < j; the quantity whose
    /// geometric decay drives the convergence certificate.
    pub fn pairwise_defect(&self, v: &DVector<f64>) -> f64 {
        let n = self.projections.len();
        let mut total = 0.0;
        for i in 0..n {
            let pi_v = &self.projections[i] * v;
            for j in (i + 1)..n {
                let pj_v = &self.projections[j] * v;
                total += self.space.vector_norm(&(&pi_v - pj_v));
            }
        }
        total
    }

    /// Orthonormal basis (Euclidean sense) of the intersection of all
    /// projection images; subspace intersection is norm-independent.
    pub fn common_image_basis(&self) -> DMatrix<f64> {
        let tol = 1e-8;
        let mut basis = column_space(&self.projections[0], tol);
        for p in &self.projections[1..] {
            let other = column_space(p, tol);
            basis = subspace_intersection(&basis, &other, tol);
            if basis.ncols() == 0 {
                break;
            }
        }
        basis
    }
}

/// Orthogonal projection onto Im P1 ∩ Im P2 (Euclidean frame of the
/// space). Valid as a meet only for families whose projections are
/// orthogonal in that frame; callers must verify absorption.
fn synthesize_orthogonal_meet(
    space: &NormedSpace,
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
) -> DMatrix<f64> {
    let tol = 1e-8;
    let f1 = space.euclidean_frame(p1);
    let f2 = space.euclidean_frame(p2);
    let meet = subspace_intersection(&column_space(&f1, tol), &column_space(&f2, tol), tol);
    let proj = &meet * meet.transpose();
    // Undo the frame conjugation.
    match space.kind() {
        NormKind::Weighted2(w) => {
            let mut out = proj;
            for i in 0..space.dim() {
                for j in 0..space.dim() {
                    out[(i, j)] *= (w[j] / w[i]).sqrt();
                }
            }
            out
        }
        _ => proj,
    }
}

/// Geometric decay rate and coefficient of a convergence certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConstants {
    pub rate: f64,
    pub coefficient: f64,
}

/// Certificate constants from commutator data:
/// rate (1 + (N-2) beta + (2N-3) alpha) / N and coefficient
/// 2 beta^2 (N-1)/N * rate / (1 - rate).
///
/// Requires alpha < 1/(2N-3) and, for N >= 3,
/// beta < (N-1 - (2N-3) alpha) / (N-2); these force rate < 1.
pub fn contraction_rate(alpha: f64, beta: f64, n: usize) -> Result<RateConstants> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least two projections".into()));
    }
    if !(alpha >= 0.0) || !(beta >= 0.0) {
        return Err(Error::InvalidInput(
            "alpha and beta must be nonnegative".into(),
        ));
    }
    let nf = n as f64;
    let alpha_cap = 1.0 / (2.0 * nf - 3.0);
    if alpha >= alpha_cap {
        return Err(Error::HypothesisViolation(format!(
            "alpha = {alpha} >= 1/(2N-3) = {alpha_cap}"
        )));
    }
    if n >= 3 {
        let beta_cap = (nf - 1.0 - (2.0 * nf - 3.0) * alpha) / (nf - 2.0);
        if beta >= beta_cap {
            return Err(Error::HypothesisViolation(format!(
                "beta = {beta} >= (N-1-(2N-3)alpha)/(N-2) = {beta_cap}"
            )));
        }
    }
    let rate = (1.0 + (nf - 2.0) * beta + (2.0 * nf - 3.0) * alpha) / nf;
    let coefficient = (nf - 1.0) * 2.0 * beta * beta / nf * rate / (1.0 - rate);
    Ok(RateConstants { rate, coefficient })
}

/// Certificate constants from an angle bound gamma: requires
/// gamma < 1/(8N-11) and beta < 1 + (1 - (8N-11) gamma)/(N-2 + (3N-4) gamma),
/// sets alpha = 2 (1+beta) gamma / (1-gamma) and delegates to
/// [`contraction_rate`].
pub fn contraction_rate_from_angle(gamma: f64, beta: f64, n: usize) -> Result<RateConstants> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least two projections".into()));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput("gamma must be nonnegative".into()));
    }
    let nf = n as f64;
    let gamma_cap = 1.0 / (8.0 * nf - 11.0);
    if gamma >= gamma_cap {
        return Err(Error::HypothesisViolation(format!(
            "gamma = {gamma} >= 1/(8N-11) = {gamma_cap}"
        )));
    }
    let denom = nf - 2.0 + (3.0 * nf - 4.0) * gamma;
    if denom > 0.0 {
        let beta_cap = 1.0 + (1.0 - (8.0 * nf - 11.0) * gamma) / denom;
        if beta >= beta_cap {
            return Err(Error::HypothesisViolation(format!(
                "beta = {beta} >= 1 + (1-(8N-11)gamma)/(N-2+(3N-4)gamma) = {beta_cap}"
            )));
        }
    }
    let alpha = 2.0 * (1.0 + beta) * gamma / (1.0 - gamma);
    contraction_rate(alpha, beta, n)
}

/// Whether a certificate could be produced for a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateMode {
    /// Hypotheses verified; geometric bound enforced.
    Certified,
    /// Hypotheses unavailable or violated; the iteration ran in
    /// observe-only mode and no uniform-rate claim is made (powers of a
    /// fixed operator either admit a geometric bound or converge
    /// arbitrarily slowly, and the latter cannot be excluded here).
    ObserveOnly,
}

/// One row of the iteration ledger.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterateRecord {
    pub n: usize,
    /// Certified upper estimate of ||T^inf - T^n||.
    pub distance: f64,
    /// Commutator-route bound C' r'^n, when certified.
    pub bound_commutator_route: Option<f64>,
    /// Angle-route bound C r^n, when available.
    pub bound_angle_route: Option<f64>,
}

/// Outcome of the averaged-projection iteration.
#[derive(Debug, Clone)]
pub struct ConvergenceCertificate {
    pub mode: CertificateMode,
    /// Commutator-route constants (rate, coefficient).
    pub commutator_route: Option<RateConstants>,
    /// Angle-route constants (rate, coefficient).
    pub angle_route: Option<RateConstants>,
    pub beta: f64,
    pub alpha: Option<f64>,
    pub cos_max: Option<f64>,
    pub t_infinity: DMatrix<f64>,
    pub iterates_checked: usize,
    /// Max over n of distance - C' r'^n (certified mode only).
    pub max_violation: Option<f64>,
    pub ledger: Vec<IterateRecord>,
    /// ||T_inf^2 - T_inf||, entrywise max.
    pub idempotency_defect: f64,
    /// Max over i of the norm defect of P_i T_inf = T_inf.
    pub image_defect: f64,
    /// Whether rank(T_inf) matches dim of the common image of the family.
    pub common_image_rank_match: bool,
}

impl ConvergenceCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": match self.mode {
                CertificateMode::Certified => "certified",
                CertificateMode::ObserveOnly => "observe_only",
            },
            "r_prime": self.commutator_route.map(|c| c.rate),
            "c_prime": self.commutator_route.map(|c| c.coefficient),
            "r": self.angle_route.map(|c| c.rate),
            "c": self.angle_route.map(|c| c.coefficient),
            "beta": self.beta,
            "alpha": self.alpha,
            "cos_max": self.cos_max,
            "iterates_checked": self.iterates_checked,
            "max_violation": self.max_violation,
            "idempotency_defect": self.idempotency_defect,
            "image_defect": self.image_defect,
            "common_image_rank_match": self.common_image_rank_match,
            "ledger": self.ledger.iter().map(|r| serde_json::json!({
                "n": r.n,
                "distance": r.distance,
                "bound_commutator_route": r.bound_commutator_route,
                "bound_angle_route": r.bound_angle_route,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Iterate the averaged operator, certify the geometric bound when the
/// hypotheses hold, and report the limit projection.
///
/// Powers are accumulated by plain products so every T^n is exposed for
/// the bound check. When the hypotheses fail the iteration still runs
/// and the observed decay is reported with no uniform-rate claim.
pub fn iterate_averaged(
    family: &ProjectionFamily,
    max_n: usize,
    tol: f64,
    seed: u64,
) -> Result<ConvergenceCertificate> {
    if max_n < 2 {
        return Err(Error::InvalidInput("max_n must be at least 2".into()));
    }
    let n_proj = family.len();
    let beta = family.beta();
    let commutator_route = family
        .alpha()
        .and_then(|alpha| contraction_rate(alpha, beta, n_proj).ok());
    let angle_route = family
        .cos_max()
        .and_then(|gamma| contraction_rate_from_angle(gamma, beta, n_proj).ok());
    let mode = if commutator_route.is_some() || angle_route.is_some() {
        CertificateMode::Certified
    } else {
        CertificateMode::ObserveOnly
    };

    let t = family.averaged_operator();
    let mut powers: Vec<DMatrix<f64>> = Vec::with_capacity(max_n);
    powers.push(t.clone());
    let mut stopped = None;
    let mut last_step = f64::INFINITY;
    for n in 1..max_n {
        let next = powers.last().unwrap() * &t;
        last_step = op_norm(&(&next - powers.last().unwrap()), family.space(), seed)?.upper;
        powers.push(next);
        if last_step < tol {
            stopped = Some(n + 1);
            break;
        }
    }
    if stopped.is_none() && mode == CertificateMode::Certified {
        let route = commutator_route.or(angle_route).unwrap();
        // ||T^{n+1} - T^n|| <= 2 beta^2 (N-1)/N * r^{n-1}.
        let n_last = powers.len() - 1;
        let step_bound = (n_proj as f64 - 1.0) * 2.0 * beta * beta / n_proj as f64
            * route.rate.powi(n_last as i32 - 1);
        let detail = if last_step > step_bound + 1e-8 {
            format!(
                "step {last_step:.3e} at n = {n_last} violates the certified bound {step_bound:.3e}"
            )
        } else {
            format!(
                "certified rate {:.6} needs more than {max_n} iterations to reach step < {tol:.1e} (last step {last_step:.3e})",
                route.rate
            )
        };
        return Err(Error::NonConvergence { max_n, detail });
    }
    let t_infinity = powers.last().unwrap().clone();
    let iterates_checked = powers.len();

    let mut ledger = Vec::with_capacity(iterates_checked);
    let mut max_violation: Option<f64> = None;
    for (idx, tn) in powers.iter().enumerate() {
        let n = idx + 1;
        let distance = op_norm(&(&t_infinity - tn), family.space(), seed)?.upper;
        let bound_c = commutator_route.map(|rc| rc.coefficient * rc.rate.powi(n as i32));
        let bound_a = angle_route.map(|rc| rc.coefficient * rc.rate.powi(n as i32));
        if let Some(b) = bound_c {
            let v = distance - b;
            max_violation = Some(max_violation.map_or(v, |m: f64| m.max(v)));
        }
        ledger.push(IterateRecord {
            n,
            distance,
            bound_commutator_route: bound_c,
            bound_angle_route: bound_a,
        });
    }

    let idempotency_defect = max_abs(&(&t_infinity * &t_infinity - &t_infinity));
    let image_defect = family
        .projections()
        .iter()
        .map(|p| op_norm(&(p * &t_infinity - &t_infinity), family.space(), seed).map(|b| b.upper))
        .try_fold(0.0f64, |acc, b| b.map(|b| acc.max(b)))?;
    let common = family.common_image_basis();
    let rank = crate::numeric::rank(&t_infinity, 1e-8);
    let common_image_rank_match = rank == common.ncols();

    Ok(ConvergenceCertificate {
        mode,
        commutator_route,
        angle_route,
        beta,
        alpha: family.alpha(),
        cos_max: family.cos_max(),
        t_infinity,
        iterates_checked,
        max_violation,
        ledger,
        idempotency_defect,
        image_defect,
        common_image_rank_match,
    })
}

/// Seeded random family of orthogonal projections with a prescribed
/// Friedrichs angle: every image shares a one-dimensional core, the
/// complements are distinct lines tilted toward a common spare direction
/// so that every pairwise cosine equals `target_cos` exactly.
pub fn random_orthogonal_family(
    seed: u64,
    dim: usize,
    n_projections: usize,
    target_cos: f64,
) -> Result<ProjectionFamily> {
    if n_projections < 2 || dim < n_projections + 2 {
        return Err(Error::InvalidInput(format!(
            "need dim >= n + 2, got dim {dim} with n {n_projections}"
        )));
    }
    if !(0.0..1.0).contains(&target_cos) {
        return Err(Error::InvalidInput("target_cos must lie in [0, 1)".into()));
    }
    let mut rng = subseeded(seed, 0xfa417);
    // Random orthonormal frame.
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let frame = g.qr().q();
    let core = frame.column(0).clone_owned();
    let spare = frame.column(dim - 1).clone_owned();
    let delta = target_cos.sqrt().asin();
    let (sin_d, cos_d) = delta.sin_cos();
    let mut projections = Vec::with_capacity(n_projections);
    for i in 0..n_projections {
        let tilted = cos_d * frame.column(1 + i).clone_owned() + sin_d * &spare;
        let basis = DMatrix::from_columns(&[core.clone(), tilted]);
        projections.push(&basis * basis.transpose());
    }
    ProjectionFamily::new(NormedSpace::euclidean(dim), projections, None, seed)
}

/// Oblique variant: conjugates a random orthogonal family by
/// I + skew * G, carrying the meets through the conjugation.
pub fn random_oblique_family(
    seed: u64,
    dim: usize,
    n_projections: usize,
    target_cos: f64,
    skew: f64,
) -> Result<ProjectionFamily> {
    let base = random_orthogonal_family(seed, dim, n_projections, target_cos)?;
    let mut rng = subseeded(seed, 0x0b71);
    let g = DMatrix::from_fn(dim, dim, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let s = DMatrix::<f64>::identity(dim, dim) + skew * g;
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("conjugator is singular; lower the skew".into()))?;
    let projections: Vec<DMatrix<f64>> =
        base.projections().iter().map(|p| &s * p * &s_inv).collect();
    let mut meets = BTreeMap::new();
    for i in 0..n_projections {
        for j in (i + 1)..n_projections {
            if let Some(m) = base.meet(i, j) {
                meets.insert((i, j), &s * m * &s_inv);
            }
        }
    }
    ProjectionFamily::new(NormedSpace::euclidean(dim), projections, Some(meets), seed)
}

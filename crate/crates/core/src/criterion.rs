//! Criterion arithmetic: thresholds, growth constants, Banach-class
//! parameters and certification verdicts for generator schemes.
//!
//! A scheme records, per generator pair, how the pair interacts:
//! commuting, Heisenberg over a shared prime, an explicit singular-value
//! report, or link spectral data. Evaluation turns this into the angle
//! threshold comparison, the s-constants, Banach-Mazur / interpolation
//! class parameters and the fixed-point L^p exponent bound.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coset_spectra::{AngleReport, LinkTable};
use crate::error::{Error, Result};

/// How one generator pair interacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairKind {
    /// The two subgroups commute; the defect operator vanishes.
    Commuting,
    /// The pair generates the Heisenberg group modulo `q`.
    Heisenberg { q: u64 },
    /// Explicit nontrivial singular values of the defect operator.
    Explicit { singular_values: Vec<f64> },
    /// Link data: spectral gap of the pair's coset graph plus side sizes.
    Link {
        eta2: f64,
        v1_size: usize,
        v2_size: usize,
    },
}

impl PairKind {
    pub fn from_angle_report(report: &AngleReport) -> Self {
        PairKind::Explicit {
            singular_values: report.nontrivial_singular_values.clone(),
        }
    }

    fn hilbert_cos(&self) -> f64 {
        match self {
            PairKind::Commuting => 0.0,
            PairKind::Heisenberg { q } => 1.0 / (*q as f64).sqrt(),
            PairKind::Explicit { singular_values } => {
                singular_values.iter().copied().fold(0.0, f64::max)
            }
            PairKind::Link { eta2, .. } => 1.0 - eta2,
        }
    }
}

/// N generators with interaction data for every pair 1 <= i < j <= N.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorScheme {
    n_generators: usize,
    pair_data: BTreeMap<(usize, usize), PairKind>,
}

impl GeneratorScheme {
    /// Validate completeness of the pair table and the shared prime of
    /// Heisenberg pairs.
    pub fn new(n_generators: usize, pair_data: BTreeMap<(usize, usize), PairKind>) -> Result<Self> {
        if n_generators < 2 {
            return Err(Error::InvalidInput(
                "a scheme needs at least 2 generators".into(),
            ));
        }
        let mut missing = Vec::new();
        for i in 1..=n_generators {
            for j in (i + 1)..=n_generators {
                if !pair_data.contains_key(&(i, j)) {
                    missing.push((i, j));
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::InvalidInput(format!("missing pairs: {missing:?}")));
        }
        for &(i, j) in pair_data.keys() {
            if i == 0 || i >= j || j > n_generators {
                return Err(Error::InvalidInput(format!(
                    "invalid pair index ({i}, {j})"
                )));
            }
        }
        let primes: Vec<u64> = pair_data
            .values()
            .filter_map(|k| match k {
                PairKind::Heisenberg { q } => Some(*q),
                _ => None,
            })
            .collect();
        if primes.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidInput(
                "all Heisenberg pairs must share a single prime q".into(),
            ));
        }
        if let Some(&q) = primes.first() {
            if !is_prime(q) {
                return Err(Error::NotPrime(q));
            }
        }
        for (&(i, j), kind) in pair_data.iter() {
            if let PairKind::Link { eta2, .. } = kind {
                if !(*eta2 > 0.0 && *eta2 < 2.0) {
                    return Err(Error::InvalidInput(format!(
                        "pair ({i}, {j}) has eta2 = {eta2} outside (0, 2)"
                    )));
                }
            }
        }
        Ok(Self {
            n_generators,
            pair_data,
        })
    }

    pub fn n_generators(&self) -> usize {
        self.n_generators
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairKind> {
        self.pair_data.get(&(i, j))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(usize, usize), &PairKind)> {
        self.pair_data.iter()
    }

    /// Scheme whose link pairs come from an ingested link table and all
    /// remaining pairs must be covered by the table as well.
    pub fn from_link_table(n_generators: usize, table: &LinkTable) -> Result<Self> {
        let mut pair_data = BTreeMap::new();
        for p in &table.pairs {
            let (i, j) = p.pair;
            if i >= j {
                return Err(Error::InvalidInput(format!(
                    "link pair ({i}, {j}) must have i < j"
                )));
            }
            if pair_data
                .insert(
                    (i, j),
                    PairKind::Link {
                        eta2: p.eta2,
                        v1_size: p.v1_size,
                        v2_size: p.v2_size,
                    },
                )
                .is_some()
            {
                return Err(Error::InvalidInput(format!(
                    "duplicate link pair ({i}, {j})"
                )));
            }
        }
        Self::new(n_generators, pair_data)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pairs: Vec<serde_json::Value> = self
            .pair_data
            .iter()
            .map(|(&(i, j), kind)| {
                let mut v = serde_json::to_value(kind).expect("pair kind serializes");
                v["i"] = serde_json::json!(i);
                v["j"] = serde_json::json!(j);
                v
            })
            .collect();
        serde_json::json!({ "n": self.n_generators, "pairs": pairs })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct SchemeRepr {
            n: usize,
            pairs: Vec<serde_json::Value>,
        }
        let repr: SchemeRepr = serde_json::from_value(value.clone())?;
        let mut pair_data = BTreeMap::new();
        for entry in repr.pairs {
            let i = entry
                .get("i")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::InvalidInput("pair entry missing i".into()))?
                as usize;
            let j = entry
                .get("j")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::InvalidInput("pair entry missing j".into()))?
                as usize;
            let kind: PairKind = serde_json::from_value(entry)?;
            if pair_data.insert((i, j), kind).is_some() {
                return Err(Error::InvalidInput(format!("duplicate pair ({i}, {j})")));
            }
        }
        Self::new(repr.n, pair_data)
    }
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Angle threshold 1/(8N - 11) below which certification is possible.
pub fn angle_threshold(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput("threshold needs N >= 2".into()));
    }
    Ok(1.0 / (8.0 * n as f64 - 11.0))
}

/// The norm-growth constants attached to a certified scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SConstants {
    pub s1: f64,
    pub s2: f64,
    pub s0: f64,
}

/// s1 = ln(1 + eps/(2(1-eps)))/2, s2 = ln(1 + 1/(8N)), s0 = min.
pub fn s_constants(epsilon: f64, n: usize) -> Result<SConstants> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon = {epsilon} outside (0, 1)"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("s-constants need N >= 2".into()));
    }
    let s1 = (1.0 + epsilon / (2.0 * (1.0 - epsilon))).ln() / 2.0;
    let s2 = (1.0 + 1.0 / (8.0 * n as f64)).ln();
    Ok(SConstants {
        s1,
        s2,
        s0: s1.min(s2),
    })
}

/// Class-enlargement parameters: delta = c'/c - 1 and
/// theta = (ln 2 - ln c') / (ln 2 - ln c), so that 2 (c/2)^theta = c'.
pub fn class_params(c: f64, c_prime: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("c = {c} must be positive")));
    }
    if c >= 2.0 || c_prime >= 2.0 {
        return Err(Error::InvalidInput("c and c' must be below 2".into()));
    }
    if c_prime < c {
        return Err(Error::InvalidInput(format!(
            "need c <= c', got c = {c}, c' = {c_prime}"
        )));
    }
    let delta = c_prime / c - 1.0;
    let theta = (2.0f64.ln() - c_prime.ln()) / (2.0f64.ln() - c.ln());
    Ok((delta, theta))
}

/// Interpolation constant M(p1, p2, r): the closed form x / (1 - x) of
/// the geometric series with ratio x = 2^{(r/(r-1)) (1/p1 - 1/p2 - 1/r)}.
///
/// Diverges (error) unless 1/p1 - 1/p2 < 1/r.
pub fn schatten_m(p1: f64, p2: f64, r: f64) -> Result<f64> {
    if !(p1 > 1.0 && p1 <= 2.0) {
        return Err(Error::InvalidInput(format!("p1 = {p1} outside (1, 2]")));
    }
    if !(p2 >= 2.0 && p2.is_finite()) {
        return Err(Error::InvalidInput(format!("p2 = {p2} outside [2, inf)")));
    }
    if !(r >= 2.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("r = {r} outside [2, inf)")));
    }
    let gap = 1.0 / p1 - 1.0 / p2;
    if gap >= 1.0 / r {
        return Err(Error::InvalidInput(format!(
            "series diverges: 1/p1 - 1/p2 = {gap} >= 1/r = {}",
            1.0 / r
        )));
    }
    let exponent = r / (r - 1.0) * (gap - 1.0 / r);
    let x = 2f64.powf(exponent);
    Ok(x / (1.0 - x))
}

/// One admissible Banach class produced by a certified report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum BanachClassDescriptor {
    /// Banach-Mazur ball of radius 1 + delta around Hilbert spaces.
    HilbertBmBall { delta: f64, provenance: String },
    /// theta'-Hilbertian spaces with theta' >= theta.
    ThetaHilbertian { theta: f64, provenance: String },
    /// Type/cotype class at one (p1, p2, r) grid point with the supplied
    /// constants; admissible iff c = M * schatten_max(r) * T * C <= c'.
    TypeCotype {
        p1: f64,
        p2: f64,
        r: f64,
        type_constant: f64,
        cotype_constant: f64,
        c: f64,
        theta_min: Option<f64>,
        admissible: bool,
        provenance: String,
    },
}

/// Evaluation options; every field has a sensible default.
#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    /// Slack in the threshold inequality; derived from the gap when
    /// absent.
    pub epsilon: Option<f64>,
    /// Enlargement target c'; midpoint of [cos bound, threshold) when
    /// absent.
    pub c_prime: Option<f64>,
    /// Schatten exponents to report.
    pub r_grid: Vec<f64>,
    /// (p1, p2, r) grid for the type/cotype classes.
    pub type_cotype_grid: Vec<(f64, f64, f64)>,
    /// Type constant bound applied to the grid classes.
    pub type_constant: f64,
    /// Cotype constant bound applied to the grid classes.
    pub cotype_constant: f64,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        let mut grid = Vec::new();
        for p1 in [1.5, 2.0] {
            for p2 in [2.0, 3.0, 4.0] {
                for r in [2.0, 3.0, 4.0] {
                    grid.push((p1, p2, r));
                }
            }
        }
        Self {
            epsilon: None,
            c_prime: None,
            r_grid: vec![2.0, 3.0, 4.0],
            type_cotype_grid: grid,
            type_constant: 1.0,
            cotype_constant: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

/// Everything the criterion evaluation derives from a scheme.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub n_generators: usize,
    pub threshold: f64,
    pub cos_max_hilbert: f64,
    pub schatten_max: Vec<(f64, f64)>,
    pub epsilon: Option<f64>,
    pub s_constants: Option<SConstants>,
    pub verdict: Verdict,
    pub failed_inequality: Option<String>,
    pub c_prime: Option<f64>,
    pub class_params: Vec<BanachClassDescriptor>,
    /// Zero-angle special case: every class within the threshold is
    /// admissible and delta/theta arithmetic is skipped.
    pub all_classes_admissible: bool,
    /// Upper bound on the exponents p with the fixed-point property on
    /// L^p; `None` when not certified or unbounded (zero angle).
    pub fixed_point_lp_exponent: Option<f64>,
    pub fixed_point_lp_unbounded: bool,
}

impl CriterionReport {
    pub fn to_json(&self) -> serde_json::Value {
        let schatten: serde_json::Map<String, serde_json::Value> = self
            .schatten_max
            .iter()
            .map(|&(r, v)| (trim_float(r), serde_json::json!(v)))
            .collect();
        serde_json::json!({
            "n_generators": self.n_generators,
            "threshold": self.threshold,
            "cos_max_hilbert": self.cos_max_hilbert,
            "schatten_max": schatten,
            "epsilon": self.epsilon,
            "s1": self.s_constants.map(|s| s.s1),
            "s2": self.s_constants.map(|s| s.s2),
            "s0": self.s_constants.map(|s| s.s0),
            "verdict": match self.verdict {
                Verdict::Certified => "certified",
                Verdict::NotCertified => "not_certified",
            },
            "failed_inequality": self.failed_inequality,
            "c_prime": self.c_prime,
            "classes": self.class_params,
            "all_classes_admissible": self.all_classes_admissible,
            "fixed_point_lp_exponent": self.fixed_point_lp_exponent,
            "fixed_point_lp_unbounded": self.fixed_point_lp_unbounded,
        })
    }
}

fn trim_float(r: f64) -> String {
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

fn heisenberg_schatten(q: f64, r: f64) -> f64 {
    (q * q - q).powf(1.0 / r) / q.sqrt()
}

fn explicit_schatten(singular_values: &[f64], r: f64) -> f64 {
    singular_values
        .iter()
        .map(|s| s.powf(r))
        .sum::<f64>()
        .powf(1.0 / r)
}

/// Evaluate a scheme into a full report.
pub fn evaluate(scheme: &GeneratorScheme, options: &EvaluateOptions) -> Result<CriterionReport> {
    if !(options.type_constant >= 1.0) || !(options.cotype_constant >= 1.0) {
        return Err(Error::InvalidInput(
            "type and cotype constants must be >= 1".into(),
        ));
    }
    let n = scheme.n_generators();
    let threshold = angle_threshold(n)?;
    let cos_max = scheme
        .pairs()
        .map(|(_, kind)| kind.hilbert_cos())
        .fold(0.0, f64::max);

    // Link pairs enter the Schatten bound through the binding minimum of
    // eta2 and the largest min-side over link pairs.
    let link_pairs: Vec<(f64, usize)> = scheme
        .pairs()
        .filter_map(|(_, kind)| match kind {
            PairKind::Link {
                eta2,
                v1_size,
                v2_size,
            } => Some((*eta2, *v1_size.min(v2_size))),
            _ => None,
        })
        .collect();
    let link_bound = |r: f64| -> f64 {
        if link_pairs.is_empty() {
            return 0.0;
        }
        let eta_min = link_pairs
            .iter()
            .map(|&(e, _)| e)
            .fold(f64::INFINITY, f64::min);
        let l_max = link_pairs.iter().map(|&(_, l)| l).max().unwrap();
        (1.0 - eta_min) * (l_max as f64).powf(1.0 / r)
    };

    let schatten_at = |r: f64| -> f64 {
        let per_pair = scheme
            .pairs()
            .map(|(_, kind)| match kind {
                PairKind::Commuting => 0.0,
                PairKind::Heisenberg { q } => heisenberg_schatten(*q as f64, r),
                PairKind::Explicit { singular_values } => explicit_schatten(singular_values, r),
                PairKind::Link { .. } => 0.0,
            })
            .fold(0.0, f64::max);
        per_pair.max(link_bound(r))
    };
    let mut schatten_max: Vec<(f64, f64)> = options
        .r_grid
        .iter()
        .map(|&r| (r, schatten_at(r)))
        .collect();
    schatten_max.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Verdict: an admissible epsilon > 0 with cos_max <= (1-eps)/(8N-11)
    // must exist (strict threshold inequality).
    let derived_eps = 1.0 - cos_max * (8.0 * n as f64 - 11.0);
    let (verdict, epsilon, failed) = match options.epsilon {
        Some(eps) if !(eps > 0.0 && eps < 1.0) => {
            return Err(Error::InvalidInput(format!(
                "epsilon = {eps} outside (0, 1)"
            )));
        }
        Some(eps) => {
            let bound = (1.0 - eps) / (8.0 * n as f64 - 11.0);
            if cos_max <= bound {
                (Verdict::Certified, Some(eps), None)
            } else {
                (
                    Verdict::NotCertified,
                    None,
                    Some(format!(
                        "cos bound {cos_max:.6} > (1-eps)/(8N-11) = {bound:.6} at eps = {eps}"
                    )),
                )
            }
        }
        None => {
            if derived_eps > 0.0 {
                (Verdict::Certified, Some(derived_eps.min(1.0 - 1e-9)), None)
            } else {
                (
                    Verdict::NotCertified,
                    None,
                    Some(format!(
                        "cos bound {cos_max:.6} >= threshold 1/(8N-11) = {threshold:.6}"
                    )),
                )
            }
        }
    };

    let s = match (verdict, epsilon) {
        (Verdict::Certified, Some(eps)) => Some(s_constants(eps, n)?),
        _ => None,
    };

    let zero_cos = cos_max == 0.0;
    let c_prime = match (verdict, options.c_prime) {
        (Verdict::Certified, Some(cp)) => {
            if !(cp >= cos_max && cp < threshold) {
                return Err(Error::InvalidInput(format!(
                    "c' = {cp} outside [cos bound {cos_max}, threshold {threshold})"
                )));
            }
            Some(cp)
        }
        (Verdict::Certified, None) => Some((cos_max + threshold) / 2.0),
        _ => None,
    };

    let mut classes = Vec::new();
    if verdict == Verdict::Certified {
        let cp = c_prime.unwrap();
        if !zero_cos {
            let (delta, theta) = class_params(cos_max, cp)?;
            classes.push(BanachClassDescriptor::HilbertBmBall {
                delta,
                provenance: "hilbert_angle_route".into(),
            });
            classes.push(BanachClassDescriptor::ThetaHilbertian {
                theta,
                provenance: "hilbert_angle_route".into(),
            });
        }
        for &(p1, p2, r) in &options.type_cotype_grid {
            let m = match schatten_m(p1, p2, r) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let c = m * schatten_at(r) * options.type_constant * options.cotype_constant;
            let admissible = c <= cp;
            let theta_min = if admissible && c > 0.0 {
                Some((2.0f64.ln() - cp.ln()) / (2.0f64.ln() - c.ln()))
            } else if admissible {
                // Zero Schatten bound: any positive interpolation
                // exponent qualifies.
                None
            } else {
                None
            };
            classes.push(BanachClassDescriptor::TypeCotype {
                p1,
                p2,
                r,
                type_constant: options.type_constant,
                cotype_constant: options.cotype_constant,
                c,
                theta_min,
                admissible,
                provenance: "schatten_route".into(),
            });
        }
    }

    let (flp, flp_unbounded) = if verdict != Verdict::Certified {
        (None, false)
    } else if zero_cos {
        (None, true)
    } else {
        let value =
            2.0 * (2.0f64.ln() - cos_max.ln()) / (2.0f64.ln() + (8.0 * n as f64 - 11.0).ln());
        (Some(value), false)
    };

    Ok(CriterionReport {
        n_generators: n,
        threshold,
        cos_max_hilbert: cos_max,
        schatten_max,
        epsilon,
        s_constants: s,
        verdict,
        failed_inequality: failed,
        c_prime,
        class_params: classes,
        all_classes_admissible: zero_cos && verdict == Verdict::Certified,
        fixed_point_lp_exponent: flp,
        fixed_point_lp_unbounded: flp_unbounded,
    })
}

/// Generator scheme of the elementary/Steinberg layout over
/// F_q[t_1..t_m]: N = n + m subgroups, with the Heisenberg pairs
/// prescribed by the root combinatorics and all other pairs commuting.
pub fn steinberg_scheme(n: usize, m: usize, q: u64) -> Result<GeneratorScheme> {
    if n < 3 {
        return Err(Error::InvalidInput("steinberg layout needs n >= 3".into()));
    }
    if m < 1 {
        return Err(Error::InvalidInput("steinberg layout needs m >= 1".into()));
    }
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    let total = n + m;
    let mut pair_data = BTreeMap::new();
    for i in 1..=total {
        for j in (i + 1)..=total {
            let heis = (j < n && j == i + 1) || ((i == 1 || i == n - 1) && j >= n);
            let kind = if heis {
                PairKind::Heisenberg { q }
            } else {
                PairKind::Commuting
            };
            pair_data.insert((i, j), kind);
        }
    }
    GeneratorScheme::new(total, pair_data)
}

/// Scheme of a Kac-Moody-Steinberg group over F_q on a finite simple
/// graph: Heisenberg on edges, commuting off edges.
pub fn kac_moody_steinberg_scheme(
    n_vertices: usize,
    edges: &[(usize, usize)],
    q: u64,
) -> Result<GeneratorScheme> {
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if n_vertices < 2 {
        return Err(Error::InvalidInput(
            "graph needs at least 2 vertices".into(),
        ));
    }
    let mut pair_data = BTreeMap::new();
    for i in 1..=n_vertices {
        for j in (i + 1)..=n_vertices {
            pair_data.insert((i, j), PairKind::Commuting);
        }
    }
    for &(a, b) in edges {
        if a == b {
            return Err(Error::InvalidInput(format!("loop at vertex {a}")));
        }
        if a == 0 || b == 0 || a > n_vertices || b > n_vertices {
            return Err(Error::InvalidInput(format!("edge ({a}, {b}) out of range")));
        }
        let key = (a.min(b), a.max(b));
        if pair_data.insert(key, PairKind::Heisenberg { q }) != Some(PairKind::Commuting) {
            return Err(Error::InvalidInput(format!("multi-edge at {key:?}")));
        }
    }
    GeneratorScheme::new(n_vertices, pair_data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_pinned() {
        assert_eq!(angle_threshold(2).unwrap(), 0.2);
        assert_eq!(angle_threshold(3).unwrap(), 1.0 / 13.0);
        let mut prev = angle_threshold(2).unwrap();
        for n in 3..50 {
            let t = angle_threshold(n).unwrap();
            assert!(t < prev);
            assert!(t < 1.0 / (8.0 * n as f64 - 12.0));
            prev = t;
        }
        assert!(angle_threshold(1).is_err());
    }

    #[test]
    fn s_constants_pinned() {
        let s = s_constants(0.5, 2).unwrap();
        assert!((s.s1 - (1.5f64).ln() / 2.0).abs() < 1e-15);
        assert!((s.s2 - (17.0f64 / 16.0).ln()).abs() < 1e-15);
        assert_eq!(s.s0, s.s2);

        // eps -> 0 drives s1 (and s0) to 0.
        let tiny = s_constants(1e-12, 2).unwrap();
        assert!(tiny.s1 < 1e-12);
        assert_eq!(tiny.s0, tiny.s1);

        let s100 = s_constants(0.9, 100).unwrap();
        assert!((s100.s2 - (1.0 + 1.0 / 800.0f64).ln()).abs() < 1e-15);
        assert_eq!(s100.s0, s100.s2);

        assert!(s_constants(0.0, 2).is_err());
        assert!(s_constants(1.0, 2).is_err());
    }

    #[test]
    fn class_params_pinned_and_identity() {
        let (delta, theta) = class_params(0.1, 0.1).unwrap();
        assert_eq!(delta, 0.0);
        assert!((theta - 1.0).abs() < 1e-15);

        let (delta, theta) = class_params(0.05, 0.1).unwrap();
        assert!((delta - 1.0).abs() < 1e-12);
        let expected = (2.0f64.ln() - 0.1f64.ln()) / (2.0f64.ln() - 0.05f64.ln());
        assert!((theta - expected).abs() < 1e-15);

        // Defining identity 2 (c/2)^theta = c'.
        for (c, cp) in [(0.05, 0.1), (0.01, 0.19), (0.3, 0.31)] {
            let (_, theta) = class_params(c, cp).unwrap();
            assert!((2.0 * (c / 2.0f64).powf(theta) - cp).abs() < 1e-12);
        }

        assert!(class_params(0.2, 0.1).is_err());
        assert!(class_params(0.0, 0.1).is_err());
    }

    #[test]
    fn schatten_m_closed_form_pinned() {
        assert!((schatten_m(2.0, 2.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let x = 2f64.powf(-1.0 / 3.0);
        assert!((schatten_m(2.0, 2.0, 4.0).unwrap() - x / (1.0 - x)).abs() < 1e-12);
        assert!((schatten_m(2.0, 2.0, 4.0).unwrap() - 3.8473).abs() < 1e-4);
        // Boundary 1/p1 - 1/p2 = 1/r diverges.
        assert!(schatten_m(4.0 / 3.0, 4.0, 2.0).is_err());
    }

    #[test]
    fn heisenberg_scheme_verdicts() {
        let mut pairs = BTreeMap::new();
        pairs.insert((1, 2), PairKind::Heisenberg { q: 29 });
        let scheme = GeneratorScheme::new(2, pairs).unwrap();
        let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Certified);
        assert!((report.cos_max_hilbert - 1.0 / 29f64.sqrt()).abs() < 1e-15);
        let expected_flp = 2.0 * (2f64.ln() + 29f64.sqrt().ln()) / (2f64.ln() + 5f64.ln());
        assert!((report.fixed_point_lp_exponent.unwrap() - expected_flp).abs() < 1e-12);
        assert!(report.fixed_point_lp_exponent.unwrap() > 2.0);

        let mut pairs = BTreeMap::new();
        pairs.insert((1, 2), PairKind::Heisenberg { q: 23 });
        let scheme = GeneratorScheme::new(2, pairs).unwrap();
        let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
        // 23 < 25 = (8N-11)^2 fails the strict inequality.
        assert_eq!(report.verdict, Verdict::NotCertified);
        assert!(report.failed_inequality.is_some());
        assert!(report.fixed_point_lp_exponent.is_none());
    }

    #[test]
    fn heisenberg_certified_iff_q_above_squared_threshold() {
        for (n, q, expect) in [
            (2usize, 29u64, true),
            (2, 23, false),
            (2, 31, true),
            (3, 13 * 13 + 4, true), // 173 > 169
            (3, 167, false),
        ] {
            let mut pairs = BTreeMap::new();
            for i in 1..=n {
                for j in (i + 1)..=n {
                    pairs.insert((i, j), PairKind::Heisenberg { q });
                }
            }
            let scheme = GeneratorScheme::new(n, pairs).unwrap();
            let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
            let squared = ((8 * n - 11) * (8 * n - 11)) as u64;
            assert_eq!(
                report.verdict == Verdict::Certified,
                q > squared,
                "n = {n}, q = {q}"
            );
            assert_eq!(report.verdict == Verdict::Certified, expect);
        }
    }

    #[test]
    fn commuting_scheme_zero_angle_special_case() {
        for n in [2usize, 3, 5] {
            let mut pairs = BTreeMap::new();
            for i in 1..=n {
                for j in (i + 1)..=n {
                    pairs.insert((i, j), PairKind::Commuting);
                }
            }
            let scheme = GeneratorScheme::new(n, pairs).unwrap();
            let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
            assert_eq!(report.verdict, Verdict::Certified);
            assert_eq!(report.cos_max_hilbert, 0.0);
            assert!(report.all_classes_admissible);
            assert!(report.fixed_point_lp_unbounded);
            // delta/theta arithmetic skipped.
            assert!(!report
                .class_params
                .iter()
                .any(|c| matches!(c, BanachClassDescriptor::HilbertBmBall { .. })));
        }
    }

    #[test]
    fn steinberg_pair_table_pinned_for_n3_m1() {
        let scheme = steinberg_scheme(3, 1, 1031).unwrap();
        assert_eq!(scheme.n_generators(), 4);
        let heis: Vec<(usize, usize)> = scheme
            .pairs()
            .filter(|(_, k)| matches!(k, PairKind::Heisenberg { .. }))
            .map(|(&p, _)| p)
            .collect();
        assert_eq!(heis, vec![(1, 2), (1, 3), (1, 4), (2, 3), (2, 4)]);
        assert_eq!(scheme.pair(3, 4), Some(&PairKind::Commuting));

        let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Certified);
        assert!((report.threshold - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn steinberg_larger_layout() {
        let scheme = steinberg_scheme(4, 2, 7).unwrap();
        assert_eq!(scheme.n_generators(), 6);
        // Consecutive pairs below n are Heisenberg.
        assert!(matches!(
            scheme.pair(1, 2),
            Some(PairKind::Heisenberg { .. })
        ));
        assert!(matches!(
            scheme.pair(2, 3),
            Some(PairKind::Heisenberg { .. })
        ));
        // Distant pairs below n commute.
        assert!(matches!(scheme.pair(1, 3), Some(PairKind::Commuting)));
        // i = 2 with 1 < i < n-1 commutes with the t-block.
        assert!(matches!(scheme.pair(2, 4), Some(PairKind::Commuting)));
        assert!(matches!(scheme.pair(2, 5), Some(PairKind::Commuting)));
        // i = 1 and i = n-1 pair with every t-generator as Heisenberg.
        for j in 4..=6 {
            assert!(matches!(
                scheme.pair(1, j),
                Some(PairKind::Heisenberg { .. })
            ));
            assert!(matches!(
                scheme.pair(3, j),
                Some(PairKind::Heisenberg { .. })
            ));
        }
        // The t-block commutes internally.
        assert!(matches!(scheme.pair(4, 5), Some(PairKind::Commuting)));
        assert!(matches!(scheme.pair(5, 6), Some(PairKind::Commuting)));

        assert!(steinberg_scheme(2, 1, 7).is_err());
        assert!(steinberg_scheme(3, 0, 7).is_err());
        assert!(steinberg_scheme(3, 1, 9).is_err());
    }

    #[test]
    fn kms_schemes() {
        // Empty graph: all commuting.
        let scheme = kac_moody_steinberg_scheme(4, &[], 5).unwrap();
        let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
        assert_eq!(report.cos_max_hilbert, 0.0);

        // Single edge on two vertices: the Heisenberg scheme.
        let scheme = kac_moody_steinberg_scheme(2, &[(1, 2)], 29).unwrap();
        let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Certified);

        // Triangle at q = 1009: 1/sqrt(1009) < 1/13.
        let scheme = kac_moody_steinberg_scheme(3, &[(1, 2), (2, 3), (1, 3)], 1009).unwrap();
        let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Certified);
        assert!(report.cos_max_hilbert < report.threshold);

        assert!(kac_moody_steinberg_scheme(3, &[(1, 1)], 5).is_err());
        assert!(kac_moody_steinberg_scheme(3, &[(1, 2), (2, 1)], 5).is_err());
    }

    #[test]
    fn link_scheme_evaluation() {
        let mut pairs = BTreeMap::new();
        pairs.insert(
            (1, 2),
            PairKind::Link {
                eta2: 0.9,
                v1_size: 10,
                v2_size: 12,
            },
        );
        let scheme = GeneratorScheme::new(2, pairs).unwrap();
        let report = evaluate(&scheme, &EvaluateOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Certified);
        assert!((report.cos_max_hilbert - 0.1).abs() < 1e-12);
        // Schatten bound (1 - eta) L^{1/r} with L = 10.
        let s2 = report
            .schatten_max
            .iter()
            .find(|(r, _)| *r == 2.0)
            .unwrap()
            .1;
        assert!((s2 - 0.1 * 10f64.sqrt()).abs() < 1e-12);
        let expected_flp = 2.0 * (2f64.ln() - 0.1f64.ln()) / (2f64.ln() + 5f64.ln());
        assert!((report.fixed_point_lp_exponent.unwrap() - expected_flp).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_of_lp_exponent() {
        let eval_heis = |q: u64| {
            let mut pairs = BTreeMap::new();
            pairs.insert((1, 2), PairKind::Heisenberg { q });
            let scheme = GeneratorScheme::new(2, pairs).unwrap();
            evaluate(&scheme, &EvaluateOptions::default())
                .unwrap()
                .fixed_point_lp_exponent
                .unwrap()
        };
        let mut prev = 0.0;
        for q in [29u64, 31, 101, 1009] {
            let e = eval_heis(q);
            assert!(e > prev);
            prev = e;
        }

        let eval_link = |eta2: f64| {
            let mut pairs = BTreeMap::new();
            pairs.insert(
                (1, 2),
                PairKind::Link {
                    eta2,
                    v1_size: 5,
                    v2_size: 5,
                },
            );
            let scheme = GeneratorScheme::new(2, pairs).unwrap();
            evaluate(&scheme, &EvaluateOptions::default())
                .unwrap()
                .fixed_point_lp_exponent
                .unwrap()
        };
        assert!(eval_link(0.95) > eval_link(0.9));
    }

    #[test]
    fn scheme_validation_errors() {
        // Missing pair.
        let mut pairs = BTreeMap::new();
        pairs.insert((1, 2), PairKind::Commuting);
        assert!(GeneratorScheme::new(3, pairs).is_err());

        // Mixed Heisenberg primes.
        let mut pairs = BTreeMap::new();
        pairs.insert((1, 2), PairKind::Heisenberg { q: 5 });
        pairs.insert((1, 3), PairKind::Heisenberg { q: 7 });
        pairs.insert((2, 3), PairKind::Commuting);
        assert!(GeneratorScheme::new(3, pairs).is_err());
    }

    #[test]
    fn scheme_json_round_trip() {
        let scheme = steinberg_scheme(3, 1, 29).unwrap();
        let json = scheme.to_json();
        let back = GeneratorScheme::from_json(&json).unwrap();
        assert_eq!(scheme, back);
    }
}

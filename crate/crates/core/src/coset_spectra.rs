//! Bipartite coset graphs and their Laplacian spectra.
//!
//! For a finite group generated by two subgroups K1, K2, the graph has
//! the right cosets of K1 and K2 as its two sides, with an edge wherever
//! two cosets intersect. The normalized-Laplacian spectrum of this graph
//! predicts the nonzero singular values of the regular-representation
//! operator of k1*k2 - k12, and a dense brute-force oracle is run
//! against that prediction whenever the group fits the matrix cap.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::finite_group::{closure, right_cosets, GroupTable, Subgroup};
use crate::group_algebra::{averaging_idempotent, convolve, regular_rep, DENSE_MATRIX_CAP};
use crate::numeric::multiset_close;

/// Singular values at or below this threshold count as trivial (zero).
pub const ZERO_SINGULAR_TOL: f64 = 1e-10;

/// Tolerance for the spectrum-vs-oracle multiset comparison.
pub const ORACLE_TOL: f64 = 1e-9;

/// Bipartite graph on the right cosets of a generating subgroup pair.
#[derive(Debug, Clone)]
pub struct BipartiteCosetGraph {
    /// Number of right cosets of K1 (side 1 vertices).
    pub v1_count: usize,
    /// Number of right cosets of K2 (side 2 vertices).
    pub v2_count: usize,
    /// Edges as (side-1 index, side-2 index) pairs, sorted.
    pub edges: Vec<(u32, u32)>,
    /// Degree of every side-1 vertex: [K1 : K1 ∩ K2].
    pub l1: usize,
    /// Degree of every side-2 vertex: [K2 : K1 ∩ K2].
    pub l2: usize,
}

impl BipartiteCosetGraph {
    pub fn vertex_count(&self) -> usize {
        self.v1_count + self.v2_count
    }

    /// Degrees in the combined vertex order (side 1 first).
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![self.l1 as f64; self.v1_count];
        d.extend(std::iter::repeat_n(self.l2 as f64, self.v2_count));
        d
    }

    /// Edges in the combined vertex indexing.
    pub fn global_edges(&self) -> Vec<(u32, u32)> {
        self.edges
            .iter()
            .map(|&(a, b)| (a, b + self.v1_count as u32))
            .collect()
    }
}

/// Full normalized-Laplacian spectrum of a connected graph.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    /// Eigenvalues sorted ascending, clamped to [0, 2].
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors as columns, in the vertex basis (eigenvectors
    /// of the degree-weighted operator, not of its symmetrization).
    pub eigenvectors: DMatrix<f64>,
    /// Degree weights d(v) of the inner product.
    pub inner_product_weights: Vec<f64>,
}

/// Spectral and singular-value data for one subgroup pair.
#[derive(Debug, Clone)]
pub struct AngleReport {
    /// Largest nontrivial singular value (operator 2-norm of the
    /// regular-representation operator of k1*k2 - k12).
    pub hilbert_cos: f64,
    /// Schatten r-norms over the nontrivial singular values.
    pub schatten: Vec<(f64, f64)>,
    /// Nontrivial singular values, sorted ascending. From the dense
    /// oracle when it ran, otherwise from the spectrum prediction.
    pub nontrivial_singular_values: Vec<f64>,
    /// Nonzero predicted eigenvalues (1 - eta_i)^2, i = 2..=min(|V1|,|V2|),
    /// sorted ascending.
    pub predicted: Vec<f64>,
    /// Spectral gap eta_2 of the coset graph.
    pub eta2: f64,
    /// Whether the dense regular-representation oracle ran.
    pub oracle_used: bool,
}

impl AngleReport {
    pub fn schatten_value(&self, r: f64) -> Option<f64> {
        self.schatten
            .iter()
            .find(|(rr, _)| (rr - r).abs() < 1e-12)
            .map(|&(_, v)| v)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut schatten = serde_json::Map::new();
        for &(r, v) in &self.schatten {
            schatten.insert(trim_float(r), serde_json::json!(v));
        }
        serde_json::json!({
            "hilbert_cos": self.hilbert_cos,
            "schatten": schatten,
            "predicted": self.predicted,
            "oracle": self.nontrivial_singular_values,
            "eta2": self.eta2,
            "oracle_used": self.oracle_used,
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

/// Build the bipartite coset graph of a generating pair.
///
/// Fails with the actual closure order if K1 and K2 do not generate the
/// parent.
pub fn build_coset_graph(
    parent: &GroupTable,
    k1: &Subgroup,
    k2: &Subgroup,
) -> Result<BipartiteCosetGraph> {
    k1.check_parent(parent)?;
    k2.check_parent(parent)?;
    let seeds: Vec<usize> = k1
        .elements()
        .iter()
        .chain(k2.elements())
        .map(|&x| x as usize)
        .collect();
    let generated = closure(parent, &seeds)?;
    if generated.order() != parent.order() {
        return Err(Error::GenerationFailure {
            closure_order: generated.order(),
            parent_order: parent.order(),
        });
    }

    let parts1 = right_cosets(parent, k1)?;
    let parts2 = right_cosets(parent, k2)?;
    let meet: Vec<u32> = k1
        .elements()
        .iter()
        .copied()
        .filter(|&x| k2.contains(x as usize))
        .collect();
    let meet_order = meet.len();
    let l1 = k1.order() / meet_order;
    let l2 = k2.order() / meet_order;

    let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    for (i, coset) in parts1.cosets.iter().enumerate() {
        for &g in coset {
            edges.insert((i as u32, parts2.coset_of[g as usize]));
        }
    }
    let edges: Vec<(u32, u32)> = edges.into_iter().collect();

    let graph = BipartiteCosetGraph {
        v1_count: parts1.count(),
        v2_count: parts2.count(),
        edges,
        l1,
        l2,
    };

    // Semi-regularity and double-counting sanity.
    let mut deg1 = vec![0usize; graph.v1_count];
    let mut deg2 = vec![0usize; graph.v2_count];
    for &(a, b) in &graph.edges {
        deg1[a as usize] += 1;
        deg2[b as usize] += 1;
    }
    if deg1.iter().any(|&d| d != l1) || deg2.iter().any(|&d| d != l2) {
        return Err(Error::BadTable("coset graph is not semi-regular".into()));
    }
    debug_assert_eq!(graph.v1_count * l1, graph.edges.len());
    debug_assert_eq!(graph.v2_count * l2, graph.edges.len());

    if !connected(graph.vertex_count(), &graph.global_edges()) {
        return Err(Error::Disconnected);
    }
    Ok(graph)
}

fn connected(n: usize, edges: &[(u32, u32)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}

/// Normalized-Laplacian spectrum of an arbitrary connected graph given
/// by an edge list on vertices 0..n.
pub fn graph_laplacian_spectrum(n: usize, edges: &[(u32, u32)]) -> Result<LaplacianSpectrum> {
    if n == 0 {
        return Err(Error::InvalidInput("empty graph".into()));
    }
    for &(a, b) in edges {
        if a as usize >= n || b as usize >= n {
            return Err(Error::InvalidInput("edge endpoint out of range".into()));
        }
        if a == b {
            return Err(Error::InvalidInput("loops are not allowed".into()));
        }
    }
    if !connected(n, edges) {
        return Err(Error::Disconnected);
    }
    let mut degrees = vec![0.0f64; n];
    let mut adj = DMatrix::<f64>::zeros(n, n);
    for &(a, b) in edges {
        let (a, b) = (a as usize, b as usize);
        if adj[(a, b)] != 0.0 {
            return Err(Error::InvalidInput("multi-edges are not allowed".into()));
        }
        adj[(a, b)] = 1.0;
        adj[(b, a)] = 1.0;
        degrees[a] += 1.0;
        degrees[b] += 1.0;
    }
    if degrees.contains(&0.0) {
        return Err(Error::Disconnected);
    }

    // Symmetrize via D^{1/2} conjugation: I - D^{-1/2} A D^{-1/2}.
    let mut sym = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if adj[(i, j)] != 0.0 {
                sym[(i, j)] -= 1.0 / (degrees[i] * degrees[j]).sqrt();
            }
        }
    }
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (pos, &k) in order.iter().enumerate() {
        let mut lam = eig.eigenvalues[k];
        if lam < 0.0 && lam > -ZERO_SINGULAR_TOL {
            lam = 0.0;
        }
        if lam > 2.0 && lam < 2.0 + ZERO_SINGULAR_TOL {
            lam = 2.0;
        }
        eigenvalues.push(lam);
        // Back-substitute psi = D^{-1/2} phi.
        let mut col = eig.eigenvectors.column(k).clone_owned();
        for i in 0..n {
            col[i] /= degrees[i].sqrt();
        }
        eigenvectors.set_column(pos, &col);
    }
    Ok(LaplacianSpectrum {
        eigenvalues,
        eigenvectors,
        inner_product_weights: degrees,
    })
}

/// Spectrum of a coset graph (side-1 vertices first).
pub fn laplacian_spectrum(graph: &BipartiteCosetGraph) -> Result<LaplacianSpectrum> {
    graph_laplacian_spectrum(graph.vertex_count(), &graph.global_edges())
}

/// The two averaging half-step operators between the sides of a
/// bipartite coset graph, acting on functions in the combined vertex
/// order. `m1` maps side-2 data to side 1, `m2` the reverse.
pub fn half_step_operators(graph: &BipartiteCosetGraph) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = graph.vertex_count();
    let mut m1 = DMatrix::<f64>::zeros(n, n);
    let mut m2 = DMatrix::<f64>::zeros(n, n);
    for &(a, b) in &graph.edges {
        let (a, b) = (a as usize, graph.v1_count + b as usize);
        m1[(a, b)] = 1.0 / graph.l1 as f64;
        m2[(b, a)] = 1.0 / graph.l2 as f64;
    }
    (m1, m2)
}

/// Compute the angle data of a generating pair: spectrum-side prediction,
/// dense oracle when the parent order allows it (within `oracle_cap`,
/// itself bounded by the dense-matrix cap), Schatten norms on the
/// requested exponents.
pub fn angle_report(
    parent: &GroupTable,
    k1: &Subgroup,
    k2: &Subgroup,
    r_values: &[f64],
    oracle_cap: usize,
) -> Result<AngleReport> {
    for &r in r_values {
        if !(r >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "Schatten exponent r = {r} must be >= 1"
            )));
        }
    }
    let graph = build_coset_graph(parent, k1, k2)?;
    let spectrum = laplacian_spectrum(&graph)?;
    let side_min = graph.v1_count.min(graph.v2_count);

    // Predicted nonzero eigenvalues (1 - eta_i)^2 for i = 2..=min side.
    let mut predicted: Vec<f64> = spectrum.eigenvalues[1..side_min]
        .iter()
        .map(|eta| (1.0 - eta).abs())
        .filter(|s| *s > ZERO_SINGULAR_TOL)
        .map(|s| s * s)
        .collect();
    predicted.sort_by(f64::total_cmp);

    let mut predicted_singular: Vec<f64> = predicted.iter().map(|p| p.sqrt()).collect();
    predicted_singular.sort_by(f64::total_cmp);

    let (singular, oracle_used) = if parent.order() <= oracle_cap.min(DENSE_MATRIX_CAP) {
        let k1f = averaging_idempotent(parent, k1)?;
        let k2f = averaging_idempotent(parent, k2)?;
        let whole = Subgroup::new(parent, (0..parent.order() as u32).collect())?;
        let k12f = averaging_idempotent(parent, &whole)?;
        let diff = convolve(parent, &k1f, &k2f)?.minus(&k12f)?;
        let m = regular_rep(parent, &diff)?;
        let mut s: Vec<f64> = crate::numeric::singular_values(&m)
            .iter()
            .copied()
            .filter(|&x| x > ZERO_SINGULAR_TOL)
            .collect();
        s.sort_by(f64::total_cmp);
        if !multiset_close(&s, &predicted_singular, ORACLE_TOL) {
            return Err(Error::OracleMismatch(format!(
                "{} oracle singular values vs {} predicted",
                s.len(),
                predicted_singular.len()
            )));
        }
        (s, true)
    } else {
        (predicted_singular, false)
    };

    let hilbert_cos = singular.last().copied().unwrap_or(0.0);
    let mut schatten = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let sum: f64 = singular.iter().map(|s| s.powf(r)).sum();
        schatten.push((r, sum.powf(1.0 / r)));
    }
    schatten.sort_by(|a, b| a.0.total_cmp(&b.0));

    Ok(AngleReport {
        hilbert_cos,
        schatten,
        nontrivial_singular_values: singular,
        predicted,
        eta2: spectrum.eigenvalues[1],
        oracle_used,
    })
}

/// One pair entry of a link-spectra file.
#[derive(Debug, Deserialize)]
struct LinkEntry {
    pair: (usize, usize),
    #[serde(default)]
    eta2: Option<f64>,
    #[serde(default)]
    edges: Option<Vec<(u32, u32)>>,
    v1_size: usize,
    v2_size: usize,
}

/// Per-pair spectral summary extracted from a link-spectra file.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPair {
    pub pair: (usize, usize),
    pub eta2: f64,
    pub v1_size: usize,
    pub v2_size: usize,
}

/// Aggregated link data feeding the criterion evaluation.
#[derive(Debug, Clone)]
pub struct LinkTable {
    pub pairs: Vec<LinkPair>,
    /// Binding minimum of eta_2 over all pairs.
    pub eta_min: f64,
    /// Max over pairs of min(|V1|, |V2|).
    pub l_max: usize,
}

/// Parse link spectra: each pair gives either an explicit eta_2 or an
/// edge list from which the spectral gap is computed.
pub fn ingest_link_spectra(value: &serde_json::Value) -> Result<LinkTable> {
    let entries: Vec<LinkEntry> = serde_json::from_value(value.clone())?;
    if entries.is_empty() {
        return Err(Error::InvalidInput("link file has no pairs".into()));
    }
    let mut pairs = Vec::with_capacity(entries.len());
    for entry in entries {
        let eta2 = match (entry.eta2, entry.edges) {
            (Some(e), None) => e,
            (None, Some(edges)) => {
                let n = entry.v1_size + entry.v2_size;
                let spectrum = graph_laplacian_spectrum(n, &edges)?;
                spectrum.eigenvalues[1]
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput(format!(
                    "pair {:?} gives both eta2 and edges",
                    entry.pair
                )))
            }
            (None, None) => {
                return Err(Error::InvalidInput(format!(
                    "pair {:?} gives neither eta2 nor edges",
                    entry.pair
                )))
            }
        };
        if !(eta2 > 0.0 && eta2 < 2.0) {
            return Err(Error::InvalidInput(format!(
                "pair {:?} has eta2 = {eta2} outside (0, 2)",
                entry.pair
            )));
        }
        pairs.push(LinkPair {
            pair: entry.pair,
            eta2,
            v1_size: entry.v1_size,
            v2_size: entry.v2_size,
        });
    }
    let eta_min = pairs.iter().map(|p| p.eta2).fold(f64::INFINITY, f64::min);
    let l_max = pairs
        .iter()
        .map(|p| p.v1_size.min(p.v2_size))
        .max()
        .unwrap();
    Ok(LinkTable {
        pairs,
        eta_min,
        l_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_group::{
        dihedral_reflection_pair, elementary_abelian_factor_pair, heisenberg_pair,
        symmetric_reflection_pair,
    };

    #[test]
    fn s3_reflection_pair_gives_a_six_cycle() {
        let pair = symmetric_reflection_pair().unwrap();
        let g = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
        assert_eq!((g.v1_count, g.v2_count), (3, 3));
        assert_eq!((g.l1, g.l2), (2, 2));
        assert_eq!(g.edges.len(), 6);
    }

    #[test]
    fn product_pair_gives_complete_bipartite() {
        let pair = elementary_abelian_factor_pair(3).unwrap();
        let g = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
        assert_eq!((g.v1_count, g.v2_count), (3, 3));
        assert_eq!(g.edges.len(), 9);
    }

    #[test]
    fn heisenberg_pair_graph_shape() {
        let pair = heisenberg_pair(3).unwrap();
        let g = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
        assert_eq!((g.v1_count, g.v2_count), (9, 9));
        assert_eq!((g.l1, g.l2), (3, 3));
    }

    #[test]
    fn generation_failure_reports_closure_order() {
        let g = crate::finite_group::symmetric(4).unwrap();
        let k1 = closure(&g, &[g.generator("s1").unwrap()]).unwrap();
        let k2 = closure(&g, &[g.generator("s2").unwrap()]).unwrap();
        match build_coset_graph(&g, &k1, &k2) {
            Err(Error::GenerationFailure {
                closure_order,
                parent_order,
            }) => {
                assert_eq!(closure_order, 6);
                assert_eq!(parent_order, 24);
            }
            other => panic!("expected generation failure, got {other:?}"),
        }
    }

    #[test]
    fn six_cycle_spectrum_matches_closed_form() {
        // Oracle: eta_k = 1 - cos(2 pi k / 6).
        let pair = symmetric_reflection_pair().unwrap();
        let g = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
        let spectrum = laplacian_spectrum(&g).unwrap();
        let mut expected: Vec<f64> = (0..6)
            .map(|k| 1.0 - (2.0 * std::f64::consts::PI * k as f64 / 6.0).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        assert!(multiset_close(&spectrum.eigenvalues, &expected, 1e-12));
    }

    #[test]
    fn dihedral_pair_gives_the_eight_cycle_spectrum() {
        // Two generating reflections of the order-8 dihedral group give
        // 4 + 4 cosets joined in a cycle; oracle: eta = 1 - cos(2 pi k/8).
        let pair = dihedral_reflection_pair(4).unwrap();
        let g = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
        assert_eq!((g.v1_count, g.v2_count), (4, 4));
        assert_eq!((g.l1, g.l2), (2, 2));
        let spectrum = laplacian_spectrum(&g).unwrap();
        let mut expected: Vec<f64> = (0..8)
            .map(|k| 1.0 - (2.0 * std::f64::consts::PI * k as f64 / 8.0).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        assert!(multiset_close(&spectrum.eigenvalues, &expected, 1e-12));
    }

    #[test]
    fn defect_and_reversed_defect_share_schatten_norms() {
        // regular_rep(k2*k1 - k12) is the transpose of
        // regular_rep(k1*k2 - k12), so the singular values agree.
        let pair = heisenberg_pair(3).unwrap();
        let k1f = averaging_idempotent(&pair.group, &pair.k1).unwrap();
        let k2f = averaging_idempotent(&pair.group, &pair.k2).unwrap();
        let whole = Subgroup::new(&pair.group, (0..27).collect()).unwrap();
        let k12f = averaging_idempotent(&pair.group, &whole).unwrap();
        let forward = convolve(&pair.group, &k1f, &k2f).unwrap().minus(&k12f).unwrap();
        let reversed = convolve(&pair.group, &k2f, &k1f).unwrap().minus(&k12f).unwrap();
        let sf = crate::numeric::singular_values(&regular_rep(&pair.group, &forward).unwrap());
        let sr = crate::numeric::singular_values(&regular_rep(&pair.group, &reversed).unwrap());
        for (a, b) in sf.iter().zip(sr.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn complete_bipartite_spectrum() {
        let pair = elementary_abelian_factor_pair(3).unwrap();
        let g = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
        let spectrum = laplacian_spectrum(&g).unwrap();
        let expected = [0.0, 1.0, 1.0, 1.0, 1.0, 2.0];
        assert!(multiset_close(&spectrum.eigenvalues, &expected, 1e-12));
    }

    #[test]
    fn mid_spectrum_eigenvectors_are_mean_zero_per_side() {
        for pair in [
            symmetric_reflection_pair().unwrap(),
            dihedral_reflection_pair(4).unwrap(),
            heisenberg_pair(3).unwrap(),
        ] {
            let g = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
            let spectrum = laplacian_spectrum(&g).unwrap();
            for (k, &eta) in spectrum.eigenvalues.iter().enumerate() {
                if eta <= 1e-9 || eta >= 2.0 - 1e-9 {
                    continue;
                }
                let col = spectrum.eigenvectors.column(k);
                let sum1: f64 = (0..g.v1_count).map(|i| col[i]).sum();
                let sum2: f64 = (g.v1_count..g.vertex_count()).map(|i| col[i]).sum();
                assert!(sum1.abs() < 1e-9, "side-1 sum {sum1} at eta {eta}");
                assert!(sum2.abs() < 1e-9, "side-2 sum {sum2} at eta {eta}");
            }
        }
    }

    #[test]
    fn half_step_products_reproduce_predicted_eigenvalues() {
        let pair = symmetric_reflection_pair().unwrap();
        let g = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
        let (m1, m2) = half_step_operators(&g);
        let prod = &m2 * &m1;
        let eig = SymmetricEigen::new(prod.clone());
        let mut nonzero: Vec<f64> = eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|x| x.abs() > 1e-10)
            .collect();
        nonzero.sort_by(f64::total_cmp);
        // The constant function on side 2 contributes the trivial
        // eigenvalue 1 on top of the predicted values.
        let report =
            angle_report(&pair.group, &pair.k1, &pair.k2, &[2.0], DENSE_MATRIX_CAP).unwrap();
        let mut expected = report.predicted.clone();
        expected.push(1.0);
        expected.sort_by(f64::total_cmp);
        assert!(multiset_close(&nonzero, &expected, 1e-9));
    }

    #[test]
    fn s3_angle_report_pins_one_half() {
        let pair = symmetric_reflection_pair().unwrap();
        let report =
            angle_report(&pair.group, &pair.k1, &pair.k2, &[2.0], DENSE_MATRIX_CAP).unwrap();
        assert!(report.oracle_used);
        assert!((report.hilbert_cos - 0.5).abs() < 1e-12);
        assert!((report.eta2 - 0.5).abs() < 1e-12);
        assert_eq!(report.nontrivial_singular_values.len(), 2);
    }

    #[test]
    fn spectrum_only_mode_when_oracle_cap_is_exceeded() {
        let pair = heisenberg_pair(3).unwrap();
        let capped = angle_report(&pair.group, &pair.k1, &pair.k2, &[2.0], 8).unwrap();
        assert!(!capped.oracle_used);
        let full = angle_report(&pair.group, &pair.k1, &pair.k2, &[2.0], DENSE_MATRIX_CAP).unwrap();
        assert!(full.oracle_used);
        assert!((capped.hilbert_cos - full.hilbert_cos).abs() < 1e-9);
        assert!(multiset_close(
            &capped.nontrivial_singular_values,
            &full.nontrivial_singular_values,
            1e-9
        ));
    }

    #[test]
    fn commuting_pair_has_empty_nontrivial_spectrum() {
        for q in [2, 3, 5] {
            let pair = elementary_abelian_factor_pair(q).unwrap();
            let report =
                angle_report(&pair.group, &pair.k1, &pair.k2, &[2.0], DENSE_MATRIX_CAP).unwrap();
            assert!(report.nontrivial_singular_values.is_empty());
            assert_eq!(report.hilbert_cos, 0.0);
        }
    }

    #[test]
    fn heisenberg_report_matches_closed_forms() {
        let q = 3u64;
        let pair = heisenberg_pair(q).unwrap();
        let report = angle_report(
            &pair.group,
            &pair.k1,
            &pair.k2,
            &[2.0, 3.0],
            DENSE_MATRIX_CAP,
        )
        .unwrap();
        let qf = q as f64;
        assert!((report.hilbert_cos - 1.0 / qf.sqrt()).abs() < 1e-12);
        assert_eq!(
            report.nontrivial_singular_values.len(),
            (q * q - q) as usize
        );
        for &(r, v) in &report.schatten {
            let expected = (qf * qf - qf).powf(1.0 / r) / qf.sqrt();
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn schatten_is_nonincreasing_in_r_and_tends_to_the_norm() {
        let pair = heisenberg_pair(3).unwrap();
        let rs = [1.0, 2.0, 4.0, 8.0, 64.0];
        let report = angle_report(&pair.group, &pair.k1, &pair.k2, &rs, DENSE_MATRIX_CAP).unwrap();
        let values: Vec<f64> = report.schatten.iter().map(|&(_, v)| v).collect();
        for w in values.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
        assert!((values.last().unwrap() - report.hilbert_cos).abs() < 0.05);
    }

    #[test]
    fn norm_and_schatten_bounded_by_the_spectral_gap() {
        // ||defect|| <= 1 - eta2 and the Schatten norm is at most
        // (1 - eta2) min(|V1|, |V2|)^{1/r}.
        for pair in [
            symmetric_reflection_pair().unwrap(),
            dihedral_reflection_pair(4).unwrap(),
            heisenberg_pair(3).unwrap(),
            elementary_abelian_factor_pair(3).unwrap(),
        ] {
            let graph = build_coset_graph(&pair.group, &pair.k1, &pair.k2).unwrap();
            let rs = [1.0, 2.0, 3.0, 4.0];
            let report =
                angle_report(&pair.group, &pair.k1, &pair.k2, &rs, DENSE_MATRIX_CAP).unwrap();
            let slack = 1.0 - report.eta2;
            assert!(report.hilbert_cos <= slack + 1e-12);
            let min_side = graph.v1_count.min(graph.v2_count) as f64;
            for &(r, v) in &report.schatten {
                assert!(
                    v <= slack * min_side.powf(1.0 / r) + 1e-12,
                    "r = {r}: {v} > (1-eta2) min^1/r"
                );
            }
        }
    }

    #[test]
    fn link_ingest_edge_list_and_passthrough() {
        // 6-cycle as an edge list: eta2 = 1/2, min side 3.
        let edges: Vec<(u32, u32)> = vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)];
        let value = serde_json::json!([
            {"pair": [1, 2], "edges": edges, "v1_size": 3, "v2_size": 3},
            {"pair": [1, 3], "eta2": 0.9, "v1_size": 10, "v2_size": 12},
            {"pair": [2, 3], "eta2": 0.95, "v1_size": 4, "v2_size": 7},
        ]);
        let table = ingest_link_spectra(&value).unwrap();
        assert!((table.pairs[0].eta2 - 0.5).abs() < 1e-12);
        assert_eq!(table.l_max, 10);
        assert!((table.eta_min - 0.5).abs() < 1e-12);

        let bad = serde_json::json!([
            {"pair": [1, 2], "eta2": 2.5, "v1_size": 3, "v2_size": 3},
        ]);
        assert!(ingest_link_spectra(&bad).is_err());

        // Edge lists of disconnected graphs are rejected.
        let disconnected = serde_json::json!([
            {"pair": [1, 2], "edges": [(0, 1), (2, 3)], "v1_size": 2, "v2_size": 2},
        ]);
        assert!(matches!(
            ingest_link_spectra(&disconnected),
            Err(Error::Disconnected)
        ));
    }
}

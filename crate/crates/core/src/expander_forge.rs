//! Congruence quotients of elementary matrix groups over truncated
//! polynomial rings, their Cayley graphs, spectral gaps and Poincaré
//! constants.
//!
//! Groups are enumerated by breadth-first closure from the standard
//! generating layout (superdiagonal entries plus the corner entry with
//! and without a factor of t); vertices are canonical row-major
//! coefficient strings, so no multiplication table is materialized.
//!
//! Poincaré convention: the vertex sum is degree-weighted and the edge
//! sum runs over unordered edges once, so the best l^2 constant equals
//! the reciprocal of the normalized-Laplacian gap; the unweighted form
//! of the inequality follows with the same constant.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numeric::subseeded;

/// Default cap on enumerated group order.
pub const DEFAULT_VERTEX_CAP: usize = 100_000;

/// Graphs up to this size use a dense symmetric eigensolve; larger ones
/// go through Lanczos.
const DENSE_EIG_CAP: usize = 2000;

/// The truncated polynomial ring `F_q[t]/(t^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyRing {
    pub q: u32,
    pub k: usize,
}

impl PolyRing {
    pub fn new(q: u32, k: usize) -> Result<Self> {
        if !is_prime(q as u64) {
            return Err(Error::NotPrime(q as u64));
        }
        if k == 0 {
            return Err(Error::InvalidInput(
                "truncation degree k must be >= 1".into(),
            ));
        }
        if q > 251 {
            return Err(Error::InvalidInput(
                "q must fit in a byte (q <= 251)".into(),
            ));
        }
        Ok(Self { q, k })
    }

    pub fn size(&self) -> u64 {
        (self.q as u64).pow(self.k as u32)
    }

    pub fn zero(&self) -> Vec<u8> {
        vec![0; self.k]
    }

    pub fn one(&self) -> Vec<u8> {
        let mut c = vec![0; self.k];
        c[0] = 1;
        c
    }

    /// The monomial a * t^d, truncated to zero when d >= k.
    pub fn monomial(&self, a: u32, d: usize) -> Vec<u8> {
        let mut c = vec![0; self.k];
        if d < self.k {
            c[d] = (a % self.q) as u8;
        }
        c
    }

    pub fn add(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| ((x as u32 + y as u32) % self.q) as u8)
            .collect()
    }

    pub fn neg(&self, a: &[u8]) -> Vec<u8> {
        a.iter()
            .map(|&x| ((self.q - x as u32) % self.q) as u8)
            .collect()
    }

    pub fn mul(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        let mut c = vec![0u32; self.k];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if i + j >= self.k {
                    break;
                }
                c[i + j] = (c[i + j] + x as u32 * y as u32) % self.q;
            }
        }
        c.into_iter().map(|x| x as u8).collect()
    }

    pub fn format(&self, a: &[u8]) -> String {
        let mut terms = Vec::new();
        for (d, &c) in a.iter().enumerate() {
            if c == 0 {
                continue;
            }
            terms.push(match d {
                0 => format!("{c}"),
                1 if c == 1 => "t".to_string(),
                1 => format!("{c}t"),
                _ if c == 1 => format!("t^{d}"),
                _ => format!("{c}t^{d}"),
            });
        }
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join("+")
        }
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

/// An n x n matrix over a truncated polynomial ring, stored as row-major
/// canonical coefficient bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingMatrix {
    pub n: usize,
    pub data: Vec<u8>,
}

impl RingMatrix {
    pub fn identity(ring: &PolyRing, n: usize) -> Self {
        let mut data = vec![0u8; n * n * ring.k];
        for i in 0..n {
            data[(i * n + i) * ring.k] = 1;
        }
        Self { n, data }
    }

    /// Elementary matrix with `s` in the (i, j) entry (0-based, i != j).
    pub fn elementary(ring: &PolyRing, n: usize, i: usize, j: usize, s: &[u8]) -> Self {
        let mut m = Self::identity(ring, n);
        m.data[(i * n + j) * ring.k..(i * n + j + 1) * ring.k].copy_from_slice(s);
        m
    }

    pub fn entry<'a>(&'a self, ring: &PolyRing, i: usize, j: usize) -> &'a [u8] {
        &self.data[(i * self.n + j) * ring.k..(i * self.n + j + 1) * ring.k]
    }

    pub fn mul(&self, ring: &PolyRing, other: &RingMatrix) -> RingMatrix {
        let n = self.n;
        let mut data = vec![0u8; n * n * ring.k];
        for i in 0..n {
            for j in 0..n {
                let mut acc = ring.zero();
                for l in 0..n {
                    let prod = ring.mul(self.entry(ring, i, l), other.entry(ring, l, j));
                    acc = ring.add(&acc, &prod);
                }
                data[(i * n + j) * ring.k..(i * n + j + 1) * ring.k].copy_from_slice(&acc);
            }
        }
        RingMatrix { n, data }
    }

    pub fn is_identity(&self, ring: &PolyRing) -> bool {
        *self == Self::identity(ring, self.n)
    }

    /// Truncate every entry to the first `k2` coefficients.
    pub fn truncate(&self, ring: &PolyRing, k2: usize) -> RingMatrix {
        assert!(k2 <= ring.k);
        let n = self.n;
        let mut data = Vec::with_capacity(n * n * k2);
        for e in 0..n * n {
            data.extend_from_slice(&self.data[e * ring.k..e * ring.k + k2]);
        }
        RingMatrix { n, data }
    }

    pub fn serial(&self) -> String {
        self.data.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One labeled generator matrix.
#[derive(Debug, Clone)]
pub struct LabeledGenerator {
    pub label: String,
    pub matrix: RingMatrix,
}

/// The symmetric generating set of the standard layout.
#[derive(Debug, Clone)]
pub struct GeneratingSet {
    pub ring: PolyRing,
    pub n: usize,
    pub generators: Vec<LabeledGenerator>,
    /// Generators that collapsed to the identity in the quotient (the
    /// t-block at k = 1) and were dropped.
    pub degenerate_dropped: usize,
}

/// Standard generating layout for `EL_n(F_q[t]/(t^k))` with one
/// variable: the superdiagonal subgroups `e_{i,i+1}(a)`, the corner
/// subgroup `e_{n,1}(a)` and the corner t-subgroup `e_{n,1}(a t)`, all
/// nonidentity
/// elements, symmetrized.
pub fn standard_generators(n: usize, q: u32, k: usize) -> Result<GeneratingSet> {
    if n < 3 {
        return Err(Error::InvalidInput("elementary layout needs n >= 3".into()));
    }
    let ring = PolyRing::new(q, k)?;
    let mut generators: Vec<LabeledGenerator> = Vec::new();
    let mut degenerate = 0usize;
    let mut seen: HashMap<Vec<u8>, ()> = HashMap::new();
    let mut push = |label: String, m: RingMatrix, degenerate: &mut usize| {
        if m.is_identity(&ring) {
            *degenerate += 1;
            return;
        }
        if seen.insert(m.data.clone(), ()).is_none() {
            generators.push(LabeledGenerator { label, matrix: m });
        }
    };
    for a in 1..q {
        for i in 0..n - 1 {
            let s = ring.monomial(a, 0);
            let label = format!("e({},{})[{}]", i + 1, i + 2, ring.format(&s));
            push(
                label,
                RingMatrix::elementary(&ring, n, i, i + 1, &s),
                &mut degenerate,
            );
        }
        for d in 0..=1usize {
            let s = ring.monomial(a, d);
            let label = format!("e({},1)[{}]", n, ring.format(&s));
            push(
                label,
                RingMatrix::elementary(&ring, n, n - 1, 0, &s),
                &mut degenerate,
            );
        }
    }
    let set = GeneratingSet {
        ring,
        n,
        generators,
        degenerate_dropped: degenerate,
    };
    // The layout is closed under inverses: e_{i,j}(s)^-1 = e_{i,j}(-s).
    for g in &set.generators {
        let mut inv = RingMatrix::identity(&ring, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let e = g.matrix.entry(&ring, i, j);
                    let neg = ring.neg(e);
                    inv.data[(i * n + j) * ring.k..(i * n + j + 1) * ring.k].copy_from_slice(&neg);
                }
            }
        }
        debug_assert!(set.generators.iter().any(|h| h.matrix == inv));
    }
    Ok(set)
}

/// The finite quotient group enumerated from its generators.
#[derive(Debug, Clone)]
pub struct ElQuotient {
    pub n: usize,
    pub ring: PolyRing,
    pub generating_set: GeneratingSet,
    elements: Vec<RingMatrix>,
    index: HashMap<Vec<u8>, u32>,
}

impl ElQuotient {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, idx: usize) -> &RingMatrix {
        &self.elements[idx]
    }

    pub fn index_of(&self, m: &RingMatrix) -> Option<usize> {
        self.index.get(&m.data).map(|&i| i as usize)
    }

    /// Left-multiplication Cayley graph over the generating set.
    pub fn cayley_graph(&self) -> Result<CayleyGraph> {
        let gens = &self.generating_set.generators;
        if gens.is_empty() {
            return Err(Error::InvalidInput("no generators".into()));
        }
        let order = self.order();
        let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(gens.len()); order];
        for (idx, g) in self.elements.iter().enumerate() {
            for gen in gens {
                let prod = gen.matrix.mul(&self.ring, g);
                let j = self.index[&prod.data];
                adj[idx].push(j);
            }
        }
        let graph = SparseGraph::from_adjacency(adj)?;
        Ok(CayleyGraph {
            graph,
            vertex_labels: self.elements.iter().map(|m| m.serial()).collect(),
            generator_labels: gens.iter().map(|g| g.label.clone()).collect(),
        })
    }
}

/// Enumerate `EL_n(F_q[t]/(t^k))` by breadth-first closure from the
/// standard generators.
pub fn build_quotient(n: usize, q: u32, k: usize, cap: usize) -> Result<ElQuotient> {
    let set = standard_generators(n, q, k)?;
    let ring = set.ring;
    let identity = RingMatrix::identity(&ring, n);
    let mut index: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut elements: Vec<RingMatrix> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(identity.data.clone(), 0);
    elements.push(identity.clone());
    queue.push_back(identity);
    while let Some(g) = queue.pop_front() {
        for gen in &set.generators {
            let next = gen.matrix.mul(&ring, &g);
            if !index.contains_key(&next.data) {
                if elements.len() >= cap {
                    return Err(Error::VertexCapExceeded { cap });
                }
                index.insert(next.data.clone(), elements.len() as u32);
                elements.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    Ok(ElQuotient {
        n,
        ring,
        generating_set: set,
        elements,
        index,
    })
}

/// An undirected graph in adjacency-list form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    adj: Vec<Vec<u32>>,
}

impl SparseGraph {
    pub fn from_adjacency(adj: Vec<Vec<u32>>) -> Result<Self> {
        let n = adj.len();
        for (v, nbrs) in adj.iter().enumerate() {
            for &u in nbrs {
                if u as usize >= n {
                    return Err(Error::InvalidInput("neighbor out of range".into()));
                }
                if u as usize == v {
                    return Err(Error::InvalidInput(format!("loop at vertex {v}")));
                }
            }
        }
        let g = Self { adj };
        if !g.is_symmetric() {
            return Err(Error::InvalidInput("adjacency is not symmetric".into()));
        }
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidInput("edge endpoint out of range".into()));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("loop at vertex {a}")));
            }
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        Self::from_adjacency(adj)
    }

    fn is_symmetric(&self) -> bool {
        let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
        for (v, nbrs) in self.adj.iter().enumerate() {
            for &u in nbrs {
                let key = ((v as u32).min(u), (v as u32).max(u));
                *counts.entry(key).or_insert(0) += if (v as u32) < u { 1 } else { -1 };
            }
        }
        counts.values().all(|&c| c == 0)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|n| n.len()).max().unwrap_or(0)
    }

    /// Unordered edge list, each edge once, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut edges = Vec::new();
        for (v, nbrs) in self.adj.iter().enumerate() {
            for &u in nbrs {
                if (v as u32) < u {
                    edges.push((v as u32, u));
                }
            }
        }
        edges.sort_unstable();
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.adj[v] {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    stack.push(u as usize);
                }
            }
        }
        count == n
    }

    /// Eccentricity of vertex 0 by BFS; equals the diameter on
    /// vertex-transitive graphs (all graphs produced here).
    pub fn diameter_from_origin(&self) -> Result<usize> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let n = self.vertex_count();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        dist[0] = 0;
        queue.push_back(0usize);
        let mut ecc = 0;
        while let Some(v) = queue.pop_front() {
            for &u in &self.adj[v] {
                if dist[u as usize] == usize::MAX {
                    dist[u as usize] = dist[v] + 1;
                    ecc = ecc.max(dist[u as usize]);
                    queue.push_back(u as usize);
                }
            }
        }
        Ok(ecc)
    }

    /// Apply the degree-normalized adjacency D^{-1/2} A D^{-1/2}.
    fn apply_normalized_adjacency(&self, x: &DVector<f64>, inv_sqrt_deg: &[f64]) -> DVector<f64> {
        let n = self.vertex_count();
        let mut y = DVector::<f64>::zeros(n);
        for v in 0..n {
            let mut acc = 0.0;
            for &u in &self.adj[v] {
                acc += x[u as usize] * inv_sqrt_deg[u as usize];
            }
            y[v] = acc * inv_sqrt_deg[v];
        }
        y
    }
}

/// Complete graph on m vertices (sanity input).
pub fn complete_graph(m: usize) -> Result<SparseGraph> {
    if m < 2 {
        return Err(Error::InvalidInput("complete graph needs m >= 2".into()));
    }
    let mut edges = Vec::new();
    for a in 0..m as u32 {
        for b in (a + 1)..m as u32 {
            edges.push((a, b));
        }
    }
    SparseGraph::from_edges(m, &edges)
}

/// Cycle on m vertices (sanity input).
pub fn cycle_graph(m: usize) -> Result<SparseGraph> {
    if m < 3 {
        return Err(Error::InvalidInput("cycle needs m >= 3".into()));
    }
    let edges: Vec<(u32, u32)> = (0..m as u32).map(|i| (i, (i + 1) % m as u32)).collect();
    SparseGraph::from_edges(m, &edges)
}

/// A Cayley graph with its vertex and generator labels.
#[derive(Debug, Clone)]
pub struct CayleyGraph {
    pub graph: SparseGraph,
    /// Canonical matrix serial per vertex.
    pub vertex_labels: Vec<String>,
    pub generator_labels: Vec<String>,
}

/// Second-largest eigenvalue of the normalized adjacency together with
/// the corresponding eigenvector of the normalized Laplacian in the
/// vertex basis (psi = D^{-1/2} phi).
fn second_eigenpair(g: &SparseGraph, seed: u64) -> Result<(f64, DVector<f64>)> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.vertex_count();
    let degrees: Vec<f64> = (0..n).map(|v| g.degree(v) as f64).collect();
    let inv_sqrt_deg: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();

    if n <= DENSE_EIG_CAP {
        let mut s = DMatrix::<f64>::zeros(n, n);
        for v in 0..n {
            for &u in g.neighbors(v) {
                s[(v, u as usize)] = inv_sqrt_deg[v] * inv_sqrt_deg[u as usize];
            }
        }
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let second = order[1];
        let mu = eig.eigenvalues[second];
        let mut psi = eig.eigenvectors.column(second).clone_owned();
        for v in 0..n {
            psi[v] *= inv_sqrt_deg[v];
        }
        return Ok((mu, psi));
    }

    // Lanczos with full reorthogonalization on the normalized adjacency
    // restricted to the complement of its top eigenvector D^{1/2} 1.
    let mut top = DVector::<f64>::from_iterator(n, degrees.iter().map(|d| d.sqrt()));
    top /= top.norm();
    let deflate = |x: &mut DVector<f64>| {
        let c = top.dot(x);
        x.axpy(-c, &top, 1.0);
    };

    let max_iters = 400.min(n - 1);
    let mut rng = subseeded(seed, 0x1a2c);
    let mut v = DVector::<f64>::from_iterator(
        n,
        (0..n).map(|_| -> f64 { StandardNormal.sample(&mut rng) }),
    );
    deflate(&mut v);
    v /= v.norm();

    let mut basis: Vec<DVector<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_ritz = f64::NEG_INFINITY;
    let mut stable_checks = 0usize;

    for iter in 0..max_iters {
        let mut w = g.apply_normalized_adjacency(&basis[iter], &inv_sqrt_deg);
        deflate(&mut w);
        let alpha = basis[iter].dot(&w);
        alphas.push(alpha);
        w.axpy(-alpha, &basis[iter], 1.0);
        if iter > 0 {
            let beta_prev = betas[iter - 1];
            w.axpy(-beta_prev, &basis[iter - 1], 1.0);
        }
        // Full reorthogonalization, twice.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
            deflate(&mut w);
        }
        let beta = w.norm();
        if beta < 1e-13 {
            break;
        }
        betas.push(beta);
        basis.push(w / beta);

        // Ritz convergence check every few steps.
        if iter >= 10 && iter % 5 == 0 {
            let ritz = top_tridiagonal_eigenvalue(&alphas, &betas[..alphas.len() - 1]);
            if (ritz - last_ritz).abs() < 1e-12 {
                stable_checks += 1;
                if stable_checks >= 3 {
                    break;
                }
            } else {
                stable_checks = 0;
            }
            last_ritz = ritz;
        }
    }
    let m = alphas.len();
    if m == 0 {
        return Err(Error::EigensolverFailure(0));
    }
    // If the iteration budget ran out without a stabilized invariant
    // subspace (beta breakdown) or a converged Ritz value, refuse
    // rather than report an unconverged eigenvalue.
    if m == max_iters && stable_checks == 0 {
        let ritz = top_tridiagonal_eigenvalue(&alphas, &betas[..m - 1]);
        if (ritz - last_ritz).abs() > 1e-9 {
            return Err(Error::EigensolverFailure(max_iters));
        }
    }
    let (mu, y) = top_tridiagonal_eigenpair(&alphas, &betas[..m - 1]);
    let mut phi = DVector::<f64>::zeros(n);
    for (i, b) in basis.iter().take(m).enumerate() {
        phi.axpy(y[i], b, 1.0);
    }
    let mut psi = phi;
    for v in 0..n {
        psi[v] *= inv_sqrt_deg[v];
    }
    let norm = psi.norm();
    psi /= norm;
    Ok((mu, psi))
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

fn top_tridiagonal_eigenvalue(alphas: &[f64], betas: &[f64]) -> f64 {
    let eig = SymmetricEigen::new(tridiagonal(alphas, betas));
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn top_tridiagonal_eigenpair(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(tridiagonal(alphas, betas));
    let (best, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.total_cmp(b))
        .expect("nonempty tridiagonal");
    (
        eig.eigenvalues[best],
        eig.eigenvectors.column(best).clone_owned(),
    )
}

/// Smallest nonzero eigenvalue of the normalized Laplacian.
pub fn spectral_gap(g: &SparseGraph, seed: u64) -> Result<f64> {
    let (mu, _) = second_eigenpair(g, seed)?;
    Ok(1.0 - mu)
}

/// The gap together with its eigenvector in the vertex basis.
pub fn gap_eigenpair(g: &SparseGraph, seed: u64) -> Result<(f64, DVector<f64>)> {
    let (mu, psi) = second_eigenpair(g, seed)?;
    Ok((1.0 - mu, psi))
}

/// Spectral and Poincaré data of a graph.
#[derive(Debug, Clone)]
pub struct PoincareReport {
    /// Normalized-Laplacian spectral gap.
    pub lambda2: f64,
    /// Best l^2 Poincaré constant: degree-weighted vertex sum against
    /// the unordered edge sum, i.e. 1/lambda2.
    pub c_l2: f64,
    /// Heuristic lower bounds for l^p targets (R^3 with the l^p norm).
    pub c_lp_lower: Vec<(f64, f64)>,
    pub diameter: usize,
    /// Max valency D.
    pub valency: usize,
    /// Restarts used per p value.
    pub restarts: usize,
}

impl PoincareReport {
    pub fn to_json(&self, order: usize) -> serde_json::Value {
        let clp: serde_json::Map<String, serde_json::Value> = self
            .c_lp_lower
            .iter()
            .map(|&(p, v)| (format!("{p}"), serde_json::json!(v)))
            .collect();
        serde_json::json!({
            "order": order,
            "valency": self.valency,
            "gap": self.lambda2,
            "c_l2": self.c_l2,
            "c_lp": clp,
            "diameter": self.diameter,
            "convention": "degree-weighted vertex sum; unordered edge sum",
        })
    }
}

/// Ratio of the degree-weighted vertex spread to the edge energy for a
/// map phi: V -> R^d with the l^p norm on R^d, at the optimal translate.
fn poincare_ratio(
    g: &SparseGraph,
    phi: &DMatrix<f64>,
    p: f64,
    translate: &mut DVector<f64>,
) -> f64 {
    optimize_translate(g, phi, p, translate);
    let num = weighted_spread(g, phi, p, translate);
    let den = edge_energy(g, phi, p);
    if den <= 0.0 {
        return 0.0;
    }
    num / den
}

fn lp_norm_slice(v: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn weighted_spread(g: &SparseGraph, phi: &DMatrix<f64>, p: f64, translate: &DVector<f64>) -> f64 {
    let d = phi.nrows();
    let mut total = 0.0;
    let mut diff = vec![0.0; d];
    for v in 0..g.vertex_count() {
        for r in 0..d {
            diff[r] = phi[(r, v)] - translate[r];
        }
        let norm = lp_norm_slice(&diff, p);
        total += g.degree(v) as f64 * norm * norm;
    }
    total
}

fn edge_energy(g: &SparseGraph, phi: &DMatrix<f64>, p: f64) -> f64 {
    let d = phi.nrows();
    let mut total = 0.0;
    let mut diff = vec![0.0; d];
    for v in 0..g.vertex_count() {
        for &u in g.neighbors(v) {
            if (u as usize) <= v {
                continue;
            }
            for r in 0..d {
                diff[r] = phi[(r, v)] - phi[(r, u as usize)];
            }
            let norm = lp_norm_slice(&diff, p);
            total += norm * norm;
        }
    }
    total
}

/// Minimize the degree-weighted spread over the translate by gradient
/// descent (convex for p > 1; exact weighted mean at p = 2).
fn optimize_translate(g: &SparseGraph, phi: &DMatrix<f64>, p: f64, translate: &mut DVector<f64>) {
    let d = phi.nrows();
    let total_weight: f64 = (0..g.vertex_count()).map(|v| g.degree(v) as f64).sum();
    // Weighted mean start (exact answer for p = 2).
    for r in 0..d {
        let mut acc = 0.0;
        for v in 0..g.vertex_count() {
            acc += g.degree(v) as f64 * phi[(r, v)];
        }
        translate[r] = acc / total_weight;
    }
    if p == 2.0 {
        return;
    }
    let mut current = weighted_spread(g, phi, p, translate);
    let mut step = 0.5;
    let mut grad = DVector::<f64>::zeros(d);
    let mut diff = vec![0.0; d];
    for _ in 0..200 {
        grad.fill(0.0);
        for v in 0..g.vertex_count() {
            for r in 0..d {
                diff[r] = phi[(r, v)] - translate[r];
            }
            let norm = lp_norm_slice(&diff, p);
            if norm == 0.0 {
                continue;
            }
            let w = g.degree(v) as f64;
            for r in 0..d {
                let u = diff[r];
                grad[r] -= w * 2.0 * norm.powf(2.0 - p) * u.signum() * u.abs().powf(p - 1.0);
            }
        }
        let gnorm = grad.norm();
        if gnorm < 1e-12 {
            break;
        }
        let mut improved = false;
        for _ in 0..20 {
            let cand = &*translate - step / gnorm * &grad;
            let val = weighted_spread(g, phi, p, &cand);
            if val < current {
                *translate = cand;
                current = val;
                improved = true;
                step *= 1.3;
                break;
            }
            step *= 0.5;
        }
        if !improved && step < 1e-14 {
            break;
        }
    }
}

/// Compute the Poincaré report: exact l^2 constant from the spectrum,
/// multi-start heuristic lower bounds for the other p values, diameter
/// by breadth-first search.
pub fn poincare_constants(
    g: &SparseGraph,
    p_values: &[f64],
    seed: u64,
    restarts: usize,
) -> Result<PoincareReport> {
    for &p in p_values {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "p = {p} outside (1, inf) for the Poincaré heuristic"
            )));
        }
    }
    let (mu, psi) = second_eigenpair(g, seed)?;
    let lambda2 = 1.0 - mu;
    let c_l2 = 1.0 / lambda2;
    let n = g.vertex_count();
    let d = 3usize;

    let mut c_lp_lower = Vec::with_capacity(p_values.len());
    for &p in p_values {
        // One deterministic start lifts the gap eigenvector; the rest
        // are seeded Gaussian maps.
        let starts: Vec<DMatrix<f64>> = (0..restarts.max(1))
            .map(|k| {
                if k == 0 {
                    let mut phi = DMatrix::<f64>::zeros(d, n);
                    for v in 0..n {
                        phi[(0, v)] = psi[v];
                    }
                    phi
                } else {
                    let mut rng = subseeded(seed, 0x901c + k as u64);
                    DMatrix::from_fn(d, n, |_, _| StandardNormal.sample(&mut rng))
                }
            })
            .collect();
        let best = starts
            .into_par_iter()
            .map(|mut phi| maximize_poincare(g, &mut phi, p))
            .reduce(|| 0.0, f64::max);
        c_lp_lower.push((p, best));
    }

    Ok(PoincareReport {
        lambda2,
        c_l2,
        c_lp_lower,
        diameter: g.diameter_from_origin()?,
        valency: g.max_degree(),
        restarts: restarts.max(1),
    })
}

/// Alternating maximization of the Poincaré ratio over phi with the
/// translate re-optimized after every accepted ascent step.
fn maximize_poincare(g: &SparseGraph, phi: &mut DMatrix<f64>, p: f64) -> f64 {
    let n = g.vertex_count();
    let d = phi.nrows();
    let mut translate = DVector::<f64>::zeros(d);
    let mut best = poincare_ratio(g, phi, p, &mut translate);
    let mut step = 1.0f64;
    let mut diff = vec![0.0; d];
    for _ in 0..300 {
        // Gradient of log(num/den) in phi with the translate held fixed
        // (envelope: the translate is optimal for the current phi).
        let num = weighted_spread(g, phi, p, &translate);
        let den = edge_energy(g, phi, p);
        if den <= 0.0 || num <= 0.0 {
            break;
        }
        let mut grad = DMatrix::<f64>::zeros(d, n);
        for v in 0..n {
            for r in 0..d {
                diff[r] = phi[(r, v)] - translate[r];
            }
            let norm = lp_norm_slice(&diff, p);
            if norm > 0.0 {
                let w = g.degree(v) as f64 / num;
                for r in 0..d {
                    let u = diff[r];
                    grad[(r, v)] +=
                        w * 2.0 * norm.powf(2.0 - p) * u.signum() * u.abs().powf(p - 1.0);
                }
            }
            for &uvx in g.neighbors(v) {
                let uvx = uvx as usize;
                for r in 0..d {
                    diff[r] = phi[(r, v)] - phi[(r, uvx)];
                }
                let norm = lp_norm_slice(&diff, p);
                if norm > 0.0 {
                    for r in 0..d {
                        let u = diff[r];
                        grad[(r, v)] -=
                            2.0 * norm.powf(2.0 - p) * u.signum() * u.abs().powf(p - 1.0) / den;
                    }
                }
            }
        }
        let gnorm = grad.norm();
        if gnorm < 1e-13 {
            break;
        }
        let scale = phi.norm().max(1.0);
        let mut improved = false;
        for _ in 0..25 {
            let cand = &*phi + (step * scale / gnorm) * &grad;
            let mut cand_translate = translate.clone();
            let mut owned = cand;
            let val = poincare_ratio(g, &owned, p, &mut cand_translate);
            if val > best * (1.0 + 1e-12) {
                std::mem::swap(phi, &mut owned);
                translate = cand_translate;
                best = val;
                improved = true;
                step *= 1.4;
                break;
            }
            step *= 0.5;
        }
        if !improved && step * scale < 1e-13 {
            break;
        }
    }
    best
}

/// Export formats for Cayley graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    CsvEdges,
    Json,
}

/// Render a Cayley graph with a deterministic vertex order (sorted by
/// canonical matrix serial).
pub fn export_cayley(g: &CayleyGraph, format: ExportFormat) -> String {
    let n = g.graph.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.vertex_labels[a].cmp(&g.vertex_labels[b]));
    let mut rank = vec![0u32; n];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new as u32;
    }
    let mut edges: Vec<(u32, u32)> = g
        .graph
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (rank[a as usize], rank[b as usize]);
            (x.min(y), x.max(y))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();

    match format {
        ExportFormat::CsvEdges => {
            let mut out = String::new();
            for (a, b) in edges {
                out.push_str(&format!("{a},{b}\n"));
            }
            out
        }
        ExportFormat::Dot => {
            let mut out = String::from("graph cayley {\n");
            for (new, &old) in order.iter().enumerate() {
                out.push_str(&format!("  v{new} [label=\"{}\"];\n", g.vertex_labels[old]));
            }
            for (a, b) in edges {
                out.push_str(&format!("  v{a} -- v{b};\n"));
            }
            out.push_str("}\n");
            out
        }
        ExportFormat::Json => {
            let labels: Vec<&str> = order
                .iter()
                .map(|&old| g.vertex_labels[old].as_str())
                .collect();
            serde_json::to_string_pretty(&serde_json::json!({
                "order": n,
                "valency": g.graph.max_degree(),
                "generators": g.generator_labels,
                "vertices": labels,
                "edges": edges,
            }))
            .expect("graph json serializes")
                + "\n"
        }
    }
}

/// Rebuild a Cayley graph from its JSON export.
pub fn import_cayley_json(text: &str) -> Result<CayleyGraph> {
    #[derive(Deserialize)]
    struct Repr {
        order: usize,
        generators: Vec<String>,
        vertices: Vec<String>,
        edges: Vec<(u32, u32)>,
    }
    let repr: Repr = serde_json::from_str(text)?;
    if repr.vertices.len() != repr.order {
        return Err(Error::InvalidInput(
            "vertex list does not match order".into(),
        ));
    }
    let graph = SparseGraph::from_edges(repr.order, &repr.edges)?;
    Ok(CayleyGraph {
        graph,
        vertex_labels: repr.vertices,
        generator_labels: repr.generators,
    })
}

//! Finite groups as explicit multiplication tables.
//!
//! Elements are dense indices `0..order` with the identity at index 0.
//! Tables are built once and immutable afterwards; subgroups hold sorted
//! index sets against a parent identified by a content fingerprint.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest order admitted for a dense multiplication table.
pub const MAX_TABLE_ORDER: usize = 1 << 16;

/// Orders up to this bound get an exhaustive associativity check on
/// validation; larger tables get 10^5 random triples.
const EXHAUSTIVE_ASSOC_ORDER: usize = 512;

/// A finite group given by its full multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTable {
    order: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    generators: BTreeMap<String, u32>,
    id: u64,
}

#[derive(Serialize, Deserialize)]
struct GroupTableRepr {
    order: usize,
    mul: Vec<u32>,
    generators: BTreeMap<String, u32>,
}

impl GroupTable {
    /// Build a table from raw parts, validating the group axioms.
    ///
    /// Rows and columns must be permutations, index 0 must act as the
    /// identity, and associativity is checked exhaustively up to order
    /// 512 (randomized on 10^5 triples above that).
    pub fn from_parts(
        order: usize,
        mul: Vec<u32>,
        generators: BTreeMap<String, u32>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::BadTable("order must be positive".into()));
        }
        if order > MAX_TABLE_ORDER {
            return Err(Error::BadTable(format!(
                "order {order} exceeds the dense-table cap {MAX_TABLE_ORDER}"
            )));
        }
        if mul.len() != order * order {
            return Err(Error::BadTable(format!(
                "table has {} entries, expected {}",
                mul.len(),
                order * order
            )));
        }
        if mul.iter().any(|&x| x as usize >= order) {
            return Err(Error::BadTable("entry out of range".into()));
        }
        // Rows and columns are permutations.
        let mut seen = vec![false; order];
        for a in 0..order {
            seen.iter_mut().for_each(|s| *s = false);
            for b in 0..order {
                let p = mul[a * order + b] as usize;
                if seen[p] {
                    return Err(Error::BadTable(format!("row {a} is not a permutation")));
                }
                seen[p] = true;
            }
        }
        for b in 0..order {
            seen.iter_mut().for_each(|s| *s = false);
            for a in 0..order {
                let p = mul[a * order + b] as usize;
                if seen[p] {
                    return Err(Error::BadTable(format!("column {b} is not a permutation")));
                }
                seen[p] = true;
            }
        }
        // Identity at index 0.
        for a in 0..order {
            if mul[a * order] as usize != a || mul[a] as usize != a {
                return Err(Error::BadTable(
                    "index 0 is not a two-sided identity".into(),
                ));
            }
        }
        // Associativity.
        let assoc = |a: usize, b: usize, c: usize| {
            let ab = mul[a * order + b] as usize;
            let bc = mul[b * order + c] as usize;
            mul[ab * order + c] == mul[a * order + bc]
        };
        if order <= EXHAUSTIVE_ASSOC_ORDER {
            for a in 0..order {
                for b in 0..order {
                    for c in 0..order {
                        if !assoc(a, b, c) {
                            return Err(Error::BadTable(format!(
                                "associativity fails at ({a}, {b}, {c})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a550);
            for _ in 0..100_000 {
                let a = rng.random_range(0..order);
                let b = rng.random_range(0..order);
                let c = rng.random_range(0..order);
                if !assoc(a, b, c) {
                    return Err(Error::BadTable(format!(
                        "associativity fails at ({a}, {b}, {c})"
                    )));
                }
            }
        }
        for (label, &g) in &generators {
            if g as usize >= order {
                return Err(Error::BadTable(format!(
                    "generator {label} index {g} out of range"
                )));
            }
        }
        Ok(Self::assemble(order, mul, generators))
    }

    /// Internal constructor for tables built from a concrete action
    /// (associative by construction).
    fn assemble(order: usize, mul: Vec<u32>, generators: BTreeMap<String, u32>) -> Self {
        let mut inv = vec![0u32; order];
        for a in 0..order {
            for b in 0..order {
                if mul[a * order + b] == 0 {
                    inv[a] = b as u32;
                    break;
                }
            }
        }
        debug_assert!((0..order).all(|a| {
            let i = inv[a] as usize;
            mul[a * order + i] == 0 && mul[i * order + a] == 0
        }));
        let mut hasher = Sha256::new();
        hasher.update((order as u64).to_le_bytes());
        for &x in &mul {
            hasher.update(x.to_le_bytes());
        }
        let digest = hasher.finalize();
        let id = u64::from_le_bytes(digest[..8].try_into().unwrap());
        Self {
            order,
            mul,
            inv,
            generators,
            id,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Content fingerprint of the table; subgroup/function operands are
    /// checked against it.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    pub fn generator(&self, label: &str) -> Option<usize> {
        self.generators.get(label).map(|&g| g as usize)
    }

    pub fn generator_labels(&self) -> impl Iterator<Item = (&str, usize)> {
        self.generators
            .iter()
            .map(|(l, &g)| (l.as_str(), g as usize))
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut n = 1;
        while x != 0 {
            x = self.mul(x, a);
            n += 1;
        }
        n
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "order": self.order,
            "mul": self.mul,
            "generators": self.generators,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let repr: GroupTableRepr = serde_json::from_value(value.clone())?;
        Self::from_parts(repr.order, repr.mul, repr.generators)
    }
}

/// A subgroup of a [`GroupTable`], stored as a sorted index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    parent_id: u64,
    elements: Vec<u32>,
}

impl Subgroup {
    /// Wrap an element set as a subgroup after checking closure,
    /// identity, inverses and Lagrange divisibility.
    pub fn new(parent: &GroupTable, mut elements: Vec<u32>) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        if elements.first() != Some(&0) {
            return Err(Error::BadSubgroup("missing identity".into()));
        }
        for &a in &elements {
            if a as usize >= parent.order() {
                return Err(Error::BadIndex {
                    index: a as usize,
                    order: parent.order(),
                });
            }
        }
        let member = |x: usize| elements.binary_search(&(x as u32)).is_ok();
        for &a in &elements {
            if !member(parent.inv(a as usize)) {
                return Err(Error::BadSubgroup(format!("inverse of {a} missing")));
            }
            for &b in &elements {
                if !member(parent.mul(a as usize, b as usize)) {
                    return Err(Error::BadSubgroup(format!(
                        "product {a}*{b} escapes the set"
                    )));
                }
            }
        }
        if !parent.order().is_multiple_of(elements.len()) {
            return Err(Error::BadSubgroup(format!(
                "size {} does not divide the group order {}",
                elements.len(),
                parent.order()
            )));
        }
        Ok(Self {
            parent_id: parent.id(),
            elements,
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[u32] {
        &self.elements
    }

    pub fn contains(&self, x: usize) -> bool {
        self.elements.binary_search(&(x as u32)).is_ok()
    }

    pub fn parent_id(&self) -> u64 {
        self.parent_id
    }

    /// Fails unless this subgroup was built against `parent`.
    pub fn check_parent(&self, parent: &GroupTable) -> Result<()> {
        if self.parent_id == parent.id() {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }
}

/// Right cosets `Kg` of a subgroup, indexed in order of their smallest
/// representative.
#[derive(Debug, Clone)]
pub struct RightCosetPartition {
    pub cosets: Vec<Vec<u32>>,
    pub coset_of: Vec<u32>,
}

impl RightCosetPartition {
    pub fn count(&self) -> usize {
        self.cosets.len()
    }
}

/// Smallest subgroup containing `seeds`, by breadth-first closure under
/// multiplication (inverses follow in a finite group; they are folded in
/// explicitly anyway so partial fronts stay symmetric).
pub fn closure(parent: &GroupTable, seeds: &[usize]) -> Result<Subgroup> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput(
            "closure needs at least one seed".into(),
        ));
    }
    for &s in seeds {
        if s >= parent.order() {
            return Err(Error::BadIndex {
                index: s,
                order: parent.order(),
            });
        }
    }
    let mut steps: Vec<usize> = Vec::new();
    for &s in seeds {
        steps.push(s);
        steps.push(parent.inv(s));
    }
    steps.sort_unstable();
    steps.dedup();

    let mut member = vec![false; parent.order()];
    let mut queue = std::collections::VecDeque::new();
    member[0] = true;
    queue.push_back(0usize);
    while let Some(h) = queue.pop_front() {
        for &s in &steps {
            let next = parent.mul(h, s);
            if !member[next] {
                member[next] = true;
                queue.push_back(next);
            }
        }
    }
    let elements: Vec<u32> = (0..parent.order() as u32)
        .filter(|&i| member[i as usize])
        .collect();
    Subgroup::new(parent, elements)
}

/// Partition of the parent into right cosets `Kg`.
pub fn right_cosets(parent: &GroupTable, sub: &Subgroup) -> Result<RightCosetPartition> {
    sub.check_parent(parent)?;
    let order = parent.order();
    let unassigned = u32::MAX;
    let mut coset_of = vec![unassigned; order];
    let mut cosets = Vec::with_capacity(order / sub.order());
    for g in 0..order {
        if coset_of[g] != unassigned {
            continue;
        }
        let idx = cosets.len() as u32;
        let mut coset: Vec<u32> = sub
            .elements()
            .iter()
            .map(|&k| parent.mul(k as usize, g) as u32)
            .collect();
        coset.sort_unstable();
        for &x in &coset {
            debug_assert_eq!(coset_of[x as usize], unassigned);
            coset_of[x as usize] = idx;
        }
        cosets.push(coset);
    }
    debug_assert_eq!(cosets.len() * sub.order(), order);
    Ok(RightCosetPartition { cosets, coset_of })
}

fn require_prime(q: u64) -> Result<()> {
    if q < 2 {
        return Err(Error::NotPrime(q));
    }
    let mut d = 2u64;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return Err(Error::NotPrime(q));
        }
        d += 1;
    }
    Ok(())
}

/// Heisenberg group modulo a prime `q`: order q^3, generated by `x`, `y`
/// with the commutator central of order q.
///
/// Elements are triples (a, b, c) with product
/// (a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b') over F_q,
/// indexed as a*q^2 + b*q + c.
pub fn heisenberg(q: u64) -> Result<GroupTable> {
    require_prime(q)?;
    let q = q as usize;
    let order = q * q * q;
    if order > MAX_TABLE_ORDER {
        return Err(Error::BadTable(format!(
            "order {order} exceeds the dense-table cap {MAX_TABLE_ORDER}"
        )));
    }
    let idx = |a: usize, b: usize, c: usize| (a * q + b) * q + c;
    let mut mul = vec![0u32; order * order];
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                let lhs = idx(a, b, c);
                for a2 in 0..q {
                    for b2 in 0..q {
                        for c2 in 0..q {
                            let rhs = idx(a2, b2, c2);
                            let prod = idx((a + a2) % q, (b + b2) % q, (c + c2 + a * b2) % q);
                            mul[lhs * order + rhs] = prod as u32;
                        }
                    }
                }
            }
        }
    }
    let mut generators = BTreeMap::new();
    generators.insert("x".to_string(), idx(1, 0, 0) as u32);
    generators.insert("y".to_string(), idx(0, 1, 0) as u32);
    Ok(GroupTable::assemble(order, mul, generators))
}

/// The direct product F_q x F_q with the two factors as `x`, `y`.
pub fn elementary_abelian_pair(q: u64) -> Result<GroupTable> {
    require_prime(q)?;
    let q = q as usize;
    let order = q * q;
    let mut mul = vec![0u32; order * order];
    for a in 0..q {
        for b in 0..q {
            let lhs = a * q + b;
            for a2 in 0..q {
                for b2 in 0..q {
                    let rhs = a2 * q + b2;
                    mul[lhs * order + rhs] = (((a + a2) % q) * q + (b + b2) % q) as u32;
                }
            }
        }
    }
    let mut generators = BTreeMap::new();
    generators.insert("x".to_string(), q as u32);
    generators.insert("y".to_string(), 1u32);
    Ok(GroupTable::assemble(order, mul, generators))
}

/// Symmetric group on `n` letters (n <= 8 for the dense cap), with the
/// adjacent transpositions labeled `s1`, ..., `s{n-1}`.
pub fn symmetric(n: usize) -> Result<GroupTable> {
    if n == 0 || n > 8 {
        return Err(Error::InvalidInput(format!(
            "symmetric group size {n} outside 1..=8"
        )));
    }
    // Permutations in lexicographic order put the identity first.
    let mut perms: Vec<Vec<u8>> = Vec::new();
    let mut cur: Vec<u8> = (0..n as u8).collect();
    loop {
        perms.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1))
            .rev()
            .find(|&i| cur[i] < cur[i + 1])
        else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    let order = perms.len();
    let index: std::collections::HashMap<Vec<u8>, u32> = perms
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i as u32))
        .collect();
    let mut mul = vec![0u32; order * order];
    for (i, p) in perms.iter().enumerate() {
        for (j, r) in perms.iter().enumerate() {
            // (p ∘ r)(k) = p(r(k))
            let comp: Vec<u8> = (0..n).map(|k| p[r[k] as usize]).collect();
            mul[i * order + j] = index[&comp];
        }
    }
    let mut generators = BTreeMap::new();
    for k in 0..n.saturating_sub(1) {
        let mut t: Vec<u8> = (0..n as u8).collect();
        t.swap(k, k + 1);
        generators.insert(format!("s{}", k + 1), index[&t]);
    }
    Ok(GroupTable::assemble(order, mul, generators))
}

/// Dihedral group of order 2m, generated by the two reflections `s`, `t`
/// whose product is the rotation of order m.
pub fn dihedral(m: usize) -> Result<GroupTable> {
    if m < 2 {
        return Err(Error::InvalidInput(
            "dihedral parameter m must be >= 2".into(),
        ));
    }
    let order = 2 * m;
    if order > MAX_TABLE_ORDER {
        return Err(Error::BadTable(
            "dihedral order exceeds the dense-table cap".into(),
        ));
    }
    // Element (eps, j) acts on Z_m as x -> eps*x + j; index j for
    // rotations (eps = +1) and m + j for reflections (eps = -1).
    let idx = |flip: usize, j: usize| flip * m + j;
    let mut mul = vec![0u32; order * order];
    for f1 in 0..2 {
        for j1 in 0..m {
            for f2 in 0..2 {
                for j2 in 0..m {
                    // (f1, j1) ∘ (f2, j2): x -> e1*(e2*x + j2) + j1
                    let f = f1 ^ f2;
                    let j = if f1 == 0 {
                        (j1 + j2) % m
                    } else {
                        (j1 + m - j2 % m) % m
                    };
                    mul[idx(f1, j1) * order + idx(f2, j2)] = idx(f, j) as u32;
                }
            }
        }
    }
    let mut generators = BTreeMap::new();
    generators.insert("s".to_string(), idx(1, 0) as u32);
    generators.insert("t".to_string(), idx(1, 1) as u32);
    Ok(GroupTable::assemble(order, mul, generators))
}

/// A group together with a distinguished generating pair of subgroups.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub group: GroupTable,
    pub k1: Subgroup,
    pub k2: Subgroup,
}

fn pair_from_labels(group: GroupTable, l1: &str, l2: &str) -> Result<GeneratedPair> {
    let g1 = group
        .generator(l1)
        .ok_or_else(|| Error::InvalidInput(format!("missing generator {l1}")))?;
    let g2 = group
        .generator(l2)
        .ok_or_else(|| Error::InvalidInput(format!("missing generator {l2}")))?;
    let k1 = closure(&group, &[g1])?;
    let k2 = closure(&group, &[g2])?;
    Ok(GeneratedPair { group, k1, k2 })
}

/// H_q with `K1 = <x>`, `K2 = <y>`.
pub fn heisenberg_pair(q: u64) -> Result<GeneratedPair> {
    pair_from_labels(heisenberg(q)?, "x", "y")
}

/// F_q x F_q with the two factor subgroups.
pub fn elementary_abelian_factor_pair(q: u64) -> Result<GeneratedPair> {
    pair_from_labels(elementary_abelian_pair(q)?, "x", "y")
}

/// S_3 with the two adjacent transpositions.
pub fn symmetric_reflection_pair() -> Result<GeneratedPair> {
    pair_from_labels(symmetric(3)?, "s1", "s2")
}

/// Dihedral group of order 2m with its two generating reflections.
pub fn dihedral_reflection_pair(m: usize) -> Result<GeneratedPair> {
    pair_from_labels(dihedral(m)?, "s", "t")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force center of a table, used as a test oracle.
    fn center(g: &GroupTable) -> Vec<usize> {
        (0..g.order())
            .filter(|&a| (0..g.order()).all(|b| g.mul(a, b) == g.mul(b, a)))
            .collect()
    }

    /// Brute-force isomorphism search between small tables.
    fn isomorphic(a: &GroupTable, b: &GroupTable) -> bool {
        if a.order() != b.order() {
            return false;
        }
        let n = a.order();
        // Backtracking over images, pruning on element orders.
        fn extend(
            a: &GroupTable,
            b: &GroupTable,
            map: &mut Vec<Option<usize>>,
            used: &mut Vec<bool>,
            next: usize,
        ) -> bool {
            let n = a.order();
            if next == n {
                return true;
            }
            for img in 0..n {
                if used[img] || a.element_order(next) != b.element_order(img) {
                    continue;
                }
                map[next] = Some(img);
                used[img] = true;
                let consistent = (0..=next).all(|x| {
                    (0..=next).all(|y| {
                        let p = a.mul(x, y);
                        if p > next {
                            true
                        } else {
                            b.mul(map[x].unwrap(), map[y].unwrap()) == map[p].unwrap()
                        }
                    })
                });
                if consistent && extend(a, b, map, used, next + 1) {
                    return true;
                }
                map[next] = None;
                used[img] = false;
            }
            false
        }
        let mut map = vec![None; n];
        let mut used = vec![false; n];
        map[0] = Some(0);
        used[0] = true;
        extend(a, b, &mut map, &mut used, 1)
    }

    #[test]
    fn heisenberg_q3_order_and_cyclic_generators() {
        let g = heisenberg(3).unwrap();
        assert_eq!(g.order(), 27);
        let x = g.generator("x").unwrap();
        let k1 = closure(&g, &[x]).unwrap();
        assert_eq!(k1.order(), 3);
    }

    #[test]
    fn heisenberg_q5_center_order_five() {
        let g = heisenberg(5).unwrap();
        assert_eq!(g.order(), 125);
        assert_eq!(center(&g).len(), 5);
    }

    #[test]
    fn heisenberg_q2_is_dihedral_of_order_eight() {
        let h = heisenberg(2).unwrap();
        assert_eq!(h.order(), 8);
        let d = dihedral(4).unwrap();
        assert!(isomorphic(&h, &d));
    }

    #[test]
    fn heisenberg_rejects_composite() {
        assert!(matches!(heisenberg(4), Err(Error::NotPrime(4))));
        assert!(matches!(heisenberg(1), Err(Error::NotPrime(1))));
    }

    #[test]
    fn elementary_abelian_pair_basics() {
        let g = elementary_abelian_pair(3).unwrap();
        assert_eq!(g.order(), 9);
        let pair = elementary_abelian_factor_pair(3).unwrap();
        let meet: Vec<u32> = pair
            .k1
            .elements()
            .iter()
            .copied()
            .filter(|x| pair.k2.contains(*x as usize))
            .collect();
        assert_eq!(meet, vec![0]);

        let g2 = elementary_abelian_pair(2).unwrap();
        for a in 1..g2.order() {
            assert_eq!(g2.element_order(a), 2);
        }
        assert!(elementary_abelian_pair(6).is_err());
    }

    #[test]
    fn closure_of_two_transpositions_is_full_s3() {
        let g = symmetric(3).unwrap();
        let s1 = g.generator("s1").unwrap();
        let s2 = g.generator("s2").unwrap();
        let h = closure(&g, &[s1, s2]).unwrap();
        assert_eq!(h.order(), 6);
    }

    #[test]
    fn closure_of_identity_is_trivial() {
        let g = symmetric(4).unwrap();
        let h = closure(&g, &[0]).unwrap();
        assert_eq!(h.order(), 1);
    }

    #[test]
    fn closure_of_x_in_h3_has_order_three() {
        let g = heisenberg(3).unwrap();
        let h = closure(&g, &[g.generator("x").unwrap()]).unwrap();
        assert_eq!(h.order(), 3);
    }

    #[test]
    fn closure_is_idempotent() {
        let g = symmetric(4).unwrap();
        let seeds = [g.generator("s1").unwrap(), g.generator("s3").unwrap()];
        let h = closure(&g, &seeds).unwrap();
        let elems: Vec<usize> = h.elements().iter().map(|&x| x as usize).collect();
        let h2 = closure(&g, &elems).unwrap();
        assert_eq!(h, h2);
    }

    #[test]
    fn right_cosets_of_transposition_in_s3() {
        let g = symmetric(3).unwrap();
        let k = closure(&g, &[g.generator("s1").unwrap()]).unwrap();
        let parts = right_cosets(&g, &k).unwrap();
        assert_eq!(parts.count(), 3);
        assert!(parts.cosets.iter().all(|c| c.len() == 2));
    }

    #[test]
    fn right_cosets_of_x_in_h3() {
        let g = heisenberg(3).unwrap();
        let k = closure(&g, &[g.generator("x").unwrap()]).unwrap();
        let parts = right_cosets(&g, &k).unwrap();
        assert_eq!(parts.count(), 9);
    }

    #[test]
    fn right_cosets_of_full_group() {
        let g = symmetric(3).unwrap();
        let all: Vec<u32> = (0..6).collect();
        let k = Subgroup::new(&g, all).unwrap();
        let parts = right_cosets(&g, &k).unwrap();
        assert_eq!(parts.count(), 1);
    }

    #[test]
    fn lagrange_counting_over_all_cyclic_subgroups() {
        let g = symmetric(4).unwrap();
        for a in 0..g.order() {
            let k = closure(&g, &[a]).unwrap();
            let parts = right_cosets(&g, &k).unwrap();
            assert_eq!(parts.count() * k.order(), g.order());
        }
    }

    #[test]
    fn from_parts_validates_and_round_trips() {
        let g = dihedral(4).unwrap();
        let json = g.to_json();
        let g2 = GroupTable::from_json(&json).unwrap();
        assert_eq!(g, g2);
        assert_eq!(json, g2.to_json());

        // Breaking one entry must be rejected.
        let mut bad = json.clone();
        bad["mul"][3] = serde_json::json!(0);
        assert!(GroupTable::from_json(&bad).is_err());
    }

    #[test]
    fn dihedral_pair_generates_whole_group() {
        let pair = dihedral_reflection_pair(4).unwrap();
        let seeds: Vec<usize> = pair
            .k1
            .elements()
            .iter()
            .chain(pair.k2.elements())
            .map(|&x| x as usize)
            .collect();
        let h = closure(&pair.group, &seeds).unwrap();
        assert_eq!(h.order(), 8);
    }

    #[test]
    fn randomized_associativity_above_the_exhaustive_bound() {
        // Order 1331 > 512 takes the randomized from_parts path.
        let g = heisenberg(11).unwrap();
        assert_eq!(g.order(), 1331);
        let mut mul = Vec::with_capacity(g.order() * g.order());
        for a in 0..g.order() {
            for b in 0..g.order() {
                mul.push(g.mul(a, b) as u32);
            }
        }
        let rebuilt = GroupTable::from_parts(g.order(), mul.clone(), BTreeMap::new()).unwrap();
        assert_eq!(rebuilt.id(), g.id());

        // A single corrupted entry that keeps rows/columns permutations
        // must be caught: swap two entries inside one row.
        let n = g.order();
        mul.swap(5 * n + 7, 5 * n + 8);
        assert!(GroupTable::from_parts(n, mul, BTreeMap::new()).is_err());
    }

    #[test]
    fn associativity_exhaustive_on_built_tables() {
        for g in [
            symmetric(3).unwrap(),
            dihedral(4).unwrap(),
            heisenberg(3).unwrap(),
            elementary_abelian_pair(5).unwrap(),
        ] {
            let n = g.order();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
                    }
                }
            }
        }
    }
}

//! Real group-algebra elements on a finite group.
//!
//! The Haar measure is the uniform counting measure with total mass 1,
//! so convolution carries a 1/|G| weight and the averaging element of a
//! subgroup K takes the value |G|/|K| on K. Under this normalization the
//! averaging elements are convolution idempotents of unit mass and their
//! regular-representation matrices are averaging projections.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_group::{GroupTable, Subgroup};

/// Largest group order for which dense regular-representation matrices
/// are produced.
pub const DENSE_MATRIX_CAP: usize = 4096;

/// A real-valued function on a finite group, i.e. an element of its
/// group algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFunction {
    group_id: u64,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GroupFunctionRepr {
    group_id: String,
    values: Vec<f64>,
}

impl GroupFunction {
    pub fn new(group: &GroupTable, values: Vec<f64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::InvalidInput(format!(
                "function has {} values on a group of order {}",
                values.len(),
                group.order()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite function value".into()));
        }
        Ok(Self {
            group_id: group.id(),
            values,
        })
    }

    /// Convolution unit: |G| times the delta at the identity.
    pub fn unit(group: &GroupTable) -> Self {
        let mut values = vec![0.0; group.order()];
        values[group.identity()] = group.order() as f64;
        Self {
            group_id: group.id(),
            values,
        }
    }

    /// Delta function at a single element (mass 1/|G|).
    pub fn delta(group: &GroupTable, at: usize) -> Result<Self> {
        if at >= group.order() {
            return Err(Error::BadIndex {
                index: at,
                order: group.order(),
            });
        }
        let mut values = vec![0.0; group.order()];
        values[at] = 1.0;
        Self::new(group, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn group_id(&self) -> u64 {
        self.group_id
    }

    pub fn check_group(&self, group: &GroupTable) -> Result<()> {
        if self.group_id == group.id() {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    /// Mass under the normalized counting measure: sum f(g) / |G|.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Pointwise difference; operands must live on the same group.
    pub fn minus(&self, other: &GroupFunction) -> Result<GroupFunction> {
        if self.group_id != other.group_id {
            return Err(Error::GroupMismatch);
        }
        Ok(GroupFunction {
            group_id: self.group_id,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Whether f(g) = f(g^-1) everywhere (within `tol`).
    pub fn is_symmetric(&self, group: &GroupTable, tol: f64) -> Result<bool> {
        self.check_group(group)?;
        Ok((0..group.order()).all(|g| (self.values[g] - self.values[group.inv(g)]).abs() <= tol))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "group_id": format!("{:016x}", self.group_id),
            "values": self.values,
        })
    }

    pub fn from_json(group: &GroupTable, value: &serde_json::Value) -> Result<Self> {
        let repr: GroupFunctionRepr = serde_json::from_value(value.clone())?;
        let id = u64::from_str_radix(&repr.group_id, 16)
            .map_err(|_| Error::InvalidInput("malformed group_id".into()))?;
        if id != group.id() {
            return Err(Error::GroupMismatch);
        }
        Self::new(group, repr.values)
    }
}

/// Averaging element of a subgroup K: value |G|/|K| on K, zero there
/// outside. Symmetric, unit mass, convolution idempotent.
pub fn averaging_idempotent(group: &GroupTable, sub: &Subgroup) -> Result<GroupFunction> {
    sub.check_parent(group)?;
    let value = group.order() as f64 / sub.order() as f64;
    let mut values = vec![0.0; group.order()];
    for &k in sub.elements() {
        values[k as usize] = value;
    }
    GroupFunction::new(group, values)
}

/// Convolution (f * g)(h) = (1/|G|) sum_s f(s) g(s^-1 h).
pub fn convolve(group: &GroupTable, f: &GroupFunction, g: &GroupFunction) -> Result<GroupFunction> {
    f.check_group(group)?;
    g.check_group(group)?;
    let n = group.order();
    let scale = 1.0 / n as f64;
    let mut values = vec![0.0; n];
    for s in 0..n {
        let fs = f.values[s];
        if fs == 0.0 {
            continue;
        }
        let s_inv = group.inv(s);
        for (h, value) in values.iter_mut().enumerate() {
            *value += fs * g.values[group.mul(s_inv, h)] * scale;
        }
    }
    GroupFunction::new(group, values)
}

/// Involution f*(g) = f(g^-1) (real scalars).
pub fn involution(group: &GroupTable, f: &GroupFunction) -> Result<GroupFunction> {
    f.check_group(group)?;
    let values = (0..group.order()).map(|g| f.values[group.inv(g)]).collect();
    GroupFunction::new(group, values)
}

/// Matrix of pi(f) in the left regular representation on L^2(G):
/// entry (h, h') = f(h h'^-1) / |G|.
pub fn regular_rep(group: &GroupTable, f: &GroupFunction) -> Result<DMatrix<f64>> {
    f.check_group(group)?;
    let n = group.order();
    if n > DENSE_MATRIX_CAP {
        return Err(Error::DenseCapExceeded {
            order: n,
            cap: DENSE_MATRIX_CAP,
        });
    }
    let scale = 1.0 / n as f64;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for h in 0..n {
        for hp in 0..n {
            m[(h, hp)] = f.values[group.mul(h, group.inv(hp))] * scale;
        }
    }
    Ok(m)
}

/// Write a dense matrix as CSV rows.
pub fn matrix_to_csv<W: std::io::Write>(m: &DMatrix<f64>, mut w: W) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.17e}", m[(i, j)]))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

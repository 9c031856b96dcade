//! Schrödinger-picture reference: the normalised state `U(t)(𝒜∘P0)/‖𝒜∘P0‖`
//! and componentwise comparison of sampled trajectories.

use alloc::string::String;
use alloc::vec::Vec;

use crate::qm::{c, Evolution, Operator, Spinor};
use crate::raman::{RamanResult, SpinorSeries};
use crate::{Error, Result};

/// Normalised state at grid index `i`.
pub fn psi_at(a: &RamanResult, u: &Evolution, i: usize) -> Result<Spinor> {
    let w = a.w(i);
    let norm = w.norm();
    if !(norm > 1e-300) {
        return Err(Error::Other(String::from("vanishing Raman amplitude norm")));
    }
    Ok(u.apply(a.grid.t(i) - a.grid.t_start, &w) / c(norm))
}

/// Normalised state at any time after the grid end, where `𝒜` has settled.
pub fn psi_after(a: &RamanResult, u: &Evolution, t: f64) -> Result<Spinor> {
    let last = a.grid.count - 1;
    let w = a.w(last);
    let norm = w.norm();
    if !(norm > 1e-300) {
        return Err(Error::Other(String::from("vanishing Raman amplitude norm")));
    }
    Ok(u.apply(t - a.grid.t_start, &w) / c(norm))
}

/// The normalised state at every grid point.
pub fn propagate_psi(a: &RamanResult, u: &Evolution) -> Result<SpinorSeries> {
    if u.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: u.dim() });
    }
    let mut out = SpinorSeries::zeros(a.grid, a.dim());
    for i in 0..a.grid.count {
        let psi = psi_at(a, u, i)?;
        out.row_mut(i).copy_from_slice(psi.as_slice());
    }
    Ok(out)
}

/// State at time `t`: the grid node if `t` lies on the grid, otherwise the
/// post-pulse form.
pub fn psi_at_time(a: &RamanResult, u: &Evolution, t: f64) -> Result<Spinor> {
    let g = a.grid;
    if t <= g.t_end() + 1e-9 * g.dt {
        let x = (t - g.t_start) / g.dt;
        let i = libm::round(x);
        if (x - i).abs() > 1e-6 || i < 0.0 {
            return Err(Error::GridMismatch);
        }
        psi_at(a, u, i as usize)
    } else {
        psi_after(a, u, t)
    }
}

/// Real expectation values of `ops` on the state, one column per operator.
pub fn expectations(psi: &Spinor, ops: &[Operator]) -> Vec<f64> {
    ops.iter().map(|o| psi.dotc(&(o * psi)).re).collect()
}

/// A set of real signals sampled at common times.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub names: Vec<&'static str>,
    /// `columns[k][i]` is component `k` at time `t[i]`.
    pub columns: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(names: &[&'static str]) -> Self {
        Trajectory { t: Vec::new(), names: names.to_vec(), columns: names.iter().map(|_| Vec::new()).collect() }
    }

    pub fn push(&mut self, t: f64, row: &[f64]) {
        self.t.push(t);
        for (col, v) in self.columns.iter_mut().zip(row) {
            col.push(*v);
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDeviation {
    pub name: &'static str,
    pub max_abs: f64,
    pub time_of_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub components: Vec<ComponentDeviation>,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn max_deviation(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.max_abs))
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() < self.tolerance
    }
}

/// Componentwise max-norm deviation between two trajectories on the same times.
pub fn oracle_compare(heis: &Trajectory, schr: &Trajectory, tolerance: f64) -> Result<OracleReport> {
    if heis.t.len() != schr.t.len() || heis.columns.len() != schr.columns.len() {
        return Err(Error::GridMismatch);
    }
    for (a, b) in heis.t.iter().zip(&schr.t) {
        if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
            return Err(Error::GridMismatch);
        }
    }
    let components = heis
        .columns
        .iter()
        .zip(&schr.columns)
        .enumerate()
        .map(|(k, (x, y))| {
            let (mut max_abs, mut time_of_max) = (0.0, heis.t.first().copied().unwrap_or(0.0));
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                let d = (p - q).abs();
                if d > max_abs {
                    max_abs = d;
                    time_of_max = heis.t[i];
                }
            }
            ComponentDeviation { name: heis.names[k], max_abs, time_of_max }
        })
        .collect();
    Ok(OracleReport { components, tolerance })
}

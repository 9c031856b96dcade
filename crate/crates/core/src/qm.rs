//! Small dense complex linear algebra for `2J+1` dimensional spaces.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type Operator = DMatrix<C64>;
pub type Spinor = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Absolute Hermiticity tolerance for entries of order one Hartree.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Clone)]
pub struct AngularMomentum {
    pub two_j: usize,
    pub jx: Operator,
    pub jy: Operator,
    pub jz: Operator,
}

impl AngularMomentum {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j + 1
    }

    pub fn casimir(&self) -> Operator {
        &self.jx * &self.jx + &self.jy * &self.jy + &self.jz * &self.jz
    }
}

/// Ladder-operator construction of `Jx, Jy, Jz` in the `J_z`-descending basis.
pub fn angular_momentum(j: f64) -> Result<AngularMomentum> {
    let two_j = 2.0 * j;
    if !(two_j >= 0.0) || libm::fabs(two_j - libm::round(two_j)) > 1e-12 || two_j > 64.0 {
        return Err(Error::InvalidAngularMomentum(j));
    }
    let two_j = libm::round(two_j) as usize;
    let n = two_j + 1;
    let jf = two_j as f64 / 2.0;
    let mut jp = Operator::zeros(n, n);
    let mut jz = Operator::zeros(n, n);
    for k in 0..n {
        let m = jf - k as f64;
        jz[(k, k)] = c(m);
        if k > 0 {
            // <m+1| J+ |m>, row k-1 holds m+1
            jp[(k - 1, k)] = c(libm::sqrt(jf * (jf + 1.0) - m * (m + 1.0)));
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c(0.5);
    let jy = (&jp - &jm) * C64::new(0.0, -0.5);
    Ok(AngularMomentum { two_j, jx, jy, jz })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// The operator `N_ab±` with 1-based indices `a <= b`.
///
/// `N_ab+` has ones at `(a,b)` and `(b,a)`; `N_ab-` has `-i` at `(a,b)` and
/// `+i` at `(b,a)`; `N_aa+` is the projector on component `a`.
pub fn build_n(a: usize, b: usize, sign: Sign, n: usize) -> Result<Operator> {
    if a == 0 || b < a || b > n || (a == b && sign == Sign::Minus) {
        return Err(Error::InvalidIndex { a, b, n });
    }
    let (i, j) = (a - 1, b - 1);
    let mut m = Operator::zeros(n, n);
    match sign {
        Sign::Plus => {
            m[(i, j)] = c(1.0);
            m[(j, i)] = c(1.0);
        }
        Sign::Minus => {
            m[(i, j)] = -I;
            m[(j, i)] = I;
        }
    }
    Ok(m)
}

/// One element of the N basis, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NIndex {
    pub a: usize,
    pub b: usize,
    pub sign: Sign,
}

/// Canonical ordering of the `n²` N operators: the `n` projectors first, then
/// `(a,b,+), (a,b,-)` for `a < b` in row-major order.
pub fn n_basis(n: usize) -> Vec<NIndex> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        out.push(NIndex { a, b: a, sign: Sign::Plus });
    }
    for a in 0..n {
        for b in a + 1..n {
            out.push(NIndex { a, b, sign: Sign::Plus });
            out.push(NIndex { a, b, sign: Sign::Minus });
        }
    }
    out
}

/// Position of `N_ab±` (0-based) in [`n_basis`].
pub fn n_position(a: usize, b: usize, sign: Sign, n: usize) -> usize {
    if a == b {
        return a;
    }
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    // pairs in the rows above a: sum over r < a of (n - 1 - r)
    let before = a * (n - 1) - a * a.saturating_sub(1) / 2;
    let pair = before + (b - a - 1);
    n + 2 * pair + if sign == Sign::Plus { 0 } else { 1 }
}

/// Expectations `<N>` of every basis element for the density matrix `rho`
/// (`rho_ab = psi_a psi_b*`).
pub fn n_from_rho(rho: &Operator) -> Vec<f64> {
    let n = rho.nrows();
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        out.push(rho[(a, a)].re);
    }
    for a in 0..n {
        for b in a + 1..n {
            let r = rho[(a, b)];
            out.push(2.0 * r.re);
            out.push(-2.0 * r.im);
        }
    }
    out
}

/// Inverse of [`n_from_rho`].
pub fn rho_from_n(n_exp: &[f64], n: usize) -> Operator {
    let mut rho = Operator::zeros(n, n);
    for a in 0..n {
        rho[(a, a)] = c(n_exp[a]);
    }
    let mut k = n;
    for a in 0..n {
        for b in a + 1..n {
            let v = C64::new(n_exp[k], -n_exp[k + 1]) * 0.5;
            rho[(a, b)] = v;
            rho[(b, a)] = v.conj();
            k += 2;
        }
    }
    rho
}

pub fn density(psi: &Spinor) -> Operator {
    psi * psi.adjoint()
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

pub fn max_abs(m: &Operator) -> f64 {
    m.iter().fold(0.0, |acc, z| f64::max(acc, z.norm()))
}

pub fn hermitian_deviation(h: &Operator) -> f64 {
    max_abs(&(h - h.adjoint()))
}

pub fn identity(n: usize) -> Operator {
    Operator::identity(n, n)
}

pub fn normalize(psi: &Spinor) -> Spinor {
    let nrm = psi.norm();
    psi / c(nrm)
}

/// `<psi|O|psi>`.
pub fn expectation(psi: &Spinor, op: &Operator) -> Result<C64> {
    if op.nrows() != psi.len() || op.ncols() != psi.len() {
        return Err(Error::DimensionMismatch { expected: op.nrows(), found: psi.len() });
    }
    Ok(psi.dotc(&(op * psi)))
}

/// Spectral form of a time-independent Hermitian Hamiltonian, giving
/// `U(t) = exp(-iHt)` for any `t` without re-diagonalising.
#[derive(Debug, Clone)]
pub struct Evolution {
    energies: Vec<f64>,
    vectors: Operator,
    vectors_adj: Operator,
}

impl Evolution {
    pub fn new(h: &Operator) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
        }
        let dev = hermitian_deviation(h);
        let scale = f64::max(1.0, max_abs(h));
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        let herm = (h + h.adjoint()) * c(0.5);
        let eig = herm.symmetric_eigen();
        let vectors = eig.eigenvectors;
        Ok(Evolution {
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors_adj: vectors.adjoint(),
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &Operator {
        &self.vectors
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        self.energies.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect()
    }

    pub fn at(&self, t: f64) -> Operator {
        let ph = self.phases(t);
        let mut scaled = self.vectors.clone();
        for (j, p) in ph.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= p;
            }
        }
        scaled * &self.vectors_adj
    }

    /// `exp(-iHt) x`.
    pub fn apply(&self, t: f64, x: &Spinor) -> Spinor {
        let mut y = &self.vectors_adj * x;
        for (yj, p) in y.iter_mut().zip(self.phases(t)) {
            *yj *= p;
        }
        &self.vectors * y
    }

    /// `exp(+iHt) x`.
    pub fn apply_inverse(&self, t: f64, x: &Spinor) -> Spinor {
        self.apply(-t, x)
    }
}

/// `exp(-iHt)` for Hermitian `H`.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator> {
    Ok(Evolution::new(h)?.at(t))
}

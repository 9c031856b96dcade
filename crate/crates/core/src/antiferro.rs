//! Two `J = 3/2` sublattices with mean-field exchange and a uniaxial crystal
//! field, described by the fifteen sublattice-summed variables `m`, `l`.

use alloc::vec::Vec;

use crate::effective_field::{compute_fields, eom_rhs, EffectiveFields};
use crate::ode::{integrate_span, Rk4};
use crate::oracle::{oracle_compare, psi_at_time, OracleReport, Trajectory};
use crate::pulse::{amplitude_from_intensity, units, PulseSpec};
use crate::qm::{
    angular_momentum, c, density, identity, n_from_rho, n_position, rho_from_n, Evolution, Operator, Sign, Spinor,
};
use crate::raman::{amplitude_from_c, antiferro_c, leakage, RamanResult, TimeGrid};
use crate::{Error, Result};

/// Weights `p_a` of the off-diagonal variables.
pub const P_WEIGHTS: [f64; 4] = [0.866_025_403_784_438_6, 1.0, 1.0, 0.866_025_403_784_438_6];
/// Convergence threshold of the self-consistent ground state.
pub const GROUND_TOL: f64 = 1e-12;
pub const GROUND_MAX_ITER: usize = 1000;
/// Largest `|m_a|`, `|M|`, `|L|` excursion beyond their physical range before a run aborts.
pub const BREACH_TOL: f64 = 1e-6;
/// Largest endpoint change allowed when the in-pulse step is halved.
pub const STEP_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Z,
    X,
}

/// How the exchange field enters the magnetic Hamiltonian of the EOM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanField {
    /// `L_x`, `L_y`, `M_z` take their current values.
    Live,
    /// `L_x`, `L_y`, `M_z` stay at their ground-state values, matching the
    /// propagator used for the Raman amplitudes.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiferroSpec {
    /// Exchange constant, Hartree.
    pub jex: f64,
    pub axis: Axis,
    /// Ground crystal-field constant, Hartree (`> 0` for z, `< 0` for x).
    pub delta: f64,
    /// Excited crystal-field constant, Hartree.
    pub delta_e: f64,
    /// Excited-term energy, Hartree.
    pub eps_ex: f64,
    /// Reduced dipole element, a.u.
    pub d0: f64,
    pub pulse: PulseSpec,
    /// Raman-grid step, a.u.
    pub dt: f64,
    /// Raman grid spans `center ± half_widths·T`.
    pub half_widths: f64,
    /// End of the run, a.u.
    pub t_end: f64,
    /// Largest RK4 step after the Raman grid, a.u.
    pub post_step: f64,
}

impl AntiferroSpec {
    /// Defaults: excited crystal field `+3 meV` (z) or `-3 meV` (x), `ε_ex = 2 eV`,
    /// `d0 = 1`, `dt = 0.1`, grid `±5T`, run to `center + 3 ps`.
    pub fn new(jex_mev: f64, axis: Axis, delta_mev: f64, pulse: PulseSpec) -> Result<Self> {
        let delta_e = match axis {
            Axis::Z => 3.0,
            Axis::X => -3.0,
        };
        let spec = AntiferroSpec {
            jex: units::mev_to_hartree(jex_mev),
            axis,
            delta: units::mev_to_hartree(delta_mev),
            delta_e: units::mev_to_hartree(delta_e),
            eps_ex: units::ev_to_hartree(2.0),
            d0: 1.0,
            pulse,
            dt: f64::min(0.1, pulse.period() / 42.0),
            half_widths: 5.0,
            t_end: pulse.center + units::fs_to_au(3000.0),
            post_step: 5.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Pulse with `T = 100 fs`, `ω0 = 2 eV`, peak intensity `2·10¹⁰ W/cm²`, centred at 0.
    pub fn reference_pulse() -> Result<PulseSpec> {
        PulseSpec::new(amplitude_from_intensity(2e10)?, units::fs_to_au(100.0), units::ev_to_hartree(2.0), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.jex, self.delta, self.delta_e, self.eps_ex, self.d0, self.dt, self.t_end, self.post_step];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite antiferromagnet parameter"));
        }
        match self.axis {
            Axis::Z if !(self.delta > 0.0) => return Err(Error::InvalidParameter("z axis requires Delta > 0")),
            Axis::X if !(self.delta < 0.0) => return Err(Error::InvalidParameter("x axis requires Delta < 0")),
            _ => {}
        }
        if self.jex < 0.0 {
            return Err(Error::InvalidParameter("exchange constant must be non-negative"));
        }
        if !(self.dt > 0.0 && self.post_step > 0.0 && self.half_widths >= 3.0) {
            return Err(Error::InvalidParameter("time steps must be positive and the grid at least ±3T"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::around_pulse(&self.pulse, self.half_widths, self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundState {
    pub c: f64,
    pub d: f64,
    /// `⟨Ĵ_x⟩` of sublattice 1.
    pub jx1: f64,
    /// `𝒥_ex·J_x1`, Hartree.
    pub j0: f64,
    pub iterations: usize,
}

impl GroundState {
    /// `Ψ0^(1) = (c, d, d, c)` and `Ψ0^(2) = (c, -d, d, -c)`.
    pub fn states(&self) -> [Spinor; 2] {
        let s1 = Spinor::from_vec(alloc::vec![c(self.c), c(self.d), c(self.d), c(self.c)]);
        let s2 = &sublattice_flip() * &s1;
        [s1, s2]
    }
}

/// `R = diag(1, -1, 1, -1)`, mapping sublattice 1 onto sublattice 2.
pub fn sublattice_flip() -> Operator {
    let mut r = identity(4);
    r[(1, 1)] = c(-1.0);
    r[(3, 3)] = c(-1.0);
    r
}

/// `Δ(3Ĵ_α² - J(J+1))` on the `2J+1` multiplet.
pub fn crystal_field(axis: Axis, delta: f64, j: f64) -> Result<Operator> {
    let am = angular_momentum(j)?;
    let ja = match axis {
        Axis::Z => &am.jz,
        Axis::X => &am.jx,
    };
    Ok((ja * ja * c(3.0) - identity(am.dim()) * c(j * (j + 1.0))) * c(delta))
}

/// `Ĥ^(1) = Δ(3Ĵ_α² - Ĵ²) - 𝒥₀ Ĵ_x` for sublattice 1.
pub fn sublattice_hamiltonian(axis: Axis, delta: f64, j0: f64) -> Result<Operator> {
    let am = angular_momentum(1.5)?;
    Ok(crystal_field(axis, delta, 1.5)? - am.jx * c(j0))
}

/// Ground states of both sublattices. The x axis has the closed form
/// `J_x1 = 3/2`; the z axis iterates the mean field to self-consistency.
pub fn ground_state(spec: &AntiferroSpec) -> Result<GroundState> {
    spec.validate()?;
    let s3 = libm::sqrt(3.0);
    let mut gs = GroundState {
        c: 1.0 / (2.0 * libm::sqrt(2.0)),
        d: s3 / (2.0 * libm::sqrt(2.0)),
        jx1: 1.5,
        j0: spec.jex * 1.5,
        iterations: 0,
    };
    if spec.axis == Axis::X {
        return Ok(gs);
    }
    let am = angular_momentum(1.5)?;
    let mut jx = 1.5;
    for it in 1..=GROUND_MAX_ITER {
        let h = sublattice_hamiltonian(spec.axis, spec.delta, spec.jex * jx)?;
        let eig = h.symmetric_eigen();
        let k = (0..4).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap_or(0);
        let mut v: Spinor = eig.eigenvectors.column(k).into_owned();
        let anchor = v[1];
        if anchor.norm() == 0.0 {
            return Err(Error::NotSymmetricGroundState(1.0));
        }
        v *= anchor.conj() / anchor.norm();
        let jx_new = v.dotc(&(&am.jx * &v)).re;
        let done = (jx_new - jx).abs() < GROUND_TOL;
        jx = jx_new;
        if done {
            let form = [(v[0] - v[3]).norm(), (v[1] - v[2]).norm(), v.iter().map(|z| z.im.abs()).fold(0.0, f64::max)];
            let dev = form.iter().fold(0.0, |m: f64, x| m.max(*x));
            if dev > 1e-10 {
                return Err(Error::NotSymmetricGroundState(dev));
            }
            gs.c = v[0].re.abs();
            gs.d = v[1].re.abs();
            gs.jx1 = jx;
            gs.j0 = spec.jex * jx;
            gs.iterations = it;
            return Ok(gs);
        }
    }
    Err(Error::NoConvergence { iterations: GROUND_MAX_ITER })
}

/// `ε_ex + Δ_e(3Ĵ_α² - Ĵ²)` on the `J = 5/2` excited term.
pub fn excited_hamiltonian(spec: &AntiferroSpec) -> Result<Operator> {
    Ok(identity(6) * c(spec.eps_ex) + crystal_field(spec.axis, spec.delta_e, 2.5)?)
}

/// Excited-term energies in ascending order.
pub fn excited_levels(spec: &AntiferroSpec) -> Result<Vec<f64>> {
    let mut e: Vec<f64> = Evolution::new(&excited_hamiltonian(spec)?)?.energies().to_vec();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// The sixteen variables of the symmetric manifold: the fifteen dynamic ones
/// and the derived `m4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    L12p,
    L12m,
    L23p,
    L23m,
    L34p,
    L34m,
    L14p,
    L14m,
    M13p,
    M13m,
    M24p,
    M24m,
    M1,
    M2,
    M3,
    M4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Sublattice sum.
    M,
    /// Sublattice difference.
    L,
}

use Var::*;

impl Var {
    pub const DYNAMIC: [Var; 15] = [L12p, L12m, L23p, L23m, L34p, L34m, L14p, L14m, M13p, M13m, M24p, M24m, M1, M2, M3];
    pub const ALL: [Var; 16] =
        [L12p, L12m, L23p, L23m, L34p, L34m, L14p, L14m, M13p, M13m, M24p, M24m, M1, M2, M3, M4];

    pub fn name(self) -> &'static str {
        [
            "l12+", "l12-", "l23+", "l23-", "l34+", "l34-", "l14+", "l14-", "m13+", "m13-", "m24+", "m24-", "m1", "m2",
            "m3", "m4",
        ][self as usize]
    }

    /// `(kind, a, b, sign)` with 0-based `a ≤ b`.
    pub fn parts(self) -> (Kind, usize, usize, Sign) {
        let (p, m) = (Sign::Plus, Sign::Minus);
        match self {
            L12p => (Kind::L, 0, 1, p),
            L12m => (Kind::L, 0, 1, m),
            L23p => (Kind::L, 1, 2, p),
            L23m => (Kind::L, 1, 2, m),
            L34p => (Kind::L, 2, 3, p),
            L34m => (Kind::L, 2, 3, m),
            L14p => (Kind::L, 0, 3, p),
            L14m => (Kind::L, 0, 3, m),
            M13p => (Kind::M, 0, 2, p),
            M13m => (Kind::M, 0, 2, m),
            M24p => (Kind::M, 1, 3, p),
            M24m => (Kind::M, 1, 3, m),
            M1 => (Kind::M, 0, 0, p),
            M2 => (Kind::M, 1, 1, p),
            M3 => (Kind::M, 2, 2, p),
            M4 => (Kind::M, 3, 3, p),
        }
    }

    /// Value in a fifteen-component state; `m4 = 2 - m1 - m2 - m3`.
    pub fn get(self, x: &[f64]) -> f64 {
        match self {
            M4 => 2.0 - x[12] - x[13] - x[14],
            v => x[v as usize],
        }
    }
}

/// Operators whose commutators with the variables are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    /// `L̂_x`
    Lx,
    /// `L̂_y`
    Ly,
    /// `M̂_z`
    Mz,
    /// `(M̂_z² + L̂_z²)/2`
    CrZ,
    /// `(M̂_x² + L̂_x²)/2`
    CrX,
}

impl Column {
    pub const ALL: [Column; 5] = [Column::Lx, Column::Ly, Column::Mz, Column::CrZ, Column::CrX];
}

type Cell = &'static [(f64, Var)];

/// `-i⟨[x̂, Ô]⟩` on the symmetric manifold as a linear combination of variables,
/// rows in [`Var::ALL`] order, columns in [`Column::ALL`] order.
const TABLE: [[Cell; 5]; 16] = [
    [
        &[(1.0, M13m)],
        &[(-1.0, M13p), (1.5, M1), (-1.5, M2)],
        &[(-1.0, L12m)],
        &[(-2.0, L12m)],
        &[(1.0, L12m), (0.75, L23m), (1.0, L14m)],
    ],
    [
        &[(-1.0, M13p), (-1.5, M1), (1.5, M2)],
        &[(-1.0, M13m)],
        &[(1.0, L12p)],
        &[(2.0, L12p)],
        &[(-1.0, L12p), (0.75, L23p), (-1.0, L14p)],
    ],
    [
        &[(-1.0, M13m), (1.0, M24m)],
        &[(1.0, M13p), (-1.0, M24p), (2.0, M2), (-2.0, M3)],
        &[(-1.0, L23m)],
        &[],
        &[(-1.0, L12m), (1.0, L34m)],
    ],
    [
        &[(1.0, M13p), (-1.0, M24p), (-2.0, M2), (2.0, M3)],
        &[(1.0, M13m), (-1.0, M24m)],
        &[(1.0, L23p)],
        &[],
        &[(-1.0, L12p), (1.0, L34p)],
    ],
    [
        &[(-1.0, M24m)],
        &[(1.0, M24p), (1.5, M3), (-1.5, M4)],
        &[(-1.0, L34m)],
        &[(2.0, L34m)],
        &[(-0.75, L23m), (-1.0, L34m), (-1.0, L14m)],
    ],
    [
        &[(1.0, M24p), (-1.5, M3), (1.5, M4)],
        &[(1.0, M24m)],
        &[(1.0, L34p)],
        &[(-2.0, L34p)],
        &[(-0.75, L23p), (1.0, L34p), (1.0, L14p)],
    ],
    [
        &[(0.75, M13m), (-0.75, M24m)],
        &[(0.75, M13p), (-0.75, M24p)],
        &[(-3.0, L14m)],
        &[],
        &[(0.75, L12m), (-0.75, L34m)],
    ],
    [
        &[(-0.75, M13p), (0.75, M24p)],
        &[(0.75, M13m), (-0.75, M24m)],
        &[(3.0, L14p)],
        &[],
        &[(-0.75, L12p), (0.75, L34p)],
    ],
    [
        &[(1.0, L12m), (-0.75, L23m), (1.0, L14m)],
        &[(1.0, L12p), (-0.75, L23p), (-1.0, L14p)],
        &[(-2.0, M13m)],
        &[(-2.0, M13m)],
        &[(1.0, M13m)],
    ],
    [
        &[(-1.0, L12p), (0.75, L23p), (-1.0, L14p)],
        &[(1.0, L12m), (-0.75, L23m), (-1.0, L14m)],
        &[(2.0, M13p)],
        &[(2.0, M13p)],
        &[(-1.0, M13p), (-1.5, M1), (1.5, M3)],
    ],
    [
        &[(0.75, L23m), (-1.0, L34m), (-1.0, L14m)],
        &[(0.75, L23p), (-1.0, L34p), (1.0, L14p)],
        &[(-2.0, M24m)],
        &[(2.0, M24m)],
        &[(-1.0, M24m)],
    ],
    [
        &[(-0.75, L23p), (1.0, L34p), (1.0, L14p)],
        &[(0.75, L23m), (-1.0, L34m), (1.0, L14m)],
        &[(2.0, M24p)],
        &[(-2.0, M24p)],
        &[(1.0, M24p), (-1.5, M2), (1.5, M4)],
    ],
    [&[(1.0, L12m)], &[(-1.0, L12p)], &[], &[], &[(1.0, M13m)]],
    [&[(-1.0, L12m), (1.0, L23m)], &[(1.0, L12p), (-1.0, L23p)], &[], &[], &[(1.0, M24m)]],
    [&[(-1.0, L23m), (1.0, L34m)], &[(1.0, L23p), (-1.0, L34p)], &[], &[], &[(-1.0, M13m)]],
    [&[(-1.0, L34m)], &[(1.0, L34p)], &[], &[], &[(-1.0, M24m)]],
];

pub fn table_cell(var: Var, column: Column) -> &'static [(f64, Var)] {
    TABLE[var as usize][column as usize]
}

/// Evaluate a table cell on a fifteen-component state.
pub fn cell_value(x: &[f64], var: Var, column: Column) -> f64 {
    table_cell(var, column).iter().map(|(k, v)| k * v.get(x)).sum()
}

/// `m_ab±` or `l_ab±` (0-based `a ≤ b`) from the N expectations of both sublattices.
pub fn ml_value(kind: Kind, a: usize, b: usize, sign: Sign, n1: &[f64], n2: &[f64]) -> f64 {
    let k = n_position(a, b, sign, 4);
    let w = if a == b { 1.0 } else { P_WEIGHTS[a] * P_WEIGHTS[b] };
    w * match kind {
        Kind::M => n1[k] + n2[k],
        Kind::L => n1[k] - n2[k],
    }
}

/// The fifteen dynamic variables.
pub fn ml_state_from_n(n1: &[f64], n2: &[f64]) -> [f64; 15] {
    let mut x = [0.0; 15];
    for (dst, v) in x.iter_mut().zip(Var::DYNAMIC) {
        let (kind, a, b, s) = v.parts();
        *dst = ml_value(kind, a, b, s, n1, n2);
    }
    x
}

pub fn ml_state_from_psi(psi1: &Spinor, psi2: &Spinor) -> [f64; 15] {
    ml_state_from_n(&n_from_rho(&density(psi1)), &n_from_rho(&density(psi2)))
}

/// The sixteen variables that vanish on the symmetric manifold:
/// `m12±, m23±, m34±, m14±, l13±, l24±, l1..l4`.
pub fn excluded_from_n(n1: &[f64], n2: &[f64]) -> [f64; 16] {
    let (p, m) = (Sign::Plus, Sign::Minus);
    let list = [
        (Kind::M, 0, 1, p),
        (Kind::M, 0, 1, m),
        (Kind::M, 1, 2, p),
        (Kind::M, 1, 2, m),
        (Kind::M, 2, 3, p),
        (Kind::M, 2, 3, m),
        (Kind::M, 0, 3, p),
        (Kind::M, 0, 3, m),
        (Kind::L, 0, 2, p),
        (Kind::L, 0, 2, m),
        (Kind::L, 1, 3, p),
        (Kind::L, 1, 3, m),
        (Kind::L, 0, 0, p),
        (Kind::L, 1, 1, p),
        (Kind::L, 2, 2, p),
        (Kind::L, 3, 3, p),
    ];
    let mut out = [0.0; 16];
    for (dst, (kind, a, b, s)) in out.iter_mut().zip(list) {
        *dst = ml_value(kind, a, b, s, n1, n2);
    }
    out
}

pub fn lx(x: &[f64]) -> f64 {
    x[0] + x[2] + x[4]
}

pub fn ly(x: &[f64]) -> f64 {
    x[1] + x[3] + x[5]
}

pub fn mz(x: &[f64]) -> f64 {
    1.5 * x[12] + 0.5 * x[13] - 0.5 * x[14] - 1.5 * M4.get(x)
}

/// Both sublattice vectors from the N expectations: `[Mx, My, Mz, Lx, Ly, Lz]`.
pub fn ml_vectors_from_n(n1: &[f64], n2: &[f64]) -> [f64; 6] {
    let am = angular_momentum(1.5).expect("valid J");
    let r1 = rho_from_n(n1, 4);
    let r2 = rho_from_n(n2, 4);
    let e = |rho: &Operator, o: &Operator| (rho * o).trace().re;
    let j1 = [e(&r1, &am.jx), e(&r1, &am.jy), e(&r1, &am.jz)];
    let j2 = [e(&r2, &am.jx), e(&r2, &am.jy), e(&r2, &am.jz)];
    [j1[0] + j2[0], j1[1] + j2[1], j1[2] + j2[2], j1[0] - j2[0], j1[1] - j2[1], j1[2] - j2[2]]
}

/// Right-hand side of the fifteen-variable equations of motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiferroEom {
    pub jex: f64,
    pub delta: f64,
    pub axis: Axis,
    pub mode: MeanField,
    /// Ground-state `L_x`, used by [`MeanField::Frozen`].
    pub lx0: f64,
}

impl AntiferroEom {
    pub fn new(spec: &AntiferroSpec, ground: &GroundState, mode: MeanField) -> Self {
        AntiferroEom { jex: spec.jex, delta: spec.delta, axis: spec.axis, mode, lx0: 2.0 * ground.jx1 }
    }

    fn exchange(&self, x: &[f64]) -> (f64, f64, f64) {
        match self.mode {
            MeanField::Live => (lx(x), ly(x), mz(x)),
            MeanField::Frozen => (self.lx0, 0.0, 0.0),
        }
    }

    fn crystal_column(&self) -> Column {
        match self.axis {
            Axis::Z => Column::CrZ,
            Axis::X => Column::CrX,
        }
    }

    /// Derivative of row `var` (any of the sixteen).
    pub fn derivative(&self, nu: &[f64], gamma: &[f64], x: &[f64], var: Var) -> f64 {
        let (ex_lx, ex_ly, ex_mz) = self.exchange(x);
        let mean: f64 = (0..4).map(|k| nu[k] * Var::ALL[12 + k].get(x)).sum();
        let (_, a, b, sign) = var.parts();
        let mut d = (nu[a] + nu[b] - mean) * var.get(x);
        if a != b {
            let idx = var as usize;
            let dg = gamma[a] - gamma[b];
            d += match sign {
                Sign::Plus => dg * x[idx + 1],
                Sign::Minus => -dg * x[idx - 1],
            };
        }
        d += 0.5
            * self.jex
            * (-ex_lx * cell_value(x, var, Column::Lx) - ex_ly * cell_value(x, var, Column::Ly)
                + ex_mz * cell_value(x, var, Column::Mz));
        d + 3.0 * self.delta * cell_value(x, var, self.crystal_column())
    }

    pub fn rhs(&self, nu: &[f64], gamma: &[f64], x: &[f64], dx: &mut [f64]) {
        for (dst, v) in dx.iter_mut().zip(Var::DYNAMIC) {
            *dst = self.derivative(nu, gamma, x, v);
        }
    }

    /// Expectation of the magnetic Hamiltonian conserved by field-free motion.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let m = |v: Var| v.get(x);
        let cr = match self.axis {
            Axis::Z => 2.25 * (m(M1) + m(M4)) + 0.25 * (m(M2) + m(M3)),
            Axis::X => 0.75 * (m(M1) + m(M4)) + 1.75 * (m(M2) + m(M3)) + m(M13p) + m(M24p),
        };
        let ex = match self.mode {
            MeanField::Live => 0.25 * self.jex * (mz(x) * mz(x) - lx(x) * lx(x) - ly(x) * ly(x)),
            MeanField::Frozen => -0.5 * self.jex * self.lx0 * lx(x),
        };
        ex + 3.0 * self.delta * cr
    }
}

/// Aggregate drivers of the `L_x`, `L_y`, `M_z` equations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drivers {
    pub f0: f64,
    pub g: f64,
    pub fxy_plus: f64,
    pub fxy_minus: f64,
    pub gxy_plus: f64,
    pub gxy_minus: f64,
    pub fz: f64,
}

impl Drivers {
    /// Light-driven parts of `L_x'`, `L_y'`, `M_z'`.
    pub fn light_terms(&self, x: &[f64]) -> [f64; 3] {
        [
            self.f0 * lx(x) + self.g * ly(x) + self.fxy_plus + self.gxy_minus,
            self.f0 * ly(x) - self.g * lx(x) + self.fxy_minus - self.gxy_plus,
            self.f0 * mz(x) + self.fz,
        ]
    }
}

pub fn ml_drivers(x: &[f64], nu: &[f64], gamma: &[f64]) -> Drivers {
    let mean: f64 = (0..4).map(|k| nu[k] * Var::ALL[12 + k].get(x)).sum();
    let fxy = |l12: f64, l34: f64| (nu[0] - nu[2]) * l12 + (nu[3] - nu[1]) * l34;
    let gxy = |l12: f64, l34: f64| {
        (gamma[0] - 2.0 * gamma[1] + gamma[2]) * l12 + (-gamma[1] + 2.0 * gamma[2] - gamma[3]) * l34
    };
    Drivers {
        f0: -mean + nu[1] + nu[2],
        g: gamma[1] - gamma[2],
        fxy_plus: fxy(x[0], x[4]),
        fxy_minus: fxy(x[1], x[5]),
        gxy_plus: gxy(x[0], x[4]),
        gxy_minus: gxy(x[1], x[5]),
        fz: (nu[1] - nu[2]) + (3.0 * nu[0] - 2.0 * nu[1] - nu[2]) * x[12] + (nu[1] + 2.0 * nu[2] - 3.0 * nu[3]) * M4.get(x),
    }
}

/// Raman amplitudes and effective fields of both sublattices.
#[derive(Debug, Clone)]
pub struct AntiferroFields {
    pub ground: GroundState,
    pub psi0: [Spinor; 2],
    pub propagators: [Evolution; 2],
    pub raman: [RamanResult; 2],
    /// Fields of sublattice 1, used for both.
    pub fields: EffectiveFields,
    /// Largest `|ν^(1) - ν^(2)|`, `|γ^(1) - γ^(2)|` over the grid.
    pub sublattice_mismatch: f64,
    /// Largest `C` component off the support of `Ψ0`.
    pub leakage: f64,
}

pub fn compute_antiferro(spec: &AntiferroSpec) -> Result<AntiferroFields> {
    let ground = ground_state(spec)?;
    let grid = spec.grid()?;
    let psi0 = ground.states();
    let h1 = sublattice_hamiltonian(spec.axis, spec.delta, ground.j0)?;
    let r = sublattice_flip();
    let h2 = &r * &h1 * &r;
    let propagators = [Evolution::new(&h1)?, Evolution::new(&h2)?];
    let ue = Evolution::new(&excited_hamiltonian(spec)?)?;
    let tail_from = spec.pulse.center + 3.0 * spec.pulse.width;
    let mut raman = Vec::with_capacity(2);
    let mut leak: f64 = 0.0;
    for s in 0..2 {
        let cs = antiferro_c(&spec.pulse, spec.d0, &propagators[s], &ue, &psi0[s], &grid)?;
        leak = leak.max(leakage(&cs, &psi0[s]));
        raman.push(amplitude_from_c(&cs, &psi0[s], tail_from));
    }
    let raman: [RamanResult; 2] = [raman[0].clone(), raman[1].clone()];
    let fields = compute_fields(&raman[0], &propagators[0])?;
    let fields2 = compute_fields(&raman[1], &propagators[1])?;
    let mut mismatch: f64 = 0.0;
    for i in 0..grid.count {
        for k in 0..4 {
            mismatch = mismatch
                .max((fields.nu_row(i)[k] - fields2.nu_row(i)[k]).abs())
                .max((fields.gamma_row(i)[k] - fields2.gamma_row(i)[k]).abs());
        }
    }
    Ok(AntiferroFields { ground, psi0, propagators, raman, fields, sublattice_mismatch: mismatch, leakage: leak })
}

/// Sampled fifteen-variable solution.
#[derive(Debug, Clone, Default)]
pub struct MlTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<[f64; 15]>,
}

impl MlTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push(&mut self, t: f64, x: &[f64]) {
        let mut row = [0.0; 15];
        row.copy_from_slice(x);
        self.t.push(t);
        self.x.push(row);
    }

    /// `[Mx, My, Mz, Lx, Ly, Lz]` at sample `i`; `Mx`, `My`, `Lz` vanish identically.
    pub fn vectors(&self, i: usize) -> [f64; 6] {
        let x = &self.x[i];
        [0.0, 0.0, mz(x), lx(x), ly(x), 0.0]
    }

    /// Columns `Lx, Ly, Lz, Mx, My, Mz` followed by the fifteen variables.
    pub fn to_trajectory(&self) -> Trajectory {
        let mut names = alloc::vec!["Lx", "Ly", "Lz", "Mx", "My", "Mz"];
        names.extend(Var::DYNAMIC.iter().map(|v| v.name()));
        let mut out = Trajectory::new(&names);
        for i in 0..self.len() {
            let v = self.vectors(i);
            let mut row = alloc::vec![v[3], v[4], v[5], v[0], v[1], v[2]];
            row.extend_from_slice(&self.x[i]);
            out.push(self.t[i], &row);
        }
        out
    }

    pub fn index_at_or_before(&self, t: f64) -> usize {
        self.t.partition_point(|&s| s <= t).saturating_sub(1)
    }
}

fn check_state(x: &[f64], t: f64) -> Result<()> {
    for v in [M1, M2, M3, M4] {
        let m = v.get(x);
        if !(-BREACH_TOL..=2.0 + BREACH_TOL).contains(&m) {
            return Err(Error::InvariantBreach { name: v.name(), value: m, time: t });
        }
    }
    let l = libm::hypot(lx(x), ly(x));
    if !l.is_finite() || l > 3.0 + BREACH_TOL {
        return Err(Error::InvariantBreach { name: "|L|", value: l, time: t });
    }
    if mz(x).abs() > 3.0 + BREACH_TOL {
        return Err(Error::InvariantBreach { name: "Mz", value: mz(x), time: t });
    }
    Ok(())
}

/// Shared stepping scheme: `2dt` RK4 steps through the field grid (one `dt`
/// step when the interval count is odd), then field-free steps of at most
/// `post_step` to `t_end`. Returns the final state of a `dt`-step rerun of
/// the in-pulse part for the step-halving guard.
fn run_scheme<F>(
    mut rhs: F,
    fields: &EffectiveFields,
    y0: &[f64],
    t_end: f64,
    post_step: f64,
    mut observe: impl FnMut(f64, &[f64]) -> Result<()>,
) -> Result<f64>
where
    F: FnMut(&[f64], &[f64], f64, &[f64], &mut [f64]),
{
    let grid = fields.grid;
    let n = y0.len();
    let (t0, t1) = (grid.t_start, grid.t_end());
    let mut nu = [0.0; 4];
    let mut gamma = [0.0; 4];
    let mut with_fields = |t: f64, y: &[f64], dy: &mut [f64]| {
        fields.at(t, &mut nu, &mut gamma);
        rhs(&nu, &gamma, t, y, dy);
    };
    let mut y = y0.to_vec();
    observe(t0, &y)?;
    let mut status = Ok(());
    let t_even = grid.t(grid.count - 1 - (grid.count - 1) % 2);
    integrate_span(&mut with_fields, &mut y, t0, t_even, 2.0 * grid.dt, |t, y| {
        if status.is_ok() {
            status = observe(t, y);
        }
    });
    status?;
    let mut status = Ok(());
    integrate_span(&mut with_fields, &mut y, t_even, t1, grid.dt, |t, y| {
        if status.is_ok() {
            status = observe(t, y);
        }
    });
    status?;
    let mut fine = y0.to_vec();
    let mut rk = Rk4::new(n);
    for i in 0..grid.count - 1 {
        rk.step(&mut with_fields, grid.t(i), grid.dt, &mut fine);
    }
    let guard = y.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if guard > STEP_GUARD {
        return Err(Error::StepSizeUnstable(guard));
    }
    let zeros = [0.0; 4];
    let mut free = |t: f64, y: &[f64], dy: &mut [f64]| rhs(&zeros, &zeros, t, y, dy);
    let mut status = Ok(());
    integrate_span(&mut free, &mut y, t1, t_end, post_step, |t, y| {
        if status.is_ok() {
            status = observe(t, y);
        }
    });
    status?;
    Ok(guard)
}

/// RK4 integration of the fifteen variables from the ground state.
pub fn integrate_antiferro(spec: &AntiferroSpec, computed: &AntiferroFields, mode: MeanField) -> Result<MlTrajectory> {
    let eom = AntiferroEom::new(spec, &computed.ground, mode);
    let x0 = ml_state_from_psi(&computed.psi0[0], &computed.psi0[1]);
    let mut traj = MlTrajectory::default();
    run_scheme(
        |nu, gamma, _, y, dy| eom.rhs(nu, gamma, y, dy),
        &computed.fields,
        &x0,
        spec.t_end,
        spec.post_step,
        |t, y| {
            check_state(y, t)?;
            traj.push(t, y);
            Ok(())
        },
    )?;
    Ok(traj)
}

/// Sampled solution of the per-sublattice N-basis equations (thirty-two variables).
#[derive(Debug, Clone, Default)]
pub struct FullTrajectory {
    pub t: Vec<f64>,
    /// Sixteen N expectations of each sublattice.
    pub n: Vec<[[f64; 16]; 2]>,
}

impl FullTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn ml_state(&self, i: usize) -> [f64; 15] {
        ml_state_from_n(&self.n[i][0], &self.n[i][1])
    }

    pub fn excluded(&self, i: usize) -> [f64; 16] {
        excluded_from_n(&self.n[i][0], &self.n[i][1])
    }

    /// `[Mx, My, Mz, Lx, Ly, Lz]` at sample `i`.
    pub fn vectors(&self, i: usize) -> [f64; 6] {
        ml_vectors_from_n(&self.n[i][0], &self.n[i][1])
    }

    /// `Σ m_a` at sample `i`.
    pub fn m_sum(&self, i: usize) -> f64 {
        (0..4).map(|a| self.n[i][0][a] + self.n[i][1][a]).sum()
    }
}

/// Sublattice Hamiltonians for the thirty-two variable run.
struct FullHamiltonians {
    ops: [Operator; 3],
    crystal: Operator,
    frozen: Option<[Operator; 2]>,
    jex: f64,
}

impl FullHamiltonians {
    fn new(spec: &AntiferroSpec, ground: &GroundState, mode: MeanField) -> Result<Self> {
        let am = angular_momentum(1.5)?;
        let crystal = crystal_field(spec.axis, spec.delta, 1.5)?;
        let frozen = match mode {
            MeanField::Frozen => {
                let r = sublattice_flip();
                let h1 = &crystal - &am.jx * c(ground.j0);
                let h2 = &r * &h1 * &r;
                Some([h1, h2])
            }
            MeanField::Live => None,
        };
        Ok(FullHamiltonians { ops: [am.jx, am.jy, am.jz], crystal, frozen, jex: spec.jex })
    }

    fn at(&self, n: &[f64]) -> [Operator; 2] {
        if let Some(h) = &self.frozen {
            return h.clone();
        }
        let field = |rho: &Operator| {
            let mut h = self.crystal.clone();
            for o in &self.ops {
                h += o * c(self.jex * (rho * o).trace().re);
            }
            h
        };
        let r1 = rho_from_n(&n[..16], 4);
        let r2 = rho_from_n(&n[16..], 4);
        [field(&r2), field(&r1)]
    }
}

/// Diagnostic integration of all thirty-two N expectations, each sublattice
/// with its own exchange field and the common effective fields.
pub fn integrate_full(spec: &AntiferroSpec, computed: &AntiferroFields, mode: MeanField) -> Result<FullTrajectory> {
    let mut y0 = n_from_rho(&density(&computed.psi0[0]));
    y0.extend(n_from_rho(&density(&computed.psi0[1])));
    let mut traj = FullTrajectory::default();
    let hams = FullHamiltonians::new(spec, &computed.ground, mode)?;
    run_scheme(
        |nu, gamma, _, y, dy| {
            let [h1, h2] = hams.at(y);
            eom_rhs(nu, gamma, &y[..16], &h1, &mut dy[..16]);
            eom_rhs(nu, gamma, &y[16..], &h2, &mut dy[16..]);
        },
        &computed.fields,
        &y0,
        spec.t_end,
        spec.post_step,
        |t, y| {
            let mut row = [[0.0; 16]; 2];
            row[0].copy_from_slice(&y[..16]);
            row[1].copy_from_slice(&y[16..]);
            traj.t.push(t);
            traj.n.push(row);
            Ok(())
        },
    )?;
    Ok(traj)
}

/// The fifteen variables of the normalised Schrödinger states of both
/// sublattices, each propagated with its frozen mean-field Hamiltonian.
pub fn oracle_ml(computed: &AntiferroFields, times: &[f64]) -> Result<MlTrajectory> {
    let mut out = MlTrajectory::default();
    for &t in times {
        let p1 = psi_at_time(&computed.raman[0], &computed.propagators[0], t)?;
        let p2 = psi_at_time(&computed.raman[1], &computed.propagators[1], t)?;
        out.push(t, &ml_state_from_psi(&p1, &p2));
    }
    Ok(out)
}

/// Compare a fifteen-variable trajectory with the frozen-mean-field oracle.
pub fn oracle_report(computed: &AntiferroFields, traj: &MlTrajectory, tolerance: f64) -> Result<OracleReport> {
    let schr = oracle_ml(computed, &traj.t)?;
    oracle_compare(&traj.to_trajectory(), &schr.to_trajectory(), tolerance)
}

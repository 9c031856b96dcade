//! A single spin-1/2 in a static field along x, driven by Raman transitions
//! through the spin-orbit and Zeeman split 2p manifold.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix3, SymmetricEigen};

use crate::effective_field::{compute_fields, EffectiveFields};
use crate::ode::Rk4;
use crate::oracle::{expectations, psi_at_time, Trajectory};
use crate::pulse::{amplitude_from_fluence, units, PulseSpec};
use crate::qm::{angular_momentum, c, identity, kron, Evolution, Operator, Sign};
use crate::raman::{single_spin_a, IntermediateLevel, RamanResult, TimeGrid};
use crate::{Error, Result};

/// End of the excitation used by the sudden-approximation baseline, fs after the pulse centre.
pub const TAU_P_FS: f64 = 200.0;
/// Start of the phase-averaging window, fs after the pulse centre.
pub const PHASE_WINDOW_START_FS: f64 = 1000.0;
/// Largest endpoint change allowed when the in-pulse step is halved.
pub const STEP_GUARD: f64 = 1e-7;
/// Carrier of the reference pulse, eV.
pub const REFERENCE_OMEGA0_EV: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSpinSpec {
    /// Field magnitude, a.u.
    pub b: f64,
    /// Spin-orbit constant, Hartree.
    pub lambda: f64,
    /// Gyromagnetic factor of the Zeeman term `μ (2S + L)·B`.
    pub mu: f64,
    /// Unsplit `ε_2p - ε_1s`, Hartree.
    pub omega_res: f64,
    pub pulse: PulseSpec,
    /// Raman grid step, a.u.
    pub dt: f64,
    /// Raman grid half-span in units of the pulse width.
    pub half_widths: f64,
    /// End of the post-pulse integration, a.u.
    pub t_end: f64,
    /// Post-pulse RK4 step, a.u.
    pub post_step: f64,
}

impl SingleSpinSpec {
    /// Defaults: `μ = -1/2`, carrier on the unsplit resonance,
    /// `dt = min(0.1, period/42)`, grid of `±5T`, integration to 12 ps after
    /// the pulse centre.
    pub fn new(b_tesla: f64, lambda_mev: f64, pulse: PulseSpec) -> Self {
        SingleSpinSpec {
            b: units::tesla_to_au(b_tesla),
            lambda: units::mev_to_hartree(lambda_mev),
            mu: -0.5,
            omega_res: pulse.omega0,
            pulse,
            dt: default_dt(&pulse),
            half_widths: 5.0,
            t_end: pulse.center + units::fs_to_au(12_000.0),
            post_step: 10.0,
        }
    }

    /// Pulse with `T = 100 fs`, fluence `2 mJ/cm²`, carrier [`REFERENCE_OMEGA0_EV`], centred at 0.
    pub fn reference_pulse() -> Result<PulseSpec> {
        PulseSpec::new(
            amplitude_from_fluence(2.0, 100.0)?,
            units::fs_to_au(100.0),
            units::ev_to_hartree(REFERENCE_OMEGA0_EV),
            0.0,
        )
    }

    pub fn with_field(&self, b: f64) -> Self {
        SingleSpinSpec { b, ..*self }
    }

    /// Precession rate `B_L` with `Ĥ_m = -B_L Ŝx`.
    pub fn zeeman(&self) -> f64 {
        -2.0 * self.mu * self.b
    }

    pub fn larmor_period(&self) -> f64 {
        2.0 * PI / self.zeeman().abs()
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::around_pulse(&self.pulse, self.half_widths, self.dt)
    }

    pub fn ground_hamiltonian(&self) -> Operator {
        angular_momentum(0.5).expect("spin 1/2").jx * c(-self.zeeman())
    }

    pub fn levels(&self) -> Result<Vec<IntermediateLevel>> {
        Ok(solve_2p_levels(self.zeeman(), self.lambda)?
            .into_iter()
            .map(|l| IntermediateLevel {
                energy: self.omega_res + l.energy,
                weight_up: l.alpha * l.alpha,
                weight_down: l.beta * l.beta,
            })
            .collect())
    }

    fn validate(&self) -> Result<()> {
        if !(self.b >= 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter("field and spin-orbit constant must be non-negative"));
        }
        if !(self.mu < 0.0) {
            return Err(Error::InvalidParameter("mu must be negative"));
        }
        if !(self.post_step > 0.0) || !(self.t_end > self.pulse.center) {
            return Err(Error::InvalidParameter("post-pulse window must be positive"));
        }
        Ok(())
    }
}

/// Raman grid step: 0.1 a.u., or finer when the carrier needs it.
pub fn default_dt(pulse: &PulseSpec) -> f64 {
    f64::min(0.1, pulse.period() / 42.0)
}

/// One eigenstate of the 2p manifold.
///
/// `alpha`, `beta`, `gamma` are its overlaps with `|Lz=1,↑⟩`, `|Lz=1,↓⟩`
/// and `|Lz=0,↑⟩`; `energy` is relative to the unsplit level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level2p {
    pub branch: Sign,
    pub energy: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// `-(B/2)(2Ŝx + L̂x) - λ L̂·Ŝ` on `|Lz⟩⊗|Sz⟩`, `Lz = 1, 0, -1`.
pub fn hamiltonian_2p(b: f64, lambda: f64) -> Operator {
    let l = angular_momentum(1.0).expect("l = 1");
    let s = angular_momentum(0.5).expect("s = 1/2");
    let zeeman = (kron(&identity(3), &s.jx) * c(2.0) + kron(&l.jx, &identity(2))) * c(-b / 2.0);
    let soc = (kron(&l.jx, &s.jx) + kron(&l.jy, &s.jy) + kron(&l.jz, &s.jz)) * c(-lambda);
    zeeman + soc
}

fn sector_basis(branch: Sign) -> [[f64; 6]; 3] {
    let s = if branch == Sign::Plus { 1.0 } else { -1.0 };
    let h = FRAC_1_SQRT_2;
    [
        [h, 0.0, 0.0, 0.0, 0.0, s * h],
        [0.0, h, 0.0, 0.0, s * h, 0.0],
        [0.0, 0.0, h, s * h, 0.0, 0.0],
    ]
}

/// Monic coefficients `(b2, b1, b0)` of the characteristic cubic of one branch.
pub fn branch_cubic(b: f64, lambda: f64, branch: Sign) -> (f64, f64, f64) {
    let s = if branch == Sign::Plus { 1.0 } else { -1.0 };
    let l2 = lambda * lambda;
    (
        s * b / 2.0,
        -(0.75 * l2 + s * b * lambda / 2.0 + b * b / 2.0),
        -l2 * lambda / 4.0 + lambda * b * b / 4.0 - s * 3.0 * l2 * b / 8.0,
    )
}

/// Real roots of `x³ + b2 x² + b1 x + b0` in ascending order, for a cubic
/// known to have three real roots.
pub fn cubic_real_roots(b2: f64, b1: f64, b0: f64) -> Result<[f64; 3]> {
    let shift = -b2 / 3.0;
    let p = b1 - b2 * b2 / 3.0;
    let q = 2.0 * b2 * b2 * b2 / 27.0 - b2 * b1 / 3.0 + b0;
    let scale = b2.abs().max(libm::sqrt(b1.abs())).max(libm::cbrt(b0.abs()));
    if scale == 0.0 {
        return Ok([0.0; 3]);
    }
    if p > 1e-12 * scale * scale {
        return Err(Error::CubicFailure);
    }
    if p.abs() <= 1e-14 * scale * scale {
        let t = libm::cbrt(-q);
        return Ok([t + shift; 3]);
    }
    let m = 2.0 * libm::sqrt(-p / 3.0);
    let arg = 3.0 * q / (p * m);
    if arg.abs() > 1.0 + 1e-9 {
        return Err(Error::CubicFailure);
    }
    let theta = libm::acos(arg.clamp(-1.0, 1.0)) / 3.0;
    let mut roots = [0.0; 3];
    for (k, r) in roots.iter_mut().enumerate() {
        *r = m * libm::cos(theta - 2.0 * PI * k as f64 / 3.0) + shift;
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    Ok(roots)
}

/// The six 2p levels, three per branch, from the real symmetric sector
/// matrices. Energies are cross-checked against the closed-form cubic.
pub fn solve_2p_levels(b: f64, lambda: f64) -> Result<Vec<Level2p>> {
    let h = hamiltonian_2p(b, lambda);
    let scale = b.abs() + lambda.abs();
    let mut out = Vec::with_capacity(6);
    for branch in [Sign::Plus, Sign::Minus] {
        let basis = sector_basis(branch);
        let mut hs = Matrix3::<f64>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = c(0.0);
                for r in 0..6 {
                    for k in 0..6 {
                        acc += h[(r, k)] * basis[i][r] * basis[j][k];
                    }
                }
                hs[(i, j)] = acc.re;
            }
        }
        let eig = SymmetricEigen::new(hs);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let (b2, b1, b0) = branch_cubic(b, lambda, branch);
        let roots = cubic_real_roots(b2, b1, b0)?;
        for (k, &idx) in order.iter().enumerate() {
            let e = eig.eigenvalues[idx];
            if (e - roots[k]).abs() > 1e-9 * scale.max(1e-300) {
                return Err(Error::CubicFailure);
            }
            let v = eig.eigenvectors.column(idx);
            out.push(Level2p {
                branch,
                energy: e,
                alpha: v[0] * FRAC_1_SQRT_2,
                beta: v[1] * FRAC_1_SQRT_2,
                gamma: v[2] * FRAC_1_SQRT_2,
            });
        }
    }
    Ok(out)
}

/// Raman amplitude, coefficients and ground propagator of one run.
#[derive(Debug, Clone)]
pub struct SingleSpinFields {
    pub raman: RamanResult,
    pub fields: EffectiveFields,
    pub propagator: Evolution,
}

pub fn compute_single_spin(spec: &SingleSpinSpec) -> Result<SingleSpinFields> {
    spec.validate()?;
    let grid = spec.grid()?;
    let raman = single_spin_a(&spec.pulse, &spec.levels()?, spec.zeeman(), &grid)?;
    let propagator = Evolution::new(&spec.ground_hamiltonian())?;
    let fields = compute_fields(&raman, &propagator)?;
    Ok(SingleSpinFields { raman, fields, propagator })
}

#[derive(Debug, Clone, Default)]
pub struct Fgh {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

fn fgh_from(nu: &[f64], gamma: &[f64]) -> (f64, f64, f64) {
    (2.0 * (nu[1] - nu[0]), gamma[1] - gamma[0], -2.0 / 3.0 * (gamma[1] + gamma[0]))
}

/// `f = 2Re(Y2 - Y1)`, `g = Im(Y2 - Y1)`, `h = -(2/3)Im(Y2 + Y1)` on the field grid.
pub fn spin_fgh(fields: &EffectiveFields) -> Result<Fgh> {
    if fields.n != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: fields.n });
    }
    let mut out = Fgh::default();
    for i in 0..fields.grid.count {
        let (f, g, h) = fgh_from(fields.nu_row(i), fields.gamma_row(i));
        out.f.push(f);
        out.g.push(g);
        out.h.push(h);
    }
    Ok(out)
}

/// Right-hand side of the spin equations for given `f`, `g` and field `B`.
pub fn spin_rhs(b: f64, f: f64, g: f64, s: &[f64], ds: &mut [f64]) {
    ds[0] = f * s[0] * s[2] - g * s[1];
    ds[1] = f * s[1] * s[2] + g * s[0] + b * s[2];
    ds[2] = -f * (s[0] * s[0] + s[1] * s[1]) - b * s[1];
}

#[derive(Debug, Clone, Default)]
pub struct SpinTrajectory {
    pub t: Vec<f64>,
    pub s: Vec<[f64; 3]>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl SpinTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, t: f64, s: [f64; 3], fgh: (f64, f64, f64)) {
        self.t.push(t);
        self.s.push(s);
        self.f.push(fgh.0);
        self.g.push(fgh.1);
        self.h.push(fgh.2);
    }

    /// Linear interpolation of `S` at `t` (clamped to the sampled range).
    pub fn s_at(&self, t: f64) -> [f64; 3] {
        let k = self.t.partition_point(|&x| x <= t);
        if k == 0 {
            return self.s[0];
        }
        if k >= self.t.len() {
            return self.s[self.t.len() - 1];
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (self.s[k - 1], self.s[k]);
        [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2])]
    }

    pub fn to_trajectory(&self) -> Trajectory {
        let mut out = Trajectory::new(&["Sx", "Sy", "Sz"]);
        for (t, s) in self.t.iter().zip(&self.s) {
            out.push(*t, s);
        }
        out
    }

    /// State at the last sample with `t <= time`.
    pub fn index_at_or_before(&self, time: f64) -> usize {
        self.t.partition_point(|&x| x <= time).saturating_sub(1)
    }
}

fn fgh_at(fields: Option<&EffectiveFields>, t: f64) -> (f64, f64, f64) {
    match fields {
        Some(fl) => {
            let (mut nu, mut ga) = ([0.0; 2], [0.0; 2]);
            fl.at(t, &mut nu, &mut ga);
            fgh_from(&nu, &ga)
        }
        None => (0.0, 0.0, 0.0),
    }
}

fn integrate_segment(
    b: f64,
    fields: Option<&EffectiveFields>,
    s: &mut [f64; 3],
    t0: f64,
    t1: f64,
    h_max: f64,
    out: Option<&mut SpinTrajectory>,
) {
    let steps = libm::ceil((t1 - t0) / h_max - 1e-9).max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (f, g, _) = fgh_at(fields, t);
        spin_rhs(b, f, g, y, dy);
    };
    let mut rk = Rk4::new(3);
    match out {
        Some(traj) => {
            for k in 0..steps {
                rk.step(&mut rhs, t0 + k as f64 * h, h, s);
                let t = t0 + (k + 1) as f64 * h;
                traj.push(t, *s, fgh_at(fields, t));
            }
        }
        None => {
            for k in 0..steps {
                rk.step(&mut rhs, t0 + k as f64 * h, h, s);
            }
        }
    }
}

/// RK4 through the field grid with step `2dt` (a step-halving guard checks
/// the endpoint), then field-free precession with `post_step` up to `t_end`.
pub fn integrate_spin(
    b: f64,
    fields: &EffectiveFields,
    s0: [f64; 3],
    t_end: f64,
    post_step: f64,
) -> Result<SpinTrajectory> {
    let grid = fields.grid;
    let (t0, t1) = (grid.t_start, grid.t_end());
    let mut traj = SpinTrajectory::default();
    traj.push(t0, s0, fgh_at(Some(fields), t0));
    let mut s = s0;
    // whole 2dt steps land on grid nodes; an odd interval count gets one dt step
    let t_even = grid.t(grid.count - 1 - (grid.count - 1) % 2);
    if t_even > t0 {
        integrate_segment(b, Some(fields), &mut s, t0, t_even, 2.0 * grid.dt, Some(&mut traj));
    }
    if t1 > t_even {
        integrate_segment(b, Some(fields), &mut s, t_even, t1, grid.dt, Some(&mut traj));
    }
    let mut fine = s0;
    integrate_segment(b, Some(fields), &mut fine, t0, t1, grid.dt, None);
    let diff = (0..3).map(|k| (s[k] - fine[k]).abs()).fold(0.0, f64::max);
    if diff > STEP_GUARD {
        return Err(Error::StepSizeUnstable(diff));
    }
    if t_end > t1 {
        integrate_segment(b, None, &mut s, t1, t_end, post_step, Some(&mut traj));
    }
    Ok(traj)
}

/// One complete single-spin run starting from `S = (1/2, 0, 0)`.
#[derive(Debug, Clone)]
pub struct SingleSpinRun {
    pub spec: SingleSpinSpec,
    pub computed: SingleSpinFields,
    pub trajectory: SpinTrajectory,
}

pub fn simulate(spec: &SingleSpinSpec) -> Result<SingleSpinRun> {
    let computed = compute_single_spin(spec)?;
    let trajectory =
        integrate_spin(spec.zeeman(), &computed.fields, [0.5, 0.0, 0.0], spec.t_end, spec.post_step)?;
    Ok(SingleSpinRun { spec: *spec, computed, trajectory })
}

/// `⟨Ŝ⟩` of the normalised Schrödinger state at the trajectory's sample times.
pub fn oracle_trajectory(run: &SingleSpinRun) -> Result<Trajectory> {
    let s = angular_momentum(0.5)?;
    let ops = [s.jx, s.jy, s.jz];
    let mut out = Trajectory::new(&["Sx", "Sy", "Sz"]);
    for &t in &run.trajectory.t {
        let psi = psi_at_time(&run.computed.raman, &run.computed.propagator, t)?;
        out.push(t, &expectations(&psi, &ops));
    }
    Ok(out)
}

/// Precession period from a least-squares fit of the unwrapped angle
/// `atan2(Sz, Sy)` over all samples with `t >= t_from`.
pub fn precession_period(traj: &SpinTrajectory, t_from: f64) -> Result<f64> {
    let start = traj.t.partition_point(|&t| t < t_from);
    if traj.len() < start + 3 {
        return Err(Error::InsufficientWindow);
    }
    let mut prev: Option<f64> = None;
    let (mut st, mut sp, mut stt, mut stp) = (0.0, 0.0, 0.0, 0.0);
    let n = (traj.len() - start) as f64;
    let t_ref = traj.t[start];
    for (t, s) in traj.t[start..].iter().zip(&traj.s[start..]) {
        let raw = libm::atan2(s[2], s[1]);
        let phi = match prev {
            None => raw,
            Some(p) => p + wrap_pi(raw - p),
        };
        prev = Some(phi);
        let x = t - t_ref;
        st += x;
        sp += phi;
        stt += x * x;
        stp += x * phi;
    }
    let slope = (n * stp - st * sp) / (n * stt - st * st);
    if !(slope.abs() > 0.0) {
        return Err(Error::InsufficientWindow);
    }
    Ok(2.0 * PI / slope.abs())
}

#[derive(Debug, Clone)]
pub struct SuddenComparison {
    /// Phase of the full run minus that of the sudden baseline, degrees in (-180, 180].
    pub degrees: f64,
    pub full: SpinTrajectory,
    pub sudden: SpinTrajectory,
}

fn wrap_pi(x: f64) -> f64 {
    let y = libm::fmod(x + PI, 2.0 * PI);
    let y = if y <= 0.0 { y + 2.0 * PI } else { y };
    y - PI
}

/// Compare the coupled run with the sudden baseline, whose light-induced
/// coefficients are computed at `B = 0` and whose static field is switched
/// on only at `τ_p`.
pub fn sudden_comparison(spec: &SingleSpinSpec) -> Result<SuddenComparison> {
    spec.validate()?;
    let b = spec.zeeman();
    let center = spec.pulse.center;
    let w0 = center + units::fs_to_au(PHASE_WINDOW_START_FS);
    let period = if b > 0.0 { spec.larmor_period() } else { units::fs_to_au(1000.0) };
    let w1 = w0 + period;
    if spec.t_end < w1 {
        return Err(Error::InsufficientWindow);
    }
    let full = simulate(spec)?.trajectory;

    let spec0 = spec.with_field(0.0);
    let fields0 = compute_single_spin(&spec0)?.fields;
    let tau_p = center + units::fs_to_au(TAU_P_FS);
    let grid = fields0.grid;
    if tau_p > grid.t_end() {
        return Err(Error::InsufficientWindow);
    }
    let mut sudden = SpinTrajectory::default();
    let mut s = [0.5, 0.0, 0.0];
    sudden.push(grid.t_start, s, fgh_at(Some(&fields0), grid.t_start));
    integrate_segment(0.0, Some(&fields0), &mut s, grid.t_start, tau_p, 2.0 * grid.dt, Some(&mut sudden));
    integrate_segment(b, Some(&fields0), &mut s, tau_p, grid.t_end(), 2.0 * grid.dt, Some(&mut sudden));
    integrate_segment(b, None, &mut s, grid.t_end(), spec.t_end, spec.post_step, Some(&mut sudden));

    let samples = 256;
    let mut prev: Option<f64> = None;
    let mut acc = 0.0;
    for k in 0..samples {
        let t = w0 + period * k as f64 / samples as f64;
        let a = full.s_at(t);
        let z = sudden.s_at(t);
        let raw = libm::atan2(a[2], a[1]) - libm::atan2(z[2], z[1]);
        let d = match prev {
            None => wrap_pi(raw),
            Some(p) => p + wrap_pi(raw - p),
        };
        prev = Some(d);
        acc += d;
    }
    let mean = wrap_pi(acc / samples as f64);
    Ok(SuddenComparison { degrees: mean.to_degrees(), full, sudden })
}

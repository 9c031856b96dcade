//! Second-order Raman amplitudes on a uniform time grid.
//!
//! Both engines evaluate a nested double time integral as two cumulative
//! trapezoid sums. All propagators are referenced to the grid start, so that
//! `U(t_start) = 1` and the amplitude starts at its unperturbed value.

use alloc::vec;
use alloc::vec::Vec;

use crate::pulse::PulseSpec;
use crate::qm::{c, Evolution, Operator, Spinor, C64};
use crate::{Error, Result};

/// Samples per carrier period required on the Raman grid.
pub const CARRIER_SAMPLES: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_end > t_start) {
            return Err(Error::InvalidParameter("grid needs dt > 0 and t_end > t_start"));
        }
        let count = libm::round((t_end - t_start) / dt) as usize + 1;
        Ok(TimeGrid { t_start, dt, count })
    }

    /// Grid spanning `center ± half_widths·T` of the pulse.
    pub fn around_pulse(pulse: &PulseSpec, half_widths: f64, dt: f64) -> Result<Self> {
        let half = half_widths * pulse.width;
        TimeGrid::new(pulse.center - half, pulse.center + half, dt)
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.count - 1)
    }

    /// Largest index with `t(i) <= t`, clamped to the grid.
    pub fn index_at_or_before(&self, t: f64) -> usize {
        if t <= self.t_start {
            return 0;
        }
        let k = libm::floor((t - self.t_start) / self.dt + 1e-9) as usize;
        k.min(self.count - 1)
    }

    pub fn check_carrier(&self, pulse: &PulseSpec) -> Result<()> {
        let limit = pulse.period() / CARRIER_SAMPLES;
        if self.dt > limit {
            return Err(Error::GridTooCoarse { dt: self.dt, limit });
        }
        Ok(())
    }
}

/// One virtual intermediate level of the single-spin scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntermediateLevel {
    /// Transition energy above the unsplit ground level, Hartree.
    pub energy: f64,
    pub weight_up: f64,
    pub weight_down: f64,
}

/// A spinor-valued signal sampled on a [`TimeGrid`].
#[derive(Debug, Clone)]
pub struct SpinorSeries {
    pub grid: TimeGrid,
    pub dim: usize,
    data: Vec<C64>,
}

impl SpinorSeries {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        SpinorSeries { grid, dim, data: vec![C64::new(0.0, 0.0); grid.count * dim] }
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn spinor(&self, i: usize) -> Spinor {
        Spinor::from_column_slice(self.row(i))
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| f64::max(m, z.norm()))
    }
}

/// The amplitude spinor `𝒜(t)` together with the initial state it multiplies.
///
/// The unnormalised ground-manifold state is `W_a(t) = 𝒜_a(t) P0_a`.
/// Only the second-order part `𝒜 - 1` is stored, so that it keeps full
/// relative precision at weak fields.
#[derive(Debug, Clone)]
pub struct RamanResult {
    pub grid: TimeGrid,
    pub p0: Spinor,
    pub correction: SpinorSeries,
    pub converged_tail: bool,
}

impl RamanResult {
    /// Wrap a sampled `𝒜 - 1`; the tail is checked from `tail_from` on.
    pub fn from_correction(p0: Spinor, correction: SpinorSeries, tail_from: f64) -> Self {
        let mut r = RamanResult { grid: correction.grid, p0, correction, converged_tail: false };
        r.converged_tail = r.tail_drift(tail_from) < 1e-8;
        r
    }

    pub fn dim(&self) -> usize {
        self.p0.len()
    }

    pub fn is_active(&self, a: usize) -> bool {
        self.p0[a].norm() > 0.0
    }

    pub fn a(&self, i: usize) -> Spinor {
        let mut a = self.correction.spinor(i);
        for (k, z) in a.iter_mut().enumerate() {
            *z = if self.is_active(k) { *z + 1.0 } else { C64::new(0.0, 0.0) };
        }
        a
    }

    pub fn w(&self, i: usize) -> Spinor {
        self.a(i).component_mul(&self.p0)
    }

    /// `W'` at grid point `i` by centred differences (one-sided at the ends).
    pub fn w_derivative(&self, i: usize) -> Spinor {
        let n = self.grid.count;
        let dt = self.grid.dt;
        let (lo, hi, span) = if i == 0 {
            (0, 1, dt)
        } else if i == n - 1 {
            (n - 2, n - 1, dt)
        } else {
            (i - 1, i + 1, 2.0 * dt)
        };
        (self.w(hi) - self.w(lo)) / c(span)
    }

    /// Largest relative change of `𝒜` between `t_from` and the grid end.
    pub fn tail_drift(&self, t_from: f64) -> f64 {
        let last = self.a(self.grid.count - 1);
        let scale = last.norm().max(1e-300);
        let start = self.grid.index_at_or_before(t_from);
        (start..self.grid.count).map(|i| (self.a(i) - &last).norm() / scale).fold(0.0, f64::max)
    }
}

fn cumulative_trapezoid(values: &[C64], dt: f64, out: &mut [C64]) {
    let mut acc = C64::new(0.0, 0.0);
    out[0] = acc;
    for i in 1..values.len() {
        acc += (values[i - 1] + values[i]) * (0.5 * dt);
        out[i] = acc;
    }
}

/// Single spin-1/2 amplitude
/// `𝒜(t) = (1,1) + (E/ω0)² ∫ U⁻¹(t') v(t') dt'` with
/// `v_σ = Σ_j |d_σj|² G_j`, `G_j(t') = e^{-iΔω_j t'} F(t') ∫ e^{iΔω_j t''} e^{iBt''/2} F(t'') dt''`
/// and `U(t) = exp(+iB Sx t)` the propagator of `H = -B Sx`.
pub fn single_spin_a(
    pulse: &PulseSpec,
    levels: &[IntermediateLevel],
    b: f64,
    grid: &TimeGrid,
) -> Result<RamanResult> {
    if levels.is_empty() {
        return Err(Error::NoLevels);
    }
    grid.check_carrier(pulse)?;
    let n = grid.count;
    let dt = grid.dt;
    let field: Vec<f64> = (0..n).map(|i| pulse.carrier_field(grid.t(i))).collect();

    let mut v_up = vec![C64::new(0.0, 0.0); n];
    let mut v_down = vec![C64::new(0.0, 0.0); n];
    let mut inner = vec![C64::new(0.0, 0.0); n];
    let mut cum = vec![C64::new(0.0, 0.0); n];
    for lvl in levels {
        let rate = lvl.energy + b / 2.0;
        for i in 0..n {
            let tau = grid.t(i) - grid.t_start;
            inner[i] = C64::from_polar(field[i], rate * tau);
        }
        cumulative_trapezoid(&inner, dt, &mut cum);
        for i in 0..n {
            let tau = grid.t(i) - grid.t_start;
            let g = C64::from_polar(field[i], -lvl.energy * tau) * cum[i];
            v_up[i] += g * lvl.weight_up;
            v_down[i] += g * lvl.weight_down;
        }
    }

    // U⁻¹(τ) = exp(-iB Sx τ) = cos(Bτ/2) - i sin(Bτ/2) σx
    let mut outer_up = vec![C64::new(0.0, 0.0); n];
    let mut outer_down = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let tau = grid.t(i) - grid.t_start;
        let (s, co) = libm::sincos(b * tau / 2.0);
        let mi_s = C64::new(0.0, -s);
        outer_up[i] = v_up[i] * co + v_down[i] * mi_s;
        outer_down[i] = v_down[i] * co + v_up[i] * mi_s;
    }
    let k = (pulse.amplitude / pulse.omega0) * (pulse.amplitude / pulse.omega0);
    let mut int_up = vec![C64::new(0.0, 0.0); n];
    let mut int_down = vec![C64::new(0.0, 0.0); n];
    cumulative_trapezoid(&outer_up, dt, &mut int_up);
    cumulative_trapezoid(&outer_down, dt, &mut int_down);

    let mut amp = SpinorSeries::zeros(*grid, 2);
    for i in 0..n {
        let row = amp.row_mut(i);
        row[0] = int_up[i] * k;
        row[1] = int_down[i] * k;
    }
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let p0 = Spinor::from_vec(vec![c(s), c(s)]);
    Ok(RamanResult::from_correction(p0, amp, pulse.center + 3.0 * pulse.width))
}

/// The 6×4 dipole operator from the `J = 3/2` ground term to the `J = 5/2`
/// excited term for left-circular light, in units of the reduced element.
pub fn dipole_d() -> Operator {
    let mut d = Operator::zeros(6, 4);
    let diag = [2.0 / 3.0, 1.0 / 5.0, 1.0 / 10.0, 1.0 / 30.0];
    for (k, v) in diag.iter().enumerate() {
        d[(k, k)] = c(-libm::sqrt(*v));
    }
    d
}

/// Second-order spinor of the antiferromagnet sublattice:
/// `C(t) = E²|d0|² ∫ F(t') U1⁻¹(t') Dᵀ U_e(t') s(t') dt'`, with
/// `s(t') = ∫ F(t'') U_e⁻¹(t'') D U1(t'') Ψ0 dt''`.
///
/// `ue` must include the excited-term energy, so that its phase cancels the
/// carrier near resonance.
pub fn antiferro_c(
    pulse: &PulseSpec,
    d0: f64,
    u1: &Evolution,
    ue: &Evolution,
    psi0: &Spinor,
    grid: &TimeGrid,
) -> Result<SpinorSeries> {
    let d = dipole_d();
    if u1.dim() != d.ncols() || psi0.len() != d.ncols() {
        return Err(Error::DimensionMismatch { expected: d.ncols(), found: u1.dim() });
    }
    if ue.dim() != d.nrows() {
        return Err(Error::DimensionMismatch { expected: d.nrows(), found: ue.dim() });
    }
    grid.check_carrier(pulse)?;
    let n = grid.count;
    let dt = grid.dt;
    let dt_ = d.transpose();
    let zero6 = Spinor::zeros(6);

    let mut s = zero6.clone();
    let mut prev_inner: Option<Spinor> = None;
    let mut outer_acc = Spinor::zeros(4);
    let mut prev_outer: Option<Spinor> = None;
    let mut out = SpinorSeries::zeros(*grid, 4);
    let pref = pulse.amplitude * pulse.amplitude * d0 * d0;
    for i in 0..n {
        let tau = grid.t(i) - grid.t_start;
        let f = pulse.carrier_field(grid.t(i));
        let g = u1.apply(tau, psi0);
        let inner = ue.apply_inverse(tau, &(&d * g)) * c(f);
        if let Some(p) = prev_inner.take() {
            s += (p + &inner) * c(0.5 * dt);
        }
        prev_inner = Some(inner);
        let outer = u1.apply_inverse(tau, &(&dt_ * ue.apply(tau, &s))) * c(f);
        if let Some(p) = prev_outer.take() {
            outer_acc += (p + &outer) * c(0.5 * dt);
        }
        prev_outer = Some(outer);
        for (dst, src) in out.row_mut(i).iter_mut().zip(outer_acc.iter()) {
            *dst = src * pref;
        }
    }
    Ok(out)
}

/// `𝒜_a = 1 - C_a / P0_a` where `P0_a ≠ 0`, otherwise `0`.
pub fn amplitude_from_c(c_series: &SpinorSeries, p0: &Spinor, tail_from: f64) -> RamanResult {
    let mut amp = SpinorSeries::zeros(c_series.grid, p0.len());
    for i in 0..c_series.grid.count {
        let cr = c_series.row(i);
        for (a, dst) in amp.row_mut(i).iter_mut().enumerate() {
            *dst = if p0[a].norm() > 0.0 { -cr[a] / p0[a] } else { C64::new(0.0, 0.0) };
        }
    }
    RamanResult::from_correction(p0.clone(), amp, tail_from)
}

/// Norm of the component of `C` lying off the support of `Ψ0`.
pub fn leakage(c_series: &SpinorSeries, p0: &Spinor) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..c_series.grid.count {
        for (a, z) in c_series.row(i).iter().enumerate() {
            if p0[a].norm() == 0.0 {
                m = m.max(z.norm());
            }
        }
    }
    m
}

//! Light-induced coefficients `ν_a`, `γ_a`, the effective operator `Ĥ_J`, and
//! the general equation of motion for the N-operator expectations.

use alloc::vec;
use alloc::vec::Vec;

use crate::qm::{build_n, c, n_from_rho, rho_from_n, Evolution, Operator, Sign, Spinor, C64, I};
use crate::raman::{RamanResult, TimeGrid};
use crate::{Error, Result};

/// Smallest allowed `|[U W]_a| / |P0_a|` before the expansion is considered broken.
pub const DENOMINATOR_GUARD: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct EffectiveFields {
    pub grid: TimeGrid,
    pub n: usize,
    nu: Vec<f64>,
    gamma: Vec<f64>,
}

impl EffectiveFields {
    pub fn zeros(grid: TimeGrid, n: usize) -> Self {
        EffectiveFields { grid, n, nu: vec![0.0; grid.count * n], gamma: vec![0.0; grid.count * n] }
    }

    pub fn nu_row(&self, i: usize) -> &[f64] {
        &self.nu[i * self.n..(i + 1) * self.n]
    }

    pub fn gamma_row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.n..(i + 1) * self.n]
    }

    /// Linear interpolation at time `t`; the fields vanish outside the grid.
    pub fn at(&self, t: f64, nu: &mut [f64], gamma: &mut [f64]) {
        let g = &self.grid;
        let x = (t - g.t_start) / g.dt;
        if !(x >= 0.0) || x > (g.count - 1) as f64 {
            nu.fill(0.0);
            gamma.fill(0.0);
            return;
        }
        let i = (libm::floor(x) as usize).min(g.count - 2);
        let w = x - i as f64;
        let n = self.n;
        for a in 0..n {
            nu[a] = (1.0 - w) * self.nu[i * n + a] + w * self.nu[(i + 1) * n + a];
            gamma[a] = (1.0 - w) * self.gamma[i * n + a] + w * self.gamma[(i + 1) * n + a];
        }
    }

    /// Largest `|ν_a|` and `|γ_a|` over the whole grid.
    pub fn peak(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()));
        (m(&self.nu), m(&self.gamma))
    }

    /// Largest `|ν_a|`, `|γ_a|` at or after `t_from`.
    pub fn tail_peak(&self, t_from: f64) -> (f64, f64) {
        let start = self.grid.index_at_or_before(t_from) * self.n;
        let m = |v: &[f64]| v[start..].iter().fold(0.0, |acc: f64, x| acc.max(x.abs()));
        (m(&self.nu), m(&self.gamma))
    }
}

/// `Y_a = [U W']_a / [U W]_a` with `W = 𝒜∘P0`, `ν = Re Y`, `γ = Im Y`.
///
/// Components with `P0_a = 0` carry no amplitude and get `Y_a = 0`.
pub fn compute_fields(result: &RamanResult, u: &Evolution) -> Result<EffectiveFields> {
    let n = result.dim();
    if u.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u.dim() });
    }
    let grid = result.grid;
    let mut out = EffectiveFields::zeros(grid, n);
    for i in 0..grid.count {
        let tau = grid.t(i) - grid.t_start;
        let uw = u.apply(tau, &result.w(i));
        let uwp = u.apply(tau, &result.w_derivative(i));
        for a in 0..n {
            if !result.is_active(a) {
                continue;
            }
            if uw[a].norm() <= DENOMINATOR_GUARD * result.p0[a].norm() {
                return Err(Error::PerturbationTooStrong { time: grid.t(i), component: a });
            }
            let y = uwp[a] / uw[a];
            out.nu[i * n + a] = y.re;
            out.gamma[i * n + a] = y.im;
        }
    }
    Ok(out)
}

/// `Ĥ_J = -Σ γ_a N_a + ½ Σ_{a<b} (ν_a - ν_b)(⟨N_ab-⟩ N_ab+ - ⟨N_ab+⟩ N_ab-)`.
pub fn build_hj(nu: &[f64], gamma: &[f64], psi: &Spinor) -> Operator {
    let n = psi.len();
    let mut h = Operator::zeros(n, n);
    for a in 0..n {
        h[(a, a)] = c(-gamma[a]);
    }
    for a in 0..n {
        for b in a + 1..n {
            let nplus = 2.0 * (psi[a].conj() * psi[b]).re;
            let nminus = 2.0 * (psi[a].conj() * psi[b]).im;
            let dnu = 0.5 * (nu[a] - nu[b]);
            let plus = build_n(a + 1, b + 1, Sign::Plus, n).expect("valid indices");
            let minus = build_n(a + 1, b + 1, Sign::Minus, n).expect("valid indices");
            h += (plus * c(nminus) - minus * c(nplus)) * c(dnu);
        }
    }
    h
}

/// Time derivative of every `⟨N⟩` in [`crate::qm::n_basis`] order:
/// `(ν_a + ν_b - 2Σν_k⟨N_k⟩)⟨N_ab±⟩ ± (γ_a - γ_b)⟨N_ab∓⟩ - i⟨[N_ab±, Ĥ_m]⟩`.
pub fn eom_rhs(nu: &[f64], gamma: &[f64], n_exp: &[f64], hm: &Operator, out: &mut [f64]) {
    let n = hm.nrows();
    let rho = rho_from_n(n_exp, n);
    let mean: f64 = (0..n).map(|k| nu[k] * rho[(k, k)].re).sum();
    let mut drho = (hm * &rho - &rho * hm) * (-I);
    for a in 0..n {
        for b in 0..n {
            let rate = C64::new(nu[a] + nu[b] - 2.0 * mean, gamma[a] - gamma[b]);
            drho[(a, b)] += rate * rho[(a, b)];
        }
    }
    out.copy_from_slice(&n_from_rho(&drho));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{units, PulseSpec};
    use crate::qm::{commutator, density, hermitian_deviation, n_basis, normalize};
    use crate::raman::{single_spin_a, IntermediateLevel, SpinorSeries};
    use proptest::prelude::*;

    fn spinor(re: &[f64], im: &[f64]) -> Spinor {
        normalize(&Spinor::from_iterator(re.len(), re.iter().zip(im).map(|(r, i)| C64::new(*r, *i))))
    }

    fn random_hermitian(vals: &[f64], n: usize) -> Operator {
        let mut h = Operator::zeros(n, n);
        let mut k = 0;
        for a in 0..n {
            h[(a, a)] = c(vals[k]);
            k += 1;
            for b in a + 1..n {
                h[(a, b)] = C64::new(vals[k], vals[k + 1]);
                h[(b, a)] = C64::new(vals[k], -vals[k + 1]);
                k += 2;
            }
        }
        h
    }

    #[test]
    fn zero_field_gives_zero_coefficients() {
        let p = PulseSpec::new(0.0, units::fs_to_au(100.0), 0.375, 0.0).unwrap();
        let grid = TimeGrid::around_pulse(&p, 4.0, 0.2).unwrap();
        let lv = [IntermediateLevel { energy: 0.376, weight_up: 0.2, weight_down: 0.1 }];
        let r = single_spin_a(&p, &lv, 0.0, &grid).unwrap();
        let u = Evolution::new(&Operator::identity(2, 2)).unwrap();
        let f = compute_fields(&r, &u).unwrap();
        assert_eq!(f.peak(), (0.0, 0.0));
    }

    #[test]
    fn equal_weights_give_equal_y() {
        let p = PulseSpec::new(3e-3, units::fs_to_au(100.0), 0.375, 0.0).unwrap();
        let grid = TimeGrid::around_pulse(&p, 4.0, 0.2).unwrap();
        let lv = [
            IntermediateLevel { energy: 0.3758, weight_up: 0.25, weight_down: 0.25 },
            IntermediateLevel { energy: 0.3741, weight_up: 0.125, weight_down: 0.125 },
        ];
        let b = units::tesla_to_au(20.0);
        let r = single_spin_a(&p, &lv, b, &grid).unwrap();
        let u = Evolution::new(&(crate::qm::angular_momentum(0.5).unwrap().jx * c(-b))).unwrap();
        let f = compute_fields(&r, &u).unwrap();
        for i in (0..grid.count).step_by(101) {
            assert!((f.nu_row(i)[0] - f.nu_row(i)[1]).abs() < 1e-12);
            assert!((f.gamma_row(i)[0] - f.gamma_row(i)[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn collapsed_amplitude_is_rejected() {
        let grid = TimeGrid::new(0.0, 4.0, 1.0).unwrap();
        let mut corr = SpinorSeries::zeros(grid, 2);
        corr.row_mut(2)[1] = c(-0.95);
        let p0 = Spinor::from_vec(vec![c(0.6), c(0.8)]);
        let r = RamanResult::from_correction(p0, corr, 0.0);
        let u = Evolution::new(&Operator::identity(2, 2)).unwrap();
        let err = compute_fields(&r, &u).unwrap_err();
        assert_eq!(err, Error::PerturbationTooStrong { time: 2.0, component: 1 });
    }

    #[test]
    fn interpolation_is_linear_and_zero_outside() {
        let grid = TimeGrid::new(0.0, 2.0, 1.0).unwrap();
        let mut f = EffectiveFields::zeros(grid, 1);
        f.nu = vec![0.0, 2.0, 4.0];
        f.gamma = vec![1.0, 1.0, -1.0];
        let (mut nu, mut ga) = ([0.0], [0.0]);
        f.at(1.5, &mut nu, &mut ga);
        assert_eq!((nu[0], ga[0]), (3.0, 0.0));
        f.at(2.0, &mut nu, &mut ga);
        assert_eq!((nu[0], ga[0]), (4.0, -1.0));
        f.at(2.5, &mut nu, &mut ga);
        assert_eq!((nu[0], ga[0]), (0.0, 0.0));
        f.at(-0.1, &mut nu, &mut ga);
        assert_eq!((nu[0], ga[0]), (0.0, 0.0));
    }

    #[test]
    fn equal_coefficients_give_pure_phase() {
        let psi = spinor(&[0.3, -0.2, 0.9], &[0.1, 0.5, -0.4]);
        let h = build_hj(&[0.7; 3], &[0.2; 3], &psi);
        assert!((h - Operator::identity(3, 3) * c(-0.2)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn single_component_state_has_diagonal_hj() {
        let psi = spinor(&[0.0, 1.0, 0.0, 0.0], &[0.0; 4]);
        let h = build_hj(&[0.1, -0.4, 0.3, 0.8], &[0.5, 0.2, -0.1, 0.0], &psi);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert_eq!(h[(a, b)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn parallel_moment_is_not_rotated() {
        let psi = spinor(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4]);
        let jz = crate::qm::angular_momentum(1.5).unwrap().jz;
        let n_exp = n_from_rho(&density(&psi));
        let mut out = vec![0.0; 16];
        eom_rhs(&[0.3, 0.1, -0.2, 0.4], &[0.05, 0.2, 0.1, -0.3], &n_exp, &(jz * c(0.7)), &mut out);
        assert!(out.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn zero_fields_reduce_to_heisenberg_motion() {
        let psi = spinor(&[0.3, -0.2, 0.9], &[0.1, 0.5, -0.4]);
        let hm = random_hermitian(&[0.1, 0.2, -0.3, 0.4, 0.5, 0.6, -0.7, 0.8, 0.9], 3);
        let n_exp = n_from_rho(&density(&psi));
        let mut out = vec![0.0; 9];
        eom_rhs(&[0.0; 3], &[0.0; 3], &n_exp, &hm, &mut out);
        for (k, idx) in n_basis(3).iter().enumerate() {
            let nop = build_n(idx.a + 1, idx.b + 1, idx.sign, 3).unwrap();
            let expect = (psi.dotc(&(commutator(&nop, &hm) * &psi)) * (-I)).re;
            assert!((out[k] - expect).abs() < 1e-14);
        }
    }

    fn sample() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (2usize..=4).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(-1.0f64..1.0, 2 * n),
                proptest::collection::vec(-1.0f64..1.0, n),
                proptest::collection::vec(-1.0f64..1.0, n),
                proptest::collection::vec(-1.0f64..1.0, n * n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn eom_matches_commutator_oracle((n, amps, nu, gamma, hv) in sample()) {
            let psi = spinor(&amps[..n], &amps[n..]);
            prop_assume!(psi.norm() > 0.5);
            let hm = random_hermitian(&hv, n);
            let hj = build_hj(&nu, &gamma, &psi);
            prop_assert!(hermitian_deviation(&hj) < 1e-12);
            let total = &hj + &hm;
            let n_exp = n_from_rho(&density(&psi));
            let mut out = vec![0.0; n * n];
            eom_rhs(&nu, &gamma, &n_exp, &hm, &mut out);
            for (k, idx) in n_basis(n).iter().enumerate() {
                let nop = build_n(idx.a + 1, idx.b + 1, idx.sign, n).unwrap();
                let expect = (psi.dotc(&(commutator(&nop, &total) * &psi)) * (-I)).re;
                prop_assert!((out[k] - expect).abs() < 1e-10, "{} vs {}", out[k], expect);
            }
        }

        #[test]
        fn hj_matches_projector_form((n, amps, nu, gamma, _hv) in sample()) {
            // Ĥ_J = -Σγ_a P_a + i Σ_{a,b} ν_a (P_a ρ P_b - P_b ρ P_a)
            let psi = spinor(&amps[..n], &amps[n..]);
            prop_assume!(psi.norm() > 0.5);
            let rho = density(&psi);
            let mut expect = Operator::zeros(n, n);
            for a in 0..n {
                let mut pa = Operator::zeros(n, n);
                pa[(a, a)] = c(1.0);
                expect -= &pa * c(gamma[a]);
                expect += (&pa * &rho - &rho * &pa) * (I * nu[a]);
            }
            let hj = build_hj(&nu, &gamma, &psi);
            for (x, y) in hj.iter().zip(expect.iter()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}

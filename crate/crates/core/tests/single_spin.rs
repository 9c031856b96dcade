use ifedyn_core::ode::Rk4;
use ifedyn_core::pulse::units;
use ifedyn_core::qm::C64;
use ifedyn_core::single_spin::*;

fn s_width() -> f64 {
    SingleSpinSpec::reference_pulse().unwrap().width
}

fn spec(b_tesla: f64, lambda_mev: f64) -> SingleSpinSpec {
    SingleSpinSpec::new(b_tesla, lambda_mev, SingleSpinSpec::reference_pulse().unwrap())
}

/// Solves the nested amplitude integrals as one ODE system with RK4 on the
/// analytic carrier at half the grid step and compares `𝒜 - 1` at the grid end.
#[test]
fn raman_amplitude_matches_ode_requadrature() {
    let s = spec(7.0, 20.0);
    let computed = compute_single_spin(&s).unwrap();
    let levels = s.levels().unwrap();
    let b = s.zeeman();
    let grid = computed.raman.grid;
    let pulse = s.pulse;
    let nl = levels.len();
    let k = (pulse.amplitude / pulse.omega0).powi(2);
    // y = [Re c_j, Im c_j]_j, then Re/Im of (𝒜 - 1) up and down
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let tau = t - grid.t_start;
        let f = pulse.carrier_field(t);
        let mut v = [C64::new(0.0, 0.0); 2];
        for (j, l) in levels.iter().enumerate() {
            let cj = C64::new(y[2 * j], y[2 * j + 1]);
            let d = C64::from_polar(f, (l.energy + b / 2.0) * tau);
            dy[2 * j] = d.re;
            dy[2 * j + 1] = d.im;
            let g = C64::from_polar(f, -l.energy * tau) * cj;
            v[0] += g * l.weight_up;
            v[1] += g * l.weight_down;
        }
        let (sn, cs) = (b * tau / 2.0).sin_cos();
        let mi = C64::new(0.0, -sn);
        let up = (v[0] * cs + v[1] * mi) * k;
        let down = (v[1] * cs + v[0] * mi) * k;
        let o = 2 * nl;
        dy[o] = up.re;
        dy[o + 1] = up.im;
        dy[o + 2] = down.re;
        dy[o + 3] = down.im;
    };
    let mut rhs = rhs;
    let mut y = vec![0.0; 2 * nl + 4];
    let mut rk = Rk4::new(y.len());
    let h = grid.dt / 2.0;
    for i in 0..2 * (grid.count - 1) {
        rk.step(&mut rhs, grid.t_start + i as f64 * h, h, &mut y);
    }
    let last = grid.count - 1;
    let a = computed.raman.a(last);
    let o = 2 * nl;
    let ode = [C64::new(y[o], y[o + 1]), C64::new(y[o + 2], y[o + 3])];
    for s in 0..2 {
        let corr = a[s] - C64::new(1.0, 0.0);
        let rel = (corr - ode[s]).norm() / ode[s].norm();
        assert!(rel < 1e-6, "component {s}: relative difference {rel:e}");
    }
}

#[test]
fn deviation_vanishes_continuously_as_spin_orbit_coupling_is_removed() {
    let tau_p = units::fs_to_au(TAU_P_FS);
    let mut prev = f64::INFINITY;
    for lambda in [20.0, 2.0, 0.2, 0.0] {
        let mut s = spec(7.0, lambda);
        s.t_end = tau_p + units::fs_to_au(10.0);
        let run = simulate(&s).unwrap();
        let sp = run.trajectory.s_at(tau_p);
        let dev = ((sp[0] - 0.5).powi(2) + sp[1].powi(2) + sp[2].powi(2)).sqrt();
        assert!(dev < prev, "λ = {lambda} meV: {dev} not below {prev}");
        prev = dev;
        if lambda == 0.0 {
            assert!(dev < 1e-8, "{dev}");
        }
    }
}

#[test]
fn spin_length_is_conserved_and_fields_vanish_after_the_pulse() {
    let run = simulate(&spec(20.0, 20.0)).unwrap();
    let traj = &run.trajectory;
    let after = traj.index_at_or_before(units::fs_to_au(TAU_P_FS));
    for (i, s) in traj.s.iter().enumerate() {
        let n2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
        assert!(n2 <= 0.25 + 1e-10);
        if i >= after {
            assert!((n2 - 0.25).abs() < 1e-8);
        }
    }
    let from = traj.index_at_or_before(3.0 * s_width());
    let peak_f = traj.f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail_f = traj.f[from..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak_f > 0.0 && tail_f < 1e-3 * peak_f, "{tail_f} vs {peak_f}");
}

#[test]
fn free_precession_after_the_pulse_has_the_larmor_period() {
    for b in [7.0, 20.0] {
        let s = spec(b, 20.0);
        let run = simulate(&s).unwrap();
        let p = precession_period(&run.trajectory, units::fs_to_au(PHASE_WINDOW_START_FS)).unwrap();
        assert!((p - s.larmor_period()).abs() < 1e-6 * p, "{b} T: {p} vs {}", s.larmor_period());
    }
}

#[test]
fn oracle_deviation_shrinks_with_the_grid_step() {
    let mut s = spec(20.0, 20.0);
    s.t_end = units::fs_to_au(1500.0);
    let dev = |s: &SingleSpinSpec| {
        let run = simulate(s).unwrap();
        let schr = oracle_trajectory(&run).unwrap();
        ifedyn_core::oracle::oracle_compare(&run.trajectory.to_trajectory(), &schr, 1e-6).unwrap().max_deviation()
    };
    let coarse = dev(&s);
    let mut fine = s;
    fine.dt /= 2.0;
    let fine = dev(&fine);
    assert!(coarse < 1e-6 && fine < coarse, "{fine:e} vs {coarse:e}");
}

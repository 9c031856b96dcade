//! Execution of one configured run: model pipeline, CSV tables, report and audit.

use std::fmt::{self, Write as _};

use ifedyn_core::antiferro::{
    compute_antiferro, integrate_antiferro, integrate_full, ly, lx, mz, oracle_report, AntiferroEom, AntiferroSpec,
    Axis, MeanField, MlTrajectory,
};
use ifedyn_core::oracle::oracle_compare;
use ifedyn_core::pulse::{amplitude_from_fluence, amplitude_from_intensity, units, PulseSpec};
use ifedyn_core::single_spin::{
    compute_single_spin, default_dt, oracle_trajectory, precession_period, simulate, spin_fgh, sudden_comparison,
    SingleSpinSpec, SpinTrajectory, PHASE_WINDOW_START_FS, REFERENCE_OMEGA0_EV,
};

use crate::audit::{audit_columns, max_abs, AuditReport, Check};
use crate::config::{ConfigError, PulseEnergy, RunConfig};
use crate::output::{pick, sample_indices, CsvFile};
use crate::scenario::{antiferro_defaults as afd, single_spin_defaults as ssd, Scenario};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Model { label: String, source: ifedyn_core::Error },
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Model { label, source } => write!(f, "run [{label}]: {source}"),
            CliError::Io(e) => f.write_str(e),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub label: String,
    pub scenario: Scenario,
    pub tables: Vec<CsvFile>,
    pub report: String,
    pub audit: AuditReport,
}

/// Largest relative deviation of a Larmor period from its reference value.
pub const PERIOD_TOL: f64 = 0.02;
/// Allowed deviation of the sudden-baseline phase, degrees.
pub const PHASE_TOL_DEG: f64 = 3.0;
/// Allowed relative change of the peak fields between 0 and 20 T.
pub const FIELD_B_DEPENDENCE_TOL: f64 = 0.01;
/// Allowed relative variation of the post-pulse precession invariants.
pub const CIRCULATION_TOL: f64 = 0.01;
/// Window for the ratio of the post-pulse period to the pulse FWHM.
pub const PERIOD_RATIO_WINDOW: (f64, f64) = (1.5, 2.5);

/// Relative range of `Mz` below which it counts as constant.
const MIN_OSCILLATION: f64 = 1e-6;

/// Reference Larmor periods (ps) and their rounded ratios to the pulse FWHM.
const REFERENCE_PERIODS: [(f64, f64, f64); 2] = [(7.0, 5.06, 43.0), (20.0, 1.77, 15.0)];
/// Reference sudden-baseline phase offsets, degrees.
const REFERENCE_PHASES: [(f64, f64); 2] = [(7.0, 14.0), (20.0, 47.0)];

struct Text(String);

impl Text {
    fn line(&mut self, s: impl AsRef<str>) {
        self.0.push_str(s.as_ref());
        self.0.push('\n');
    }

    fn param(&mut self, key: &str, value: impl fmt::Display) {
        let _ = writeln!(self.0, "  {key} = {value}");
    }

    fn verdict(&mut self, pass: bool, what: impl AsRef<str>) {
        let _ = writeln!(self.0, "  {} {}", if pass { "PASS" } else { "FAIL" }, what.as_ref());
    }
}

fn b_tag(b: f64) -> String {
    format!("B{b}T")
}

fn envelope_normalized(pulse: &PulseSpec, t: f64) -> f64 {
    let x = (t - pulse.center) / pulse.width;
    (-x * x).exp()
}

fn ha_to_mev(x: f64) -> f64 {
    units::hartree_to_ev(x) * 1e3
}

fn relative_range(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (hi - lo) / mean.abs().max(f64::MIN_POSITIVE)
}

/// Period of the dominant oscillation of `y`, from the spacing of its
/// crossings of the mean (linearly interpolated). Needs at least three crossings.
pub fn dominant_period(t: &[f64], y: &[f64]) -> Option<f64> {
    if y.len() < 3 {
        return None;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut crossings = Vec::new();
    for k in 1..y.len() {
        let (a, b) = (y[k - 1] - mean, y[k] - mean);
        if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
            crossings.push(t[k - 1] + (t[k] - t[k - 1]) * a / (a - b));
        }
    }
    if crossings.len() < 3 {
        return None;
    }
    Some(2.0 * (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

fn pulse_from(run: &RunConfig, omega0_ev: f64, width_fs: f64, default: PulseEnergy, text: &mut Text) -> Result<PulseSpec, CliError> {
    let omega0_ev = run.f64_or("omega0_ev", omega0_ev)?;
    let width_fs = run.f64_or("width_fs", width_fs)?;
    let center_fs = run.f64_or("center_fs", 0.0)?;
    let (energy, source) = match run.pulse_energy()? {
        Some(e) => (e, "configured"),
        None => (default, "scenario default"),
    };
    let model = |e| CliError::Model { label: run.label.clone(), source: e };
    let amplitude = match energy {
        PulseEnergy::FluenceMjCm2(f) => {
            text.param("fluence_mj_cm2", format!("{f} ({source})"));
            amplitude_from_fluence(f, width_fs).map_err(model)?
        }
        PulseEnergy::IntensityWCm2(i) => {
            text.param("intensity_w_cm2", format!("{i:e} ({source})"));
            amplitude_from_intensity(i).map_err(model)?
        }
    };
    text.param("amplitude_au", format!("{amplitude:.6e}"));
    text.param("omega0_ev", omega0_ev);
    text.param("width_fs", width_fs);
    text.param("center_fs", center_fs);
    PulseSpec::new(amplitude, units::fs_to_au(width_fs), units::ev_to_hartree(omega0_ev), units::fs_to_au(center_fs))
        .map_err(model)
}

pub fn execute(run: &RunConfig, sample_fs: f64) -> Result<RunOutput, CliError> {
    let sample_fs = run.f64_or("sample_fs", sample_fs)?;
    if !(sample_fs > 0.0) {
        return Err(ConfigError { line: run.entries["sample_fs"].line, message: "sample_fs must be positive".into() }.into());
    }
    let mut text = Text(String::new());
    text.line(format!("run [{}] scenario {}: {}", run.label, run.scenario.name(), run.scenario.description()));
    text.line("parameters");
    text.param("sample_fs", sample_fs);
    let (tables, audit) = match run.scenario {
        Scenario::Fig5(case) => run_antiferro(run, case.parameters(), sample_fs, &mut text).map_err(|e| e.relabel(run))?,
        s => run_single_spin(run, s, sample_fs, &mut text).map_err(|e| e.relabel(run))?,
    };
    text.line("audit");
    for l in audit.render().lines() {
        text.line(format!("  {l}"));
    }
    text.line(format!("audit {}", if audit.passed() { "PASS" } else { "FAIL" }));
    Ok(RunOutput { label: run.label.clone(), scenario: run.scenario, tables, report: text.0, audit })
}

enum Failure {
    Cli(CliError),
    Core(ifedyn_core::Error),
}

impl Failure {
    fn relabel(self, run: &RunConfig) -> CliError {
        match self {
            Failure::Cli(e) => e,
            Failure::Core(source) => CliError::Model { label: run.label.clone(), source },
        }
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Cli(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Cli(e.into())
    }
}

impl From<ifedyn_core::Error> for Failure {
    fn from(e: ifedyn_core::Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(Vec<CsvFile>, AuditReport), Failure>;

fn spin_columns(traj: &SpinTrajectory) -> (Vec<String>, Vec<Vec<f64>>) {
    let names = ["t_fs", "Sx", "Sy", "Sz"].map(String::from).to_vec();
    let cols = vec![
        traj.t.iter().map(|&t| units::au_to_fs(t)).collect(),
        traj.s.iter().map(|s| s[0]).collect(),
        traj.s.iter().map(|s| s[1]).collect(),
        traj.s.iter().map(|s| s[2]).collect(),
    ];
    (names, cols)
}

/// Invariants of one spin trajectory; `free_from` is where the light fields vanish.
fn audit_spin(traj: &SpinTrajectory, free_from: f64, tag: &str) -> Result<AuditReport, Failure> {
    let (names, cols) = spin_columns(traj);
    let mut report = audit_columns(&names, &cols).map_err(|e| Failure::Cli(CliError::Io(e)))?;
    for c in &mut report.checks {
        c.name = format!("{}_{tag}", c.name);
    }
    let start = traj.index_at_or_before(free_from);
    let n2 = |s: &[f64; 3]| s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    let base = n2(&traj.s[start]);
    let drift = traj.s[start..].iter().fold(0.0f64, |m, s| m.max((n2(s) - base).abs()));
    report.push(Check::below(format!("post_pulse_spin_length_drift_{tag}"), drift, 1e-8));
    Ok(report)
}

fn fg_peaks(spec: &SingleSpinSpec) -> Result<(f64, f64), ifedyn_core::Error> {
    let fgh = spin_fgh(&compute_single_spin(spec)?.fields)?;
    Ok((max_abs(&fgh.f), max_abs(&fgh.g)))
}

fn run_single_spin(run: &RunConfig, scenario: Scenario, sample_fs: f64, text: &mut Text) -> Outcome {
    let lambda_mev = run.f64_or("lambda_mev", ssd::LAMBDA_MEV)?;
    let fields = run.list_or("b_tesla", scenario.default_fields())?;
    if let Some(b) = fields.iter().find(|b| **b < 0.0) {
        return Err(ConfigError { line: run.entries["b_tesla"].line, message: format!("b_tesla: {b} is negative") }.into());
    }
    text.param("b_tesla", fields.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(", "));
    text.param("lambda_mev", lambda_mev);
    let pulse = pulse_from(run, REFERENCE_OMEGA0_EV, ssd::WIDTH_FS, PulseEnergy::FluenceMjCm2(ssd::FLUENCE_MJ_CM2), text)?;
    let mut base = SingleSpinSpec::new(0.0, lambda_mev, pulse);
    base.dt = run.f64_or("dt_au", default_dt(&pulse))?;
    base.half_widths = run.f64_or("half_widths", base.half_widths)?;
    let t_end_fs = run.f64_or("t_end_fs", units::au_to_fs(pulse.center) + ssd::T_END_FS)?;
    base.t_end = units::fs_to_au(t_end_fs);
    base.post_step = run.f64_or("post_step_au", ssd::POST_STEP_AU)?;
    let oracle = run.bool_or("oracle", true)?;
    let oracle_tol = run.f64_or("oracle_tol", ssd::ORACLE_TOL)?;
    text.param("dt_au", base.dt);
    text.param("half_widths", base.half_widths);
    text.param("t_end_fs", t_end_fs);
    text.param("post_step_au", base.post_step);
    text.param("oracle", if oracle { format!("on (tolerance {oracle_tol:e})") } else { "off".into() });

    let mut tables = Vec::new();
    let mut audit = AuditReport::default();
    let mut results = Text(String::new());
    let mut verdicts = Text(String::new());
    let mut peaks = Vec::new();
    for &b_tesla in &fields {
        let spec = base.with_field(units::tesla_to_au(b_tesla));
        let tag = b_tag(b_tesla);
        let free_from = spec.grid()?.t_end();
        if scenario == Scenario::Sudden {
            let cmp = sudden_comparison(&spec)?;
            audit.extend(audit_spin(&cmp.full, free_from, &tag)?);
            audit.extend(audit_spin(&cmp.sudden, free_from, &format!("{tag}_sudden"))?);
            results.param(&format!("phase_offset_deg_{tag}"), format!("{:.4}", cmp.degrees));
            if let Some(&(_, reference)) = REFERENCE_PHASES.iter().find(|r| r.0 == b_tesla) {
                let pass = (cmp.degrees.abs() - reference).abs() <= PHASE_TOL_DEG;
                verdicts.verdict(
                    pass,
                    format!("|phase offset| at {b_tesla} T = {:.2} deg, reference {reference} +- {PHASE_TOL_DEG}", cmp.degrees.abs()),
                );
            }
            let t0 = cmp.full.t[0];
            let t1 = cmp.full.t[cmp.full.len() - 1];
            let step = units::fs_to_au(sample_fs);
            let n = ((t1 - t0) / step).floor() as usize;
            let mut times: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * step).collect();
            if *times.last().expect("non-empty") < t1 {
                times.push(t1);
            }
            let full: Vec<[f64; 3]> = times.iter().map(|&t| cmp.full.s_at(t)).collect();
            let sudden: Vec<[f64; 3]> = times.iter().map(|&t| cmp.sudden.s_at(t)).collect();
            let comp = |v: &[[f64; 3]], k: usize| v.iter().map(|s| s[k]).collect::<Vec<_>>();
            tables.push(
                CsvFile::new(format!("{}_{tag}.csv", run.label))
                    .column("t_fs", "fs", times.iter().map(|&t| units::au_to_fs(t)).collect())
                    .column("Sx", "hbar", comp(&full, 0))
                    .column("Sy", "hbar", comp(&full, 1))
                    .column("Sz", "hbar", comp(&full, 2))
                    .column("Sx_sudden", "hbar", comp(&sudden, 0))
                    .column("Sy_sudden", "hbar", comp(&sudden, 1))
                    .column("Sz_sudden", "hbar", comp(&sudden, 2))
                    .column("envelope", "1", times.iter().map(|&t| envelope_normalized(&spec.pulse, t)).collect()),
            );
            if oracle {
                let sim = simulate(&spec)?;
                let rep = oracle_compare(&sim.trajectory.to_trajectory(), &oracle_trajectory(&sim)?, oracle_tol)?;
                audit.push(Check::below(format!("oracle_max_deviation_{tag}"), rep.max_deviation(), oracle_tol));
            }
            continue;
        }

        let sim = simulate(&spec)?;
        let traj = &sim.trajectory;
        audit.extend(audit_spin(traj, free_from, &tag)?);
        if oracle {
            let rep = oracle_compare(&traj.to_trajectory(), &oracle_trajectory(&sim)?, oracle_tol)?;
            audit.push(Check::below(format!("oracle_max_deviation_{tag}"), rep.max_deviation(), oracle_tol));
        }
        let t_fs: Vec<f64> = traj.t.iter().map(|&t| units::au_to_fs(t)).collect();
        let idx = sample_indices(&t_fs, sample_fs);
        let comp = |k: usize| idx.iter().map(|&i| traj.s[i][k]).collect::<Vec<_>>();
        let mev = |v: &[f64]| idx.iter().map(|&i| ha_to_mev(v[i])).collect::<Vec<_>>();
        tables.push(
            CsvFile::new(format!("{}_{tag}.csv", run.label))
                .column("t_fs", "fs", pick(&t_fs, &idx))
                .column("Sx", "hbar", comp(0))
                .column("Sy", "hbar", comp(1))
                .column("Sz", "hbar", comp(2))
                .column("f_mev", "meV", mev(&traj.f))
                .column("g_mev", "meV", mev(&traj.g))
                .column("h_mev", "meV", mev(&traj.h))
                .column("envelope", "1", idx.iter().map(|&i| envelope_normalized(&spec.pulse, traj.t[i])).collect()),
        );
        let fgh = spin_fgh(&sim.computed.fields)?;
        let (pf, pg) = (max_abs(&fgh.f), max_abs(&fgh.g));
        peaks.push((b_tesla, pf, pg));
        let end = traj.s[traj.len() - 1];
        results.param(&format!("final_S_{tag}"), format!("({:.6e}, {:.6e}, {:.6e})", end[0], end[1], end[2]));
        results.param(&format!("peak_f_mev_{tag}"), format!("{:.6e}", ha_to_mev(pf)));
        results.param(&format!("peak_g_mev_{tag}"), format!("{:.6e}", ha_to_mev(pg)));

        if scenario == Scenario::Table1 && b_tesla > 0.0 {
            let period = precession_period(traj, spec.pulse.center + units::fs_to_au(PHASE_WINDOW_START_FS))?;
            let ps = units::au_to_fs(period) * 1e-3;
            let ratio = period / spec.pulse.fwhm();
            results.param(&format!("larmor_period_ps_{tag}"), format!("{ps:.4}"));
            results.param(&format!("larmor_period_expected_ps_{tag}"), format!("{:.4}", units::au_to_fs(spec.larmor_period()) * 1e-3));
            results.param(&format!("period_to_fwhm_ratio_{tag}"), format!("{ratio:.3}"));
            if let Some(&(_, ref_ps, ref_ratio)) = REFERENCE_PERIODS.iter().find(|r| r.0 == b_tesla) {
                let pass = ((ps - ref_ps) / ref_ps).abs() <= PERIOD_TOL;
                verdicts.verdict(pass, format!("T_L at {b_tesla} T = {ps:.4} ps, reference {ref_ps} ps within {}%", PERIOD_TOL * 100.0));
                verdicts.verdict(ratio.round() == ref_ratio, format!("T_L / FWHM at {b_tesla} T = {ratio:.2}, reference {ref_ratio}"));
            }
        }
    }

    if scenario == Scenario::Fig4 {
        let zeeman = |b: f64| base.with_field(units::tesla_to_au(b)).zeeman();
        let (lo, hi) = (zeeman(7.0) / 10.0, zeeman(20.0) * 10.0);
        for &(b, pf, pg) in &peaks {
            let pass = (lo..=hi).contains(&pf) && (lo..=hi).contains(&pg);
            verdicts.verdict(
                pass,
                format!(
                    "peak |f|, |g| at {b} T = {:.3e}, {:.3e} meV within [{:.3e}, {:.3e}] meV",
                    ha_to_mev(pf),
                    ha_to_mev(pg),
                    ha_to_mev(lo),
                    ha_to_mev(hi)
                ),
            );
        }
        let (f0, g0) = fg_peaks(&base.with_field(0.0))?;
        let (f20, g20) = fg_peaks(&base.with_field(units::tesla_to_au(20.0)))?;
        let (df, dg) = (((f20 - f0) / f0).abs(), ((g20 - g0) / g0).abs());
        results.param("peak_f_change_0_to_20T", format!("{df:.4e}"));
        results.param("peak_g_change_0_to_20T", format!("{dg:.4e}"));
        verdicts.verdict(
            df < FIELD_B_DEPENDENCE_TOL && dg < FIELD_B_DEPENDENCE_TOL,
            format!(
                "peak field change between 0 and 20 T: f {:.2}%, g {:.2}% (limit {}%)",
                df * 100.0,
                dg * 100.0,
                FIELD_B_DEPENDENCE_TOL * 100.0
            ),
        );
    }

    text.line("results");
    text.0.push_str(&results.0);
    if !verdicts.0.is_empty() {
        text.line("verdicts");
        text.0.push_str(&verdicts.0);
    }
    Ok((tables, audit))
}

fn run_antiferro(run: &RunConfig, defaults: (f64, Axis, f64), sample_fs: f64, text: &mut Text) -> Outcome {
    let jex = run.f64_or("jex_mev", defaults.0)?;
    let default_axis = if defaults.1 == Axis::Z { "z" } else { "x" };
    let axis = if run.word_or("axis", &["z", "x"], default_axis)? == "z" { Axis::Z } else { Axis::X };
    let delta = run.f64_or("delta_mev", defaults.2)?;
    let mode = if run.word_or("mean_field", &["live", "frozen"], "live")? == "live" { MeanField::Live } else { MeanField::Frozen };
    let full_check = run.bool_or("full_check", true)?;
    let oracle = run.bool_or("oracle", true)?;
    let oracle_tol = run.f64_or("oracle_tol", afd::ORACLE_TOL)?;
    text.param("jex_mev", jex);
    text.param("axis", if axis == Axis::Z { "z" } else { "x" });
    text.param("delta_mev", delta);
    let pulse = pulse_from(run, afd::OMEGA0_EV, afd::WIDTH_FS, PulseEnergy::IntensityWCm2(afd::INTENSITY_W_CM2), text)?;
    let mut spec = AntiferroSpec::new(jex, axis, delta, pulse)?;
    if let Some(d) = run.opt_f64("delta_e_mev")? {
        spec.delta_e = units::mev_to_hartree(d);
    }
    spec.eps_ex = units::ev_to_hartree(run.f64_or("eps_ex_ev", afd::EPS_EX_EV)?);
    spec.d0 = run.f64_or("d0", spec.d0)?;
    spec.dt = run.f64_or("dt_au", spec.dt)?;
    spec.half_widths = run.f64_or("half_widths", spec.half_widths)?;
    let t_end_fs = run.f64_or("t_end_fs", units::au_to_fs(pulse.center) + afd::T_END_FS)?;
    spec.t_end = units::fs_to_au(t_end_fs);
    spec.post_step = run.f64_or("post_step_au", afd::POST_STEP_AU)?;
    spec.validate()?;
    text.param("delta_e_mev", ha_to_mev(spec.delta_e));
    text.param("eps_ex_ev", units::hartree_to_ev(spec.eps_ex));
    text.param("d0", spec.d0);
    text.param("dt_au", spec.dt);
    text.param("half_widths", spec.half_widths);
    text.param("t_end_fs", t_end_fs);
    text.param("post_step_au", spec.post_step);
    text.param("mean_field", if mode == MeanField::Live { "live" } else { "frozen" });
    text.param("full_check", if full_check { "on" } else { "off" });
    text.param("oracle", if oracle { format!("on (tolerance {oracle_tol:e}, frozen mean field)") } else { "off".into() });

    let computed = compute_antiferro(&spec)?;
    let traj = integrate_antiferro(&spec, &computed, mode)?;
    let mut audit = AuditReport::default();
    let mut results = Text(String::new());
    results.param("ground_state_jx", format!("{:.9}", computed.ground.jx1));
    results.param("ground_state_iterations", computed.ground.iterations);
    results.param("sublattice_field_mismatch", format!("{:.3e}", computed.sublattice_mismatch));
    let (pn, pg) = computed.fields.peak();
    results.param("peak_nu_mev", format!("{:.6e}", ha_to_mev(pn)));
    results.param("peak_gamma_mev", format!("{:.6e}", ha_to_mev(pg)));
    audit.push(Check::at_most("excited_manifold_leakage", computed.leakage, 0.0));

    if oracle {
        let frozen;
        let reference: &MlTrajectory = if mode == MeanField::Frozen {
            &traj
        } else {
            frozen = integrate_antiferro(&spec, &computed, MeanField::Frozen)?;
            &frozen
        };
        let rep = oracle_report(&computed, reference, oracle_tol)?;
        audit.push(Check::below("oracle_max_deviation", rep.max_deviation(), oracle_tol));
    }

    let free_from = computed.fields.grid.t_end();
    let i0 = traj.index_at_or_before(free_from);
    let eom = AntiferroEom::new(&spec, &computed.ground, mode);
    let e0 = eom.energy(&traj.x[i0]);
    let drift = traj.x[i0..].iter().fold(0.0f64, |m, x| m.max((eom.energy(x) - e0).abs()));
    audit.push(Check::below("post_pulse_energy_drift_relative", drift / e0.abs().max(f64::MIN_POSITIVE), 1e-8));

    let post_t = &traj.t[i0..];
    let perp: Vec<f64> = traj.x[i0..].iter().map(|x| lx(x).hypot(ly(x))).collect();
    let mzs: Vec<f64> = traj.x[i0..].iter().map(|x| mz(x)).collect();
    let (perp_var, mz_var) = (relative_range(&perp), relative_range(&mzs));
    let last = &traj.x[traj.len() - 1];
    results.param("final_L", format!("({:.6e}, {:.6e}, 0)", lx(last), ly(last)));
    results.param("final_Mz", format!("{:.6e}", mz(last)));
    results.param("post_pulse_L_perp_relative_range", format!("{perp_var:.3e}"));
    results.param("post_pulse_Mz_relative_range", format!("{mz_var:.3e}"));
    let mut verdicts = Text(String::new());
    if jex > 0.0 && axis == Axis::Z && delta.abs() < 0.1 {
        verdicts.verdict(
            perp_var < CIRCULATION_TOL && mz_var < CIRCULATION_TOL,
            format!("post-pulse |Lx + iLy| and Mz constant: {perp_var:.2e}, {mz_var:.2e} (limit {CIRCULATION_TOL})"),
        );
    }
    let oscillating = mz_var > MIN_OSCILLATION;
    match dominant_period(post_t, &mzs).filter(|_| oscillating) {
        Some(p) => {
            let ratio = p / spec.pulse.fwhm();
            results.param("post_pulse_Mz_period_fs", format!("{:.2}", units::au_to_fs(p)));
            results.param("period_to_fwhm_ratio", format!("{ratio:.3}"));
            if jex > 0.0 && axis == Axis::X && delta.abs() >= 1.0 {
                let (lo, hi) = PERIOD_RATIO_WINDOW;
                verdicts.verdict((lo..=hi).contains(&ratio), format!("post-pulse period / FWHM = {ratio:.3}, window [{lo}, {hi}]"));
            }
        }
        None => results.param("post_pulse_Mz_period_fs", "none (Mz constant or fewer than three mean crossings)"),
    }

    let t_fs: Vec<f64> = traj.t.iter().map(|&t| units::au_to_fs(t)).collect();
    let idx = sample_indices(&t_fs, sample_fs);
    let vectors: Vec<[f64; 6]> = if full_check {
        let full = integrate_full(&spec, &computed, mode)?;
        let mut excluded = 0.0f64;
        let (mut msum, mut dev) = (0.0f64, 0.0f64);
        for i in 0..full.len() {
            excluded = full.excluded(i).iter().fold(excluded, |m, v| m.max(v.abs()));
            msum = msum.max((full.m_sum(i) - 2.0).abs());
            let x = full.ml_state(i);
            dev = (0..15).fold(dev, |m, k| m.max((x[k] - traj.x[i][k]).abs()));
        }
        audit.push(Check::below("full_run_excluded_variables", excluded, 1e-10));
        audit.push(Check::below("full_run_population_sum_residual", msum, 1e-10));
        audit.push(Check::below("full_run_vs_reduced_deviation", dev, 1e-8));
        (0..full.len()).map(|i| full.vectors(i)).collect()
    } else {
        (0..traj.len()).map(|i| traj.vectors(i)).collect()
    };
    let comp = |k: usize| idx.iter().map(|&i| vectors[i][k]).collect::<Vec<_>>();
    let all = |k: usize| vectors.iter().map(|v| v[k]).collect::<Vec<_>>();
    let names = ["t_fs", "Mx", "My", "Lz"].map(String::from).to_vec();
    audit.extend(audit_columns(&names, &[t_fs.clone(), all(0), all(1), all(5)]).map_err(|e| Failure::Cli(CliError::Io(e)))?);
    let table = CsvFile::new(format!("{}.csv", run.label))
        .column("t_fs", "fs", pick(&t_fs, &idx))
        .column("Lx", "hbar", comp(3))
        .column("Ly", "hbar", comp(4))
        .column("Lz", "hbar", comp(5))
        .column("Mx", "hbar", comp(0))
        .column("My", "hbar", comp(1))
        .column("Mz", "hbar", comp(2))
        .column("envelope", "1", idx.iter().map(|&i| envelope_normalized(&spec.pulse, traj.t[i])).collect());

    text.line("results");
    text.0.push_str(&results.0);
    if !verdicts.0.is_empty() {
        text.line("verdicts");
        text.0.push_str(&verdicts.0);
    }
    Ok((vec![table], audit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_of_a_sampled_sine() {
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|&x| 0.3 + (2.0 * std::f64::consts::PI * x / 1.7 + 0.4).sin()).collect();
        assert!((dominant_period(&t, &y).unwrap() - 1.7).abs() < 1e-3);
        assert_eq!(dominant_period(&t[..10], &y[..10]), None);
    }

    #[test]
    fn relative_range_of_constant_and_varying_signals() {
        assert_eq!(relative_range(&[2.0, 2.0]), 0.0);
        assert!((relative_range(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}

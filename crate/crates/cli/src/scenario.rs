//! Named scenarios and their default parameters.

use ifedyn_core::antiferro::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig5Case {
    A,
    C,
    E,
    G,
    I,
}

impl Fig5Case {
    /// Exchange constant (meV), anisotropy axis and crystal-field constant (meV).
    pub fn parameters(self) -> (f64, Axis, f64) {
        match self {
            Fig5Case::A => (3.0, Axis::Z, 2.0),
            Fig5Case::C => (3.0, Axis::Z, 0.02),
            Fig5Case::E => (3.0, Axis::X, -0.02),
            Fig5Case::G => (3.0, Axis::X, -2.0),
            Fig5Case::I => (0.0, Axis::X, -2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Fig3,
    Fig4,
    Table1,
    Sudden,
    Fig5(Fig5Case),
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Fig3,
        Scenario::Fig4,
        Scenario::Table1,
        Scenario::Sudden,
        Scenario::Fig5(Fig5Case::A),
        Scenario::Fig5(Fig5Case::C),
        Scenario::Fig5(Fig5Case::E),
        Scenario::Fig5(Fig5Case::G),
        Scenario::Fig5(Fig5Case::I),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Table1 => "table1",
            Scenario::Sudden => "sudden",
            Scenario::Fig5(Fig5Case::A) => "fig5a",
            Scenario::Fig5(Fig5Case::C) => "fig5c",
            Scenario::Fig5(Fig5Case::E) => "fig5e",
            Scenario::Fig5(Fig5Case::G) => "fig5g",
            Scenario::Fig5(Fig5Case::I) => "fig5i",
        }
    }

    /// Each antiferromagnet scenario also answers to the name of its paired panel.
    pub fn alias(self) -> Option<&'static str> {
        match self {
            Scenario::Fig5(Fig5Case::A) => Some("fig5b"),
            Scenario::Fig5(Fig5Case::C) => Some("fig5d"),
            Scenario::Fig5(Fig5Case::E) => Some("fig5f"),
            Scenario::Fig5(Fig5Case::G) => Some("fig5h"),
            Scenario::Fig5(Fig5Case::I) => Some("fig5j"),
            _ => None,
        }
    }

    pub fn from_name(name: &str) -> Option<Scenario> {
        let name = name.trim().to_ascii_lowercase();
        Scenario::ALL.into_iter().find(|s| s.name() == name || s.alias() == Some(name.as_str()))
    }

    pub fn is_antiferro(self) -> bool {
        matches!(self, Scenario::Fig5(_))
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::Fig3 => "single spin: S(t) at B = 0, 7, 20 T",
            Scenario::Fig4 => "single spin: S(t) and light-induced fields f, g, h at B = 7, 20 T",
            Scenario::Table1 => "single spin: Larmor periods and their ratio to the pulse FWHM",
            Scenario::Sudden => "single spin: precession phase against the sudden-switch baseline",
            Scenario::Fig5(Fig5Case::A) => "antiferromagnet: Jex = 3 meV, z axis, Delta = 2 meV",
            Scenario::Fig5(Fig5Case::C) => "antiferromagnet: Jex = 3 meV, z axis, Delta = 0.02 meV",
            Scenario::Fig5(Fig5Case::E) => "antiferromagnet: Jex = 3 meV, x axis, Delta = -0.02 meV",
            Scenario::Fig5(Fig5Case::G) => "antiferromagnet: Jex = 3 meV, x axis, Delta = -2 meV",
            Scenario::Fig5(Fig5Case::I) => "antiferromagnet: Jex = 0, x axis, Delta = -2 meV",
        }
    }

    /// Default field list, Tesla.
    pub fn default_fields(self) -> &'static [f64] {
        match self {
            Scenario::Fig3 => &[0.0, 7.0, 20.0],
            _ => &[7.0, 20.0],
        }
    }
}

/// Pulse and grid defaults of the single-spin scenarios.
pub mod single_spin_defaults {
    pub const LAMBDA_MEV: f64 = 20.0;
    pub const WIDTH_FS: f64 = 100.0;
    pub const FLUENCE_MJ_CM2: f64 = 2.0;
    pub const T_END_FS: f64 = 12_000.0;
    pub const POST_STEP_AU: f64 = 10.0;
    pub const ORACLE_TOL: f64 = 1e-6;
}

/// Pulse and grid defaults of the antiferromagnet scenarios.
pub mod antiferro_defaults {
    pub const OMEGA0_EV: f64 = 2.0;
    pub const WIDTH_FS: f64 = 100.0;
    pub const INTENSITY_W_CM2: f64 = 2e10;
    pub const EPS_EX_EV: f64 = 2.0;
    pub const T_END_FS: f64 = 3000.0;
    pub const POST_STEP_AU: f64 = 5.0;
    pub const ORACLE_TOL: f64 = 1e-5;
}

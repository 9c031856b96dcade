//! Gaussian laser pulse and laboratory-unit conversions.

use crate::{Error, Result};

/// Conversion constants between laboratory units and Hartree atomic units.
pub mod units {
    pub const HARTREE_EV: f64 = 27.211_386_245_988;
    pub const TIME_FS: f64 = 2.418_884_326_585_7e-2;
    pub const FIELD_V_PER_M: f64 = 5.142_206_747_63e11;
    /// Cycle-averaged intensity of a unit-amplitude field, W/cm².
    pub const INTENSITY_W_CM2: f64 = 3.509_45e16;
    pub const MAGNETIC_TESLA: f64 = 2.350_517_567_58e5;

    pub fn ev_to_hartree(ev: f64) -> f64 {
        ev / HARTREE_EV
    }
    pub fn hartree_to_ev(h: f64) -> f64 {
        h * HARTREE_EV
    }
    pub fn mev_to_hartree(mev: f64) -> f64 {
        mev * 1e-3 / HARTREE_EV
    }
    pub fn fs_to_au(fs: f64) -> f64 {
        fs / TIME_FS
    }
    pub fn au_to_fs(t: f64) -> f64 {
        t * TIME_FS
    }
    pub fn tesla_to_au(b: f64) -> f64 {
        b / MAGNETIC_TESLA
    }
    pub fn au_to_tesla(b: f64) -> f64 {
        b * MAGNETIC_TESLA
    }
    pub fn field_to_v_per_m(e: f64) -> f64 {
        e * FIELD_V_PER_M
    }
    pub fn v_per_m_to_field(e: f64) -> f64 {
        e / FIELD_V_PER_M
    }
}

const INV_SQRT_PI3: f64 = 0.179_587_122_125_166_56;

/// Left-circular Gaussian pulse propagating along +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Field amplitude, a.u.
    pub amplitude: f64,
    /// Envelope width `T`, a.u. time.
    pub width: f64,
    /// Carrier frequency, Hartree.
    pub omega0: f64,
    /// Envelope centre, a.u. time.
    pub center: f64,
}

impl PulseSpec {
    pub fn new(amplitude: f64, width: f64, omega0: f64, center: f64) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidParameter("pulse amplitude must be non-negative"));
        }
        if !(width > 0.0) {
            return Err(Error::InvalidParameter("pulse width must be positive"));
        }
        if !(omega0 > 0.0) {
            return Err(Error::InvalidParameter("carrier frequency must be positive"));
        }
        Ok(PulseSpec { amplitude, width, omega0, center })
    }

    /// `p(t) = exp(-(t-t0)²/T²)/√(π³)`.
    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        libm::exp(-x * x) * INV_SQRT_PI3
    }

    /// `F(t) = p(t) cos(ω0 (t - t0))`; the amplitude is applied by the Raman engines.
    pub fn carrier_field(&self, t: f64) -> f64 {
        self.envelope(t) * libm::cos(self.omega0 * (t - self.center))
    }

    /// Full width at half maximum of the intensity envelope, a.u. time.
    pub fn fwhm(&self) -> f64 {
        self.width * libm::sqrt(2.0 * core::f64::consts::LN_2)
    }

    /// Carrier period, a.u. time.
    pub fn period(&self) -> f64 {
        2.0 * core::f64::consts::PI / self.omega0
    }
}

/// `∫ p(t)² dt` for width `T`.
pub fn envelope_square_integral(width: f64) -> f64 {
    let pi = core::f64::consts::PI;
    width * libm::sqrt(pi / 2.0) / (pi * pi * pi)
}

/// Field amplitude for a peak intensity in W/cm²: `E = √(I / I_au)`.
pub fn amplitude_from_intensity(intensity_w_cm2: f64) -> Result<f64> {
    if !(intensity_w_cm2 > 0.0) {
        return Err(Error::InvalidParameter("intensity must be positive"));
    }
    Ok(libm::sqrt(intensity_w_cm2 / units::INTENSITY_W_CM2))
}

/// Field amplitude for a fluence in mJ/cm² and envelope width in fs.
///
/// The fluence is the time integral of the cycle-averaged intensity
/// `I_au E² p(t)²`, so `E = √(F / (I_au ∫p² dt))`.
pub fn amplitude_from_fluence(fluence_mj_cm2: f64, width_fs: f64) -> Result<f64> {
    if !(fluence_mj_cm2 > 0.0) || !(width_fs > 0.0) {
        return Err(Error::InvalidParameter("fluence and width must be positive"));
    }
    let fluence_j = fluence_mj_cm2 * 1e-3;
    let width_s = width_fs * 1e-15;
    Ok(libm::sqrt(fluence_j / (units::INTENSITY_W_CM2 * envelope_square_integral(width_s))))
}

//! Tactor-skin contact and the embedded capacitive force sensor.
//!
//! Contact is a linear spring per mounting site: zero force until the
//! tactor reaches the skin (`contact_offset_mm`), then force proportional
//! to indentation. Stiffness is stored in N/m and displacement travels in
//! mm; the unit conversion happens in exactly one place, `contact_force`.

use crate::rng::SimRng;

/// Identified contact stiffness of the ventral forearm, N/m.
pub const FOREARM_STIFFNESS_N_PER_M: f64 = 465.6;
/// Identified contact stiffness of the dorsal hand, N/m.
pub const HAND_STIFFNESS_N_PER_M: f64 = 8115.4;
/// Tactor face diameter, mm. Geometry is not modeled (contact is a point
/// spring); the value is hardware metadata.
pub const TACTOR_DIAMETER_MM: f64 = 15.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SkinModel {
    pub site_name: String,
    pub stiffness_n_per_m: f64,
    /// Actuator extension at first skin contact, mm.
    pub contact_offset_mm: f64,
}

impl SkinModel {
    pub fn forearm() -> Self {
        Self {
            site_name: "forearm".into(),
            stiffness_n_per_m: FOREARM_STIFFNESS_N_PER_M,
            contact_offset_mm: 0.0,
        }
    }

    pub fn hand() -> Self {
        Self {
            site_name: "hand".into(),
            stiffness_n_per_m: HAND_STIFFNESS_N_PER_M,
            contact_offset_mm: 0.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "forearm" => Some(Self::forearm()),
            "hand" => Some(Self::hand()),
            _ => None,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.stiffness_n_per_m > 0.0) {
            v.push("skin.stiffness_n_per_m must be > 0".into());
        }
        if self.contact_offset_mm < 0.0 {
            v.push("skin.contact_offset_mm must be >= 0".into());
        }
        v
    }
}

impl Default for SkinModel {
    fn default() -> Self {
        Self::forearm()
    }
}

/// Capacitive force sensor embedded in the tactor face.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceSensorParams {
    /// Saturation limit, N.
    pub range_max_n: f64,
    /// Measurement noise std dev, N. Draws are truncated at three sigma
    /// so the measurement error has a hard envelope.
    pub noise_sigma_n: f64,
    /// Output resolution, N (0 disables quantization).
    pub quantization_n: f64,
}

impl Default for ForceSensorParams {
    fn default() -> Self {
        Self {
            range_max_n: 45.0,
            noise_sigma_n: 0.05,
            quantization_n: 0.0,
        }
    }
}

impl ForceSensorParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.range_max_n > 0.0) {
            v.push("skin.force_range_n must be > 0".into());
        }
        if self.noise_sigma_n < 0.0 {
            v.push("skin.force_noise_sigma_n must be >= 0".into());
        }
        if self.quantization_n < 0.0 {
            v.push("skin.force_quantization_n must be >= 0".into());
        }
        v
    }

    /// Worst-case measurement error: the truncated 3-sigma noise envelope
    /// plus half a quantization step.
    pub fn error_bound_n(&self) -> f64 {
        3.0 * self.noise_sigma_n + 0.5 * self.quantization_n
    }
}

/// Contact force at the given actuator extension: zero before the offset,
/// then `stiffness * indentation` with stiffness converted from N/m to
/// N/mm.
pub fn contact_force(skin: &SkinModel, extension_mm: f64) -> f64 {
    let indentation_mm = (extension_mm - skin.contact_offset_mm).max(0.0);
    skin.stiffness_n_per_m / 1000.0 * indentation_mm
}

/// Sensor reading for a true force: optional truncated Gaussian noise,
/// quantization, then clamping into `[0, range_max_n]`.
pub fn force_sensor_read(
    params: &ForceSensorParams,
    true_force_n: f64,
    rng: Option<&mut SimRng>,
) -> f64 {
    let mut f = true_force_n;
    if let Some(rng) = rng {
        f += rng.normal_clipped3(params.noise_sigma_n);
    }
    if params.quantization_n > 0.0 {
        f = (f / params.quantization_n).round() * params.quantization_n;
    }
    f.clamp(0.0, params.range_max_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn no_contact_no_force() {
        assert_eq!(contact_force(&SkinModel::forearm(), 0.0), 0.0);
        let loose = SkinModel {
            contact_offset_mm: 2.0,
            ..SkinModel::forearm()
        };
        assert_eq!(contact_force(&loose, 1.5), 0.0);
        assert_eq!(contact_force(&loose, 2.0), 0.0);
    }

    #[test]
    fn forearm_force_at_ten_mm() {
        // 465.6 N/m * 0.010 m
        assert_abs_diff_eq!(
            contact_force(&SkinModel::forearm(), 10.0),
            4.656,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hand_force_at_two_mm() {
        // 8115.4 N/m * 0.002 m
        assert_abs_diff_eq!(
            contact_force(&SkinModel::hand(), 2.0),
            16.2308,
            epsilon = 1e-12
        );
    }

    #[test]
    fn contact_force_monotone_and_zero_below_offset() {
        let skin = SkinModel {
            contact_offset_mm: 1.0,
            ..SkinModel::hand()
        };
        let mut prev = -1.0;
        for k in 0..=400 {
            let x = k as f64 * 0.01;
            let f = contact_force(&skin, x);
            assert!(f >= prev);
            if x <= skin.contact_offset_mm {
                assert_eq!(f, 0.0);
            }
            prev = f;
        }
    }

    #[test]
    fn sensor_saturates_at_range() {
        let p = ForceSensorParams::default();
        assert_eq!(force_sensor_read(&p, 50.0, None), 45.0);
        assert_eq!(force_sensor_read(&p, 0.0, None), 0.0);
    }

    #[test]
    fn sensor_quantizes_to_step() {
        let p = ForceSensorParams {
            quantization_n: 0.01,
            ..ForceSensorParams::default()
        };
        assert_abs_diff_eq!(force_sensor_read(&p, 4.656, None), 4.66, epsilon = 1e-12);
    }

    #[test]
    fn sensor_reading_always_in_range_under_noise() {
        let p = ForceSensorParams {
            noise_sigma_n: 2.0,
            quantization_n: 0.05,
            ..ForceSensorParams::default()
        };
        let mut rng = SimRng::new(5);
        for k in 0..2000 {
            let truth = (k % 50) as f64;
            let m = force_sensor_read(&p, truth, Some(&mut rng));
            assert!((0.0..=p.range_max_n).contains(&m));
            // Truncated noise plus half a quantization step bounds the error
            // (unless the clamp pulled the reading back into range).
            if truth + p.error_bound_n() <= p.range_max_n {
                assert!(m <= truth + p.error_bound_n() + 1e-12);
            }
        }
    }

    #[test]
    fn composition_with_constant_gain_is_affine_in_flexion() {
        // Constant-gain mapping into a zero-offset linear skin: steady
        // force is k * gain per degree of flexion. Forearm at 0.123
        // mm/deg: 465.6/1000 * 0.123 = 0.0573 N/deg.
        use crate::mapping::{command_from_angle, MappingSpec};
        use crate::sensing::AngleDeg;
        let spec = MappingSpec::default();
        let skin = SkinModel::forearm();
        let slope = 465.6 / 1000.0 * 0.123;
        for theta in [40.0, 75.0, 105.0, 150.0, 180.0] {
            let force = contact_force(&skin, command_from_angle(&spec, AngleDeg(theta)));
            assert_abs_diff_eq!(force, slope * (180.0 - theta), epsilon = 1e-9);
        }
        assert_abs_diff_eq!(slope, 0.0573, epsilon = 5e-5);
    }

    #[test]
    fn presets_carry_identified_stiffnesses() {
        assert_eq!(SkinModel::preset("forearm").unwrap().stiffness_n_per_m, 465.6);
        assert_eq!(SkinModel::preset("hand").unwrap().stiffness_n_per_m, 8115.4);
        assert!(SkinModel::preset("knee").is_none());
    }
}

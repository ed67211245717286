//! Elevation-dependent propagation distances shared by the optical and RF bands.
//!
//! All lengths are kilometres and all angles radians. The CLI and the
//! configuration file speak degrees; conversion happens at that boundary.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryParams {
    pub earth_radius_km: f64,
    pub sat_altitude_km: f64,
    /// Effective height of the attenuating atmosphere (8-10 km for optics).
    pub atm_height_km: f64,
    /// Height of the rain layer used for the RF rain path.
    pub rain_height_km: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            earth_radius_km: 6371.0,
            sat_altitude_km: 500.0,
            atm_height_km: 10.0,
            rain_height_km: 3.0,
        }
    }
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("earth_radius_km", self.earth_radius_km),
            ("sat_altitude_km", self.sat_altitude_km),
            ("atm_height_km", self.atm_height_km),
            ("rain_height_km", self.rain_height_km),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("geometry.{name} must be positive, got {value}")));
            }
        }
        if self.atm_height_km >= self.sat_altitude_km {
            return Err(Error::Config(
                "geometry.atm_height_km must be below the satellite altitude".into(),
            ));
        }
        Ok(())
    }
}

fn check_elevation(theta: f64) -> Result<()> {
    // The horizon itself is admitted: both formulas stay finite there.
    if theta.is_finite() && (0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "elevation {:.6} deg outside [0, 90]",
            theta.to_degrees()
        )))
    }
}

/// Line-of-sight distance between the satellite and the ground receiver.
pub fn slant_range(theta: f64, geo: &GeometryParams) -> Result<f64> {
    check_elevation(theta)?;
    let re = geo.earth_radius_km;
    let orbit = re + geo.sat_altitude_km;
    let horizontal = re * theta.cos();
    Ok((orbit * orbit - horizontal * horizontal).sqrt() - re * theta.sin())
}

/// Layer path `h / (sin θ + sqrt(sin²θ + 2h/R_E))`.
///
/// Note this evaluates to roughly `h/2` at zenith rather than `h`; the
/// expression is kept as-is because the calibration is built on top of it.
fn layer_path(theta: f64, height_km: f64, earth_radius_km: f64) -> f64 {
    if height_km == 0.0 {
        return 0.0;
    }
    let s = theta.sin();
    height_km / (s + (s * s + 2.0 * height_km / earth_radius_km).sqrt())
}

/// Effective atmospheric path length.
pub fn atmospheric_path(theta: f64, geo: &GeometryParams) -> Result<f64> {
    check_elevation(theta)?;
    Ok(layer_path(theta, geo.atm_height_km, geo.earth_radius_km))
}

/// Rain path length, using the atmospheric-path form with the rain height.
pub fn rain_path(theta: f64, geo: &GeometryParams) -> Result<f64> {
    check_elevation(theta)?;
    Ok(layer_path(theta, geo.rain_height_km, geo.earth_radius_km))
}

/// Distances for one satellite position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub elevation_rad: f64,
    pub slant_range_km: f64,
    pub atm_path_km: f64,
    pub rain_path_km: f64,
}

impl LinkGeometry {
    pub fn at_elevation(theta: f64, geo: &GeometryParams) -> Result<Self> {
        Ok(Self {
            elevation_rad: theta,
            slant_range_km: slant_range(theta, geo)?,
            atm_path_km: atmospheric_path(theta, geo)?,
            rain_path_km: rain_path(theta, geo)?,
        })
    }

    pub fn at_degrees(elevation_deg: f64, geo: &GeometryParams) -> Result<Self> {
        Self::at_elevation(elevation_deg.to_radians(), geo)
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_rad.to_degrees()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo() -> GeometryParams {
        GeometryParams::default()
    }

    #[test]
    fn zenith_range_is_altitude() {
        let d = slant_range(FRAC_PI_2, &geo()).unwrap();
        assert!((d - 500.0).abs() / 500.0 < 1e-9);
    }

    #[test]
    fn horizon_and_thirty_degrees() {
        // sqrt(500^2 + 2*6371*500)
        let d0 = slant_range(0.0, &geo()).unwrap();
        assert!((d0 - 2573.1).abs() < 0.05, "{d0}");
        let d30 = slant_range(30f64.to_radians(), &geo()).unwrap();
        assert!((d30 - 909.4).abs() < 0.05, "{d30}");
    }

    #[test]
    fn atmospheric_path_values() {
        let g = geo();
        assert!((atmospheric_path(FRAC_PI_2, &g).unwrap() - 4.996).abs() < 1e-3);
        assert!((atmospheric_path(10f64.to_radians(), &g).unwrap() - 28.08).abs() < 0.01);
        let flat = GeometryParams { atm_height_km: 0.0, ..g };
        assert_eq!(atmospheric_path(0.3, &flat).unwrap(), 0.0);
    }

    #[test]
    fn rain_path_values() {
        let g = geo();
        assert!((rain_path(FRAC_PI_2, &g).unwrap() - 1.4996).abs() < 1e-4);
        assert!((rain_path(10f64.to_radians(), &g).unwrap() - 8.5717).abs() < 1e-3);
        let dry = GeometryParams { rain_height_km: 0.0, ..g };
        assert_eq!(rain_path(1.0, &dry).unwrap(), 0.0);
    }

    #[test]
    fn rejects_out_of_range_elevation() {
        assert!(matches!(slant_range(-0.1, &geo()), Err(Error::Domain(_))));
        assert!(matches!(slant_range(1.7, &geo()), Err(Error::Domain(_))));
        assert!(atmospheric_path(f64::NAN, &geo()).is_err());
    }

    #[test]
    fn validate_catches_inverted_heights() {
        let bad = GeometryParams { atm_height_km: 600.0, ..geo() };
        assert!(bad.validate().is_err());
        assert!(geo().validate().is_ok());
    }

    #[test]
    fn distances_shrink_with_elevation() {
        let g = geo();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for tenth in 1..=900 {
            let theta = (tenth as f64 / 10.0).to_radians();
            let d = slant_range(theta, &g).unwrap();
            let a = atmospheric_path(theta, &g).unwrap();
            assert!(d < prev.0 && a < prev.1);
            prev = (d, a);
        }
    }
}

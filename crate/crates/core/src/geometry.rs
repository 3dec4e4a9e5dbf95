//! Bistatic transmitter / rotation-center / receiver geometry.
//!
//! The rotor spins in the x-y plane around the z axis through the rotation
//! center O. Transmitter and receiver directions are given in spherical
//! coordinates seen from O: a zenith angle measured from the rotation axis
//! and an azimuth in the rotation plane.
//!
//! A rotating point at distance `l` from O with rotation phase `ϑ` sits at
//! in-plane azimuth `−ϑ` (the phase advances opposite to the azimuth
//! sense). With that convention its far-field bistatic range is
//!
//! ```text
//! R_P(t) ≈ R_O − A_B · l · cos(ϑ(t) + φ_B)
//! ```
//!
//! where `A_B` and `φ_B` are produced by [`bistatic_factors`].

use std::f64::consts::{PI, TAU};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveRange { name: &'static str, value: f64 },
    #[error("{name} must lie in [0, pi], got {value}")]
    ZenithOutOfRange { name: &'static str, value: f64 },
    #[error("{name} must lie in [0, 2pi), got {value}")]
    AzimuthOutOfRange { name: &'static str, value: f64 },
}

/// Placement of transmitter and receiver relative to a rotation center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistaticGeometry {
    /// Transmitter to rotation-center range, m.
    pub r_t: f64,
    /// Receiver to rotation-center range, m.
    pub r_r: f64,
    /// Transmitter zenith angle from the rotation axis, rad.
    pub zen_t: f64,
    /// Receiver zenith angle from the rotation axis, rad.
    pub zen_r: f64,
    /// Transmitter azimuth in the rotation plane, rad.
    pub az_t: f64,
    /// Receiver azimuth in the rotation plane, rad.
    pub az_r: f64,
}

/// Quantities derived from a [`BistaticGeometry`] that drive the rotating
/// point range law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistaticFactors {
    /// Modulation amplitude factor, in [0, 2].
    pub a_b: f64,
    /// Composite initial phase, rad in [0, 2pi).
    pub phi_b: f64,
    /// Total bistatic range of the rotation center, m.
    pub r_o: f64,
    /// Bistatic angle, rad in [0, pi].
    pub beta: f64,
    /// Set when the radicand of the amplitude factor came out negative
    /// (floating-point noise near forward scatter) and was clamped to zero.
    pub radicand_clamped: bool,
}

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn unit(zen: f64, az: f64) -> Vec3 {
    [zen.sin() * az.cos(), zen.sin() * az.sin(), zen.cos()]
}

fn spherical(v: Vec3) -> (f64, f64, f64) {
    let r = norm(v);
    let zen = (v[2] / r).clamp(-1.0, 1.0).acos();
    let az = v[1].atan2(v[0]).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    let az = if az >= TAU { 0.0 } else { az };
    (r, zen, az)
}

impl BistaticGeometry {
    pub fn new(r_t: f64, r_r: f64, zen_t: f64, zen_r: f64, az_t: f64, az_r: f64) -> Result<Self, GeometryError> {
        let geom = Self {
            r_t,
            r_r,
            zen_t,
            zen_r,
            az_t,
            az_r,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Both antennas in the rotation plane, transmitter at azimuth 0 and the
    /// receiver rotated by `bistatic_angle`.
    pub fn in_plane(r_t: f64, r_r: f64, bistatic_angle: f64) -> Result<Self, GeometryError> {
        Self::new(r_t, r_r, PI / 2.0, PI / 2.0, 0.0, bistatic_angle.rem_euclid(TAU))
    }

    /// Builds the geometry from antenna positions expressed relative to the
    /// rotation center.
    pub fn from_positions(tx: Vec3, rx: Vec3) -> Result<Self, GeometryError> {
        let (r_t, zen_t, az_t) = spherical(tx);
        let (r_r, zen_r, az_r) = spherical(rx);
        Self::new(r_t, r_r, zen_t, zen_r, az_t, az_r)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        for (name, value) in [("r_t", self.r_t), ("r_r", self.r_r)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GeometryError::NonPositiveRange { name, value });
            }
        }
        for (name, value) in [("zen_t", self.zen_t), ("zen_r", self.zen_r)] {
            if !(0.0..=PI).contains(&value) {
                return Err(GeometryError::ZenithOutOfRange { name, value });
            }
        }
        for (name, value) in [("az_t", self.az_t), ("az_r", self.az_r)] {
            if !(0.0..TAU).contains(&value) {
                return Err(GeometryError::AzimuthOutOfRange { name, value });
            }
        }
        Ok(())
    }

    /// Unit vector from the rotation center towards the transmitter.
    pub fn tx_direction(&self) -> Vec3 {
        unit(self.zen_t, self.az_t)
    }

    pub fn rx_direction(&self) -> Vec3 {
        unit(self.zen_r, self.az_r)
    }

    pub fn tx_position(&self) -> Vec3 {
        self.tx_direction().map(|c| c * self.r_t)
    }

    pub fn rx_position(&self) -> Vec3 {
        self.rx_direction().map(|c| c * self.r_r)
    }

    /// Angle at the target between the two lines of sight.
    pub fn bistatic_angle(&self) -> f64 {
        dot(self.tx_direction(), self.rx_direction()).clamp(-1.0, 1.0).acos()
    }

    /// The same antennas seen from a different rotation center `hub`
    /// (expressed in this geometry's frame, axes unchanged).
    pub fn relative_to(&self, hub: Vec3) -> Result<Self, GeometryError> {
        Self::from_positions(sub(self.tx_position(), hub), sub(self.rx_position(), hub))
    }

    /// Exact transmitter-to-point plus point-to-receiver path length for an
    /// arbitrary point `p` in this geometry's frame.
    pub fn two_leg_range(&self, p: Vec3) -> f64 {
        norm(sub(self.tx_position(), p)) + norm(sub(self.rx_position(), p))
    }
}

/// Evaluates the amplitude factor, composite phase, bistatic angle and
/// center range of a geometry.
pub fn bistatic_factors(geom: &BistaticGeometry) -> BistaticFactors {
    let beta = geom.bistatic_angle();
    let half = (beta / 2.0).cos();
    let axial = geom.zen_t.cos() + geom.zen_r.cos();
    let radicand = 4.0 * half * half - axial * axial;
    let radicand_clamped = radicand < 0.0;
    let a_b = radicand.max(0.0).sqrt().min(2.0);

    let d_az = geom.az_t - geom.az_r;
    let (st, sr) = (geom.zen_t.sin(), geom.zen_r.sin());
    // atan2 keeps the correct branch when the denominator turns negative
    let phi_b = (geom.az_t - (sr * d_az.sin()).atan2(st + sr * d_az.cos())).rem_euclid(TAU);

    BistaticFactors {
        a_b,
        phi_b,
        r_o: geom.r_t + geom.r_r,
        beta,
        radicand_clamped,
    }
}

/// Far-field bistatic range of a point `l` meters from the rotation center,
/// rotating at `omega` rad/s, at time `t`.
pub fn rotating_point_bistatic_range(factors: &BistaticFactors, l: f64, omega: f64, t: f64) -> f64 {
    factors.r_o - factors.a_b * l * (omega * t + factors.phi_b).cos()
}

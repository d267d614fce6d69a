//! Gaussian-beam link geometry.
//!
//! A fundamental-mode Gaussian beam with waist `w₀` leaves the transmitter
//! and is collected by a receiver aperture of radius `a` at distance `d`.
//! The receiver sees a beam of 1/e² intensity radius `w_d`; from it follow
//! the normalised aperture size `u`, the aligned collected fraction `A₀`
//! and the equivalent beam width `w_eq` that sets how fast collected power
//! falls with beam-centre displacement.

use std::f64::consts::PI;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::quadrature::{integrate_2d, Tolerance};
use crate::special::erf;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    carrier_frequency: f64,
    tx_waist: f64,
    distance: f64,
    rx_radius: f64,
}

impl LinkGeometry {
    /// Frequency in Hz, lengths in metres. Every field must be finite and
    /// strictly positive.
    pub fn new(carrier_frequency: f64, tx_waist: f64, distance: f64, rx_radius: f64) -> Result<Self> {
        Ok(LinkGeometry {
            carrier_frequency: require_positive("carrier_frequency", carrier_frequency)?,
            tx_waist: require_positive("tx_waist", tx_waist)?,
            distance: require_positive("distance", distance)?,
            rx_radius: require_positive("rx_radius", rx_radius)?,
        })
    }

    /// 130 GHz carrier, 152.4 mm waist and aperture radius, 341 m path.
    pub fn reference_link() -> Self {
        LinkGeometry {
            carrier_frequency: 130e9,
            tx_waist: 0.1524,
            distance: 341.0,
            rx_radius: 0.1524,
        }
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn tx_waist(&self) -> f64 {
        self.tx_waist
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn rx_radius(&self) -> f64 {
        self.rx_radius
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// `z_R = π w₀² / λ`.
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.tx_waist * self.tx_waist / self.wavelength()
    }
}

/// Beam quantities at the receiver plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamAtReceiver {
    /// 1/e² intensity radius `w_d`, metres.
    pub beam_radius: f64,
    pub u: f64,
    /// Collected power fraction under perfect alignment.
    pub a0: f64,
    /// Equivalent beam width, metres.
    pub w_eq: f64,
}

impl BeamAtReceiver {
    /// Derives `u`, `A₀` and `w_eq` from a beam radius and aperture radius.
    pub fn from_radii(beam_radius: f64, rx_radius: f64) -> Result<Self> {
        require_positive("beam_radius", beam_radius)?;
        require_positive("rx_radius", rx_radius)?;
        let u = compute_u(rx_radius, beam_radius);
        Ok(BeamAtReceiver {
            beam_radius,
            u,
            a0: compute_a0(u),
            w_eq: compute_w_eq(beam_radius, u),
        })
    }

    /// Misalignment gain at beam-centre displacement `r`.
    pub fn gain(&self, displacement: f64) -> f64 {
        gain_from_displacement(displacement, self)
    }
}

/// Fundamental-mode beam radius after `distance` metres:
/// `w₀ √(1 + (d/z_R)²)`. Accepts `distance = 0`.
pub fn beam_radius_at(tx_waist: f64, wavelength: f64, distance: f64) -> f64 {
    let z_r = PI * tx_waist * tx_waist / wavelength;
    tx_waist * (1.0 + (distance / z_r).powi(2)).sqrt()
}

pub fn propagate_beam(geometry: &LinkGeometry) -> BeamAtReceiver {
    let w_d = beam_radius_at(geometry.tx_waist, geometry.wavelength(), geometry.distance);
    // LinkGeometry guarantees positive radii, so this cannot fail.
    BeamAtReceiver::from_radii(w_d, geometry.rx_radius).expect("validated geometry")
}

/// `u = √π a / (√2 w_d)`.
pub fn compute_u(rx_radius: f64, beam_radius: f64) -> f64 {
    (PI / 2.0).sqrt() * rx_radius / beam_radius
}

/// `A₀ = erf²(u)`.
pub fn compute_a0(u: f64) -> f64 {
    let e = erf(u);
    e * e
}

/// `w_eq = w_d √(√π erf(u) / (2u e^(−u²)))`, with the `u → 0` limit `w_d`.
pub fn compute_w_eq(beam_radius: f64, u: f64) -> f64 {
    if u == 0.0 {
        return beam_radius;
    }
    let ratio = PI.sqrt() * erf(u) / (2.0 * u * (-u * u).exp());
    beam_radius * ratio.sqrt()
}

/// `A₀ e^(−2r²/w_eq²)`.
pub fn gain_from_displacement(displacement: f64, beam: &BeamAtReceiver) -> f64 {
    beam.a0 * (-2.0 * displacement * displacement / (beam.w_eq * beam.w_eq)).exp()
}

/// Receiver aperture used by the quadrature reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aperture {
    /// The physical disc of radius `a`.
    Circular,
    /// A square of side `√π a`, same area as the disc. `erf²(u)` is the
    /// exact aligned collected fraction for this shape.
    EqualAreaSquare,
}

/// Fraction of the transmitted Gaussian beam power landing in the aperture
/// when the beam centre is displaced by `displacement` metres, by adaptive
/// 2-D quadrature at 1e-8 relative tolerance.
pub fn collected_fraction_exact(
    displacement: f64,
    beam_radius: f64,
    rx_radius: f64,
    aperture: Aperture,
) -> Result<f64> {
    let r = require_non_negative("displacement", displacement)?;
    let w = require_positive("beam_radius", beam_radius)?;
    let a = require_positive("rx_radius", rx_radius)?;
    let peak = 2.0 / (PI * w * w);
    let scale = 2.0 / (w * w);
    let tol = Tolerance {
        relative: 1e-9,
        absolute: 1e-300,
        max_intervals: 4000,
    };
    let estimate = match aperture {
        Aperture::Circular => {
            // Polar coordinates about the aperture centre; the squared distance
            // to the beam centre is (ρ − r)² + 2ρr(1 − cos φ). φ runs over the
            // upper half and the result is doubled.
            integrate_2d(
                |rho, phi| {
                    let dist2 = (rho - r).powi(2) + 2.0 * rho * r * (1.0 - phi.cos());
                    peak * (-scale * dist2).exp() * rho
                },
                0.0,
                a,
                |_| 0.0,
                |_| PI,
                tol,
            )
            .map(|e| 2.0 * e.value)
        }
        Aperture::EqualAreaSquare => {
            let half = 0.5 * PI.sqrt() * a;
            integrate_2d(
                |x, y| peak * (-scale * ((x - r).powi(2) + y * y)).exp(),
                -half,
                half,
                |_| -half,
                |_| half,
                tol,
            )
            .map(|e| e.value)
        }
    };
    estimate.map_err(|e| match e {
        Error::Convergence(m) => Error::Convergence(format!("aperture quadrature at r = {r} m: {m}")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_link_beam_radius() {
        let beam = propagate_beam(&LinkGeometry::reference_link());
        assert!(rel(beam.beam_radius, 1.651) < 0.005, "w_d = {}", beam.beam_radius);
        // mpmath: 1.6495231294
        assert!(rel(beam.beam_radius, 1.649_523_129_4) < 1e-9);
    }

    #[test]
    fn zero_distance_gives_waist() {
        assert_eq!(beam_radius_at(0.3, 2.3e-3, 0.0), 0.3);
    }

    #[test]
    fn u_examples() {
        assert!(rel(compute_u(0.1524, 1.651), 0.115_690_535_752_2) < 1e-12);
        let w = 2.0;
        let a = w * 2f64.sqrt() / PI.sqrt();
        assert!((compute_u(a, w) - 1.0).abs() < 1e-15);
        assert!(compute_u(1e-3, 1.0) > compute_u(1e-4, 1.0));
    }

    #[test]
    fn a0_examples() {
        assert!(rel(compute_a0(0.115_690_535_752_2), 0.016_890_306_904_88) < 1e-10);
        assert_eq!(compute_a0(0.0), 0.0);
        assert_eq!(compute_a0(30.0), 1.0);
    }

    #[test]
    fn w_eq_examples() {
        assert!(rel(compute_w_eq(1.651, 0.115_690_535_752_2), 1.658_388_878_214_6) < 1e-10);
        assert!(rel(compute_w_eq(1.0, 1.0), 1.424_808_221_929_78) < 1e-12);
        assert!(rel(compute_w_eq(1.0, 1e-7), 1.0) < 1e-12);
        assert_eq!(compute_w_eq(1.3, 0.0), 1.3);
    }

    #[test]
    fn w_eq_never_below_beam_radius() {
        for i in 1..200 {
            let u = i as f64 * 0.03;
            assert!(compute_w_eq(1.0, u) >= 1.0);
        }
    }

    #[test]
    fn gain_examples() {
        let beam = BeamAtReceiver::from_radii(1.651, 0.1524).unwrap();
        assert_eq!(beam.gain(0.0), beam.a0);
        assert!(rel(beam.gain(beam.w_eq), beam.a0 * (-2.0f64).exp()) < 1e-14);
        assert!(rel(beam.gain(0.0881) / beam.a0, 0.994_371_612_438_353) < 1e-9);
    }

    #[test]
    fn aligned_square_quadrature_matches_erf_squared() {
        let beam = BeamAtReceiver::from_radii(1.651, 0.1524).unwrap();
        let q = collected_fraction_exact(0.0, 1.651, 0.1524, Aperture::EqualAreaSquare).unwrap();
        assert!(rel(q, beam.a0) < 1e-8, "{q} vs {}", beam.a0);
    }

    #[test]
    fn aligned_disc_quadrature_matches_closed_form() {
        let (w, a) = (1.651, 0.1524);
        let q = collected_fraction_exact(0.0, w, a, Aperture::Circular).unwrap();
        let closed = 1.0 - (-2.0 * a * a / (w * w)).exp();
        assert!(rel(q, closed) < 1e-8);
    }

    #[test]
    fn far_displacement_collects_nothing() {
        let q = collected_fraction_exact(200.0, 1.651, 0.1524, Aperture::Circular).unwrap();
        assert!(q < 1e-300);
    }

    #[test]
    fn rejects_negative_displacement() {
        assert!(collected_fraction_exact(-1.0, 1.0, 0.1, Aperture::Circular).is_err());
    }

    #[test]
    fn geometry_rejects_non_positive() {
        assert!(LinkGeometry::new(0.0, 0.1, 1.0, 0.1).is_err());
        assert!(LinkGeometry::new(1e9, 0.1, -1.0, 0.1).is_err());
        assert!(LinkGeometry::new(1e9, f64::NAN, 1.0, 0.1).is_err());
    }
}

//! Closed-form models of the two filter devices.
//!
//! Lines are numbered from 1 in the physics and from 0 in code: line 1
//! (input) is index 0, line 2 (output) index 1, line 3 (control, potential
//! `U`) index 2 and, for the gate, line 4 (drain, potential `V`) index 3.
//!
//! Every closed form depends on `k` only through
//! `s = √(1 − U/k²)`, continued to `i·√(U/k² − 1)` below threshold.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::numerics::ComplexMatrix;
use crate::scattering::{smatrix, ChannelSet, ScatteringMatrix};
use crate::vertex::BoundaryCondition;
use crate::{Error, Result};

/// Relative offset used to step off a threshold before calling the engine.
pub const THRESHOLD_NUDGE: f64 = 1e-8;

/// Moves `k` to `t·(1 + THRESHOLD_NUDGE)` when it coincides with one of the
/// threshold momenta `t` (relative distance ≤ 10⁻¹²).
pub fn avoid_thresholds(k: f64, thresholds: &[f64]) -> f64 {
    thresholds
        .iter()
        .find(|&&t| t > 0.0 && (k - t).abs() <= 1e-12 * t)
        .map_or(k, |&t| t * (1.0 + THRESHOLD_NUDGE))
}

/// `√(1 − U/k²)` on the physical sheet.
pub fn threshold_root(k: f64, u: f64) -> Complex64 {
    let x = 1.0 - u / (k * k);
    if x >= 0.0 {
        Complex64::new(x.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-x).sqrt())
    }
}

fn step(k: f64, threshold: f64) -> f64 {
    if k > threshold {
        1.0
    } else {
        0.0
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {x}"
        )))
    }
}

fn check_non_negative(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be non-negative, got {x}"
        )))
    }
}

/// Three-line threshold filter: input, output and a control line at potential `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterN3 {
    a: f64,
    b: f64,
    u: f64,
}

/// Amplitudes for a wave incoming on the input line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N3Amplitudes {
    pub s11: Complex64,
    pub s21: Complex64,
    pub s31: Complex64,
}

impl FilterN3 {
    pub fn new(a: f64, b: f64, u: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("b", b)?;
        check_non_negative("U", u)?;
        Ok(Self { a, b, u })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn with_potential(&self, u: f64) -> Result<Self> {
        Self::new(self.a, self.b, u)
    }

    pub fn threshold_momentum(&self) -> f64 {
        self.u.sqrt()
    }

    /// `b/a`; the peak is sharp when this is large and `a ≥ 1`.
    pub fn sharpness(&self) -> f64 {
        self.b / self.a
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        let t = ComplexMatrix::from_real_rows(&[&[self.a, self.b]]).expect("finite parameters");
        BoundaryCondition::st_form(3, 1, &t).expect("1x2 block")
    }

    pub fn potentials(&self) -> Vec<f64> {
        vec![0.0, 0.0, self.u]
    }

    /// `1 + a² + b²·s`, the common denominator of the amplitudes.
    pub fn denominator(&self, s: Complex64) -> Complex64 {
        1.0 + self.a * self.a + self.b * self.b * s
    }

    pub fn amplitudes(&self, k: f64) -> N3Amplitudes {
        assert!(k > 0.0, "momentum must be positive");
        let (a, b) = (self.a, self.b);
        let s = threshold_root(k, self.u);
        let den = self.denominator(s);
        let theta = step(k, self.threshold_momentum());
        N3Amplitudes {
            s11: (1.0 - a * a - b * b * s) / den,
            s21: Complex64::new(2.0 * a, 0.0) / den,
            s31: 2.0 * b * s.sqrt() * theta / den,
        }
    }

    /// Input→output probability, piecewise in closed form.
    pub fn transmission(&self, k: f64) -> f64 {
        assert!(k > 0.0, "momentum must be positive");
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let ratio = self.u / (k * k);
        if ratio <= 1.0 {
            let den = 1.0 + a2 + b2 * (1.0 - ratio).sqrt();
            4.0 * a2 / (den * den)
        } else {
            4.0 * a2 / ((1.0 + a2).powi(2) + b2 * b2 * (ratio - 1.0))
        }
    }

    /// Transmission at the threshold `k = √U`: `(2a/(1 + a²))²`.
    pub fn peak_height(&self) -> f64 {
        (2.0 * self.a / (1.0 + self.a * self.a)).powi(2)
    }

    /// `lim_{k→∞} P = (2a/(1 + a² + b²))²`.
    pub fn high_momentum_limit(&self) -> f64 {
        (2.0 * self.a / (1.0 + self.a * self.a + self.b * self.b)).powi(2)
    }

    pub fn engine_smatrix(&self, k: f64) -> Result<ScatteringMatrix> {
        let ch = ChannelSet::at_momentum(self.potentials(), k)?;
        smatrix(&self.boundary_condition(), &ch)
    }
}

/// Four-line sluice gate: input, output, control line at `U` and a drain at `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateN4 {
    a: f64,
    u: f64,
    v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N4Amplitudes {
    pub s11: Complex64,
    pub s21: Complex64,
    pub s31: Complex64,
    pub s41: Complex64,
}

impl GateN4 {
    /// Standard mode, drain at zero potential.
    pub fn new(a: f64, u: f64) -> Result<Self> {
        Self::with_drain(a, u, 0.0)
    }

    pub fn with_drain(a: f64, u: f64, v: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_non_negative("U", u)?;
        check_non_negative("V", v)?;
        Ok(Self { a, u, v })
    }

    /// The flat-passband gate, `a = 1/√2`.
    pub fn flat(u: f64) -> Result<Self> {
        Self::new(FRAC_1_SQRT_2, u)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn with_potential(&self, u: f64) -> Result<Self> {
        Self::with_drain(self.a, u, self.v)
    }

    pub fn threshold_momentum(&self) -> f64 {
        self.u.sqrt()
    }

    pub fn is_flat(&self) -> bool {
        (self.a - FRAC_1_SQRT_2).abs() < 1e-12
    }

    pub fn is_band_mode(&self) -> bool {
        self.v > 0.0
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        let a = self.a;
        let t = ComplexMatrix::from_real_rows(&[&[a, a], &[a, -a]]).expect("finite parameters");
        BoundaryCondition::st_form(4, 2, &t).expect("2x2 block")
    }

    pub fn potentials(&self) -> Vec<f64> {
        vec![0.0, 0.0, self.u, self.v]
    }

    /// `(1 + 2a²) + 2a²(1 + 2a²)·s`.
    pub fn denominator(&self, s: Complex64) -> Complex64 {
        let a2 = self.a * self.a;
        (1.0 + 2.0 * a2) + 2.0 * a2 * (1.0 + 2.0 * a2) * s
    }

    /// Closed-form amplitudes for the standard mode (`V = 0`).
    pub fn closed_form_amplitudes(&self, k: f64) -> N4Amplitudes {
        assert!(k > 0.0, "momentum must be positive");
        let a = self.a;
        let a2 = a * a;
        let s = threshold_root(k, self.u);
        let den = self.denominator(s);
        let theta = step(k, self.threshold_momentum());
        N4Amplitudes {
            s11: (1.0 - 4.0 * a2 * a2 * s) / den,
            s21: 2.0 * a2 * (1.0 - s) / den,
            s31: 2.0 * a * (1.0 + 2.0 * a2) * s.sqrt() * theta / den,
            s41: (2.0 * a + 4.0 * a * a2 * s) / den,
        }
    }

    /// Amplitudes in either mode; the drained mode goes through the engine.
    pub fn amplitudes(&self, k: f64) -> Result<N4Amplitudes> {
        if !self.is_band_mode() {
            return Ok(self.closed_form_amplitudes(k));
        }
        let sm = self.engine_smatrix(k)?;
        let col = |i: usize| {
            if sm.open_mask()[i] {
                sm.get(i, 0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        Ok(N4Amplitudes {
            s11: col(0),
            s21: col(1),
            s31: col(2),
            s41: col(3),
        })
    }

    /// Input→output probability for `V = 0`, piecewise in closed form.
    pub fn closed_form_transmission(&self, k: f64) -> f64 {
        assert!(k > 0.0, "momentum must be positive");
        let a2 = self.a * self.a;
        let a4 = a2 * a2;
        let lead = (1.0 + 2.0 * a2).powi(2);
        let ratio = self.u / (k * k);
        if ratio >= 1.0 {
            4.0 * a4 * ratio / (lead * (1.0 - 4.0 * a4 + 4.0 * a4 * ratio))
        } else {
            let s = (1.0 - ratio).sqrt();
            4.0 * a4 * (1.0 - s).powi(2) / (lead * (1.0 + 2.0 * a2 * s).powi(2))
        }
    }

    /// Input→output probability in either mode.
    pub fn transmission(&self, k: f64) -> Result<f64> {
        if self.is_band_mode() {
            self.band_filter_transmission(k)
        } else {
            Ok(self.closed_form_transmission(k))
        }
    }

    /// Engine-backed transmission with the drain at potential `V < U`.
    pub fn band_filter_transmission(&self, k: f64) -> Result<f64> {
        if self.v >= self.u {
            return Err(Error::InvalidBand {
                u: self.u,
                v: self.v,
            });
        }
        let sm = self.engine_smatrix(k)?;
        Ok(sm
            .probabilities()
            .get(1, 0)
            .expect("input line is always open"))
    }

    /// `lim_{k→0} P = 1/(1 + 2a²)²`.
    pub fn low_momentum_limit(&self) -> f64 {
        (1.0 + 2.0 * self.a * self.a).powi(-2)
    }

    /// `P(√U) = 4a⁴/(1 + 2a²)²`.
    pub fn threshold_value(&self) -> f64 {
        let a2 = self.a * self.a;
        4.0 * a2 * a2 / (1.0 + 2.0 * a2).powi(2)
    }

    /// S-matrix from the general engine; `k` is stepped off the `√U` and
    /// `√V` thresholds first.
    pub fn engine_smatrix(&self, k: f64) -> Result<ScatteringMatrix> {
        let k = avoid_thresholds(k, &[self.u.sqrt(), self.v.sqrt()]);
        let ch = ChannelSet::at_momentum(self.potentials(), k)?;
        smatrix(&self.boundary_condition(), &ch)
    }
}

/// Either device, for operations that apply to both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Device {
    N3(FilterN3),
    N4(GateN4),
}

impl Device {
    pub fn boundary_condition(&self) -> BoundaryCondition {
        match self {
            Device::N3(f) => f.boundary_condition(),
            Device::N4(g) => g.boundary_condition(),
        }
    }

    pub fn potentials(&self) -> Vec<f64> {
        match self {
            Device::N3(f) => f.potentials(),
            Device::N4(g) => g.potentials(),
        }
    }

    pub fn u(&self) -> f64 {
        match self {
            Device::N3(f) => f.u(),
            Device::N4(g) => g.u(),
        }
    }

    pub fn transmission(&self, k: f64) -> Result<f64> {
        match self {
            Device::N3(f) => Ok(f.transmission(k)),
            Device::N4(g) => g.transmission(k),
        }
    }

    /// Probabilities from the input line: `(P21, R11, P31, P41)`; `P41` is
    /// `None` for the three-line filter.
    pub fn input_probabilities(&self, k: f64) -> Result<(f64, f64, f64, Option<f64>)> {
        match self {
            Device::N3(f) => {
                let amp = f.amplitudes(k);
                Ok((
                    f.transmission(k),
                    amp.s11.norm_sqr(),
                    amp.s31.norm_sqr(),
                    None,
                ))
            }
            Device::N4(g) => {
                let amp = g.amplitudes(k)?;
                let p21 = g.transmission(k)?;
                Ok((
                    p21,
                    amp.s11.norm_sqr(),
                    amp.s31.norm_sqr(),
                    Some(amp.s41.norm_sqr()),
                ))
            }
        }
    }
}

impl From<FilterN3> for Device {
    fn from(f: FilterN3) -> Self {
        Device::N3(f)
    }
}

impl From<GateN4> for Device {
    fn from(g: GateN4) -> Self {
        Device::N4(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_HALF: f64 = FRAC_1_SQRT_2;

    fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
    }

    #[test]
    fn filter_threshold_amplitudes() {
        let f = FilterN3::new(1.0, 3.0, 1.0).unwrap();
        let amp = f.amplitudes(1.0);
        assert_eq!(amp.s21, Complex64::new(1.0, 0.0));
        assert_eq!(amp.s11, Complex64::new(0.0, 0.0));
        assert_eq!(amp.s31, Complex64::new(0.0, 0.0));
        assert_eq!(f.transmission(1.0), 1.0);
    }

    #[test]
    fn filter_without_potential_is_constant() {
        let f = FilterN3::new(1.0, 3.0, 0.0).unwrap();
        for k in [0.01, 1.0, 50.0] {
            assert!((f.amplitudes(k).s21 - Complex64::new(2.0 / 11.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn filter_plug_in_values() {
        let f = FilterN3::new(1.0, 3.0, 1.0).unwrap();
        let s21 = f.amplitudes(2f64.sqrt()).s21;
        assert!((s21.re - 2.0 / (2.0 + 9.0 * 0.5f64.sqrt())).abs() < 1e-15);
        assert!((f.transmission(0.5) - 4.0 / 247.0).abs() < 1e-15);
        assert!((f.transmission(1e3) - 4.0 / 121.0).abs() < 1e-4);
        assert!((f.high_momentum_limit() - 4.0 / 121.0).abs() < 1e-16);
    }

    #[test]
    fn filter_closed_form_matches_squared_amplitude() {
        let f = FilterN3::new(1.3, 2.2, 0.7).unwrap();
        for k in grid(0.05, 3.0, 200) {
            assert!((f.transmission(k) - f.amplitudes(k).s21.norm_sqr()).abs() < 1e-14);
        }
    }

    #[test]
    fn filter_is_unimodal_about_threshold() {
        let f = FilterN3::new(1.0, 3.0, 1.0).unwrap();
        let below: Vec<f64> = grid(0.01, 1.0, 300).map(|k| f.transmission(k)).collect();
        let above: Vec<f64> = grid(1.0, 5.0, 300).map(|k| f.transmission(k)).collect();
        assert!(below.windows(2).all(|w| w[1] > w[0]));
        assert!(above.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn filter_flux_below_threshold() {
        let f = FilterN3::new(1.0, 3.0, 1.0).unwrap();
        for k in grid(0.01, 1.0, 50) {
            let amp = f.amplitudes(k);
            assert!((amp.s11.norm_sqr() + amp.s21.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_limits() {
        let g = GateN4::new(1.0, 1.0).unwrap();
        let amp = g.closed_form_amplitudes(1e-4);
        assert!((amp.s11.norm_sqr() - 4.0 / 9.0).abs() < 1e-6);
        assert!((amp.s21.norm_sqr() - 1.0 / 9.0).abs() < 1e-6);
        assert!((amp.s41.norm_sqr() - 4.0 / 9.0).abs() < 1e-6);
        assert!((g.closed_form_transmission(1.0) - 4.0 / 9.0).abs() < 1e-15);
        assert!(g.closed_form_transmission(1e3) < 1e-10);
        assert!((g.low_momentum_limit() - 1.0 / 9.0).abs() < 1e-16);
        assert!((g.threshold_value() - 4.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn gate_closed_form_matches_squared_amplitude() {
        let g = GateN4::new(0.9, 1.4).unwrap();
        for k in grid(0.05, 4.0, 200) {
            let p = g.closed_form_transmission(k);
            assert!((p - g.closed_form_amplitudes(k).s21.norm_sqr()).abs() < 1e-14);
        }
    }

    #[test]
    fn gate_flux_below_threshold() {
        let g = GateN4::new(1.0, 1.0).unwrap();
        for k in grid(0.01, 1.0, 50) {
            let a = g.closed_form_amplitudes(k);
            let total = a.s11.norm_sqr() + a.s21.norm_sqr() + a.s41.norm_sqr();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_gate_matches_quarter_plateau() {
        let g = GateN4::flat(1.0).unwrap();
        assert!(g.is_flat());
        assert!((g.closed_form_transmission(0.3) - 0.25).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        let expected = 0.25 * ((1.0 - s) / (1.0 + s)).powi(2);
        assert!((g.closed_form_transmission(2f64.sqrt()) - expected).abs() < 1e-15);
        assert!((expected - 0.0073594).abs() < 1e-7);
        for k in grid(1.0, 6.0, 100) {
            let s = (1.0 - 1.0 / (k * k)).sqrt();
            let plateau_tail = 0.25 * ((1.0 - s) / (1.0 + s)).powi(2);
            assert!((g.closed_form_transmission(k) - plateau_tail).abs() < 1e-15);
        }
    }

    #[test]
    fn band_mode_reduces_to_standard_mode() {
        let band = GateN4::with_drain(SQRT_HALF, 1.0, 0.0).unwrap();
        let std = GateN4::flat(1.0).unwrap();
        for k in grid(0.05, 3.0, 100) {
            let p = band.band_filter_transmission(k).unwrap();
            assert!((p - std.closed_form_transmission(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn band_mode_passband() {
        let g = GateN4::with_drain(SQRT_HALF, 1.0, 0.25).unwrap();
        let mean = |lo: f64, hi: f64| {
            let v: Vec<f64> = grid(lo, hi, 200)
                .map(|k| g.transmission(k).unwrap())
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let inside = mean(0.5, 1.0);
        assert!(inside > mean(0.0, 0.5));
        assert!(inside > mean(1.0, 2.0));
        assert!(g.transmission(0.1).unwrap() < g.transmission(0.7).unwrap());
    }

    #[test]
    fn band_requires_v_below_u() {
        let g = GateN4::with_drain(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            g.band_filter_transmission(0.5),
            Err(Error::InvalidBand { .. })
        ));
    }

    #[test]
    fn engine_handles_exact_thresholds_in_band_mode() {
        let g = GateN4::with_drain(SQRT_HALF, 1.0, 0.25).unwrap();
        assert!(g.transmission(0.5).is_ok());
        assert!(g.transmission(1.0).is_ok());
    }

    #[test]
    fn parameter_validation() {
        assert!(FilterN3::new(0.0, 3.0, 1.0).is_err());
        assert!(FilterN3::new(1.0, -3.0, 1.0).is_err());
        assert!(FilterN3::new(1.0, 3.0, -1.0).is_err());
        assert!(GateN4::new(-1.0, 1.0).is_err());
        assert!(GateN4::with_drain(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn nudge_only_hits_thresholds() {
        assert_eq!(avoid_thresholds(0.7, &[1.0]), 0.7);
        assert_eq!(avoid_thresholds(1.0, &[1.0]), 1.0 + THRESHOLD_NUDGE);
        assert_eq!(
            avoid_thresholds(0.5, &[1.0, 0.5]),
            0.5 * (1.0 + THRESHOLD_NUDGE)
        );
        assert_eq!(avoid_thresholds(0.5, &[0.0]), 0.5);
    }
}

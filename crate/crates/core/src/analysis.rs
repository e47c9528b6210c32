//! Derived quantities: half-maximum bandwidth, second-sheet poles and the
//! flux-control curve `J(U) = ∫ ρ(k)·k·P(k; U) dk`.

use std::cell::RefCell;

use serde::Serialize;

use crate::devices::{Device, FilterN3, GateN4};
use crate::numerics::{find_root, integrate, Tolerance};
use crate::{Error, Result};

/// Empirical bandwidth constant: `W ≈ 4.7·U/b⁴` for `b ≫ 1`.
pub const BANDWIDTH_CONSTANT: f64 = 4.7;

pub const EDGE_TOL: Tolerance = Tolerance {
    abs_tol: 0.0,
    rel_tol: 1e-15,
};
pub const POLE_TOL: Tolerance = Tolerance {
    abs_tol: 0.0,
    rel_tol: 1e-15,
};

/// Relative margin in the pole conditions; `a = 1/√2` in floating point
/// must count as the boundary case.
const POLE_CONDITION_MARGIN: f64 = 1e-12;

/// Default quadrature tolerance for flux integrals.
pub const FLUX_TOL: Tolerance = Tolerance {
    abs_tol: 1e-13,
    rel_tol: 1e-12,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandReport {
    pub center_k: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    /// Width of the half-maximum interval in energy, `k_hi² − k_lo²`.
    pub width_energy: f64,
    /// `4.7·U/b⁴`.
    pub approx_width: f64,
    /// `width_energy / approx_width`.
    pub ratio: f64,
}

/// Half-maximum band of the three-line filter around `k = √U`.
pub fn bandwidth(f: &FilterN3) -> Result<BandReport> {
    let center = f.threshold_momentum();
    if center == 0.0 {
        return Err(Error::NoBand("U = 0 leaves no threshold peak".into()));
    }
    if f.peak_height() <= 0.5 {
        return Err(Error::NoBand(format!(
            "peak height {} does not exceed 1/2 (a = {} too far from 1)",
            f.peak_height(),
            f.a()
        )));
    }
    if f.high_momentum_limit() >= 0.5 {
        return Err(Error::NoBand(format!(
            "transmission stays above 1/2 as k → ∞ (limit {})",
            f.high_momentum_limit()
        )));
    }
    let excess = |k: f64| f.transmission(k) - 0.5;

    let mut lo = 0.5 * center;
    while excess(lo) >= 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::NoBand("no lower half-maximum edge".into()));
        }
    }
    let mut hi = 2.0 * center;
    while excess(hi) >= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoBand("no upper half-maximum edge".into()));
        }
    }
    let k_lo = find_root(excess, lo, center, EDGE_TOL)?;
    let k_hi = find_root(excess, center, hi, EDGE_TOL)?;
    let width_energy = k_hi * k_hi - k_lo * k_lo;
    let approx_width = BANDWIDTH_CONSTANT * f.u() / f.b().powi(4);
    Ok(BandReport {
        center_k: center,
        k_lo,
        k_hi,
        width_energy,
        approx_width,
        ratio: width_energy / approx_width,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleReport {
    /// Root found on the second sheet.
    pub k_pole: f64,
    /// Closed-form location.
    pub closed_form: f64,
    /// `|denominator(k_pole)|` on the second sheet.
    pub residual: f64,
    pub relative_error: f64,
}

/// Locates the real pole on the unphysical sheet reached through the cut
/// between `±√U`, where `√(1 − U/k²)` changes sign.
pub fn locate_pole(device: &Device) -> Result<PoleReport> {
    let u = device.u();
    if u <= 0.0 {
        return Err(Error::NoPole(
            "U must be positive for a threshold pole".into(),
        ));
    }
    let root_u = u.sqrt();
    // Second-sheet denominator evaluated for real k > √U.
    let (denominator, closed_form): (Box<dyn Fn(f64) -> f64>, f64) = match *device {
        Device::N3(f) => {
            let (a2, b2) = (f.a() * f.a(), f.b() * f.b());
            if b2 * b2 <= (1.0 + a2).powi(2) * (1.0 + POLE_CONDITION_MARGIN) {
                return Err(Error::NoPole(format!(
                    "requires b⁴ > (1 + a²)², got b⁴ = {} and (1 + a²)² = {}",
                    b2 * b2,
                    (1.0 + a2).powi(2)
                )));
            }
            let closed = b2 / (b2 * b2 - (1.0 + a2).powi(2)).sqrt() * root_u;
            (
                Box::new(move |k: f64| (1.0 + a2) - b2 * (1.0 - u / (k * k)).sqrt()),
                closed,
            )
        }
        Device::N4(g) => {
            let a2 = g.a() * g.a();
            if 4.0 * a2 * a2 <= 1.0 + POLE_CONDITION_MARGIN {
                return Err(Error::NoPole(format!(
                    "requires a > 1/√2 (4a⁴ > 1), got 4a⁴ = {}",
                    4.0 * a2 * a2
                )));
            }
            let closed = 2.0 * a2 / (4.0 * a2 * a2 - 1.0).sqrt() * root_u;
            let lead = 1.0 + 2.0 * a2;
            (
                Box::new(move |k: f64| lead - 2.0 * a2 * lead * (1.0 - u / (k * k)).sqrt()),
                closed,
            )
        }
    };

    let mut hi = 2.0 * root_u;
    while denominator(hi) >= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoPole(
                "second-sheet denominator keeps its sign".into(),
            ));
        }
    }
    let k_pole = find_root(&denominator, root_u, hi, POLE_TOL)?;
    Ok(PoleReport {
        k_pole,
        closed_form,
        residual: denominator(k_pole).abs(),
        relative_error: (k_pole - closed_form).abs() / closed_form,
    })
}

/// Momentum density of the particles arriving on the input line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentumDistribution {
    Constant {
        rho: f64,
    },
    /// Piecewise-linear table; zero outside `[k.first(), k.last()]`.
    Tabulated {
        k: Vec<f64>,
        rho: Vec<f64>,
    },
}

impl MomentumDistribution {
    pub fn constant(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "density must be non-negative, got {rho}"
            )));
        }
        Ok(Self::Constant { rho })
    }

    pub fn tabulated(k: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if k.len() != rho.len() || k.len() < 2 {
            return Err(Error::InvalidParameter(
                "tabulated density needs matching k and rho columns with at least two rows".into(),
            ));
        }
        if k.windows(2).any(|w| w[1] <= w[0]) || k.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "tabulated momenta must increase strictly".into(),
            ));
        }
        if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParameter(
                "tabulated density must be non-negative".into(),
            ));
        }
        Ok(Self::Tabulated { k, rho })
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            Self::Constant { rho } => *rho,
            Self::Tabulated { k, rho } => {
                if x < k[0] || x > k[k.len() - 1] {
                    return 0.0;
                }
                let i = k.partition_point(|&kk| kk <= x).clamp(1, k.len() - 1);
                let t = (x - k[i - 1]) / (k[i] - k[i - 1]);
                rho[i - 1] + t * (rho[i] - rho[i - 1])
            }
        }
    }

    fn kinks(&self) -> &[f64] {
        match self {
            Self::Constant { .. } => &[],
            Self::Tabulated { k, .. } => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxReport {
    pub u: f64,
    pub total: f64,
    /// Contribution of `k < √U`.
    #[serde(rename = "below_threshold_part")]
    pub below_threshold: f64,
    #[serde(rename = "above_threshold_part")]
    pub above_threshold: f64,
    /// `ρ·U/8`, only for a constant density.
    pub linear_estimate: Option<f64>,
}

/// Flux into the output line of the gate over `k ∈ [0, k_F]`.
pub fn flux(g: &GateN4, dist: &MomentumDistribution, k_fermi: f64) -> Result<FluxReport> {
    flux_with_tolerance(g, dist, k_fermi, FLUX_TOL)
}

pub fn flux_with_tolerance(
    g: &GateN4,
    dist: &MomentumDistribution,
    k_fermi: f64,
    tol: Tolerance,
) -> Result<FluxReport> {
    if !(k_fermi.is_finite() && k_fermi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "k_F must be positive, got {k_fermi}"
        )));
    }
    let k_th = g.threshold_momentum();
    if k_th >= k_fermi {
        return Err(Error::InvalidParameter(format!(
            "k_F = {k_fermi} must exceed the operating range √U = {k_th}"
        )));
    }
    let first_error: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |k: f64| match g.transmission(k) {
        Ok(p) => dist.density(k) * k * p,
        Err(e) => {
            first_error.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let mut breaks: Vec<f64> = dist.kinks().to_vec();
    breaks.push(g.v().sqrt());

    let run = |lo: f64, hi: f64| -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let r = integrate(integrand, lo, hi, &breaks, tol);
        if let Some(e) = first_error.borrow_mut().take() {
            return Err(e);
        }
        r
    };
    let below = run(0.0, k_th)?;
    let above = run(k_th, k_fermi)?;
    let linear_estimate = match dist {
        MomentumDistribution::Constant { rho } => Some(rho * g.u() / 8.0),
        MomentumDistribution::Tabulated { .. } => None,
    };
    Ok(FluxReport {
        u: g.u(),
        total: below + above,
        below_threshold: below,
        above_threshold: above,
        linear_estimate,
    })
}

/// `J(U)` sampled over a set of control potentials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxCurve {
    pub k_fermi: f64,
    pub distribution: MomentumDistribution,
    pub samples: Vec<FluxReport>,
}

impl FluxCurve {
    pub fn is_monotone(&self) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[1].u <= w[0].u || w[1].total >= w[0].total)
    }

    /// Relative spread of `J(U)/U` over samples with `U > 0`:
    /// `(max − min)/min`. Zero for exactly linear control.
    pub fn linearity_deviation(&self) -> f64 {
        let slopes: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.u > 0.0)
            .map(|s| s.total / s.u)
            .collect();
        let max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        if slopes.is_empty() || min <= 0.0 {
            return f64::NAN;
        }
        (max - min) / min
    }
}

/// Evaluates the flux at each control potential, keeping `a` and `V` of `g`.
pub fn flux_curve(
    g: &GateN4,
    dist: &MomentumDistribution,
    k_fermi: f64,
    potentials: &[f64],
) -> Result<FluxCurve> {
    let samples = potentials
        .iter()
        .map(|&u| flux(&g.with_potential(u)?, dist, k_fermi))
        .collect::<Result<Vec<_>>>()?;
    Ok(FluxCurve {
        k_fermi,
        distribution: dist.clone(),
        samples,
    })
}

//! Scattering matrix of a star graph with constant potentials on the lines.
//!
//! With `K = diag(√k_i)` the final-state amplitudes satisfy
//! `(A·K⁻¹ + iB·K)·S = −(A·K⁻¹ − iB·K)`. Column `j` of `S` holds the
//! amplitudes produced by a wave incoming on line `j`. Closed channels
//! (`E < U_i`) use the decaying continuation `k_i = +i·√(U_i − E)`.

use num_complex::Complex64;

use crate::numerics::{solve_linear, ComplexMatrix};
use crate::vertex::BoundaryCondition;
use crate::{Error, Result};

const THRESHOLD_REL: f64 = 1e-14;
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Per-line potentials at a fixed energy `E = k²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    potentials: Vec<f64>,
    energy: f64,
}

impl ChannelSet {
    pub fn new(potentials: Vec<f64>, energy: f64) -> Result<Self> {
        if potentials.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a star graph needs at least two lines, got {}",
                potentials.len()
            )));
        }
        if potentials.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidParameter("potentials must be finite".into()));
        }
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy must be positive, got {energy}"
            )));
        }
        Ok(Self { potentials, energy })
    }

    /// Channel set at reference momentum `k` (`E = k²`).
    pub fn at_momentum(potentials: Vec<f64>, k: f64) -> Result<Self> {
        Self::new(potentials, k * k)
    }

    pub fn n(&self) -> usize {
        self.potentials.len()
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn reference_momentum(&self) -> f64 {
        self.energy.sqrt()
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    pub fn is_open(&self, line: usize) -> bool {
        self.energy > self.potentials[line]
    }

    pub fn open_mask(&self) -> Vec<bool> {
        (0..self.n()).map(|i| self.is_open(i)).collect()
    }

    /// `k_i = √(E − U_i)` on the physical sheet.
    pub fn momentum(&self, line: usize) -> Complex64 {
        channel_momentum(self.energy, self.potentials[line])
    }

    pub fn momenta(&self) -> Vec<Complex64> {
        (0..self.n()).map(|i| self.momentum(i)).collect()
    }

    /// First line whose threshold coincides with the energy, if any.
    pub fn threshold_line(&self) -> Option<usize> {
        self.potentials
            .iter()
            .position(|&u| (self.energy - u).abs() < THRESHOLD_REL * self.energy.max(u.abs()))
    }
}

/// Physical-sheet momentum for energy `e` on a line with potential `u`.
pub fn channel_momentum(e: f64, u: f64) -> Complex64 {
    if e >= u {
        Complex64::new((e - u).sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (u - e).sqrt())
    }
}

/// S-matrix at reference momentum `k` together with the open-channel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    s: ComplexMatrix,
    k: f64,
    open: Vec<bool>,
}

impl ScatteringMatrix {
    pub fn new(s: ComplexMatrix, k: f64, open: Vec<bool>) -> Self {
        assert!(s.is_square() && s.rows() == open.len());
        Self { s, k, open }
    }

    pub fn s(&self) -> &ComplexMatrix {
        &self.s
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.s[(i, j)]
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.open.len()
    }

    pub fn open_mask(&self) -> &[bool] {
        &self.open
    }

    pub fn open_lines(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.open[i]).collect()
    }

    /// Open-open block of `S`.
    pub fn open_block(&self) -> ComplexMatrix {
        let open = self.open_lines();
        self.s.submatrix(&open, &open)
    }

    pub fn probabilities(&self) -> Probabilities {
        let n = self.n();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(match (self.open[i], self.open[j]) {
                    (_, false) => None,
                    (true, true) => Some(self.s[(i, j)].norm_sqr()),
                    (false, true) => Some(0.0),
                });
            }
        }
        Probabilities { n, values }
    }

    /// Largest `|Σ_{i open} |S_ij|² − 1|` over open incoming lines.
    pub fn flux_defect(&self) -> f64 {
        let open = self.open_lines();
        open.iter()
            .map(|&j| {
                let total: f64 = open.iter().map(|&i| self.s[(i, j)].norm_sqr()).sum();
                (total - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Transition probabilities `|S_ij|²` with the closed-channel convention:
/// transmission into a closed line is 0, and a closed incoming line has no
/// applicable column (`None`).
#[derive(Debug, Clone, PartialEq)]
pub struct Probabilities {
    n: usize,
    values: Vec<Option<f64>>,
}

impl Probabilities {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.n + j]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Evaluates the S-matrix of `bc` for the channels in `ch`.
pub fn smatrix(bc: &BoundaryCondition, ch: &ChannelSet) -> Result<ScatteringMatrix> {
    if bc.n() != ch.n() {
        return Err(Error::DimensionMismatch(format!(
            "vertex has {} lines, channel set has {}",
            bc.n(),
            ch.n()
        )));
    }
    if let Some(line) = ch.threshold_line() {
        return Err(Error::AtThreshold {
            line,
            energy: ch.energy(),
            potential: ch.potentials()[line],
        });
    }
    let s = smatrix_at_momenta(bc, &ch.momenta())?;
    Ok(ScatteringMatrix::new(
        s,
        ch.reference_momentum(),
        ch.open_mask(),
    ))
}

/// Raw S-matrix for arbitrary nonzero line momenta. Used directly when
/// probing other sheets, where a momentum takes the opposite sign.
pub fn smatrix_at_momenta(bc: &BoundaryCondition, momenta: &[Complex64]) -> Result<ComplexMatrix> {
    if bc.n() != momenta.len() {
        return Err(Error::DimensionMismatch(format!(
            "vertex has {} lines, {} momenta given",
            bc.n(),
            momenta.len()
        )));
    }
    if momenta.iter().any(|k| k.norm() == 0.0 || !k.is_finite()) {
        return Err(Error::InvalidParameter(
            "line momenta must be finite and nonzero".into(),
        ));
    }
    let root: Vec<Complex64> = momenta.iter().map(|k| k.sqrt()).collect();
    let k_half = ComplexMatrix::from_diag(&root);
    let k_half_inv = ComplexMatrix::from_diag(&root.iter().map(|r| r.inv()).collect::<Vec<_>>());
    let a_term = bc.a() * &k_half_inv;
    let b_term = (bc.b() * &k_half).scale(I);
    let lhs = &a_term + &b_term;
    let rhs = -&(&a_term - &b_term);
    solve_linear(&lhs, &rhs)
}

/// Final state produced by a unit-flux wave incoming on line `j`.
#[derive(Debug, Clone)]
pub struct FinalStateWave {
    incoming: usize,
    momenta: Vec<Complex64>,
    amplitudes: Vec<Complex64>,
}

impl FinalStateWave {
    pub fn new(bc: &BoundaryCondition, ch: &ChannelSet, incoming: usize) -> Result<Self> {
        if incoming >= ch.n() {
            return Err(Error::InvalidParameter(format!("no line {incoming}")));
        }
        if !ch.is_open(incoming) {
            return Err(Error::ClosedIncomingChannel(incoming));
        }
        let sm = smatrix(bc, ch)?;
        Ok(Self {
            incoming,
            momenta: ch.momenta(),
            amplitudes: sm.s().column(incoming),
        })
    }

    pub fn incoming(&self) -> usize {
        self.incoming
    }

    /// `ψ_ij(x)` on line `i`.
    pub fn value(&self, line: usize, x: f64) -> Complex64 {
        let k = self.momenta[line];
        let norm = k.sqrt().inv();
        let out = self.amplitudes[line] * (I * k * x).exp() * norm;
        if line == self.incoming {
            (-I * k * x).exp() * norm + out
        } else {
            out
        }
    }

    /// `ψ'_ij(x)` on line `i`, derivative along the outward coordinate.
    pub fn derivative(&self, line: usize, x: f64) -> Complex64 {
        let k = self.momenta[line];
        let norm = k.sqrt().inv();
        let out = I * k * self.amplitudes[line] * (I * k * x).exp() * norm;
        if line == self.incoming {
            -I * k * (-I * k * x).exp() * norm + out
        } else {
            out
        }
    }

    pub fn values_at(&self, x: f64) -> Vec<Complex64> {
        (0..self.momenta.len()).map(|i| self.value(i, x)).collect()
    }

    pub fn derivatives_at(&self, x: f64) -> Vec<Complex64> {
        (0..self.momenta.len())
            .map(|i| self.derivative(i, x))
            .collect()
    }
}

/// `ψ_ij(x)`: the component on line `i` of the final state for incoming line `j`.
pub fn wavefunction(
    bc: &BoundaryCondition,
    ch: &ChannelSet,
    j: usize,
    x: f64,
    i: usize,
) -> Result<Complex64> {
    if i >= ch.n() {
        return Err(Error::InvalidParameter(format!("no line {i}")));
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "position must be >= 0, got {x}"
        )));
    }
    Ok(FinalStateWave::new(bc, ch, j)?.value(i, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ComplexMatrix;

    fn n3_bc(a: f64, b: f64) -> BoundaryCondition {
        BoundaryCondition::st_form(3, 1, &ComplexMatrix::from_real_rows(&[&[a, b]]).unwrap())
            .unwrap()
    }

    #[test]
    fn momenta_branches() {
        let ch = ChannelSet::new(vec![0.0, 0.0, 1.0], 0.25).unwrap();
        assert_eq!(ch.momentum(0), Complex64::new(0.5, 0.0));
        let k3 = ch.momentum(2);
        assert_eq!(k3.re, 0.0);
        assert!((k3.im - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(ch.open_mask(), vec![true, true, false]);
        // √k for a closed channel sits at argument π/4.
        assert!((k3.sqrt().arg() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn channel_set_validation() {
        assert!(ChannelSet::new(vec![0.0], 1.0).is_err());
        assert!(ChannelSet::new(vec![0.0, 0.0], 0.0).is_err());
        assert!(ChannelSet::new(vec![0.0, f64::NAN], 1.0).is_err());
    }

    #[test]
    fn threshold_is_rejected() {
        let ch = ChannelSet::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        let err = smatrix(&n3_bc(1.0, 3.0), &ch).unwrap_err();
        assert!(matches!(err, Error::AtThreshold { line: 2, .. }));
    }

    #[test]
    fn threshold_limit_of_filter() {
        let bc = n3_bc(1.0, 3.0);
        let p21 = |k: f64| {
            let ch = ChannelSet::at_momentum(vec![0.0, 0.0, 1.0], k).unwrap();
            smatrix(&bc, &ch)
                .unwrap()
                .probabilities()
                .get(1, 0)
                .unwrap()
        };
        // From below the deficit is linear in the offset.
        assert!((p21(1.0 - 1e-8) - 1.0).abs() < 1e-6);
        // From above it closes like √(k − 1): 1 − P ≈ 9·√(2·10⁻⁸).
        let deficit = 1.0 - p21(1.0 + 1e-8);
        assert!(
            (deficit - 9.0 * 2e-8f64.sqrt()).abs() < 1e-5,
            "deficit {deficit}"
        );
    }

    #[test]
    fn plug_in_value_above_threshold() {
        // 2 / (2 + 9·√(1/2))
        let expected = 2.0 / (2.0 + 9.0 * 0.5f64.sqrt());
        let ch = ChannelSet::at_momentum(vec![0.0, 0.0, 1.0], 2f64.sqrt()).unwrap();
        let sm = smatrix(&n3_bc(1.0, 3.0), &ch).unwrap();
        assert!((sm.get(1, 0) - Complex64::new(expected, 0.0)).norm() < 1e-12);
        assert!((expected - 0.23912).abs() < 1e-5);
    }

    #[test]
    fn below_threshold_two_open_channels() {
        let ch = ChannelSet::at_momentum(vec![0.0, 0.0, 1.0], 0.5).unwrap();
        let sm = smatrix(&n3_bc(1.0, 3.0), &ch).unwrap();
        let p = sm.probabilities();
        assert!((p.get(0, 0).unwrap() + p.get(1, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p.get(2, 0), Some(0.0));
        assert_eq!(p.get(0, 2), None);
        assert!((p.get(1, 0).unwrap() - 4.0 / 247.0).abs() < 1e-12);
        assert!(sm.flux_defect() < 1e-12);
    }

    #[test]
    fn far_above_threshold() {
        let ch = ChannelSet::at_momentum(vec![0.0, 0.0, 1.0], 1e3).unwrap();
        let p = smatrix(&n3_bc(1.0, 3.0), &ch).unwrap().probabilities();
        assert!((p.get(1, 0).unwrap() - 4.0 / 121.0).abs() < 1e-4);
    }

    #[test]
    fn zero_potentials_give_unitary_constant_s() {
        let bc = n3_bc(0.7, -1.9);
        let s = |k: f64| smatrix(&bc, &ChannelSet::at_momentum(vec![0.0; 3], k).unwrap()).unwrap();
        let (s1, s2) = (s(0.1), s(10.0));
        assert!((s1.s() - s2.s()).max_abs() < 1e-12);
        let unitary = &s1.s().adjoint() * s1.s();
        assert!((&unitary - &ComplexMatrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn free_delta_is_transparent() {
        let bc = BoundaryCondition::delta(2, 0.0).unwrap();
        let sm = smatrix(&bc, &ChannelSet::at_momentum(vec![0.0, 0.0], 1.7).unwrap()).unwrap();
        assert!((sm.get(1, 0).norm() - 1.0).abs() < 1e-14);
        assert!(sm.get(0, 0).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let ch = ChannelSet::at_momentum(vec![0.0; 4], 1.0).unwrap();
        assert!(matches!(
            smatrix(&n3_bc(1.0, 1.0), &ch),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn wave_at_origin_matches_amplitudes() {
        let bc = n3_bc(1.0, 3.0);
        let ch = ChannelSet::at_momentum(vec![0.0, 0.0, 1.0], 1.3).unwrap();
        let sm = smatrix(&bc, &ch).unwrap();
        let psi = wavefunction(&bc, &ch, 0, 0.0, 0).unwrap();
        let expected = (Complex64::new(1.0, 0.0) + sm.get(0, 0)) / 1.3f64.sqrt();
        assert!((psi - expected).norm() < 1e-14);
    }

    #[test]
    fn wave_satisfies_boundary_condition() {
        let bc = n3_bc(1.0, 3.0);
        for k in [0.5, 1.3, 4.0] {
            let ch = ChannelSet::at_momentum(vec![0.0, 0.0, 1.0], k).unwrap();
            for j in 0..2 {
                let w = FinalStateWave::new(&bc, &ch, j).unwrap();
                let lhs = bc.a().mat_vec(&w.values_at(0.0));
                let rhs = bc.b().mat_vec(&w.derivatives_at(0.0));
                let residual = lhs
                    .iter()
                    .zip(&rhs)
                    .map(|(a, b)| (a + b).norm())
                    .fold(0.0, f64::max);
                assert!(residual < 1e-12, "k={k} j={j} residual={residual}");
            }
        }
    }

    #[test]
    fn evanescent_component_decays() {
        let bc = n3_bc(1.0, 3.0);
        let ch = ChannelSet::at_momentum(vec![0.0, 0.0, 1.0], 0.5).unwrap();
        let w = FinalStateWave::new(&bc, &ch, 0).unwrap();
        let mags: Vec<f64> = (0..50).map(|i| w.value(2, 0.1 * i as f64).norm()).collect();
        assert!(mags[0] > 0.0);
        assert!(mags.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn closed_incoming_line_rejected() {
        let bc = n3_bc(1.0, 3.0);
        let ch = ChannelSet::at_momentum(vec![0.0, 0.0, 1.0], 0.5).unwrap();
        assert!(matches!(
            wavefunction(&bc, &ch, 2, 0.0, 0),
            Err(Error::ClosedIncomingChannel(2))
        ));
    }
}

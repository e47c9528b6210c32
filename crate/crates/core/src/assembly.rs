//! Finite graphs of δ-couplings joined by short internal edges.
//!
//! As the edge scale `d` shrinks, with δ strengths growing like `1/d`, such
//! a graph acts on its external lines like a single scale-invariant vertex.
//! The recipes here wire one δ vertex per external line. Top vertex `j`
//! (lines with an identity block in `B`) and bottom vertex `k` are joined
//! whenever the coupling block entry `T_jk` is nonzero, by an edge of
//! length `d/|T_jk|`; a negative entry carries the phase `π`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::devices::{avoid_thresholds, Device};
use crate::numerics::{solve_linear, ComplexMatrix};
use crate::scattering::{channel_momentum, smatrix, ChannelSet, ScatteringMatrix};
use crate::{Error, Result};

const THRESHOLD_REL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphVertex {
    pub id: usize,
    pub strength: f64,
}

/// Half-infinite external line attached to a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lead {
    pub vertex: usize,
    #[serde(rename = "U", default)]
    pub potential: f64,
}

/// Finite edge; the wave picks up `e^{iφ}` between `from` and `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalEdge {
    pub from: usize,
    pub to: usize,
    #[serde(rename = "d")]
    pub length: f64,
    #[serde(rename = "phi", default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundGraph {
    pub vertices: Vec<GraphVertex>,
    pub lines: Vec<Lead>,
    pub edges: Vec<InternalEdge>,
}

impl CompoundGraph {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParameter(msg));
        if self.vertices.is_empty() || self.lines.is_empty() {
            return invalid("graph needs at least one vertex and one external line".into());
        }
        let mut ids = BTreeSet::new();
        for v in &self.vertices {
            if !ids.insert(v.id) {
                return invalid(format!("duplicate vertex id {}", v.id));
            }
            if !v.strength.is_finite() {
                return invalid(format!("vertex {} has non-finite strength", v.id));
            }
        }
        for l in &self.lines {
            if !ids.contains(&l.vertex) {
                return invalid(format!("line attached to unknown vertex {}", l.vertex));
            }
            if !l.potential.is_finite() {
                return invalid("line potential must be finite".into());
            }
        }
        for e in &self.edges {
            if !ids.contains(&e.from) || !ids.contains(&e.to) {
                return invalid(format!(
                    "edge {}-{} references an unknown vertex",
                    e.from, e.to
                ));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return invalid(format!("edge {}-{} needs a positive length", e.from, e.to));
            }
            if !e.phase.is_finite() {
                return invalid(format!("edge {}-{} has a non-finite phase", e.from, e.to));
            }
        }
        if !self.is_connected() {
            return invalid("graph is not connected".into());
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let mut adjacency: BTreeMap<usize, Vec<usize>> =
            self.vertices.iter().map(|v| (v.id, Vec::new())).collect();
        for e in &self.edges {
            adjacency.entry(e.from).or_default().push(e.to);
            adjacency.entry(e.to).or_default().push(e.from);
        }
        let start = self.vertices[0].id;
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[&v] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    pub fn potentials(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.potential).collect()
    }
}

/// Exact S-matrix of a compound graph at energy `E`, normalised like the
/// star-graph engine (`1/√k_i` on every external line).
///
/// Unknowns are the vertex values, the two plane-wave amplitudes on every
/// internal edge and the outgoing amplitudes on the external lines. Each
/// vertex imposes continuity and `Σ ψ'_out = v·ψ`.
pub fn compound_smatrix(g: &CompoundGraph, energy: f64) -> Result<ScatteringMatrix> {
    g.validate()?;
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "energy must be positive, got {energy}"
        )));
    }
    for (line, l) in g.lines.iter().enumerate() {
        if (energy - l.potential).abs() < THRESHOLD_REL * energy.max(l.potential.abs()) {
            return Err(Error::AtThreshold {
                line,
                energy,
                potential: l.potential,
            });
        }
    }

    let index: BTreeMap<usize, usize> = g
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id, i))
        .collect();
    let nv = g.vertices.len();
    let ne = g.edges.len();
    let n = g.lines.len();
    let size = nv + 2 * ne + n;
    let alpha = |e: usize| nv + 2 * e;
    let beta = |e: usize| nv + 2 * e + 1;
    let out = |j: usize| nv + 2 * ne + j;

    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let k = energy.sqrt();
    let momenta: Vec<Complex64> = g
        .lines
        .iter()
        .map(|l| channel_momentum(energy, l.potential))
        .collect();
    let roots: Vec<Complex64> = momenta.iter().map(|q| q.sqrt()).collect();

    let mut m = ComplexMatrix::zeros(size, size);
    let mut rhs = ComplexMatrix::zeros(size, n);
    let mut row = 0;

    // Continuity of each external line with its vertex.
    for (j, l) in g.lines.iter().enumerate() {
        m[(row, out(j))] = roots[j].inv();
        m[(row, index[&l.vertex])] = -one;
        rhs[(row, j)] = -roots[j].inv();
        row += 1;
    }
    // Continuity at both ends of each internal edge.
    for (e, edge) in g.edges.iter().enumerate() {
        m[(row, alpha(e))] = one;
        m[(row, beta(e))] = one;
        m[(row, index[&edge.from])] = -one;
        row += 1;
        let twist = Complex64::from_polar(1.0, edge.phase);
        let fwd = (i * k * edge.length).exp();
        m[(row, alpha(e))] = twist * fwd;
        m[(row, beta(e))] = twist / fwd;
        m[(row, index[&edge.to])] = -one;
        row += 1;
    }
    // Kirchhoff balance with δ strength at each vertex.
    for (vi, v) in g.vertices.iter().enumerate() {
        m[(row, vi)] = Complex64::new(-v.strength, 0.0);
        for (j, l) in g.lines.iter().enumerate() {
            if l.vertex == v.id {
                m[(row, out(j))] += i * roots[j];
                rhs[(row, j)] += i * roots[j];
            }
        }
        for (e, edge) in g.edges.iter().enumerate() {
            if edge.from == v.id {
                m[(row, alpha(e))] += i * k;
                m[(row, beta(e))] -= i * k;
            }
            if edge.to == v.id {
                let twist = Complex64::from_polar(1.0, edge.phase);
                let fwd = (i * k * edge.length).exp();
                m[(row, alpha(e))] -= twist * i * k * fwd;
                m[(row, beta(e))] += twist * i * k / fwd;
            }
        }
        row += 1;
    }
    debug_assert_eq!(row, size);

    let solution = solve_linear(&m, &rhs).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularSystem { energy },
        other => other,
    })?;
    let mut s = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            s[(r, c)] = solution[(out(r), c)];
        }
    }
    let open = g.lines.iter().map(|l| energy > l.potential).collect();
    Ok(ScatteringMatrix::new(s, k, open))
}

/// How the negative coupling entry of the four-line gate is realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Edge carrying a vector potential with total phase `π`.
    Magnetic,
    /// Edge split in two halves around a δ vertex of strength `−8a/d`.
    V5Delta,
}

/// Target device for a δ-chain construction.
pub type RecipeTarget = Device;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaChainRecipe {
    pub target: RecipeTarget,
    pub d: f64,
    pub variant: Variant,
}

impl DeltaChainRecipe {
    pub fn new(target: RecipeTarget, d: f64, variant: Variant) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "d must be positive, got {d}"
            )));
        }
        Ok(Self { target, d, variant })
    }

    pub fn with_d(&self, d: f64) -> Result<Self> {
        Self::new(self.target, d, self.variant)
    }

    /// δ strengths in vertex order. Three lines: `[v₁, v₂, v₃]`; four lines:
    /// `[v₁, v₂, v₃, v₄]` plus `v₅` for the split-edge variant.
    pub fn strengths(&self) -> Vec<f64> {
        let d = self.d;
        match self.target {
            Device::N3(f) => {
                let (a, b) = (f.a(), f.b());
                vec![
                    (a * (a - 1.0) + b * (b - 1.0)) / d,
                    (1.0 - a) / d,
                    (1.0 - b) / d,
                ]
            }
            Device::N4(g) => {
                let a = g.a();
                let top = 2.0 * a * (a - 1.0) / d;
                let bottom = (1.0 - 2.0 * a) / d;
                match self.variant {
                    Variant::Magnetic => vec![top, top, bottom, bottom],
                    Variant::V5Delta => vec![
                        top,
                        2.0 * a * (a - 2.0) / d,
                        bottom,
                        (1.0 - 4.0 * a) / d,
                        -8.0 * a / d,
                    ],
                }
            }
        }
    }

    pub fn build(&self) -> CompoundGraph {
        let strengths = self.strengths();
        let vertices = strengths
            .iter()
            .enumerate()
            .map(|(id, &strength)| GraphVertex { id, strength })
            .collect();
        let lines = self
            .target
            .potentials()
            .into_iter()
            .enumerate()
            .map(|(vertex, potential)| Lead { vertex, potential })
            .collect();
        let edge = |from, to, length, phase| InternalEdge {
            from,
            to,
            length,
            phase,
        };
        let edges = match self.target {
            Device::N3(f) => vec![
                edge(0, 1, self.d / f.a(), 0.0),
                edge(0, 2, self.d / f.b(), 0.0),
            ],
            Device::N4(g) => {
                let l = self.d / g.a();
                let mut edges = vec![edge(0, 2, l, 0.0), edge(0, 3, l, 0.0), edge(1, 2, l, 0.0)];
                match self.variant {
                    Variant::Magnetic => edges.push(edge(1, 3, l, PI)),
                    Variant::V5Delta => {
                        edges.push(edge(1, 4, 0.5 * l, 0.0));
                        edges.push(edge(4, 3, 0.5 * l, 0.0));
                    }
                }
                edges
            }
        };
        CompoundGraph {
            vertices,
            lines,
            edges,
        }
    }
}

pub fn build_recipe(r: &DeltaChainRecipe) -> Result<CompoundGraph> {
    DeltaChainRecipe::new(r.target, r.d, r.variant).map(|r| r.build())
}

/// Largest open-block entry difference `‖S_a − S_b‖_max`.
pub fn open_block_distance(sa: &ScatteringMatrix, sb: &ScatteringMatrix) -> f64 {
    (&sa.open_block() - &sb.open_block()).max_abs()
}

fn target_smatrix(target: &Device, k: f64) -> Result<ScatteringMatrix> {
    let ch = ChannelSet::at_momentum(target.potentials(), k)?;
    smatrix(&target.boundary_condition(), &ch)
}

fn thresholds(target: &Device) -> Vec<f64> {
    target
        .potentials()
        .iter()
        .filter(|&&u| u > 0.0)
        .map(|u| u.sqrt())
        .collect()
}

/// `max_k ‖S_d(k) − S_FT(k)‖_max` over the open-open block.
pub fn approximation_error(recipe: &DeltaChainRecipe, k_grid: &[f64]) -> Result<f64> {
    let graph = recipe.build();
    let th = thresholds(&recipe.target);
    k_grid.iter().try_fold(0.0f64, |acc, &k| {
        let k = avoid_thresholds(k, &th);
        let sd = compound_smatrix(&graph, k * k)?;
        let st = target_smatrix(&recipe.target, k)?;
        Ok(acc.max(open_block_distance(&sd, &st)))
    })
}

/// `max_k` distance between the magnetic and split-edge realisations.
pub fn variant_difference(target: &Device, d: f64, k_grid: &[f64]) -> Result<f64> {
    let magnetic = DeltaChainRecipe::new(*target, d, Variant::Magnetic)?.build();
    let split = DeltaChainRecipe::new(*target, d, Variant::V5Delta)?.build();
    let th = thresholds(target);
    k_grid.iter().try_fold(0.0f64, |acc, &k| {
        let e = avoid_thresholds(k, &th).powi(2);
        let d = open_block_distance(
            &compound_smatrix(&magnetic, e)?,
            &compound_smatrix(&split, e)?,
        );
        Ok(acc.max(d))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub d: f64,
    pub eps: f64,
    /// `eps(previous d) / eps(d)`; absent on the first row.
    pub ratio: Option<f64>,
    /// `log₂` of `ratio` when consecutive `d` differ by a factor 2.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub k_grid: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn final_eps(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.eps)
    }

    pub fn min_ratio(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Tabulates the approximation error over a decreasing sequence of `d`.
pub fn convergence_study(
    recipe: &DeltaChainRecipe,
    k_grid: &[f64],
    d_sequence: &[f64],
) -> Result<ConvergenceReport> {
    if d_sequence.is_empty() || k_grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid or d sequence".into()));
    }
    if d_sequence
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidParameter(
            "d sequence must decrease strictly".into(),
        ));
    }
    let eps = d_sequence
        .par_iter()
        .map(|&d| approximation_error(&recipe.with_d(d)?, k_grid))
        .collect::<Result<Vec<f64>>>()?;
    let rows = d_sequence
        .iter()
        .zip(&eps)
        .enumerate()
        .map(|(idx, (&d, &e))| {
            let ratio = (idx > 0).then(|| eps[idx - 1] / e);
            let halved = idx > 0 && (d_sequence[idx - 1] / d - 2.0).abs() < 1e-12;
            let order = ratio.filter(|_| halved).map(f64::log2);
            ConvergenceRow {
                d,
                eps: e,
                ratio,
                order,
            }
        })
        .collect();
    let monotone = eps.windows(2).all(|w| w[1] < w[0]);
    Ok(ConvergenceReport {
        k_grid: k_grid.to_vec(),
        rows,
        monotone,
    })
}

/// `d₀·2⁻ᵐ` for `m = 0..=halvings`.
pub fn halving_sequence(d0: f64, halvings: u32) -> Vec<f64> {
    (0..=halvings).map(|m| d0 / f64::from(1u32 << m)).collect()
}

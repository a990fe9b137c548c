//! Fractional scattering: the propagator `U[p]`, the windowed coefficients
//! `S[p] = U[p] Θα φ`, frequency-decreasing path enumeration and the
//! per-layer energy ledger.
//!
//! Every node of the path tree is chirp-modulated and transformed exactly
//! once; its spectrum is then reused for the low-pass window and for all of
//! its children. The outgoing demodulation chirp has unit modulus and is
//! immediately followed by a modulus in both cases, so it is never applied.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::frwt::{frac_convolve, ModulatedSpectrum};
use crate::grid::{ensure_same_dims, modulus, ComplexImage, FractionalOrderPair, RealImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathStep {
    pub scale: usize,
    pub angle: usize,
}

/// A scattering path: a sequence of wavelet indices with strictly
/// increasing scales.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    steps: Vec<PathStep>,
}

impl Path {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(steps: Vec<PathStep>) -> Result<Self> {
        if steps.windows(2).any(|w| w[0].scale >= w[1].scale) {
            return Err(Error::InvalidPath(format!(
                "scales must strictly increase along a path: {steps:?}"
            )));
        }
        Ok(Self { steps })
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(scale, angle)| PathStep { scale, angle }).collect())
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn order(&self) -> usize {
        self.steps.len()
    }

    pub fn last_scale(&self) -> Option<usize> {
        self.steps.last().map(|s| s.scale)
    }

    pub fn child(&self, step: PathStep) -> Path {
        let mut steps = self.steps.clone();
        steps.push(step);
        Path { steps }
    }

    fn check_bank(&self, bank: &FilterBank) -> Result<()> {
        for s in &self.steps {
            if s.scale >= bank.num_scales() || s.angle >= bank.num_angles() {
                return Err(Error::PathOutOfBank {
                    scale: s.scale,
                    angle: s.angle,
                    scales: bank.num_scales(),
                    angles: bank.num_angles(),
                });
            }
        }
        Ok(())
    }
}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.steps.iter().map(|s| s.scale).cmp(other.steps.iter().map(|s| s.scale)))
            .then_with(|| self.steps.iter().map(|s| s.angle).cmp(other.steps.iter().map(|s| s.angle)))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("()");
        }
        let parts: Vec<String> = self.steps.iter().map(|s| format!("j{}k{}", s.scale, s.angle)).collect();
        f.write_str(&parts.join("-"))
    }
}

/// Frequency-decreasing paths up to `max_order`, sorted by order, then
/// scale sequence, then angle sequence.
pub fn enumerate_paths(scales: usize, angles: usize, max_order: usize) -> Vec<Path> {
    let mut out = vec![Path::empty()];
    let mut frontier = vec![Path::empty()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for p in &frontier {
            let start = p.last_scale().map_or(0, |j| j + 1);
            for scale in start..scales {
                for angle in 0..angles {
                    next.push(p.child(PathStep { scale, angle }));
                }
            }
        }
        next.sort();
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `sum_{m <= max_order} K^m C(S, m)`.
pub fn path_count(scales: usize, angles: usize, max_order: usize) -> usize {
    let mut total = 0usize;
    let mut binom = 1usize;
    let mut kpow = 1usize;
    for m in 0..=max_order.min(scales) {
        total += kpow * binom;
        binom = binom * (scales - m) / (m + 1);
        kpow *= angles;
    }
    total
}

/// `U[p]x` for a real input: iterated `|· Θα ψ|` along `path`.
pub fn propagate(x: &RealImage, path: &Path, bank: &FilterBank, orders: FractionalOrderPair) -> Result<RealImage> {
    if path.order() == 0 {
        ensure_same_dims(bank.dims(), x.dims())?;
        return Ok(x.clone());
    }
    Ok(modulus(&propagate_complex(&x.to_complex(), path, bank, orders)?))
}

/// `U[p]x` for a complex input; the empty path returns `x` unchanged.
pub fn propagate_complex(
    x: &ComplexImage,
    path: &Path,
    bank: &FilterBank,
    orders: FractionalOrderPair,
) -> Result<ComplexImage> {
    ensure_same_dims(bank.dims(), x.dims())?;
    path.check_bank(bank)?;
    let mut u = x.clone();
    for s in path.steps() {
        u = modulus(&frac_convolve(&u, bank.psi_hat(s.scale, s.angle), orders)?).to_complex();
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerEnergy {
    pub order: usize,
    /// `sum_{|p| = m} ||S[p]x||^2`
    pub windowed: f64,
    /// `sum_{|p| = m} ||U[p]x||^2`
    pub propagated: f64,
}

#[derive(Clone, Debug)]
pub struct ScatteringResult {
    paths: Vec<Path>,
    coefficients: Vec<RealImage>,
    ledger: Vec<LayerEnergy>,
    /// `sum_{|p| = max_order + 1} ||U[p]x||^2`
    residual: f64,
    orders: FractionalOrderPair,
}

impl ScatteringResult {
    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn coefficients(&self) -> &[RealImage] {
        &self.coefficients
    }

    pub fn get(&self, path: &Path) -> Option<&RealImage> {
        self.paths.binary_search(path).ok().map(|i| &self.coefficients[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, &RealImage)> {
        self.paths.iter().zip(&self.coefficients)
    }

    pub fn ledger(&self) -> &[LayerEnergy] {
        &self.ledger
    }

    pub fn residual_energy(&self) -> f64 {
        self.residual
    }

    pub fn orders(&self) -> FractionalOrderPair {
        self.orders
    }

    pub fn max_order(&self) -> usize {
        self.ledger.len() - 1
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// `sum_p ||S[p]x - S[p]y||^2`, pairing coefficients by path.
    pub fn distance_sq(&self, other: &ScatteringResult) -> Result<f64> {
        if self.paths != other.paths {
            return Err(Error::InvalidInput("scattering results cover different path sets".into()));
        }
        let mut total = 0.0;
        for (a, b) in self.coefficients.iter().zip(&other.coefficients) {
            total += a.sub(b)?.norm_sq();
        }
        Ok(total)
    }

    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(RealImage::norm_sq).sum()
    }
}

struct Subtree {
    nodes: Vec<(Path, RealImage)>,
    windowed: Vec<f64>,
    propagated: Vec<f64>,
    residual: f64,
}

impl Subtree {
    fn new(max_order: usize) -> Self {
        Self {
            nodes: Vec::new(),
            windowed: vec![0.0; max_order + 1],
            propagated: vec![0.0; max_order + 1],
            residual: 0.0,
        }
    }

    fn absorb(&mut self, other: Subtree) {
        self.nodes.extend(other.nodes);
        for (a, b) in self.windowed.iter_mut().zip(&other.windowed) {
            *a += b;
        }
        for (a, b) in self.propagated.iter_mut().zip(&other.propagated) {
            *a += b;
        }
        self.residual += other.residual;
    }
}

struct Cascade<'a> {
    bank: &'a FilterBank,
    orders: FractionalOrderPair,
    max_order: usize,
}

impl Cascade<'_> {
    fn children(&self, path: &Path) -> Vec<PathStep> {
        let start = path.last_scale().map_or(0, |j| j + 1);
        (start..self.bank.num_scales())
            .flat_map(|scale| (0..self.bank.num_angles()).map(move |angle| PathStep { scale, angle }))
            .collect()
    }

    /// Windows `u = U[path]x`, records its energies and descends.
    fn visit(&self, path: Path, u: &ComplexImage, acc: &mut Subtree) -> Result<()> {
        let m = path.order();
        let spectrum = ModulatedSpectrum::new(u, self.orders)?;
        let s = modulus(&spectrum.filter_undemodulated(self.bank.phi_hat())?);
        acc.windowed[m] += s.norm_sq();
        acc.propagated[m] += u.norm_sq();
        let children = self.children(&path);
        if m < self.max_order {
            acc.nodes.push((path.clone(), s));
            for step in children {
                let child = modulus(&spectrum.filter_undemodulated(self.bank.psi_hat(step.scale, step.angle))?);
                self.visit(path.child(step), &child.to_complex(), acc)?;
            }
        } else {
            acc.nodes.push((path, s));
            for step in children {
                acc.residual += spectrum.filtered_energy(self.bank.psi_hat(step.scale, step.angle))?;
            }
        }
        Ok(())
    }
}

/// Windowed fractional scattering of `x` over every frequency-decreasing
/// path up to the bank's `max_order`.
///
/// First-order subtrees run in parallel; partial sums are merged in path
/// order, so results are bit-identical for any thread count.
pub fn scatter(x: &RealImage, bank: &FilterBank, orders: FractionalOrderPair) -> Result<ScatteringResult> {
    ensure_same_dims(bank.dims(), x.dims())?;
    orders.validate()?;
    let max_order = bank.spec().max_order;
    let cascade = Cascade { bank, orders, max_order };
    let root = x.to_complex();
    let spectrum = ModulatedSpectrum::new(&root, orders)?;

    let mut total = Subtree::new(max_order);
    let s0 = modulus(&spectrum.filter_undemodulated(bank.phi_hat())?);
    total.windowed[0] = s0.norm_sq();
    total.propagated[0] = root.norm_sq();
    total.nodes.push((Path::empty(), s0));

    let first = cascade.children(&Path::empty());
    if max_order == 0 {
        for step in &first {
            total.residual += spectrum.filtered_energy(bank.psi_hat(step.scale, step.angle))?;
        }
    } else {
        let subtrees = first
            .par_iter()
            .map(|&step| {
                let u = modulus(&spectrum.filter_undemodulated(bank.psi_hat(step.scale, step.angle))?);
                let mut acc = Subtree::new(max_order);
                cascade.visit(Path::empty().child(step), &u.to_complex(), &mut acc)?;
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        for s in subtrees {
            total.absorb(s);
        }
    }

    total.nodes.sort_by(|a, b| a.0.cmp(&b.0));
    let (paths, coefficients) = total.nodes.into_iter().unzip();
    let ledger = (0..=max_order)
        .map(|m| LayerEnergy { order: m, windowed: total.windowed[m], propagated: total.propagated[m] })
        .collect();
    Ok(ScatteringResult { paths, coefficients, ledger, residual: total.residual, orders })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub order: usize,
    /// `sum_{|p| <= m} ||S[p]x||^2 / ||x||^2`
    pub captured: f64,
    /// `sum_{|p| = m + 1} ||U[p]x||^2 / ||x||^2`
    pub residual: f64,
}

/// Per-order captured and residual energy fractions.
pub fn energy_report(result: &ScatteringResult, input_norm_sq: f64) -> Result<Vec<EnergyRow>> {
    if !(input_norm_sq > 0.0) {
        return Err(Error::InvalidInput(format!("input energy must be positive, got {input_norm_sq}")));
    }
    let ledger = result.ledger();
    let mut captured = 0.0;
    let mut rows = Vec::with_capacity(ledger.len());
    for (m, layer) in ledger.iter().enumerate() {
        captured += layer.windowed;
        let residual = ledger.get(m + 1).map_or(result.residual, |next| next.propagated);
        rows.push(EnergyRow { order: m, captured: captured / input_norm_sq, residual: residual / input_norm_sq });
    }
    Ok(rows)
}

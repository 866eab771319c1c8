//! Physical configuration of the cavity array and its emitters, and the exact
//! single-excitation Hamiltonian on a finite open chain.
//!
//! Basis ordering used throughout the crate: cavity sites `0..n_cavities`
//! first, then one entry per emitter in position order.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cavity-array waveguide: on-site frequency `omega0`, hopping `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub omega0: f64,
    pub xi: f64,
    /// Length of the finite open chain used for real-space dynamics.
    pub n_cavities: usize,
    /// Number of plane-wave modes in discrete momentum sums.
    pub n_k: usize,
}

impl Default for LatticeParams {
    fn default() -> Self {
        LatticeParams {
            omega0: 0.0,
            xi: 1.0,
            n_cavities: 2001,
            n_k: 1 << 16,
        }
    }
}

impl LatticeParams {
    pub fn new(omega0: f64, xi: f64, n_cavities: usize, n_k: usize) -> Result<Self> {
        let lattice = LatticeParams {
            omega0,
            xi,
            n_cavities,
            n_k,
        };
        lattice.validate()?;
        Ok(lattice)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega0.is_finite() {
            return Err(Error::invalid("omega0 must be finite"));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::invalid(format!(
                "xi must be positive, got {}",
                self.xi
            )));
        }
        if self.n_cavities < 3 {
            return Err(Error::invalid(format!(
                "need at least 3 cavities, got {}",
                self.n_cavities
            )));
        }
        if self.n_k < 2 {
            return Err(Error::invalid(format!(
                "n_k must be at least 2, got {}",
                self.n_k
            )));
        }
        Ok(())
    }

    pub fn with_cavities(self, n_cavities: usize) -> Self {
        LatticeParams { n_cavities, ..self }
    }

    pub fn with_n_k(self, n_k: usize) -> Self {
        LatticeParams { n_k, ..self }
    }

    pub fn half_bandwidth(&self) -> f64 {
        2.0 * self.xi
    }

    /// Closed band `[omega0 - 2 xi, omega0 + 2 xi]`.
    pub fn band(&self) -> (f64, f64) {
        (self.omega0 - 2.0 * self.xi, self.omega0 + 2.0 * self.xi)
    }

    /// Strictly inside the band.
    pub fn in_band(&self, energy: f64) -> bool {
        (energy - self.omega0).abs() < 2.0 * self.xi
    }

    /// `omega0 - 2 xi cos k`.
    pub fn dispersion(&self, k: f64) -> f64 {
        self.omega0 - 2.0 * self.xi * k.cos()
    }

    /// Inverse of the dispersion on `[0, pi]`: the propagating wavevector
    /// resonant with `energy`.
    pub fn wavevector_of_energy(&self, energy: f64) -> Result<f64> {
        let c = (self.omega0 - energy) / (2.0 * self.xi);
        if !(-1.0..=1.0).contains(&c) {
            return Err(Error::Domain {
                energy,
                reason: "outside the band, no real wavevector",
            });
        }
        Ok(c.acos())
    }

    /// Periodic grid `k_m = 2 pi m / n_k`, `m = -n_k/2 + 1 ..= n_k/2`.
    pub fn momentum_grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_k as i64;
        let lo = -(n + 1) / 2 + 1;
        let hi = n / 2;
        (lo..=hi).map(move |m| 2.0 * PI * m as f64 / n as f64)
    }
}

/// Emitters with transition energies `deltas`, uniform coupling `g`, coupled
/// to cavities `positions` (strictly increasing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterArray {
    pub deltas: Vec<f64>,
    pub g: f64,
    pub positions: Vec<usize>,
}

impl EmitterArray {
    pub fn new(deltas: Vec<f64>, g: f64, positions: Vec<usize>) -> Result<Self> {
        let emitters = EmitterArray {
            deltas,
            g,
            positions,
        };
        emitters.validate()?;
        Ok(emitters)
    }

    /// Place emitters at relative `offsets` so that the configuration sits in
    /// the middle of a chain of `n_cavities` sites.
    pub fn centered(n_cavities: usize, offsets: &[i64], deltas: Vec<f64>, g: f64) -> Result<Self> {
        let (first, last) = match (offsets.first(), offsets.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::invalid("no emitter offsets given")),
        };
        let base = (n_cavities as i64 - 1 - (first + last)).div_euclid(2);
        let positions = offsets
            .iter()
            .map(|&o| {
                let p = base + o;
                if p < 0 || p >= n_cavities as i64 {
                    Err(Error::invalid(format!(
                        "offset {o} does not fit in a chain of {n_cavities} cavities"
                    )))
                } else {
                    Ok(p as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        EmitterArray::new(deltas, g, positions)
    }

    /// Two identical emitters separated by `separation` cavities, centred.
    pub fn centered_pair(n_cavities: usize, separation: usize, delta: f64, g: f64) -> Result<Self> {
        EmitterArray::centered(n_cavities, &[0, separation as i64], vec![delta; 2], g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::invalid("at least one emitter is required"));
        }
        if self.deltas.len() != self.positions.len() {
            return Err(Error::invalid(format!(
                "{} transition energies but {} positions",
                self.deltas.len(),
                self.positions.len()
            )));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::invalid(format!(
                "coupling must be finite and >= 0, got {}",
                self.g
            )));
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("transition energies must be finite"));
        }
        if self.positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "emitter positions must be strictly increasing",
            ));
        }
        Ok(())
    }

    pub fn validate_on(&self, lattice: &LatticeParams) -> Result<()> {
        self.validate()?;
        if let Some(&p) = self.positions.iter().find(|&&p| p >= lattice.n_cavities) {
            return Err(Error::invalid(format!(
                "emitter position {p} outside chain of {} cavities",
                lattice.n_cavities
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn identical(&self) -> bool {
        self.deltas.windows(2).all(|w| w[0] == w[1])
    }

    /// `n_2 - n_1` for an emitter pair.
    pub fn separation(&self) -> Result<usize> {
        match self.positions.as_slice() {
            [a, b] => Ok(b - a),
            _ => Err(Error::UnsupportedEmitterCount {
                expected: "2",
                got: self.len(),
            }),
        }
    }

    /// Distance between the outermost emitters.
    pub fn span(&self) -> usize {
        match (self.positions.first(), self.positions.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        EmitterArray { g, ..self.clone() }
    }
}

/// Symmetric (`Plus`) or antisymmetric (`Minus`) two-emitter matter state
/// `(|L> +- |R>)/sqrt 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    Plus,
    Minus,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::Plus, Sector::Minus];

    /// `+1` or `-1`.
    pub fn sign(self) -> f64 {
        match self {
            Sector::Plus => 1.0,
            Sector::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sector {
        match self {
            Sector::Plus => Sector::Minus,
            Sector::Minus => Sector::Plus,
        }
    }

    pub fn matter_vector(self) -> [f64; 2] {
        [FRAC_1_SQRT_2, self.sign() * FRAC_1_SQRT_2]
    }

    pub fn label(self) -> &'static str {
        match self {
            Sector::Plus => "+",
            Sector::Minus => "-",
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Collective parity states of three symmetrically placed emitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParityState {
    /// `(|L> + |C> + |R>)/sqrt 3`
    Even1,
    /// `(|L> - 2|C> + |R>)/sqrt 6`
    Even2,
    /// `(|L> - |R>)/sqrt 2`
    Odd,
}

impl ParityState {
    pub const ALL: [ParityState; 3] = [ParityState::Even1, ParityState::Even2, ParityState::Odd];

    pub fn matter_vector(self) -> [f64; 3] {
        match self {
            ParityState::Even1 => {
                let a = 1.0 / 3f64.sqrt();
                [a, a, a]
            }
            ParityState::Even2 => {
                let a = 1.0 / 6f64.sqrt();
                [a, -2.0 * a, a]
            }
            ParityState::Odd => [FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ParityState::Even1 => "even1",
            ParityState::Even2 => "even2",
            ParityState::Odd => "odd",
        }
    }
}

/// A state in the single-excitation manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleExcitationState {
    pub emitter_amps: Vec<Complex64>,
    pub photon_amps: Vec<Complex64>,
}

impl SingleExcitationState {
    pub fn from_emitter_amps(emitter_amps: Vec<Complex64>, n_cavities: usize) -> Self {
        SingleExcitationState {
            emitter_amps,
            photon_amps: vec![Complex64::new(0.0, 0.0); n_cavities],
        }
    }

    fn from_real_matter(matter: &[f64], n_cavities: usize) -> Self {
        Self::from_emitter_amps(
            matter.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
            n_cavities,
        )
    }

    /// Only emitter `j` excited.
    pub fn emitter_excited(n_emitters: usize, n_cavities: usize, j: usize) -> Result<Self> {
        if j >= n_emitters {
            return Err(Error::invalid(format!(
                "emitter index {j} out of range 0..{n_emitters}"
            )));
        }
        let mut matter = vec![0.0; n_emitters];
        matter[j] = 1.0;
        Ok(Self::from_real_matter(&matter, n_cavities))
    }

    pub fn sector(sector: Sector, n_cavities: usize) -> Self {
        Self::from_real_matter(&sector.matter_vector(), n_cavities)
    }

    pub fn parity(state: ParityState, n_cavities: usize) -> Self {
        Self::from_real_matter(&state.matter_vector(), n_cavities)
    }

    /// Equal-weight superposition of all emitters.
    pub fn symmetric(n_emitters: usize, n_cavities: usize) -> Self {
        let a = 1.0 / (n_emitters as f64).sqrt();
        Self::from_real_matter(&vec![a; n_emitters], n_cavities)
    }

    /// Split a basis-ordered vector (cavities, then emitters).
    pub fn from_vector(v: &[Complex64], n_cavities: usize) -> Self {
        SingleExcitationState {
            photon_amps: v[..n_cavities].to_vec(),
            emitter_amps: v[n_cavities..].to_vec(),
        }
    }

    pub fn to_vector(&self) -> Vec<Complex64> {
        self.photon_amps
            .iter()
            .chain(&self.emitter_amps)
            .copied()
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.photon_amps.len() + self.emitter_amps.len()
    }

    pub fn emitter_weight(&self) -> f64 {
        self.emitter_amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn photon_weight(&self) -> f64 {
        self.photon_amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.emitter_weight() + self.photon_weight()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero state"));
        }
        for a in self
            .emitter_amps
            .iter_mut()
            .chain(self.photon_amps.iter_mut())
        {
            *a /= n;
        }
        Ok(self)
    }

    /// Mirror image under `n -> n_cavities - 1 - n`, emitter order reversed.
    pub fn mirrored(&self) -> Self {
        SingleExcitationState {
            emitter_amps: self.emitter_amps.iter().rev().copied().collect(),
            photon_amps: self.photon_amps.iter().rev().copied().collect(),
        }
    }
}

/// `<s|H0|s>` for a two-emitter sector state.
pub fn sector_energy(emitters: &EmitterArray, _sector: Sector) -> Result<f64> {
    match emitters.deltas.as_slice() {
        // |+-> have equal weight on both emitters, so the bare energy is the
        // mean transition energy in either sector
        [d1, d2] => Ok(0.5 * (d1 + d2)),
        _ => Err(Error::UnsupportedEmitterCount {
            expected: "2",
            got: emitters.len(),
        }),
    }
}

/// Sparse view of the real-space single-excitation Hamiltonian: cavity
/// diagonal `omega0`, nearest-neighbour hopping `-xi`, emitter diagonal
/// `delta_j`, emitter-cavity element `g` at site `n_j`.
#[derive(Debug, Clone)]
pub struct ChainHamiltonian {
    pub lattice: LatticeParams,
    pub emitters: EmitterArray,
}

impl ChainHamiltonian {
    pub fn new(lattice: LatticeParams, emitters: EmitterArray) -> Result<Self> {
        lattice.validate()?;
        emitters.validate_on(&lattice)?;
        Ok(ChainHamiltonian { lattice, emitters })
    }

    pub fn dim(&self) -> usize {
        self.lattice.n_cavities + self.emitters.len()
    }

    pub fn dense(&self) -> Array2<f64> {
        let n = self.lattice.n_cavities;
        let dim = self.dim();
        let mut h = Array2::zeros((dim, dim));
        for i in 0..n {
            h[[i, i]] = self.lattice.omega0;
        }
        for i in 0..n - 1 {
            h[[i, i + 1]] = -self.lattice.xi;
            h[[i + 1, i]] = -self.lattice.xi;
        }
        for (j, (&delta, &pos)) in self
            .emitters
            .deltas
            .iter()
            .zip(&self.emitters.positions)
            .enumerate()
        {
            let e = n + j;
            h[[e, e]] = delta;
            h[[e, pos]] = self.emitters.g;
            h[[pos, e]] = self.emitters.g;
        }
        h
    }

    /// `out = H psi`.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let n = self.lattice.n_cavities;
        let (w0, xi, g) = (self.lattice.omega0, self.lattice.xi, self.emitters.g);
        for i in 0..n {
            let mut acc = psi[i] * w0;
            if i > 0 {
                acc -= psi[i - 1] * xi;
            }
            if i + 1 < n {
                acc -= psi[i + 1] * xi;
            }
            out[i] = acc;
        }
        for (j, (&delta, &pos)) in self
            .emitters
            .deltas
            .iter()
            .zip(&self.emitters.positions)
            .enumerate()
        {
            let e = n + j;
            out[e] = psi[e] * delta + psi[pos] * g;
            out[pos] += psi[e] * g;
        }
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let (w0, xi, g) = (self.lattice.omega0, self.lattice.xi, self.emitters.g);
        let mut lo = w0 - 2.0 * xi - g;
        let mut hi = w0 + 2.0 * xi + g;
        for &d in &self.emitters.deltas {
            lo = lo.min(d - g);
            hi = hi.max(d + g);
        }
        (lo, hi)
    }
}

/// Dense single-excitation Hamiltonian (dimension `n_cavities + n_emitters`).
pub fn build_hamiltonian(lattice: &LatticeParams, emitters: &EmitterArray) -> Result<Array2<f64>> {
    Ok(ChainHamiltonian::new(*lattice, emitters.clone())?.dense())
}

/// Minimal chain length keeping the light cone (group velocity <= 2 xi) off
/// the boundaries up to `t_max`, with 25 spare cavities on each side.
pub fn required_cavities(t_max: f64, span: usize, xi: f64) -> usize {
    2 * (2.0 * xi * t_max).ceil() as usize + span + 50
}

/// Reject configurations where the light cone reaches a chain boundary
/// before `t_max`.
pub fn check_light_cone(
    lattice: &LatticeParams,
    emitters: &EmitterArray,
    t_max: f64,
) -> Result<()> {
    let reach = 2.0 * lattice.xi * t_max + 24.0;
    let first = *emitters.positions.first().unwrap_or(&0) as f64;
    let last = *emitters.positions.last().unwrap_or(&0) as f64;
    let left = first;
    let right = (lattice.n_cavities - 1) as f64 - last;
    if left.min(right) < reach {
        return Err(Error::ChainTooShort {
            t_max,
            min_cavities: required_cavities(t_max, emitters.span(), lattice.xi),
        });
    }
    Ok(())
}

//! Sector self-energies of an emitter pair, their spectral density, and the
//! pole function whose real zeros are the bound states.
//!
//! Conventions: retarded branch `E + i0+` with `exp(-iEt)` time evolution, so
//! in-band self-energies have `Im <= 0`. With `k(E)` the propagating wavevector
//! (`omega_k = E`) and `J(E) = g^2 / sqrt(4 xi^2 - (E - omega0)^2)`,
//!
//! ```text
//! Sigma_s(E + i0) = -i J(E) (1 + s e^{i k(E) x}),   s = +1 / -1
//! ```
//!
//! Outside the band the continuation is real. With `d = |E - omega0| - 2 xi`
//! and `2 xi sinh(kappa) = sqrt(d (4 xi + d))`,
//!
//! ```text
//! Sigma_s = sigma g^2 (1 + s p e^{-kappa x}) / sqrt(d (4 xi + d))
//! ```
//!
//! where `sigma = -1` below the band and `+1` above, and `p = 1` below, `(-1)^x`
//! above. The combination with `s p = -1` stays finite at the band edge and is
//! evaluated through `expm1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sector_energy, EmitterArray, LatticeParams, Sector};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Finite-difference step for `dF/dE`, in units of `xi`.
pub const DERIVATIVE_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    InBand,
    BelowBand,
    AboveBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BandSide {
    Below,
    Above,
}

impl BandSide {
    /// `-1` below, `+1` above.
    pub fn sign(self) -> f64 {
        match self {
            BandSide::Below => -1.0,
            BandSide::Above => 1.0,
        }
    }

    pub fn edge(self, lattice: &LatticeParams) -> f64 {
        lattice.omega0 + self.sign() * 2.0 * lattice.xi
    }

    /// Energy at `depth` outside this band edge.
    pub fn energy_at_depth(self, depth: f64, lattice: &LatticeParams) -> f64 {
        lattice.omega0 + self.sign() * (2.0 * lattice.xi + depth)
    }

    /// The edge closest to `energy` (upper edge on ties).
    pub fn nearest(energy: f64, lattice: &LatticeParams) -> BandSide {
        if energy >= lattice.omega0 {
            BandSide::Above
        } else {
            BandSide::Below
        }
    }

    pub fn regime(self) -> Regime {
        match self {
            BandSide::Below => Regime::BelowBand,
            BandSide::Above => Regime::AboveBand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfEnergyValue {
    pub value: Complex64,
    pub regime: Regime,
    pub sector: Sector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleFunctionValue {
    pub value: Complex64,
    pub derivative: Option<Complex64>,
}

/// Regime of `energy`; the band edges themselves are rejected.
pub fn regime(energy: f64, lattice: &LatticeParams) -> Result<Regime> {
    let e = energy - lattice.omega0;
    let w = 2.0 * lattice.xi;
    if !energy.is_finite() {
        Err(Error::Domain {
            energy,
            reason: "not finite",
        })
    } else if e.abs() < w {
        Ok(Regime::InBand)
    } else if e < -w {
        Ok(Regime::BelowBand)
    } else if e > w {
        Ok(Regime::AboveBand)
    } else {
        Err(Error::Domain {
            energy,
            reason: "band edge",
        })
    }
}

/// `J(E) = g^2 / sqrt(4 xi^2 - (E - omega0)^2)` inside the band.
pub fn spectral_density(energy: f64, lattice: &LatticeParams, g: f64) -> Result<f64> {
    let e = energy - lattice.omega0;
    let w = 2.0 * lattice.xi;
    if e.abs() >= w || !energy.is_finite() {
        return Err(Error::Domain {
            energy,
            reason: "spectral density is defined strictly inside the band",
        });
    }
    Ok(g * g / ((w - e) * (w + e)).sqrt())
}

/// Closed-form retarded self-energy inside the band.
pub fn self_energy_in_band(
    energy: f64,
    x: usize,
    sector: Sector,
    lattice: &LatticeParams,
    g: f64,
) -> Result<SelfEnergyValue> {
    let j = spectral_density(energy, lattice, g)?;
    let k = lattice.wavevector_of_energy(energy)?;
    let phase = Complex64::from_polar(1.0, k * x as f64);
    Ok(SelfEnergyValue {
        value: -I * j * (1.0 + sector.sign() * phase),
        regime: Regime::InBand,
        sector,
    })
}

/// Real self-energy at `depth > 0` outside the band edge on `side`.
pub fn self_energy_at_depth(
    side: BandSide,
    depth: f64,
    x: usize,
    sector: Sector,
    lattice: &LatticeParams,
    g: f64,
) -> f64 {
    let xi = lattice.xi;
    // 2 xi sinh(kappa), exact in terms of the depth
    let root = (depth * (4.0 * xi + depth)).sqrt();
    // sinh(kappa / 2) = sqrt(d / 4 xi)
    let kappa = 2.0 * (depth / (4.0 * xi)).sqrt().asinh();
    let parity = match side {
        BandSide::Below => 1.0,
        BandSide::Above => {
            if x % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    let decay_x = -kappa * x as f64;
    let combo = if sector.sign() * parity > 0.0 {
        1.0 + decay_x.exp()
    } else {
        -decay_x.exp_m1()
    };
    side.sign() * g * g * combo / root
}

/// Closed-form self-energy outside the band (real).
pub fn self_energy_outside(
    energy: f64,
    x: usize,
    sector: Sector,
    lattice: &LatticeParams,
    g: f64,
) -> Result<SelfEnergyValue> {
    let side = match regime(energy, lattice)? {
        Regime::BelowBand => BandSide::Below,
        Regime::AboveBand => BandSide::Above,
        Regime::InBand => {
            return Err(Error::Domain {
                energy,
                reason: "inside the band; use the in-band closed form",
            })
        }
    };
    let depth = (energy - lattice.omega0).abs() - 2.0 * lattice.xi;
    let value = self_energy_at_depth(side, depth, x, sector, lattice, g);
    Ok(SelfEnergyValue {
        value: Complex64::new(value, 0.0),
        regime: side.regime(),
        sector,
    })
}

/// Closed-form self-energy in whichever regime `energy` falls.
pub fn self_energy(
    energy: f64,
    x: usize,
    sector: Sector,
    lattice: &LatticeParams,
    g: f64,
) -> Result<SelfEnergyValue> {
    match regime(energy, lattice)? {
        Regime::InBand => self_energy_in_band(energy, x, sector, lattice, g),
        _ => self_energy_outside(energy, x, sector, lattice, g),
    }
}

/// Behaviour of the self-energy as the band edge is approached from outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeLimit {
    /// Diverges like `1/sqrt(depth)` with the sign of the side.
    Divergent,
    /// Interference makes the limit finite.
    Finite(f64),
}

pub fn edge_limit(
    side: BandSide,
    x: usize,
    sector: Sector,
    lattice: &LatticeParams,
    g: f64,
) -> EdgeLimit {
    let parity = match side {
        BandSide::Above if x % 2 == 1 => -1.0,
        _ => 1.0,
    };
    if sector.sign() * parity > 0.0 {
        EdgeLimit::Divergent
    } else {
        // (1 - e^{-kappa x}) / (2 xi sinh kappa) -> x / (2 xi)
        EdgeLimit::Finite(side.sign() * g * g * x as f64 / (2.0 * lattice.xi))
    }
}

/// Analytic continuation of the self-energy to complex `z` (`Im z > 0`, or
/// real `z` outside the band), from the lattice Green function
/// `G_x(z) = w^x / (xi (w - 1/w))` with `w` the root of
/// `xi w^2 + (z - omega0) w + xi = 0` inside the unit circle.
pub fn self_energy_complex(
    z: Complex64,
    x: usize,
    sector: Sector,
    lattice: &LatticeParams,
    g: f64,
) -> Result<Complex64> {
    if z.im < 0.0
        || (z.im == 0.0 && lattice.in_band(z.re))
        || !(z.re.is_finite() && z.im.is_finite())
    {
        return Err(Error::Domain {
            energy: z.re,
            reason: "continuation needs Im z > 0 or real z outside the band",
        });
    }
    let xi = lattice.xi;
    let b = z - lattice.omega0;
    let disc = (b * b - 4.0 * xi * xi).sqrt();
    let w1 = (-b + disc) / (2.0 * xi);
    let w2 = (-b - disc) / (2.0 * xi);
    let w = if w1.norm() < w2.norm() { w1 } else { w2 };
    if (w.norm() - 1.0).abs() < 1e-15 {
        return Err(Error::Domain {
            energy: z.re,
            reason: "on the branch cut",
        });
    }
    let denom = xi * (w - w.inv());
    let g0 = 1.0 / denom;
    let gx = w.powi(x as i32) / denom;
    Ok(g * g * (g0 + sector.sign() * gx))
}

/// Discrete momentum sum
/// `(1/2) sum_k |g_1k +- g_2k|^2 / (E + i eta - omega_k)`
/// over the periodic `n_k` grid, with `g_jk = g e^{i k n_j} / sqrt(n_k)`.
///
/// `eta = 0` is allowed only outside the band, where the sum is regular.
pub fn self_energy_numeric(
    energy: f64,
    eta: f64,
    x: usize,
    sector: Sector,
    lattice: &LatticeParams,
    g: f64,
) -> Result<Complex64> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!(
            "broadening must be >= 0, got {eta}"
        )));
    }
    if eta == 0.0 && regime(energy, lattice)? == Regime::InBand {
        return Err(Error::invalid(
            "in-band momentum sum needs a positive broadening",
        ));
    }
    let z = Complex64::new(energy, eta);
    let s = sector.sign();
    let xf = x as f64;
    // chunked accumulation keeps the rounding error of the long sum small
    let mut total = Complex64::new(0.0, 0.0);
    let mut chunk = Complex64::new(0.0, 0.0);
    for (m, k) in lattice.momentum_grid().enumerate() {
        chunk += (1.0 + s * (k * xf).cos()) / (z - lattice.dispersion(k));
        if m % 1024 == 1023 {
            total += chunk;
            chunk = Complex64::new(0.0, 0.0);
        }
    }
    total += chunk;
    Ok(total * (g * g / lattice.n_k as f64))
}

fn pair_geometry(emitters: &EmitterArray, sector: Sector) -> Result<(usize, f64)> {
    let x = emitters.separation()?;
    let eps = sector_energy(emitters, sector)?;
    Ok((x, eps))
}

/// `F_s(E) = E - eps_s - Sigma_s(E)`, optionally with `dF/dE` by central
/// differences (step `1e-6 xi`, shrunk to stay inside the regime of `E`).
pub fn pole_function(
    energy: f64,
    sector: Sector,
    emitters: &EmitterArray,
    lattice: &LatticeParams,
    with_derivative: bool,
) -> Result<PoleFunctionValue> {
    let (x, eps) = pair_geometry(emitters, sector)?;
    let g = emitters.g;
    let f = |e: f64| -> Result<Complex64> {
        Ok(e - eps - self_energy(e, x, sector, lattice, g)?.value)
    };
    let value = f(energy)?;
    let derivative = if with_derivative {
        let gap = (2.0 * lattice.xi - (energy - lattice.omega0).abs()).abs();
        let h = (DERIVATIVE_STEP * lattice.xi).min(0.25 * gap);
        Some((f(energy + h)? - f(energy - h)?) / (2.0 * h))
    } else {
        None
    };
    Ok(PoleFunctionValue { value, derivative })
}

/// Pole function at `depth` outside the edge on `side`, returning
/// `(F, dF/dE)`. Working in the depth keeps full resolution arbitrarily close
/// to the edge, where `E` itself rounds onto the edge.
pub fn pole_function_at_depth(
    side: BandSide,
    depth: f64,
    sector: Sector,
    emitters: &EmitterArray,
    lattice: &LatticeParams,
) -> Result<(f64, f64)> {
    if !(depth > 0.0) {
        return Err(Error::Domain {
            energy: side.edge(lattice),
            reason: "band edge",
        });
    }
    let (x, eps) = pair_geometry(emitters, sector)?;
    let g = emitters.g;
    let offset = side.edge(lattice) - eps;
    let f =
        |d: f64| offset + side.sign() * d - self_energy_at_depth(side, d, x, sector, lattice, g);
    let h = (DERIVATIVE_STEP * lattice.xi).min(0.25 * depth);
    let dfdd = (f(depth + h) - f(depth - h)) / (2.0 * h);
    Ok((f(depth), side.sign() * dfdd))
}

/// One row of the `F_+-(E)` curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleSample {
    pub energy: f64,
    pub plus: Complex64,
    pub minus: Complex64,
}

/// Sample both pole functions on `energies`, skipping exact band edges.
pub fn sample_pole_functions(
    energies: &[f64],
    emitters: &EmitterArray,
    lattice: &LatticeParams,
) -> Result<Vec<PoleSample>> {
    let mut out = Vec::with_capacity(energies.len());
    for &e in energies {
        if regime(e, lattice).is_err() {
            continue;
        }
        out.push(PoleSample {
            energy: e,
            plus: pole_function(e, Sector::Plus, emitters, lattice, false)?.value,
            minus: pole_function(e, Sector::Minus, emitters, lattice, false)?.value,
        });
    }
    Ok(out)
}

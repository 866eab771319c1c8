//! Exact single-excitation dynamics on the finite chain and the bound-state
//! prediction for its long-time limit.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::{s, Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bound::BoundState;
use crate::error::{Error, Result};
use crate::model::{
    check_light_cone, EmitterArray, LatticeParams, ParityState, Sector, SingleExcitationState,
};
use crate::spectrum::Spectrum;

/// Times propagated per matrix product.
const TIME_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Record `|c_n(t)|^2` for every cavity.
    pub field_map: bool,
    /// Record the field map on every `field_stride`-th time only.
    pub field_stride: usize,
    /// Refuse chains whose ends are reached by the light cone.
    pub enforce_light_cone: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            field_map: false,
            field_stride: 1,
            enforce_light_cone: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub n_cavities: usize,
    /// `[time][emitter]`
    pub emitter_amps: Vec<Vec<Complex64>>,
    /// `sum_i |c_i(t)|^2` over the full basis.
    pub norm: Vec<f64>,
    /// Rows are `field_times`, columns cavities.
    pub field_map: Option<Array2<f64>>,
    pub field_times: Vec<f64>,
}

/// Projection used for reported populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionBasis {
    /// One population per emitter.
    Site,
    /// `+`/`-` for two emitters, parity states for three.
    Sector,
}

/// Named population time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    pub labels: Vec<String>,
    /// `[channel][time]`
    pub values: Vec<Vec<f64>>,
}

impl Populations {
    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.values[i].as_slice())
    }
}

/// Site labels used in outputs.
pub fn site_labels(n_emitters: usize) -> Vec<String> {
    match n_emitters {
        2 => vec!["L".into(), "R".into()],
        3 => vec!["L".into(), "C".into(), "R".into()],
        n => (0..n).map(|j| j.to_string()).collect(),
    }
}

/// Collective matter states for the sector projection.
pub fn sector_channels(n_emitters: usize) -> Result<Vec<(String, Vec<f64>)>> {
    match n_emitters {
        2 => Ok(Sector::BOTH
            .iter()
            .map(|s| (s.label().to_string(), s.matter_vector().to_vec()))
            .collect()),
        3 => Ok(ParityState::ALL
            .iter()
            .map(|p| (p.label().to_string(), p.matter_vector().to_vec()))
            .collect()),
        n => Err(Error::UnsupportedEmitterCount {
            expected: "2 or 3",
            got: n,
        }),
    }
}

/// One unit matter vector per emitter.
pub fn site_channels(n_emitters: usize) -> Vec<(String, Vec<f64>)> {
    site_labels(n_emitters)
        .into_iter()
        .enumerate()
        .map(|(j, l)| {
            let mut v = vec![0.0; n_emitters];
            v[j] = 1.0;
            (l, v)
        })
        .collect()
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_emitters(&self) -> usize {
        self.emitter_amps.first().map_or(0, |a| a.len())
    }

    /// `|<m|c(t)>|^2` for a real matter combination `m`.
    pub fn project(&self, matter: &[f64]) -> Vec<f64> {
        self.emitter_amps
            .iter()
            .map(|amps| {
                amps.iter()
                    .zip(matter)
                    .map(|(a, m)| a * *m)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect()
    }

    pub fn populations(&self, basis: ProjectionBasis) -> Result<Populations> {
        let channels = match basis {
            ProjectionBasis::Site => site_channels(self.n_emitters()),
            ProjectionBasis::Sector => sector_channels(self.n_emitters())?,
        };
        Ok(Populations {
            labels: channels.iter().map(|(l, _)| l.clone()).collect(),
            values: channels.iter().map(|(_, m)| self.project(m)).collect(),
        })
    }

    /// Largest `|norm(t) - 1|`.
    pub fn max_norm_error(&self) -> f64 {
        self.norm.iter().fold(0.0, |m, n| m.max((n - 1.0).abs()))
    }

    /// Times at or after `t0`, with their indices.
    pub fn window(&self, t0: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.times
            .iter()
            .copied()
            .enumerate()
            .filter(move |(_, t)| *t >= t0)
    }
}

/// Sector or parity populations of a trajectory.
pub fn sector_projection(trajectory: &Trajectory, basis: ProjectionBasis) -> Result<Populations> {
    trajectory.populations(basis)
}

/// Field occupation `|c_n(t)|^2`, if it was recorded.
pub fn field_occupation(trajectory: &Trajectory) -> Option<&Array2<f64>> {
    trajectory.field_map.as_ref()
}

/// `t_transient = 10 x / (2 xi)`: ten light-crossing times of the pair.
pub fn transient_cutoff(separation: usize, xi: f64) -> f64 {
    10.0 * separation as f64 / (2.0 * xi)
}

pub(crate) fn check_initial(
    initial: &SingleExcitationState,
    lattice: &LatticeParams,
    emitters: &EmitterArray,
) -> Result<()> {
    if initial.photon_amps.len() != lattice.n_cavities
        || initial.emitter_amps.len() != emitters.len()
    {
        return Err(Error::invalid(format!(
            "initial state has {}+{} amplitudes, chain needs {}+{}",
            initial.photon_amps.len(),
            initial.emitter_amps.len(),
            lattice.n_cavities,
            emitters.len()
        )));
    }
    if !initial.is_normalized() {
        return Err(Error::invalid(format!(
            "initial state has norm^2 {}",
            initial.norm_sqr()
        )));
    }
    Ok(())
}

pub(crate) fn check_times(times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::invalid("no output times"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("times must be finite and non-negative"));
    }
    Ok(times.iter().fold(0.0, |m: f64, t| m.max(*t)))
}

/// Propagation through the full eigendecomposition:
/// `c(t) = V exp(-i E t) V^T c(0)`.
#[derive(Debug, Clone)]
pub struct Propagator {
    spectrum: Spectrum,
}

impl Propagator {
    pub fn new(lattice: &LatticeParams, emitters: &EmitterArray) -> Result<Self> {
        Ok(Propagator {
            spectrum: Spectrum::new(lattice, emitters)?,
        })
    }

    pub fn from_spectrum(spectrum: Spectrum) -> Self {
        Propagator { spectrum }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn evolve(
        &self,
        initial: &SingleExcitationState,
        times: &[f64],
        opts: &EvolveOptions,
    ) -> Result<Trajectory> {
        let sp = &self.spectrum;
        check_initial(initial, &sp.lattice, &sp.emitters)?;
        let t_max = check_times(times)?;
        if opts.enforce_light_cone {
            check_light_cone(&sp.lattice, &sp.emitters, t_max)?;
        }
        let n = sp.lattice.n_cavities;
        let dim = sp.dim();
        let stride = opts.field_stride.max(1);
        let v = &sp.vectors;
        let c0 = initial.to_vector();
        let re0 = ndarray::Array1::from_iter(c0.iter().map(|c| c.re));
        let im0 = ndarray::Array1::from_iter(c0.iter().map(|c| c.im));
        // eigenbasis coefficients
        let a_re = v.t().dot(&re0);
        let a_im = v.t().dot(&im0);

        let field_rows: Vec<usize> = (0..times.len()).filter(|i| i % stride == 0).collect();
        let mut field = opts
            .field_map
            .then(|| Array2::<f64>::zeros((field_rows.len(), n)));
        let mut emitter_amps = Vec::with_capacity(times.len());
        let mut norm = Vec::with_capacity(times.len());

        for (block, chunk) in times.chunks(TIME_BLOCK).enumerate() {
            let b = chunk.len();
            let mut p_re = Array2::<f64>::zeros((dim, b));
            let mut p_im = Array2::<f64>::zeros((dim, b));
            for q in 0..dim {
                let a = Complex64::new(a_re[q], a_im[q]);
                let e = sp.energies[q];
                for (j, &t) in chunk.iter().enumerate() {
                    let z = a * Complex64::from_polar(1.0, -e * t);
                    p_re[[q, j]] = z.re;
                    p_im[[q, j]] = z.im;
                }
            }
            let y_re = v.dot(&p_re);
            let y_im = v.dot(&p_im);
            for j in 0..b {
                let idx = block * TIME_BLOCK + j;
                let col_re = y_re.index_axis(Axis(1), j);
                let col_im = y_im.index_axis(Axis(1), j);
                norm.push(
                    col_re
                        .iter()
                        .zip(col_im.iter())
                        .map(|(r, i)| r * r + i * i)
                        .sum(),
                );
                emitter_amps.push(
                    (n..dim)
                        .map(|i| Complex64::new(col_re[i], col_im[i]))
                        .collect(),
                );
                if let Some(f) = field.as_mut() {
                    if idx % stride == 0 {
                        let mut row = f.row_mut(idx / stride);
                        for i in 0..n {
                            row[i] = col_re[i] * col_re[i] + col_im[i] * col_im[i];
                        }
                    }
                }
            }
        }
        Ok(Trajectory {
            times: times.to_vec(),
            n_cavities: n,
            emitter_amps,
            norm,
            field_times: if opts.field_map {
                field_rows.iter().map(|&i| times[i]).collect()
            } else {
                vec![]
            },
            field_map: field,
        })
    }
}

/// Diagonalize and propagate `initial` to every time in `times`.
pub fn evolve(
    initial: &SingleExcitationState,
    lattice: &LatticeParams,
    emitters: &EmitterArray,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    check_initial(initial, lattice, emitters)?;
    let t_max = check_times(times)?;
    if opts.enforce_light_cone {
        check_light_cone(lattice, emitters, t_max)?;
    }
    Propagator::new(lattice, emitters)?.evolve(initial, times, opts)
}

/// Three identical emitters at symmetric `offsets` (relative to the centre of
/// the chain) started in `initial`.
pub fn three_emitter_parity_run(
    lattice: &LatticeParams,
    offsets: [i64; 3],
    delta: f64,
    g: f64,
    initial: ParityState,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if offsets[0] + offsets[2] != 2 * offsets[1] || offsets[0] >= offsets[1] {
        return Err(Error::invalid(format!(
            "three-emitter parity run needs increasing, mirror-symmetric offsets, got {offsets:?}"
        )));
    }
    let emitters = EmitterArray::centered(lattice.n_cavities, &offsets, vec![delta; 3], g)?;
    let psi = SingleExcitationState::parity(initial, lattice.n_cavities);
    evolve(&psi, lattice, &emitters, times, opts)
}

// ---------------------------------------------------------------------------
// long-time prediction

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub energy: f64,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub label: String,
    pub modes: Vec<Mode>,
}

impl Channel {
    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|m| m.amplitude * Complex64::from_polar(1.0, -m.energy * t))
            .sum()
    }

    pub fn population(&self, t: f64) -> f64 {
        self.amplitude(t).norm_sqr()
    }

    /// Time average of the population.
    pub fn mean_population(&self) -> f64 {
        self.modes.iter().map(|m| m.amplitude.norm_sqr()).sum()
    }

    /// Distinct `|E_a - E_b|` between modes with non-negligible weight,
    /// ascending.
    pub fn beat_frequencies(&self) -> Vec<f64> {
        let live: Vec<&Mode> = self
            .modes
            .iter()
            .filter(|m| m.amplitude.norm() > 1e-6)
            .collect();
        let mut f = Vec::new();
        for (i, a) in live.iter().enumerate() {
            for b in &live[i + 1..] {
                let w = (a.energy - b.energy).abs();
                if w > 1e-12 && !f.iter().any(|v: &f64| (v - w).abs() < 1e-12) {
                    f.push(w);
                }
            }
        }
        f.sort_by(|a, b| a.total_cmp(b));
        f
    }
}

/// Emitter amplitudes reduced to their bound-state components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticModel {
    pub channels: Vec<Channel>,
}

impl AsymptoticModel {
    pub fn channel(&self, label: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.label == label)
    }

    /// `[channel][time]`
    pub fn series(&self, times: &[f64]) -> Populations {
        Populations {
            labels: self.channels.iter().map(|c| c.label.clone()).collect(),
            values: self
                .channels
                .iter()
                .map(|c| times.iter().map(|&t| c.population(t)).collect())
                .collect(),
        }
    }
}

fn merge_modes(parts: &[(&[Mode], f64)]) -> Vec<Mode> {
    let mut out: Vec<Mode> = Vec::new();
    for (modes, coef) in parts {
        for m in *modes {
            match out.iter_mut().find(|o| o.energy == m.energy) {
                Some(o) => o.amplitude += m.amplitude * *coef,
                None => out.push(Mode {
                    energy: m.energy,
                    amplitude: m.amplitude * *coef,
                }),
            }
        }
    }
    out
}

/// Residue prediction for a pair: in each sector
/// `c_s(t) -> sum_b R_b c_s(0) exp(-i E_b t)`, summed over that sector's bound
/// states. The initial state must have no photon. Channels: `+`, `-`, `L`, `R`.
pub fn asymptotic_prediction(
    bound_states: &[BoundState],
    initial: &SingleExcitationState,
) -> Result<AsymptoticModel> {
    if initial.emitter_amps.len() != 2 {
        return Err(Error::UnsupportedEmitterCount {
            expected: "2",
            got: initial.emitter_amps.len(),
        });
    }
    if initial.photon_weight() > 1e-24 {
        return Err(Error::invalid(
            "residue prediction needs an initially empty waveguide",
        ));
    }
    let mut sectors = Vec::new();
    for s in Sector::BOTH {
        let m = s.matter_vector();
        let c0 = initial.emitter_amps[0] * m[0] + initial.emitter_amps[1] * m[1];
        let modes = bound_states
            .iter()
            .filter(|b| b.sector == s)
            .map(|b| Mode {
                energy: b.energy,
                amplitude: c0 * b.residue,
            })
            .collect::<Vec<_>>();
        sectors.push(Channel {
            label: s.label().into(),
            modes,
        });
    }
    let (p, m) = (&sectors[0].modes, &sectors[1].modes);
    let left = merge_modes(&[(p, FRAC_1_SQRT_2), (m, FRAC_1_SQRT_2)]);
    let right = merge_modes(&[(p, FRAC_1_SQRT_2), (m, -FRAC_1_SQRT_2)]);
    sectors.push(Channel {
        label: "L".into(),
        modes: left,
    });
    sectors.push(Channel {
        label: "R".into(),
        modes: right,
    });
    Ok(AsymptoticModel { channels: sectors })
}

/// Eigenvector prediction: keep the eigenstates `indices` of the finite
/// chain, `<m|c(t)> -> sum_q <m|v_q> <v_q|c(0)> exp(-i E_q t)`.
pub fn asymptotic_from_spectrum(
    spectrum: &Spectrum,
    indices: &[usize],
    initial: &SingleExcitationState,
    channels: &[(String, Vec<f64>)],
) -> Result<AsymptoticModel> {
    check_initial(initial, &spectrum.lattice, &spectrum.emitters)?;
    let n = spectrum.lattice.n_cavities;
    let c0 = initial.to_vector();
    let mut out = Vec::with_capacity(channels.len());
    for (label, matter) in channels {
        if matter.len() != spectrum.emitters.len() {
            return Err(Error::invalid(format!(
                "channel {label} has the wrong number of entries"
            )));
        }
        let modes = indices
            .iter()
            .map(|&q| {
                let col = spectrum.vectors.slice(s![.., q]);
                let overlap: Complex64 = col.iter().zip(&c0).map(|(a, c)| c * *a).sum();
                let proj: f64 = matter.iter().enumerate().map(|(j, m)| m * col[n + j]).sum();
                Mode {
                    energy: spectrum.energies[q],
                    amplitude: overlap * proj,
                }
            })
            .collect();
        out.push(Channel {
            label: label.clone(),
            modes,
        });
    }
    Ok(AsymptoticModel { channels: out })
}

/// Eigenvector prediction using explicit bound-state profiles (one mode per
/// profile), e.g. from [`crate::bound::profile_from_spectrum`].
pub fn asymptotic_from_profiles(
    bound_states: &[BoundState],
    initial: &SingleExcitationState,
    channels: &[(String, Vec<f64>)],
) -> Result<AsymptoticModel> {
    let c0 = initial.to_vector();
    let mut out = Vec::with_capacity(channels.len());
    for (label, matter) in channels {
        let mut modes = Vec::with_capacity(bound_states.len());
        for b in bound_states {
            let p = b
                .profile
                .as_ref()
                .ok_or_else(|| Error::invalid("bound state without profile"))?;
            if p.dim() != c0.len() || matter.len() != p.emitter_amps.len() {
                return Err(Error::invalid("profile does not match the initial state"));
            }
            let overlap: Complex64 = p
                .to_vector()
                .iter()
                .zip(&c0)
                .map(|(v, c)| v.conj() * c)
                .sum();
            let proj: Complex64 = matter
                .iter()
                .zip(&p.emitter_amps)
                .map(|(m, a)| a * *m)
                .sum();
            modes.push(Mode {
                energy: b.energy,
                amplitude: proj * overlap,
            });
        }
        out.push(Channel {
            label: label.clone(),
            modes,
        });
    }
    Ok(AsymptoticModel { channels: out })
}

//! The four subcommands. Each writes its files into the output directory and
//! returns what goes into the run manifest.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bswg_core::analysis::fit_amplitudes;
use bswg_core::bound::{search_bocs, BocSearchResult, ColumnBoundary, SideSelection};
use bswg_core::dynamics::{
    asymptotic_from_spectrum, asymptotic_prediction, sector_channels, site_channels,
    transient_cutoff, AsymptoticModel, Channel,
};
use bswg_core::green::sample_pole_functions;
use bswg_core::roots::linear_grid;
use bswg_core::{
    check_light_cone, find_bics, io, region_scan, BocSearch, BoundState, ChebyshevPropagator,
    EmitterArray, EvolveOptions, LatticeParams, Propagator, ScanGrid, ScanOptions,
    SingleExcitationState, Trajectory,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{AsymptoteRoute, PropagatorKind, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_cavities: usize,
    pub n_k: usize,
    /// Chain length needed to keep the light cone off the ends.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_cavities: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propagator: Option<PropagatorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_norm_error: Option<f64>,
    /// Energies of the finite-chain eigenstates classified as bound.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chain_bound_energies: Vec<f64>,
    /// BOCs closer to the band edge than the search resolves.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subresolution: Vec<String>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub bound_states: Vec<BoundState>,
    pub outputs: Vec<String>,
    pub diagnostics: Diagnostics,
}

impl Outcome {
    fn new(lattice: &LatticeParams) -> Self {
        Outcome {
            diagnostics: Diagnostics {
                n_cavities: lattice.n_cavities,
                n_k: lattice.n_k,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn write<F>(&mut self, dir: &Path, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> bswg_core::Result<()>,
    {
        let path = dir.join(name);
        let file =
            File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush()?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

fn boc_search(both_sides: bool) -> BocSearch {
    if both_sides {
        BocSearch::both_sides()
    } else {
        BocSearch {
            sides: SideSelection::Near,
            ..BocSearch::default()
        }
    }
}

fn pair_bound_states(
    emitters: &EmitterArray,
    lattice: &LatticeParams,
    both_sides: bool,
) -> Result<(Vec<BoundState>, BocSearchResult), CliError> {
    let mut states = find_bics(emitters, lattice)?;
    let bocs = search_bocs(emitters, lattice, &boc_search(both_sides))?;
    states.extend(bocs.states.iter().cloned());
    Ok((states, bocs))
}

fn subresolution_labels(res: &BocSearchResult) -> Vec<String> {
    res.subresolution
        .iter()
        .map(|(s, side)| format!("{s} {side:?}").to_lowercase())
        .collect()
}

pub fn spectrum(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let lattice = cfg.lattice()?;
    let emitters = cfg.emitters()?;
    let mut out = Outcome::new(&lattice);
    let w = 2.0 * lattice.xi;
    let lo = cfg.spectrum.e_min.unwrap_or(lattice.omega0 - 1.05 * w);
    let hi = cfg.spectrum.e_max.unwrap_or(lattice.omega0 + 1.05 * w);
    if !(lo < hi) {
        return Err(CliError::Config(format!(
            "spectrum window [{lo}, {hi}] is empty"
        )));
    }
    let samples = sample_pole_functions(
        &linear_grid(lo, hi, cfg.spectrum.points),
        &emitters,
        &lattice,
    )?;
    let (states, search) = pair_bound_states(&emitters, &lattice, cfg.spectrum.both_sides)?;
    out.write(dir, "pole_curves.csv", |w| {
        io::write_pole_curves_csv(w, &samples)
    })?;
    out.write(dir, "roots.csv", |w| io::write_roots_csv(w, &states))?;
    out.diagnostics.subresolution = subresolution_labels(&search);
    out.bound_states = states;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub separation: usize,
    pub deltas: Vec<f64>,
    pub couplings: Vec<f64>,
    /// Per emitter energy: first couplings with one and two BOCs.
    pub boundaries: Vec<ColumnBoundary>,
}

pub fn scan(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let lattice = cfg.lattice()?;
    let x = cfg.scan_separation()?;
    let (deltas, couplings) = cfg.scan_axes()?;
    let grid = ScanGrid::new(deltas.clone(), couplings.clone())?;
    let opts = ScanOptions {
        search: boc_search(cfg.scan.both_sides),
        ..ScanOptions::default()
    };
    let result = region_scan(x, &lattice, &grid, &opts)?;
    let summary = ScanSummary {
        separation: x,
        deltas,
        couplings,
        boundaries: result.boundaries(),
    };
    let mut out = Outcome::new(&lattice);
    out.write(dir, "scan.csv", |w| io::write_scan_csv(w, &result))?;
    out.write(dir, "scan_summary.json", |w| io::write_json(w, &summary))?;
    Ok(out)
}

/// Shared part of `evolve` and `asymptote`: the trajectory, the dense
/// spectrum when one was computed, and the analytic bound states of a pair.
struct Run {
    lattice: LatticeParams,
    emitters: EmitterArray,
    initial: SingleExcitationState,
    trajectory: Trajectory,
    /// Present for the dense propagator.
    dense: Option<Propagator>,
    bound_states: Vec<BoundState>,
    subresolution: Vec<String>,
}

fn run_dynamics(cfg: &RunConfig, field_map: bool) -> Result<Run, CliError> {
    let lattice = cfg.lattice()?;
    let emitters = cfg.emitters()?;
    let initial = cfg
        .evolve
        .initial
        .build(emitters.len(), lattice.n_cavities)?;
    let times = cfg.time_grid();
    check_light_cone(&lattice, &emitters, cfg.evolve.t_max)?;
    let opts = EvolveOptions {
        field_map,
        field_stride: cfg.evolve.field_stride,
        enforce_light_cone: true,
    };
    let (trajectory, dense) = match cfg.evolve.propagator {
        PropagatorKind::Dense => {
            let prop = Propagator::new(&lattice, &emitters)?;
            (prop.evolve(&initial, &times, &opts)?, Some(prop))
        }
        PropagatorKind::Chebyshev => (
            ChebyshevPropagator::new(&lattice, &emitters)?.evolve(&initial, &times, &opts)?,
            None,
        ),
    };
    let (bound_states, subresolution) = if emitters.len() == 2 && emitters.identical() {
        let (s, r) = pair_bound_states(&emitters, &lattice, false)?;
        (s, subresolution_labels(&r))
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(Run {
        lattice,
        emitters,
        initial,
        trajectory,
        dense,
        bound_states,
        subresolution,
    })
}

/// The bound-state model and the route that produced it. The eigen route
/// falls back to residues when no dense spectrum is available.
fn prediction(
    cfg: &RunConfig,
    run: &Run,
) -> Result<Option<(AsymptoticModel, AsymptoteRoute)>, CliError> {
    let n = run.emitters.len();
    let mut channels = sector_channels(n).unwrap_or_default();
    channels.extend(site_channels(n));
    match (cfg.asymptote.route, &run.dense) {
        (AsymptoteRoute::Eigen, Some(prop)) => {
            let sp = prop.spectrum();
            let idx = sp.bound_indices(cfg.asymptote.bound_tolerance);
            Ok(Some((
                asymptotic_from_spectrum(sp, &idx, &run.initial, &channels)?,
                AsymptoteRoute::Eigen,
            )))
        }
        _ if n == 2 && run.emitters.identical() && run.initial.photon_weight() == 0.0 => {
            Ok(Some((
                asymptotic_prediction(&run.bound_states, &run.initial)?,
                AsymptoteRoute::Residue,
            )))
        }
        (AsymptoteRoute::Residue, _) => Err(CliError::Config(
            "the residue route needs an identical emitter pair".into(),
        )),
        _ => Ok(None),
    }
}

fn record(out: &mut Outcome, cfg: &RunConfig, run: &Run) {
    let span = run.emitters.span();
    out.diagnostics.min_cavities = Some(bswg_core::required_cavities(
        cfg.evolve.t_max,
        span,
        run.lattice.xi,
    ));
    out.diagnostics.propagator = Some(cfg.evolve.propagator);
    out.diagnostics.max_norm_error = Some(run.trajectory.max_norm_error());
    if let Some(sp) = run.dense.as_ref().map(Propagator::spectrum) {
        out.diagnostics.chain_bound_energies = sp
            .bound_indices(cfg.asymptote.bound_tolerance)
            .iter()
            .map(|&q| sp.energies[q])
            .collect();
    }
    out.diagnostics.subresolution = run.subresolution.clone();
    out.bound_states = run.bound_states.clone();
}

pub fn evolve(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let run = run_dynamics(cfg, cfg.evolve.field_map)?;
    let mut out = Outcome::new(&run.lattice);
    out.write(dir, "populations.csv", |w| {
        io::write_populations_csv(w, &run.trajectory)
    })?;
    if cfg.evolve.field_map {
        out.write(dir, "field_map.csv", |w| {
            io::write_field_map_csv(w, &run.trajectory)
        })?;
    }
    if let Some((model, _)) = prediction(cfg, &run)? {
        let series = model.series(&run.trajectory.times);
        out.write(dir, "asymptote.csv", |w| {
            io::write_series_csv(w, &run.trajectory.times, &series)
        })?;
    }
    record(&mut out, cfg, &run);
    Ok(out)
}

/// Comparison of the bound-state prediction with the exact populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteReport {
    pub t_transient: f64,
    pub route: AsymptoteRoute,
    pub channels: Vec<ChannelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: String,
    /// `max |P_pred - P_exact|` for `t >= t_transient`.
    pub max_deviation: f64,
    pub predicted_mean: f64,
    pub beats: Vec<BeatReport>,
}

/// One oscillation frequency of the prediction: its predicted amplitude and
/// the amplitude fitted to the exact late-time populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatReport {
    pub omega: f64,
    pub predicted_amplitude: f64,
    /// Absent when the window cannot separate this beat.
    pub fitted_amplitude: Option<f64>,
}

fn predicted_beat_amplitude(channel: &Channel, omega: f64) -> f64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, a) in channel.modes.iter().enumerate() {
        for b in &channel.modes[i + 1..] {
            let d = a.energy - b.energy;
            if (d.abs() - omega).abs() < 1e-12 {
                // 2 Re(A_a conj(A_b) e^{-i d t}): oriented so all terms share e^{-i omega t}
                let c = a.amplitude * b.amplitude.conj();
                sum += if d > 0.0 { c } else { c.conj() };
            }
        }
    }
    2.0 * sum.norm()
}

pub fn asymptote(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let run = run_dynamics(cfg, false)?;
    let mut out = Outcome::new(&run.lattice);
    let pitch = run
        .emitters
        .positions
        .windows(2)
        .map(|w| w[1] - w[0])
        .min()
        .unwrap_or(0);
    let t_tr = cfg
        .asymptote
        .t_transient
        .unwrap_or_else(|| transient_cutoff(pitch, run.lattice.xi));
    let (model, route) = prediction(cfg, &run)?.ok_or_else(|| {
        CliError::Config("no bound-state prediction for this configuration; use the eigen route with the dense propagator".into())
    })?;
    let traj = &run.trajectory;
    let window: Vec<(usize, f64)> = traj.window(t_tr).collect();
    if window.is_empty() {
        return Err(CliError::Config(format!(
            "t_transient = {t_tr} is beyond t_max"
        )));
    }
    let late_times: Vec<f64> = window.iter().map(|&(_, t)| t).collect();
    let mut channels = Vec::new();
    for ch in &model.channels {
        let matter = matter_of(&ch.label, run.emitters.len())?;
        let exact = traj.project(&matter);
        let late: Vec<f64> = window.iter().map(|&(i, _)| exact[i]).collect();
        let max_deviation = window
            .iter()
            .zip(&late)
            .map(|(&(_, t), p)| (ch.population(t) - p).abs())
            .fold(0.0, f64::max);
        let omegas = ch.beat_frequencies();
        // fit only beats separated from zero and from each other by half a
        // window frequency; closer ones are not identifiable from this window
        let span = late_times[late_times.len() - 1] - late_times[0];
        let mut resolved: Vec<f64> = Vec::new();
        for &w in &omegas {
            if w * span >= PI && resolved.iter().all(|r| (w - r).abs() * span >= PI) {
                resolved.push(w);
            }
        }
        let fitted = if resolved.is_empty() {
            Vec::new()
        } else {
            fit_amplitudes(&late_times, &late, &resolved)?
        };
        let beats = omegas
            .iter()
            .map(|&omega| BeatReport {
                omega,
                predicted_amplitude: predicted_beat_amplitude(ch, omega),
                fitted_amplitude: resolved.iter().position(|&w| w == omega).map(|k| fitted[k]),
            })
            .collect();
        channels.push(ChannelReport {
            channel: ch.label.clone(),
            max_deviation,
            predicted_mean: ch.mean_population(),
            beats,
        });
    }
    let empty = model.channels.iter().all(|c| c.mean_population() < 1e-24);
    let report = AsymptoteReport {
        t_transient: t_tr,
        route,
        channels,
        note: empty.then(|| {
            "no bound states overlap the initial state: the prediction is complete decay"
                .to_string()
        }),
    };
    let series = model.series(&traj.times);
    out.write(dir, "populations.csv", |w| {
        io::write_populations_csv(w, traj)
    })?;
    out.write(dir, "asymptote.csv", |w| {
        io::write_series_csv(w, &traj.times, &series)
    })?;
    out.write(dir, "asymptote_report.json", |w| io::write_json(w, &report))?;
    record(&mut out, cfg, &run);
    Ok(out)
}

fn matter_of(label: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let mut all = sector_channels(n).unwrap_or_default();
    all.extend(site_channels(n));
    all.into_iter()
        .find(|(l, _)| l == label)
        .map(|(_, m)| m)
        .ok_or_else(|| CliError::Other(format!("unknown channel {label}")))
}

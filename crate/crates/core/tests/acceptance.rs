//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p bswg-core --test acceptance -- --nocapture`.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use bswg_core::analysis::dominant_frequency;
use bswg_core::bound::{
    find_bics, find_bocs, region_scan, BocSearch, BoundState, ScanGrid, ScanOptions,
};
use bswg_core::dynamics::{
    asymptotic_from_spectrum, asymptotic_prediction, sector_channels, three_emitter_parity_run,
    transient_cutoff, EvolveOptions, ProjectionBasis, Propagator, Trajectory,
};
use bswg_core::green::{pole_function, self_energy_in_band};
use bswg_core::roots::{linear_grid, log_grid};
use bswg_core::{
    EmitterArray, LatticeParams, ParityState, Sector, SingleExcitationState, Spectrum,
};
use common::*;

struct Fig3Run {
    g: f64,
    bics: Vec<BoundState>,
    bocs: Vec<BoundState>,
    propagator: Propagator,
    /// Initial excitation on the left emitter.
    from_left: Trajectory,
}

fn fig3_runs() -> &'static [Fig3Run] {
    static RUNS: OnceLock<Vec<Fig3Run>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let lat = lattice(N_CAV);
        let times = time_grid(T_MAX, DT);
        COUPLINGS
            .iter()
            .map(|&g| {
                let em = reference_pair(N_CAV, g);
                let propagator = Propagator::new(&lat, &em).unwrap();
                let psi = SingleExcitationState::emitter_excited(2, N_CAV, 0).unwrap();
                let from_left = propagator
                    .evolve(&psi, &times, &EvolveOptions::default())
                    .unwrap();
                Fig3Run {
                    g,
                    bics: find_bics(&em, &lat).unwrap(),
                    bocs: find_bocs(&em, &lat, &BocSearch::default()).unwrap(),
                    propagator,
                    from_left,
                }
            })
            .collect()
    })
}

fn late_window(traj: &Trajectory, t0: f64) -> (Vec<f64>, Vec<usize>) {
    let idx: Vec<usize> = traj.window(t0).map(|(i, _)| i).collect();
    (idx.iter().map(|&i| traj.times[i]).collect(), idx)
}

#[test]
fn criterion_1_bic_condition() {
    let start = Instant::now();
    let lat = LatticeParams::default();
    let mut worst_sigma = 0.0f64;
    let mut worst_f = 0.0f64;
    for m in (2..X as u32).step_by(2) {
        let e = -2.0 * (m as f64 * std::f64::consts::PI / X as f64).cos();
        for g in COUPLINGS {
            let sigma = self_energy_in_band(e, X, Sector::Minus, &lat, g)
                .unwrap()
                .value;
            worst_sigma = worst_sigma.max(sigma.norm());
            let em = EmitterArray::new(vec![e; 2], g, vec![0, X]).unwrap();
            let f = pole_function(e, Sector::Minus, &em, &lat, false)
                .unwrap()
                .value;
            worst_f = worst_f.max(f.norm());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_sigma < 1e-12 && worst_f < 1e-12 && elapsed < 1.0;
    report(
        "1",
        pass,
        &format!("max |Sigma_-| = {worst_sigma:.2e}, max |F_-(Delta)| = {worst_f:.2e} over even m, {elapsed:.3} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_closed_form_vs_momentum_sum() {
    let start = Instant::now();
    let lat = LatticeParams::default();
    let n_k = 1 << 18;
    let eta = 1e-5;
    let g = 0.02;
    let energies: Vec<f64> = (0..50)
        .map(|i| -2.0 + 4.0 * (i as f64 + 0.5) / 50.0)
        .collect();
    let mut worst = 0.0f64;
    let mut at = (0.0, 0, Sector::Plus);
    for x in [4usize, 31] {
        for s in Sector::BOTH {
            for &e in &energies {
                let closed = self_energy_in_band(e, x, s, &lat, g).unwrap().value;
                let sum = k_sum(e, eta, x, s, &lat, g, n_k);
                let d = (closed - sum).norm();
                if d > worst {
                    worst = d;
                    at = (e, x, s);
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && elapsed < 30.0;
    report(
        "2",
        pass,
        &format!(
            "max |closed - k-sum| = {worst:.3e} (at E = {:.3}, x = {}, sector {}) with N_k = 2^18, eta = 1e-5, g = {g}; tol 1e-6; {elapsed:.1} s",
            at.0, at.1, at.2
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_poles_vs_diagonalization() {
    let start = Instant::now();
    let lat = lattice(N_CAV);
    let mut counts = Vec::new();
    let mut worst = 0.0f64;
    for g in COUPLINGS {
        let em = reference_pair(N_CAV, g);
        let bocs = find_bocs(&em, &lat, &BocSearch::default()).unwrap();
        let sp = Spectrum::new(&lat, &em).unwrap();
        let outside: Vec<f64> = sp.out_of_band().iter().map(|&q| sp.energies[q]).collect();
        for b in &bocs {
            let d = outside
                .iter()
                .fold(f64::INFINITY, |m, e| m.min((e - b.energy).abs()));
            worst = worst.max(d);
        }
        counts.push(bocs.len());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = counts == [1, 2, 2] && worst <= 1e-6 && elapsed < 120.0;
    report(
        "3",
        pass,
        &format!("BOC counts {counts:?} (want [1, 2, 2]), max |E_root - E_eig| = {worst:.2e}; {elapsed:.1} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_sector_decoupling() {
    let run = &fig3_runs()[1];
    let times = time_grid(T_MAX, DT);
    let mut worst = 0.0f64;
    for s in Sector::BOTH {
        let psi = SingleExcitationState::sector(s, N_CAV);
        let tr = run
            .propagator
            .evolve(&psi, &times, &EvolveOptions::default())
            .unwrap();
        let other = tr.project(&s.flipped().matter_vector());
        worst = worst.max(other.iter().fold(0.0f64, |m, p| m.max(p.sqrt())));
    }
    let pass = worst <= 1e-9;
    report(
        "4",
        pass,
        &format!(
            "g = {}: max |<-+|psi(t)>| over t in [0, 400] = {worst:.2e}",
            run.g
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_oscillation_frequency() {
    let run = &fig3_runs()[0];
    let t_tr = transient_cutoff(X, 1.0);
    let pops = run.from_left.populations(ProjectionBasis::Sector).unwrap();
    let minus = pops.get("-").unwrap();
    let (_, idx) = late_window(&run.from_left, t_tr);
    let samples: Vec<f64> = idx.iter().map(|&i| minus[i]).collect();
    let peak = dominant_frequency(&samples, DT, 1e-3).unwrap();
    let bic = run
        .bics
        .iter()
        .find(|b| b.sector == Sector::Minus)
        .expect("BIC in - sector");
    let boc = run
        .bocs
        .iter()
        .find(|b| b.sector == Sector::Minus)
        .expect("BOC in - sector");
    let expect = (bic.energy - boc.energy).abs();
    let pass = (peak.omega - expect).abs() <= peak.bin_width && peak.bin_width <= 1e-3;
    report(
        "5",
        pass,
        &format!(
            "g = 0.02: FFT peak {:.5} vs |E_BIC - E_BOC| = {expect:.5} (bin {:.1e}) over t in [{t_tr}, 400]",
            peak.omega, peak.bin_width
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_asymptote_fidelity() {
    let t_tr = transient_cutoff(X, 1.0);
    let channels = sector_channels(2).unwrap();
    let psi = SingleExcitationState::emitter_excited(2, N_CAV, 0).unwrap();
    let mut lines = Vec::new();
    let mut worst_all = 0.0f64;
    for run in fig3_runs() {
        let sp = run.propagator.spectrum();
        let model =
            asymptotic_from_spectrum(sp, &sp.bound_indices(1e-10), &psi, &channels).unwrap();
        let mut bound: Vec<BoundState> = run.bics.clone();
        bound.extend(run.bocs.iter().cloned());
        let residue_model = asymptotic_prediction(&bound, &psi).unwrap();
        let pops = run.from_left.populations(ProjectionBasis::Sector).unwrap();
        let (times, idx) = late_window(&run.from_left, t_tr);
        for (label, _) in &channels {
            let exact: Vec<f64> = idx.iter().map(|&i| pops.get(label).unwrap()[i]).collect();
            let pred: Vec<f64> = times
                .iter()
                .map(|&t| model.channel(label).unwrap().population(t))
                .collect();
            let pred_res: Vec<f64> = times
                .iter()
                .map(|&t| residue_model.channel(label).unwrap().population(t))
                .collect();
            let d = max_abs_diff(&exact, &pred);
            worst_all = worst_all.max(d);
            lines.push(format!(
                "g={} {label}: {d:.3} (residue route {:.3})",
                run.g,
                max_abs_diff(&exact, &pred_res)
            ));
        }
    }
    let pass = worst_all <= 0.02;
    report(
        "6",
        pass,
        &format!(
            "max |P_pred - P_exact| for t > {t_tr}: {} ; tol 0.02",
            lines.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_phase_diagram_structure() {
    let start = Instant::now();
    let lat = LatticeParams::default();
    let deltas = linear_grid(-1.9, 1.9, 64);
    let couplings = log_grid(1e-3, 1.0, 64);
    let grid = ScanGrid::new(deltas, couplings).unwrap();
    let mut widths = Vec::new();
    let mut contiguous = true;
    for x in [5usize, 11, 21, 31] {
        let scan = region_scan(x, &lat, &grid, &ScanOptions::default()).unwrap();
        // the near-edge column Delta = 1.9
        let col = scan.column(63);
        let counts: Vec<u8> = col.iter().map(|c| c.count.unwrap()).collect();
        let three_regions = counts.first() == Some(&0)
            && counts.last() == Some(&2)
            && counts.windows(2).all(|w| w[0] <= w[1])
            && counts.contains(&1);
        contiguous &= three_regions;
        widths.push(scan.boundary(63).single_width().unwrap_or(f64::NAN));
    }
    let decreasing = widths.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = contiguous && decreasing && elapsed < 600.0;
    report(
        "7",
        pass,
        &format!(
            "Delta = 1.9: 0/1/2 contiguous = {contiguous}, count=1 widths in g for x = 5, 11, 21, 31: {:?}; {elapsed:.1} s for 4 x 64x64",
            widths.iter().map(|w| format!("{w:.4}")).collect::<Vec<_>>()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_three_emitter_parity() {
    let lat = lattice(N_CAV);
    let times = time_grid(T_MAX, DT);
    let g = 0.02;
    let delta = reference_delta();
    let offsets = [-16, 0, 16];
    let tr = three_emitter_parity_run(
        &lat,
        offsets,
        delta,
        g,
        ParityState::Even1,
        &times,
        &EvolveOptions::default(),
    )
    .unwrap();
    let sites = tr.populations(ProjectionBasis::Site).unwrap();
    let parity = tr.populations(ProjectionBasis::Sector).unwrap();
    let odd = parity
        .get("odd")
        .unwrap()
        .iter()
        .fold(0.0f64, |m, p| m.max(*p));
    let lr = max_abs_diff(sites.get("L").unwrap(), sites.get("R").unwrap());

    // the bound state outside the band and the strongest in-band component
    // (centre of the long-lived resonance) carrying the initial state
    let em = EmitterArray::centered(N_CAV, &offsets, vec![delta; 3], g).unwrap();
    let sp = Spectrum::new(&lat, &em).unwrap();
    let psi = SingleExcitationState::parity(ParityState::Even1, N_CAV);
    let ov = sp.overlaps(&psi);
    let strongest = |inside: bool| {
        (0..sp.dim())
            .filter(|&q| lat.in_band(sp.energies[q]) == inside)
            .max_by(|&a, &b| ov[a].norm_sqr().total_cmp(&ov[b].norm_sqr()))
            .unwrap()
    };
    let expect = (sp.energies[strongest(false)] - sp.energies[strongest(true)]).abs();

    let t_tr = transient_cutoff(16, 1.0);
    let (_, idx) = late_window(&tr, t_tr);
    let mut freq_ok = true;
    let mut peaks = Vec::new();
    for label in ["even1", "even2"] {
        let series: Vec<f64> = idx.iter().map(|&i| parity.get(label).unwrap()[i]).collect();
        let p = dominant_frequency(&series, DT, 1e-3).unwrap();
        freq_ok &= (p.omega - expect).abs() <= p.bin_width;
        peaks.push(format!("{label} {:.5}", p.omega));
    }
    let pass = odd <= 1e-9 && lr <= 1e-12 && freq_ok;
    report(
        "8",
        pass,
        &format!(
            "max P_odd = {odd:.1e}, max |P_L - P_R| = {lr:.1e}, FFT peaks [{}] vs eigenvalue gap {expect:.5} over t in [{t_tr}, 400]",
            peaks.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_unitarity_and_chain_length() {
    let times = time_grid(T_MAX, DT);
    let mut drift = 0.0f64;
    let mut worst = 0.0f64;
    let big = lattice(2 * N_CAV - 1);
    let psi_big = SingleExcitationState::emitter_excited(2, big.n_cavities, 0).unwrap();
    for run in fig3_runs() {
        drift = drift.max(run.from_left.max_norm_error());
        let em = reference_pair(big.n_cavities, run.g);
        let tr = Propagator::new(&big, &em)
            .unwrap()
            .evolve(&psi_big, &times, &EvolveOptions::default())
            .unwrap();
        drift = drift.max(tr.max_norm_error());
        for basis in [ProjectionBasis::Site, ProjectionBasis::Sector] {
            let a = run.from_left.populations(basis).unwrap();
            let b = tr.populations(basis).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                worst = worst.max(max_abs_diff(x, y));
            }
        }
    }
    let pass = drift <= 1e-9 && worst < 1e-6;
    report(
        "9",
        pass,
        &format!(
            "max norm drift {drift:.1e}; max population change {N_CAV} -> {} cavities: {worst:.1e}",
            big.n_cavities
        ),
    );
    assert!(pass);
}

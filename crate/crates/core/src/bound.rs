//! Bound states of an emitter pair: bound states outside the continuum (real
//! zeros of the pole function beyond a band edge) and bound states in the
//! continuum (in-band zeros of the sector self-energy).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{edge_limit, pole_function, pole_function_at_depth, BandSide, EdgeLimit};
use crate::model::{sector_energy, EmitterArray, LatticeParams, Sector, SingleExcitationState};
use crate::roots::{log_grid, polish};
use crate::spectrum::Spectrum;

/// Largest accepted `|1 +- e^{ikx}| / 2` for a bound state in the continuum.
pub const BIC_DEFECT_TOL: f64 = 1e-9;
/// A polished root must satisfy `|F| < POLE_TOL`.
pub const POLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    Bic,
    BocBelow,
    BocAbove,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::Bic => "BIC",
            BoundKind::BocBelow => "BOC-below",
            BoundKind::BocAbove => "BOC-above",
        }
    }

    fn from_side(side: BandSide) -> Self {
        match side {
            BandSide::Below => BoundKind::BocBelow,
            BandSide::Above => BoundKind::BocAbove,
        }
    }

    pub fn side(self) -> Option<BandSide> {
        match self {
            BoundKind::Bic => None,
            BoundKind::BocBelow => Some(BandSide::Below),
            BoundKind::BocAbove => Some(BandSide::Above),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub sector: Sector,
    pub energy: f64,
    pub kind: BoundKind,
    /// `1 / F'(E_b)`: the emitter weight of the bound state.
    pub residue: f64,
    /// Distance outside the band edge, for BOCs.
    pub depth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile: Option<SingleExcitationState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideSelection {
    /// Only the band edge nearest the emitter energy.
    Near,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BocSearch {
    pub sides: SideSelection,
    /// Smallest resolved distance from the band edge.
    pub min_depth: f64,
    /// Points of the logarithmic depth grid used to bracket the root.
    pub grid_points: usize,
}

impl Default for BocSearch {
    fn default() -> Self {
        BocSearch {
            sides: SideSelection::Near,
            min_depth: 1e-9,
            grid_points: 200,
        }
    }
}

impl BocSearch {
    pub fn both_sides() -> Self {
        BocSearch {
            sides: SideSelection::Both,
            ..Default::default()
        }
    }

    fn sides(&self, delta: f64, lattice: &LatticeParams) -> Vec<BandSide> {
        match self.sides {
            SideSelection::Near => vec![BandSide::nearest(delta, lattice)],
            SideSelection::Both => vec![BandSide::Below, BandSide::Above],
        }
    }
}

/// Outcome of a BOC search, including roots too close to an edge to resolve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BocSearchResult {
    pub states: Vec<BoundState>,
    /// Sectors/sides with a root shallower than `min_depth`.
    pub subresolution: Vec<(Sector, BandSide)>,
}

/// Outer end of the depth bracket. Any root has depth at most
/// `(g^4 / xi)^{1/3}`, and at most `~2 g^2 / xi` away from an edge-adjacent
/// emitter energy; both are covered with margin.
pub fn outer_depth(g: f64, xi: f64) -> f64 {
    (8.0 * g * g / xi).max(2.0 * (g.powi(4) / xi).cbrt())
}

fn check_pair(emitters: &EmitterArray, lattice: &LatticeParams) -> Result<f64> {
    emitters.validate()?;
    lattice.validate()?;
    emitters.separation()?;
    if !emitters.identical() {
        return Err(Error::invalid(
            "bound-state search needs identical emitters",
        ));
    }
    let delta = sector_energy(emitters, Sector::Plus)?;
    if !lattice.in_band(delta) {
        return Err(Error::invalid(format!(
            "emitter energy {delta} must lie strictly inside the band"
        )));
    }
    Ok(delta)
}

/// Single-sector search on one side. Returns the root depth, `None` if there
/// is no resolved root, and whether a sub-resolution root exists.
fn search_side(
    side: BandSide,
    sector: Sector,
    emitters: &EmitterArray,
    lattice: &LatticeParams,
    search: &BocSearch,
) -> Result<(Option<f64>, bool)> {
    let x = emitters.separation()?;
    let eps = sector_energy(emitters, sector)?;
    let sigma = side.sign();
    // phi = sigma F increases with depth on either side
    let phi = |d: f64| -> f64 {
        pole_function_at_depth(side, d, sector, emitters, lattice)
            .map(|(f, _)| sigma * f)
            .unwrap_or(f64::NAN)
    };
    let edge_phi = match edge_limit(side, x, sector, lattice, emitters.g) {
        EdgeLimit::Divergent if emitters.g > 0.0 => f64::NEG_INFINITY,
        EdgeLimit::Divergent => sigma * (side.edge(lattice) - eps),
        EdgeLimit::Finite(s) => sigma * (side.edge(lattice) - eps - s),
    };
    if !(edge_phi < 0.0) {
        return Ok((None, false));
    }
    let d_min = search.min_depth;
    let mut d_out = outer_depth(emitters.g, lattice.xi).max(2.0 * d_min);
    let phi_min = phi(d_min);
    if phi_min >= 0.0 {
        return Ok((None, true));
    }
    let grid = log_grid(d_min, d_out, search.grid_points.max(2));
    let mut bracket = None;
    let mut prev = (d_min, phi_min);
    for &d in &grid[1..] {
        let v = phi(d);
        if v >= 0.0 {
            bracket = Some((prev.0, d));
            break;
        }
        prev = (d, v);
    }
    // the outer bound is rigorous; widening is a safety net only
    let mut widen = 0;
    while bracket.is_none() && widen < 60 {
        let d = 2.0 * d_out;
        if phi(d) >= 0.0 {
            bracket = Some((d_out, d));
        }
        d_out = d;
        widen += 1;
    }
    let (lo, hi) = bracket.ok_or(Error::RootNotConverged {
        lo: d_min,
        hi: d_out,
        iterations: widen,
    })?;
    let depth = polish(phi, lo, hi, 4.0 * f64::EPSILON * hi, 0.1 * POLE_TOL)?;
    let residual = phi(depth).abs();
    if !(residual < POLE_TOL) {
        return Err(Error::RootNotConverged {
            lo,
            hi,
            iterations: crate::roots::MAX_ITERATIONS,
        });
    }
    Ok((Some(depth), false))
}

fn boc_state(
    side: BandSide,
    sector: Sector,
    depth: f64,
    emitters: &EmitterArray,
    lattice: &LatticeParams,
) -> Result<BoundState> {
    let energy = side.energy_at_depth(depth, lattice);
    let (_, df) = pole_function_at_depth(side, depth, sector, emitters, lattice)?;
    if !(df.abs() > 1e-8) {
        return Err(Error::DegeneratePole {
            energy,
            derivative: df,
        });
    }
    Ok(BoundState {
        sector,
        energy,
        kind: BoundKind::from_side(side),
        residue: 1.0 / df,
        depth: Some(depth),
        profile: None,
    })
}

/// BOC search with sub-resolution reporting.
pub fn search_bocs(
    emitters: &EmitterArray,
    lattice: &LatticeParams,
    search: &BocSearch,
) -> Result<BocSearchResult> {
    let delta = check_pair(emitters, lattice)?;
    if !(search.min_depth > 0.0) {
        return Err(Error::invalid("min_depth must be positive"));
    }
    let mut out = BocSearchResult::default();
    for side in search.sides(delta, lattice) {
        for sector in Sector::BOTH {
            let (depth, subres) = search_side(side, sector, emitters, lattice, search)?;
            if let Some(d) = depth {
                out.states
                    .push(boc_state(side, sector, d, emitters, lattice)?);
            }
            if subres {
                out.subresolution.push((sector, side));
            }
        }
    }
    Ok(out)
}

/// Real zeros of `F_+-` outside the band, resolved to `search.min_depth`.
pub fn find_bocs(
    emitters: &EmitterArray,
    lattice: &LatticeParams,
    search: &BocSearch,
) -> Result<Vec<BoundState>> {
    Ok(search_bocs(emitters, lattice, search)?.states)
}

/// `|1 + s e^{ikx}| / 2` at the emitter energy: zero exactly for a BIC.
pub fn bic_defect(emitters: &EmitterArray, lattice: &LatticeParams, sector: Sector) -> Result<f64> {
    let delta = check_pair(emitters, lattice)?;
    let x = emitters.separation()? as f64;
    let k = lattice.wavevector_of_energy(delta)?;
    let phase = num_complex::Complex64::from_polar(1.0, k * x);
    Ok((1.0 + sector.sign() * phase).norm() / 2.0)
}

/// Bound states in the continuum: `E = Delta` with `1 +- e^{ik(Delta)x} = 0`,
/// i.e. `Delta = omega0 - 2 xi cos(m pi / x)`; odd `m` binds in `+`, even `m`
/// in `-`.
pub fn find_bics(emitters: &EmitterArray, lattice: &LatticeParams) -> Result<Vec<BoundState>> {
    let delta = check_pair(emitters, lattice)?;
    let mut out = Vec::new();
    for sector in Sector::BOTH {
        if bic_defect(emitters, lattice, sector)? <= BIC_DEFECT_TOL {
            let pf = pole_function(delta, sector, emitters, lattice, true)?;
            let df = pf.derivative.expect("requested").re;
            if !(df.abs() > 1e-8) {
                return Err(Error::DegeneratePole {
                    energy: delta,
                    derivative: df,
                });
            }
            out.push(BoundState {
                sector,
                energy: delta,
                kind: BoundKind::Bic,
                residue: 1.0 / df,
                depth: None,
                profile: None,
            });
        }
    }
    Ok(out)
}

/// All bound states: BICs first, then BOCs.
pub fn find_bound_states(
    emitters: &EmitterArray,
    lattice: &LatticeParams,
    search: &BocSearch,
) -> Result<Vec<BoundState>> {
    let mut v = find_bics(emitters, lattice)?;
    v.extend(find_bocs(emitters, lattice, search)?);
    Ok(v)
}

/// `1 / F'(E_b)` recomputed for a bound state.
pub fn residue(
    state: &BoundState,
    emitters: &EmitterArray,
    lattice: &LatticeParams,
) -> Result<f64> {
    let df = match (state.kind.side(), state.depth) {
        (Some(side), Some(depth)) => {
            pole_function_at_depth(side, depth, state.sector, emitters, lattice)?.1
        }
        _ => {
            pole_function(state.energy, state.sector, emitters, lattice, true)?
                .derivative
                .expect("requested")
                .re
        }
    };
    if !(df.abs() > 1e-8) {
        return Err(Error::DegeneratePole {
            energy: state.energy,
            derivative: df,
        });
    }
    Ok(1.0 / df)
}

/// Eigenvector of the finite chain belonging to `state`: the normalized
/// projection of the sector matter state onto the eigenspace within `tol` of
/// the bound-state energy.
pub fn profile_from_spectrum(
    spectrum: &Spectrum,
    state: &BoundState,
    tol: f64,
) -> Result<SingleExcitationState> {
    spectrum.bound_profile(state.energy, &state.sector.matter_vector(), tol)
}

/// Diagonalizes the chain and returns the profile of `state`.
pub fn bound_profile(
    state: &BoundState,
    emitters: &EmitterArray,
    lattice: &LatticeParams,
    tol: f64,
) -> Result<SingleExcitationState> {
    profile_from_spectrum(&Spectrum::new(lattice, emitters)?, state, tol)
}

// ---------------------------------------------------------------------------
// (Delta, g) scans

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub deltas: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl ScanGrid {
    pub fn new(deltas: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() || couplings.is_empty() {
            return Err(Error::invalid("scan grid must be non-empty"));
        }
        if couplings.iter().any(|g| !(*g >= 0.0 && g.is_finite()))
            || deltas.iter().any(|d| !d.is_finite())
        {
            return Err(Error::invalid(
                "scan grid values must be finite, couplings >= 0",
            ));
        }
        Ok(ScanGrid { deltas, couplings })
    }

    pub fn len(&self) -> usize {
        self.deltas.len() * self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub search: BocSearch,
    /// Emitter energies closer than this to a band edge are not classified.
    pub edge_margin: f64,
    /// Couplings above `rwa_limit * xi` are flagged.
    pub rwa_limit: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            search: BocSearch::default(),
            edge_margin: 1e-6,
            rwa_limit: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellFlags {
    /// Coupling beyond the rotating-wave regime.
    pub rwa: bool,
    /// Emitter energy at or outside a band edge; no count.
    pub indeterminate: bool,
    /// A root exists closer to the edge than the resolution floor.
    pub subres: bool,
}

impl CellFlags {
    /// `|`-joined flag names, empty when none are set.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.indeterminate {
            parts.push("indeterminate");
        }
        if self.subres {
            parts.push("subres");
        }
        if self.rwa {
            parts.push("rwa");
        }
        parts.join("|")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub delta: f64,
    pub g: f64,
    /// Number of resolved BOCs, `None` when indeterminate.
    pub count: Option<u8>,
    pub flags: CellFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub separation: usize,
    pub grid: ScanGrid,
    /// Delta-major: cell `(i, j)` at `i * couplings.len() + j`.
    pub cells: Vec<ScanCell>,
}

/// Coupling thresholds along one emitter-energy column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnBoundary {
    pub delta: f64,
    /// Smallest grid coupling with at least one BOC.
    pub g_one: Option<f64>,
    /// Smallest grid coupling with two BOCs.
    pub g_two: Option<f64>,
    /// Counts never decrease with increasing coupling.
    pub monotone: bool,
}

impl ColumnBoundary {
    /// Extent in `g` of the single-BOC region.
    pub fn single_width(&self) -> Option<f64> {
        match (self.g_one, self.g_two) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        }
    }
}

impl RegionScan {
    pub fn cell(&self, i_delta: usize, i_g: usize) -> &ScanCell {
        &self.cells[i_delta * self.grid.couplings.len() + i_g]
    }

    pub fn column(&self, i_delta: usize) -> &[ScanCell] {
        let n = self.grid.couplings.len();
        &self.cells[i_delta * n..(i_delta + 1) * n]
    }

    pub fn boundary(&self, i_delta: usize) -> ColumnBoundary {
        let col = self.column(i_delta);
        let first = |c: u8| {
            col.iter()
                .find(|s| s.count.is_some_and(|n| n >= c))
                .map(|s| s.g)
        };
        let counts: Vec<u8> = col.iter().filter_map(|s| s.count).collect();
        ColumnBoundary {
            delta: self.grid.deltas[i_delta],
            g_one: first(1),
            g_two: first(2),
            monotone: counts.windows(2).all(|w| w[0] <= w[1]),
        }
    }

    pub fn boundaries(&self) -> Vec<ColumnBoundary> {
        (0..self.grid.deltas.len())
            .map(|i| self.boundary(i))
            .collect()
    }
}

fn scan_cell(
    delta: f64,
    g: f64,
    x: usize,
    lattice: &LatticeParams,
    opts: &ScanOptions,
) -> Result<ScanCell> {
    let mut flags = CellFlags {
        rwa: g > opts.rwa_limit * lattice.xi,
        ..Default::default()
    };
    let to_edge = 2.0 * lattice.xi - (delta - lattice.omega0).abs();
    if to_edge < opts.edge_margin {
        flags.indeterminate = true;
        return Ok(ScanCell {
            delta,
            g,
            count: None,
            flags,
        });
    }
    let emitters = EmitterArray::new(vec![delta; 2], g, vec![0, x])?;
    let res = search_bocs(&emitters, lattice, &opts.search)?;
    flags.subres = !res.subresolution.is_empty();
    Ok(ScanCell {
        delta,
        g,
        count: Some(res.states.len() as u8),
        flags,
    })
}

/// BOC count on every `(Delta, g)` grid point for separation `x`. Cells are
/// independent and evaluated in parallel on the current rayon pool; the result
/// does not depend on the number of threads.
pub fn region_scan(
    x: usize,
    lattice: &LatticeParams,
    grid: &ScanGrid,
    opts: &ScanOptions,
) -> Result<RegionScan> {
    lattice.validate()?;
    if x == 0 {
        return Err(Error::invalid("separation must be positive"));
    }
    let ng = grid.couplings.len();
    let cells = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            scan_cell(
                grid.deltas[idx / ng],
                grid.couplings[idx % ng],
                x,
                lattice,
                opts,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionScan {
        separation: x,
        grid: grid.clone(),
        cells,
    })
}

//! CSV and JSON writers for the result types. Floats are written with 17
//! significant digits so values round-trip exactly.

use std::io::Write;

use serde::Serialize;

use crate::bound::{BoundState, RegionScan};
use crate::dynamics::{Populations, ProjectionBasis, Trajectory};
use crate::error::Result;
use crate::green::PoleSample;

fn map_io(e: std::io::Error) -> crate::Error {
    crate::Error::Io(e)
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(w: &mut impl Write, fields: &[String]) -> Result<()> {
    writeln!(w, "{}", fields.join(",")).map_err(map_io)
}

/// Population column names: `P_<site>` then `P_<collective>`.
fn population_columns(n_emitters: usize) -> (Vec<String>, bool) {
    let sites = crate::dynamics::site_labels(n_emitters);
    let mut cols: Vec<String> = sites.iter().map(|s| format!("P_{s}")).collect();
    let collective = match n_emitters {
        2 => vec!["P_plus", "P_minus"],
        3 => vec!["P_even1", "P_even2", "P_odd"],
        _ => vec![],
    };
    let has = !collective.is_empty();
    cols.extend(collective.into_iter().map(String::from));
    (cols, has)
}

/// `time,P_L,P_R,P_plus,P_minus,norm` for a pair,
/// `time,P_L,P_C,P_R,P_even1,P_even2,P_odd,norm` for three emitters.
pub fn write_populations_csv(w: &mut impl Write, traj: &Trajectory) -> Result<()> {
    let (cols, collective) = population_columns(traj.n_emitters());
    let mut header = vec!["time".to_string()];
    header.extend(cols);
    header.push("norm".into());
    row(w, &header)?;
    let site = traj.populations(ProjectionBasis::Site)?;
    let sector = if collective {
        Some(traj.populations(ProjectionBasis::Sector)?)
    } else {
        None
    };
    for (k, &t) in traj.times.iter().enumerate() {
        let mut f = vec![fmt_f64(t)];
        f.extend(site.values.iter().map(|v| fmt_f64(v[k])));
        if let Some(s) = &sector {
            f.extend(s.values.iter().map(|v| fmt_f64(v[k])));
        }
        f.push(fmt_f64(traj.norm[k]));
        row(w, &f)?;
    }
    Ok(())
}

/// `time,cavity_index,occupation` in long format.
pub fn write_field_map_csv(w: &mut impl Write, traj: &Trajectory) -> Result<()> {
    row(
        w,
        &["time".into(), "cavity_index".into(), "occupation".into()],
    )?;
    if let Some(map) = &traj.field_map {
        for (r, &t) in traj.field_times.iter().enumerate() {
            let ts = fmt_f64(t);
            for (i, v) in map.row(r).iter().enumerate() {
                writeln!(w, "{ts},{i},{}", fmt_f64(*v)).map_err(map_io)?;
            }
        }
    }
    Ok(())
}

/// `time,<label>...` for predicted or measured population channels.
pub fn write_series_csv(w: &mut impl Write, times: &[f64], pops: &Populations) -> Result<()> {
    let mut header = vec!["time".to_string()];
    header.extend(pops.labels.iter().map(|l| format!("P_{}", channel_name(l))));
    row(w, &header)?;
    for (k, &t) in times.iter().enumerate() {
        let mut f = vec![fmt_f64(t)];
        f.extend(pops.values.iter().map(|v| fmt_f64(v[k])));
        row(w, &f)?;
    }
    Ok(())
}

/// Column-safe channel name (`+` -> `plus`, `-` -> `minus`).
pub fn channel_name(label: &str) -> &str {
    match label {
        "+" => "plus",
        "-" => "minus",
        other => other,
    }
}

/// `delta,g,count,flag`; indeterminate cells have count `-1`.
pub fn write_scan_csv(w: &mut impl Write, scan: &RegionScan) -> Result<()> {
    row(
        w,
        &["delta".into(), "g".into(), "count".into(), "flag".into()],
    )?;
    for c in &scan.cells {
        let count = c.count.map_or("-1".to_string(), |n| n.to_string());
        row(w, &[fmt_f64(c.delta), fmt_f64(c.g), count, c.flags.label()])?;
    }
    Ok(())
}

/// `E,Re_F_plus,Im_F_plus,Re_F_minus,Im_F_minus`.
pub fn write_pole_curves_csv(w: &mut impl Write, samples: &[PoleSample]) -> Result<()> {
    row(
        w,
        &["E", "Re_F_plus", "Im_F_plus", "Re_F_minus", "Im_F_minus"].map(String::from),
    )?;
    for s in samples {
        row(
            w,
            &[
                fmt_f64(s.energy),
                fmt_f64(s.plus.re),
                fmt_f64(s.plus.im),
                fmt_f64(s.minus.re),
                fmt_f64(s.minus.im),
            ],
        )?;
    }
    Ok(())
}

/// `energy,sector,kind,residue`.
pub fn write_roots_csv(w: &mut impl Write, states: &[BoundState]) -> Result<()> {
    row(
        w,
        &["energy", "sector", "kind", "residue"].map(String::from),
    )?;
    for b in states {
        row(
            w,
            &[
                fmt_f64(b.energy),
                b.sector.label().into(),
                b.kind.label().into(),
                fmt_f64(b.residue),
            ],
        )?;
    }
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(w: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| crate::Error::Io(e.into()))?;
    writeln!(w).map_err(map_io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{region_scan, ScanGrid, ScanOptions};
    use crate::dynamics::{evolve, EvolveOptions};
    use crate::model::{EmitterArray, LatticeParams, SingleExcitationState};

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 2.0f64.sqrt() * 1e7] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn population_layouts() {
        let l = LatticeParams::default().with_cavities(101);
        let e = EmitterArray::centered_pair(101, 3, 0.5, 0.1).unwrap();
        let psi = SingleExcitationState::emitter_excited(2, 101, 0).unwrap();
        let tr = evolve(&psi, &l, &e, &[0.0, 1.0], &EvolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_populations_csv(&mut buf, &tr).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,P_L,P_R,P_plus,P_minus,norm");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 6);

        let e3 = EmitterArray::centered(101, &[-2, 0, 2], vec![0.5; 3], 0.1).unwrap();
        let psi3 = SingleExcitationState::emitter_excited(3, 101, 1).unwrap();
        let tr3 = evolve(&psi3, &l, &e3, &[0.0], &EvolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_populations_csv(&mut buf, &tr3).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("time,P_L,P_C,P_R,P_even1,P_even2,P_odd,norm\n"));
    }

    #[test]
    fn scan_layout() {
        let grid = ScanGrid::new(vec![-2.0, 0.5], vec![0.1]).unwrap();
        let s = region_scan(5, &LatticeParams::default(), &grid, &ScanOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "delta,g,count,flag");
        assert!(lines[1].ends_with(",-1,indeterminate"));
    }
}

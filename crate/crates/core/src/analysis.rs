//! Spectral analysis of population time series.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    /// Angular frequency of the strongest component.
    pub omega: f64,
    /// Angular spacing of the zero-padded FFT grid.
    pub bin_width: f64,
    /// `|X(omega)|` at the peak bin, normalized by the sample count.
    pub magnitude: f64,
}

/// Dominant angular frequency of a uniformly sampled real signal. The mean is
/// removed and the record zero-padded to a power of two so that the angular
/// bin width is at most `max_bin_width`; the peak is refined by a parabola
/// through the three largest bins.
pub fn dominant_frequency(samples: &[f64], dt: f64, max_bin_width: f64) -> Result<SpectralPeak> {
    if samples.len() < 4 {
        return Err(Error::invalid("need at least 4 samples for a spectrum"));
    }
    if !(dt > 0.0) || !(max_bin_width > 0.0) {
        return Err(Error::invalid(
            "sample spacing and bin width must be positive",
        ));
    }
    let n = samples.len();
    let needed = (2.0 * std::f64::consts::PI / (dt * max_bin_width)).ceil() as usize;
    let len = needed.max(n).next_power_of_two();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = samples
        .iter()
        .map(|&s| Complex64::new(s - mean, 0.0))
        .collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2 + 1]
        .iter()
        .map(|c| c.norm() / n as f64)
        .collect();
    let (k, &peak) = mag
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("spectrum has at least two bins");
    let bin_width = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    let mut shift = 0.0;
    if k + 1 < mag.len() {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            shift = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok(SpectralPeak {
        omega: (k as f64 + shift) * bin_width,
        bin_width,
        magnitude: peak,
    })
}

/// Least-squares amplitudes `sqrt(a_j^2 + b_j^2)` of
/// `s(t) ~ c + sum_j a_j cos(w_j t) + b_j sin(w_j t)`.
pub fn fit_amplitudes(times: &[f64], samples: &[f64], omegas: &[f64]) -> Result<Vec<f64>> {
    let m = 1 + 2 * omegas.len();
    if times.len() != samples.len() || times.len() < m {
        return Err(Error::invalid("not enough samples for the requested fit"));
    }
    let basis = |t: f64| -> Vec<f64> {
        let mut row = Vec::with_capacity(m);
        row.push(1.0);
        for w in omegas {
            row.push((w * t).cos());
            row.push((w * t).sin());
        }
        row
    };
    let mut ata = vec![vec![0.0; m]; m];
    let mut atb = vec![0.0; m];
    for (&t, &s) in times.iter().zip(samples) {
        let r = basis(t);
        for i in 0..m {
            atb[i] += r[i] * s;
            for j in 0..m {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    let x = solve(ata, atb)?;
    Ok((0..omegas.len())
        .map(|j| x[1 + 2 * j].hypot(x[2 + 2 * j]))
        .collect())
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[p][col].abs() < 1e-300 {
            return Err(Error::invalid("fit basis is degenerate"));
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

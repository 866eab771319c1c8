//! Matrix-free propagation by Chebyshev expansion of `exp(-i H dt)`, for chains
//! too long to diagonalize densely.

use ndarray::Array2;
use num_complex::Complex64;

use crate::dynamics::{check_initial, check_times, EvolveOptions, Trajectory};
use crate::error::{Error, Result};
use crate::model::{
    check_light_cone, ChainHamiltonian, EmitterArray, LatticeParams, SingleExcitationState,
};

/// Expansion terms below this magnitude are dropped.
const COEFF_CUTOFF: f64 = 1e-18;

/// `J_0(z) .. J_kmax(z)` for real `z >= 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 sum J_2k = 1`.
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = kmax.max(z.ceil() as usize) + 30 + (4.0 * z.cbrt()) as usize * 4;
    let mut j_next = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / z * j - j_next;
        j_next = j;
        j = j_prev;
        // j is now J_{k-1}
        if k - 1 <= kmax {
            out[k - 1] = j;
        }
        if k - 1 > 0 && (k - 1) % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            j_next *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    norm += j;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

#[derive(Debug, Clone)]
pub struct ChebyshevPropagator {
    ham: ChainHamiltonian,
    center: f64,
    half_width: f64,
}

impl ChebyshevPropagator {
    pub fn new(lattice: &LatticeParams, emitters: &EmitterArray) -> Result<Self> {
        let ham = ChainHamiltonian::new(*lattice, emitters.clone())?;
        let (lo, hi) = ham.spectral_bounds();
        // small margin keeps the scaled spectrum strictly inside [-1, 1]
        let half_width = 0.5 * (hi - lo) * 1.01 + 1e-12;
        Ok(ChebyshevPropagator {
            ham,
            center: 0.5 * (hi + lo),
            half_width,
        })
    }

    /// Expansion coefficients `(2 - delta_k0) (-i)^k J_k(a dt)`.
    fn coefficients(&self, dt: f64) -> Vec<Complex64> {
        let z = self.half_width * dt.abs();
        let kmax = (z + 10.0 * z.cbrt() + 25.0).ceil() as usize;
        let j = bessel_j_sequence(z, kmax);
        let mut last = kmax;
        while last > 0 && j[last].abs() < COEFF_CUTOFF && (last as f64) > z {
            last -= 1;
        }
        let phase = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let sign = if dt < 0.0 { -1.0 } else { 1.0 };
        (0..=last)
            .map(|k| {
                let p = phase[k % 4];
                let p = if sign < 0.0 { p.conj() } else { p };
                p * j[k] * if k == 0 { 1.0 } else { 2.0 }
            })
            .collect()
    }

    fn apply_scaled(&self, psi: &[Complex64], out: &mut [Complex64]) {
        self.ham.apply(psi, out);
        let (c, a) = (self.center, self.half_width);
        for (o, p) in out.iter_mut().zip(psi) {
            *o = (*o - p * c) / a;
        }
    }

    /// `psi <- exp(-i H dt) psi`.
    pub fn step(&self, psi: &mut [Complex64], dt: f64) {
        if dt == 0.0 {
            return;
        }
        let coeffs = self.coefficients(dt);
        self.step_with(psi, dt, &coeffs);
    }

    fn step_with(&self, psi: &mut [Complex64], dt: f64, coeffs: &[Complex64]) {
        let n = psi.len();
        let mut prev = psi.to_vec();
        let mut cur = vec![Complex64::new(0.0, 0.0); n];
        let mut acc: Vec<Complex64> = prev.iter().map(|p| p * coeffs[0]).collect();
        if coeffs.len() > 1 {
            self.apply_scaled(&prev, &mut cur);
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c * coeffs[1];
            }
        }
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for c_k in &coeffs[2.min(coeffs.len())..] {
            self.apply_scaled(&cur, &mut next);
            for ((nx, pv), a) in next.iter_mut().zip(&prev).zip(acc.iter_mut()) {
                *nx = 2.0 * *nx - pv;
                *a += *nx * c_k;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        let global = Complex64::from_polar(1.0, -self.center * dt);
        for (p, a) in psi.iter_mut().zip(acc) {
            *p = a * global;
        }
    }

    /// Propagate from `t = 0` through the increasing `times`.
    pub fn evolve(
        &self,
        initial: &SingleExcitationState,
        times: &[f64],
        opts: &EvolveOptions,
    ) -> Result<Trajectory> {
        let lattice = &self.ham.lattice;
        check_initial(initial, lattice, &self.ham.emitters)?;
        let t_max = check_times(times)?;
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid(
                "Chebyshev propagation needs non-decreasing times",
            ));
        }
        if opts.enforce_light_cone {
            check_light_cone(lattice, &self.ham.emitters, t_max)?;
        }
        let n = lattice.n_cavities;
        let stride = opts.field_stride.max(1);
        let field_rows: Vec<usize> = (0..times.len()).filter(|i| i % stride == 0).collect();
        let mut field = opts
            .field_map
            .then(|| Array2::<f64>::zeros((field_rows.len(), n)));
        let mut psi = initial.to_vector();
        let mut t = 0.0;
        let mut cache: Option<(f64, Vec<Complex64>)> = None;
        let mut emitter_amps = Vec::with_capacity(times.len());
        let mut norm = Vec::with_capacity(times.len());
        for (idx, &target) in times.iter().enumerate() {
            let dt = target - t;
            if dt != 0.0 {
                // uniform grids reuse one set of coefficients
                let reuse = matches!(&cache, Some((d, _)) if (d - dt).abs() <= 1e-14 * dt.abs());
                if !reuse {
                    cache = Some((dt, self.coefficients(dt)));
                }
                let (_, coeffs) = cache.as_ref().expect("set above");
                self.step_with(&mut psi, dt, coeffs);
                t = target;
            }
            norm.push(psi.iter().map(|c| c.norm_sqr()).sum());
            emitter_amps.push(psi[n..].to_vec());
            if let Some(f) = field.as_mut() {
                if idx % stride == 0 {
                    let mut row = f.row_mut(idx / stride);
                    for i in 0..n {
                        row[i] = psi[i].norm_sqr();
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

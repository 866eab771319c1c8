//! Full eigendecomposition of the finite-chain Hamiltonian and identification
//! of its bound eigenvectors.

use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lapack;
use crate::model::{ChainHamiltonian, EmitterArray, LatticeParams, SingleExcitationState};

/// Accepted eigenpair residual after diagonalization.
pub const RESIDUAL_LIMIT: f64 = 1e-9;

/// Eigenvalues (ascending) and orthonormal eigenvectors, `vectors[[i, q]]`
/// being component `i` of eigenvector `q`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub lattice: LatticeParams,
    pub emitters: EmitterArray,
    pub energies: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Symmetric eigendecomposition (LAPACK `dsyevd`), destroying `a`.
/// Returns eigenvalues; `a` holds the eigenvectors in its columns.
pub fn symmetric_eigen(a: &mut Array2<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid("matrix is not square"));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    // symmetric: row-major storage is its own transpose, so the buffer can be
    // handed over as column-major; the result is written column-major
    if !a.is_standard_layout() && !a.t().is_standard_layout() {
        *a = a.as_standard_layout().into_owned();
    }
    let mut buf = std::mem::take(a).into_raw_vec_and_offset().0;
    let mut w = vec![0.0; n];
    lapack::dsyevd(n, &mut buf, &mut w)?;
    *a = Array2::from_shape_vec((n, n).f(), buf).expect("shape matches buffer");
    Ok(w)
}

impl Spectrum {
    pub fn new(lattice: &LatticeParams, emitters: &EmitterArray) -> Result<Self> {
        let h = ChainHamiltonian::new(*lattice, emitters.clone())?;
        let mut a = h.dense();
        let energies = symmetric_eigen(&mut a)?;
        let spectrum = Spectrum {
            lattice: *lattice,
            emitters: emitters.clone(),
            energies,
            vectors: a,
        };
        let residual = spectrum.max_residual(&h);
        if !(residual <= RESIDUAL_LIMIT) {
            return Err(Error::InaccurateEigensystem { residual });
        }
        Ok(spectrum)
    }

    /// Largest `|| H v_q - E_q v_q ||` over all eigenpairs, using the sparse
    /// structure of `H`.
    fn max_residual(&self, h: &ChainHamiltonian) -> f64 {
        let n = self.lattice.n_cavities;
        let (w0, xi, g) = (self.lattice.omega0, self.lattice.xi, self.emitters.g);
        let mut worst = 0.0f64;
        let mut hv = vec![0.0; self.dim()];
        for (q, col) in self.vectors.columns().into_iter().enumerate() {
            for i in 0..n {
                let mut acc = w0 * col[i];
                if i > 0 {
                    acc -= xi * col[i - 1];
                }
                if i + 1 < n {
                    acc -= xi * col[i + 1];
                }
                hv[i] = acc;
            }
            for (j, (&delta, &pos)) in h
                .emitters
                .deltas
                .iter()
                .zip(&h.emitters.positions)
                .enumerate()
            {
                hv[n + j] = delta * col[n + j] + g * col[pos];
                hv[pos] += g * col[n + j];
            }
            let e = self.energies[q];
            let r: f64 = hv
                .iter()
                .zip(col.iter())
                .map(|(a, b)| (a - e * b).powi(2))
                .sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn vector(&self, q: usize) -> Vec<f64> {
        self.vectors.column(q).to_vec()
    }

    pub fn state(&self, q: usize) -> SingleExcitationState {
        let v: Vec<Complex64> = self
            .vectors
            .column(q)
            .iter()
            .map(|&a| Complex64::new(a, 0.0))
            .collect();
        SingleExcitationState::from_vector(&v, self.lattice.n_cavities)
    }

    /// Eigenstates strictly outside the band.
    pub fn out_of_band(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&q| !self.lattice.in_band(self.energies[q]))
            .collect()
    }

    /// In-band eigenstates whose photon weight outside the emitter span is at
    /// most `tol` (trapped between the emitters). An accidental degeneracy with
    /// a standing wave of an outer chain segment mixes the two and hides the
    /// trapped state; choose chain lengths that avoid it.
    pub fn trapped_in_band(&self, tol: f64) -> Vec<usize> {
        let n = self.lattice.n_cavities;
        let (first, last) = match (
            self.emitters.positions.first(),
            self.emitters.positions.last(),
        ) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return vec![],
        };
        (0..self.dim())
            .filter(|&q| self.lattice.in_band(self.energies[q]))
            .filter(|&q| {
                let col = self.vectors.column(q);
                let outside: f64 = (0..first).chain(last + 1..n).map(|i| col[i] * col[i]).sum();
                let emitter: f64 = (n..self.dim()).map(|i| col[i] * col[i]).sum();
                outside <= tol && emitter > tol
            })
            .collect()
    }

    /// Out-of-band plus trapped in-band eigenstates.
    pub fn bound_indices(&self, tol: f64) -> Vec<usize> {
        let mut v = self.out_of_band();
        v.extend(self.trapped_in_band(tol));
        v.sort_unstable();
        v
    }

    /// `<q|psi>` for every eigenvector.
    pub fn overlaps(&self, psi: &SingleExcitationState) -> Vec<Complex64> {
        let v = psi.to_vector();
        self.vectors
            .columns()
            .into_iter()
            .map(|col| col.iter().zip(&v).map(|(&a, &b)| b * a).sum())
            .collect()
    }

    /// `|| H v - E v ||` for a real vector `v`.
    pub fn residual(&self, v: &[f64], energy: f64) -> Result<f64> {
        let h = ChainHamiltonian::new(self.lattice, self.emitters.clone())?;
        let psi: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        h.apply(&psi, &mut out);
        Ok(out
            .iter()
            .zip(v)
            .map(|(o, &a)| (o - energy * a).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Eigenvector at `energy` (within `tol`) with the largest projection on
    /// the emitter combination `matter`. Degenerate eigenvectors are combined
    /// so the result is the normalized projection of `matter` onto the
    /// eigenspace, with a non-negative overlap.
    pub fn bound_profile(
        &self,
        energy: f64,
        matter: &[f64],
        tol: f64,
    ) -> Result<SingleExcitationState> {
        let n = self.lattice.n_cavities;
        if matter.len() != self.emitters.len() {
            return Err(Error::invalid(format!(
                "matter vector has {} entries for {} emitters",
                matter.len(),
                self.emitters.len()
            )));
        }
        let idx: Vec<usize> = (0..self.dim())
            .filter(|&q| (self.energies[q] - energy).abs() <= tol)
            .collect();
        if idx.is_empty() {
            return Err(Error::ProfileNotFound {
                energy,
                tolerance: tol,
            });
        }
        let mut v = vec![0.0; self.dim()];
        for &q in &idx {
            let col = self.vectors.column(q);
            let c: f64 = matter.iter().enumerate().map(|(j, m)| m * col[n + j]).sum();
            for (vi, ci) in v.iter_mut().zip(col.iter()) {
                *vi += c * ci;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::ProfileNotFound {
                energy,
                tolerance: tol,
            });
        }
        let amps: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a / norm, 0.0)).collect();
        Ok(SingleExcitationState::from_vector(&amps, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn bare_chain_spectrum() {
        let l = LatticeParams::default().with_cavities(20);
        let e = EmitterArray::new(vec![5.0], 0.0, vec![3]).unwrap();
        let s = Spectrum::new(&l, &e).unwrap();
        for (j, en) in s.energies.iter().take(20).enumerate() {
            let expect = -2.0 * (PI * (j + 1) as f64 / 21.0).cos();
            assert_abs_diff_eq!(*en, expect, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(s.energies[20], 5.0, epsilon = 1e-12);
        assert_eq!(s.out_of_band(), vec![20]);
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_solve_h() {
        let l = LatticeParams::default().with_cavities(60);
        let e = EmitterArray::new(vec![0.4, 0.4], 0.3, vec![20, 31]).unwrap();
        let s = Spectrum::new(&l, &e).unwrap();
        for q in [0, 17, 61] {
            let v = s.vector(q);
            assert_abs_diff_eq!(v.iter().map(|a| a * a).sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(s.residual(&v, s.energies[q]).unwrap() < 1e-12);
        }
        let d = s.vectors.t().dot(&s.vectors);
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                assert_abs_diff_eq!(d[[i, j]], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn trapped_state_between_emitters() {
        let x = 11usize;
        // 203 sites: neither outer segment has an eigenvalue at the BIC energy
        let l = LatticeParams::default().with_cavities(203);
        let delta = -2.0 * (10.0 * PI / 11.0).cos();
        let e = EmitterArray::new(vec![delta; 2], 0.1, vec![90, 90 + x]).unwrap();
        let s = Spectrum::new(&l, &e).unwrap();
        let trapped = s.trapped_in_band(1e-10);
        assert_eq!(trapped.len(), 1);
        assert_abs_diff_eq!(s.energies[trapped[0]], delta, epsilon = 1e-12);
        let p = s
            .bound_profile(delta, &[0.5f64.sqrt(), -0.5f64.sqrt()], 1e-9)
            .unwrap();
        assert!(p.is_normalized());
        assert!(p.photon_amps[..90].iter().all(|a| a.norm() < 1e-10));
        assert!(matches!(
            s.bound_profile(50.0, &[1.0, 0.0], 1e-9),
            Err(Error::ProfileNotFound { .. })
        ));
    }
}

//! Spectrum of the spatially discretised operator `K + diag(V)` on a ring of
//! `P` periods, where `K` is the Fourier-spectral `-∂²ₓ` of the ring.
//!
//! The ring operator commutes with translation by one period, so it splits
//! into `P` Bloch sectors `κ = q/P`. In sector `q` the cell operator acts on
//! one period of samples with
//! `K[i,i'] = e^{iκ dx (i-i')} (1/N_x) Σ_m (m+κ)² e^{i2πm(i-i')/N_x}`,
//! `m ∈ [-N_x/2, N_x/2)`. Its eigenpairs are the exact band energies and
//! Bloch functions of the discrete problem, which makes them the consistent
//! basis for fields evolved on the same grid.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::BlochSet;
use crate::error::{Error, Result};
use crate::grid::PERIOD;
use crate::potential::PiecewisePotential;

#[derive(Clone, Debug)]
pub struct Sector {
    /// `q/P ∈ [0, 1)`.
    pub kappa: f64,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<Complex64>,
}

#[derive(Clone, Debug)]
pub struct GridSpectrum {
    pub cells: usize,
    pub nodes_per_cell: usize,
    sectors: Vec<Sector>,
}

fn cell_operator(potential: &[f64], kappa: f64) -> DMatrix<Complex64> {
    let n = potential.len();
    let half = n as i64 / 2;
    let dx = PERIOD / n as f64;
    let g: Vec<Complex64> = (0..n)
        .map(|d| {
            (-half..half)
                .map(|m| {
                    let xi = m as f64 + kappa;
                    Complex64::from_polar(xi * xi, 2.0 * PI * (m * d as i64) as f64 / n as f64)
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    let mut h = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        h[(i, i)] = g[0] + potential[i];
        for j in 0..i {
            let d = i - j;
            let z = g[d] * Complex64::from_polar(1.0, kappa * dx * d as f64);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

fn sector(potential: &[f64], kappa: f64) -> Sector {
    let h = cell_operator(potential, kappa);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..potential.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = DMatrix::from_fn(potential.len(), potential.len(), |i, c| eig.eigenvectors[(i, order[c])]);
    Sector { kappa, values, vectors }
}

impl GridSpectrum {
    /// Spectrum of the discrete operator on a ring of `cells` periods (even).
    pub fn new(v: &PiecewisePotential, nodes_per_cell: usize, cells: usize) -> Result<Self> {
        if cells < 2 || cells % 2 != 0 {
            return Err(Error::Grid(format!("the ring needs an even number of periods, got {cells}")));
        }
        if nodes_per_cell % 2 != 0 {
            return Err(Error::Grid(format!("nodes per period must be even, got {nodes_per_cell}")));
        }
        let potential = v.sample_cell(nodes_per_cell)?;
        let half: Vec<Sector> =
            (0..=cells / 2).into_par_iter().map(|q| sector(&potential, q as f64 / cells as f64)).collect();
        let mut sectors = half;
        for q in cells / 2 + 1..cells {
            let mirror = &sectors[cells - q];
            sectors.push(Sector {
                kappa: q as f64 / cells as f64,
                values: mirror.values.clone(),
                vectors: mirror.vectors.map(|z| z.conj()),
            });
        }
        Ok(Self { cells, nodes_per_cell, sectors })
    }

    pub fn sector(&self, q: usize) -> &Sector {
        &self.sectors[q]
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Quasimomentum of sector `q` mapped into `[-1/2, 1/2)`.
    pub fn k(&self, q: usize) -> f64 {
        let k = q as f64 / self.cells as f64;
        if k >= 0.5 {
            k - 1.0
        } else {
            k
        }
    }

    /// Energy of band `l` (1-based) in sector `q`.
    pub fn omega(&self, l: usize, q: usize) -> f64 {
        self.sectors[q].values[l - 1]
    }

    /// Lowest and highest energy of band `l` over the sectors.
    pub fn band_range(&self, l: usize) -> (f64, f64) {
        self.sectors.iter().map(|s| s.values[l - 1]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
            (lo.min(w), hi.max(w))
        })
    }

    /// Bloch functions of band `l` sorted by ascending `k`, unit-normalised
    /// over one period. With a reference profile each field is rotated so
    /// that its overlap with the profile is real and positive.
    pub fn bloch_set(&self, l: usize, profile: Option<&[f64]>) -> Result<BlochSet> {
        if l == 0 || l > self.nodes_per_cell {
            return Err(Error::BandSearch(format!("band {l} is not resolved by {} nodes", self.nodes_per_cell)));
        }
        let p = self.cells;
        let nx = self.nodes_per_cell;
        let dx = PERIOD / nx as f64;
        let scale = 1.0 / dx.sqrt();
        let mut k = Vec::with_capacity(p);
        let mut omega = Vec::with_capacity(p);
        let mut fields = Vec::with_capacity(p);
        for j in 0..p {
            let q = (j + p / 2) % p;
            let col = self.sectors[q].vectors.column(l - 1);
            let mut field: Vec<Complex64> = col.iter().map(|z| z * scale).collect();
            if let Some(g) = profile {
                // conjugate sectors share one phase so that u(-k) = conj u(k) exactly
                let base = if q <= p / 2 { q } else { p - q };
                let reference = self.sectors[base].vectors.column(l - 1);
                let ov: Complex64 = reference.iter().zip(g).map(|(z, &r)| z * scale * r).sum::<Complex64>() * dx;
                if ov.norm() < 1e-6 {
                    return Err(Error::Gauge { band: l, k: self.k(q), overlap: ov.norm() });
                }
                let mut phase = ov.conj() / ov.norm();
                if q > p / 2 {
                    phase = phase.conj();
                }
                for z in &mut field {
                    *z *= phase;
                }
            }
            k.push(self.k(q));
            omega.push(self.omega(l, q));
            fields.push(field);
        }
        Ok(BlochSet { band: l, nodes_per_cell: nx, k, omega, fields })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wannier::asymptotic_profile_cell;

    #[test]
    fn free_ring_reproduces_plane_wave_energies() {
        let s = GridSpectrum::new(&PiecewisePotential::free(), 16, 8).unwrap();
        for q in 0..8 {
            let kappa = q as f64 / 8.0;
            let mut expected: Vec<f64> = (-8..8).map(|m| (m as f64 + kappa).powi(2)).collect();
            expected.sort_by(f64::total_cmp);
            for (w, e) in s.sector(q).values.iter().zip(&expected) {
                assert!((w - e).abs() < 1e-10, "q = {q}: {w} vs {e}");
            }
        }
    }

    #[test]
    fn conjugate_sectors_mirror() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        let s = GridSpectrum::new(&v, 32, 8).unwrap();
        for q in 1..4 {
            assert_eq!(s.sector(q).values, s.sector(8 - q).values);
        }
        let set = s.bloch_set(1, Some(&asymptotic_profile_cell(1, PI, 32))).unwrap();
        for j in 0..8 {
            let mirror = (8 - j) % 8;
            if mirror == j || set.k[j] == -0.5 {
                continue;
            }
            assert!((set.k[j] + set.k[mirror]).abs() < 1e-15);
            for (a, b) in set.fields[j].iter().zip(&set.fields[mirror]) {
                assert!((a - b.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn discrete_band_is_close_to_continuum_band() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        let s = GridSpectrum::new(&v, 64, 8).unwrap();
        let bands = crate::floquet::locate_bands(&v, 2).unwrap();
        let (lo, hi) = s.band_range(1);
        // the discretisation shifts the band by O(dx), far less than the gap
        assert!((lo - bands[0].lo).abs() < 0.1 && (hi - bands[0].hi).abs() < 0.1);
        assert!(s.band_range(2).0 - hi > 1.0);
    }
}

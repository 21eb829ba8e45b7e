use std::f64::consts::PI;

use num_complex::Complex64;

use super::{band_project, wannier_coefficients};
use crate::error::{Error, Result};
use crate::floquet::{locate_bands, BlochSet, Gauge};
use crate::grid::CellGrid;
use crate::potential::PiecewisePotential;
use crate::wannier::WannierBasis;

/// Spectral resolvent `(L - ω_ref)^{-1}` restricted to a set of other bands:
/// `φ₁ = Σ_m (1/N_k) Σ_j ⟨u_m(k_j), g⟩ / (ω_m(k_j) - ω_ref) · u_m(k_j)`.
pub struct CorrectionSolver {
    sets: Vec<BlochSet>,
    grid: CellGrid,
    omega_ref: f64,
}

impl CorrectionSolver {
    pub fn new(sets: Vec<BlochSet>, grid: CellGrid, omega_ref: f64) -> Result<Self> {
        for set in &sets {
            if set.nodes_per_cell != grid.nodes_per_cell {
                return Err(Error::Grid("Bloch set and window use different cell grids".into()));
            }
            for (&k, &w) in set.k.iter().zip(&set.omega) {
                let gap = (w - omega_ref).abs();
                if gap < 1e-6 {
                    return Err(Error::Resonance { band: set.band, k, gap });
                }
            }
        }
        Ok(Self { sets, grid, omega_ref })
    }

    /// Analytic Bloch sets of bands `1..=m_max` other than `band`.
    pub fn analytic_sets(
        v: &PiecewisePotential,
        band: usize,
        m_max: usize,
        n_k: usize,
        n_x: usize,
    ) -> Result<Vec<BlochSet>> {
        let bands = locate_bands(v, m_max)?;
        (1..=m_max)
            .filter(|&m| m != band)
            .map(|m| BlochSet::analytic(v, &bands[m - 1], m, n_k, n_x, &Gauge::ParallelTransport))
            .collect()
    }

    pub fn omega_ref(&self) -> f64 {
        self.omega_ref
    }

    /// `(L - ω_ref)^{-1}` on the stored bands applied to `g`.
    pub fn resolvent(&self, g: &[Complex64]) -> Vec<Complex64> {
        let grid = self.grid;
        let nx = grid.nodes_per_cell;
        let dx = grid.dx();
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut u = vec![Complex64::new(0.0, 0.0); g.len()];
        for set in &self.sets {
            let weight = 1.0 / set.len() as f64;
            for ((&k, &w), field) in set.k.iter().zip(&set.omega).zip(&set.fields) {
                for c in 0..grid.cells() {
                    let cell = c as i64 + grid.first_cell();
                    let phase = Complex64::from_polar(1.0, 2.0 * PI * k * cell as f64);
                    for i in 0..nx {
                        u[c * nx + i] = field[i] * phase;
                    }
                }
                let coeff: Complex64 = u.iter().zip(g).map(|(a, b)| a.conj() * b).sum::<Complex64>() * dx;
                let c = coeff * (weight / (w - self.omega_ref));
                for (o, a) in out.iter_mut().zip(&u) {
                    *o += c * a;
                }
            }
        }
        out
    }

    /// `φ₁` for the source `f`: the resolvent applied to `(I - Π)f`.
    pub fn solve(&self, basis: &WannierBasis, f: &[Complex64]) -> Result<Vec<Complex64>> {
        if basis.grid != self.grid || f.len() != self.grid.len() {
            return Err(Error::Grid("source, basis and solver must share one window".into()));
        }
        let pf = band_project(f, basis);
        let g: Vec<Complex64> = f.iter().zip(&pf).map(|(a, b)| a - b).collect();
        Ok(self.resolvent(&g))
    }
}

/// `φ₁` from analytic Bloch functions of bands `m ≤ m_max`, `m ≠ l`, on the
/// basis window.
pub fn solve_correction(
    f: &[Complex64],
    v: &PiecewisePotential,
    basis: &WannierBasis,
    omega_ref: f64,
    m_max: usize,
    n_k: usize,
) -> Result<Vec<Complex64>> {
    let bands = locate_bands(v, m_max)?;
    // ω_ref must sit in a gap of every other band
    for (m, edges) in bands.iter().enumerate() {
        if m + 1 != basis.band && edges.distance_to(omega_ref) < 1e-6 {
            return Err(Error::Resonance { band: m + 1, k: f64::NAN, gap: edges.distance_to(omega_ref) });
        }
    }
    let sets = CorrectionSolver::analytic_sets(v, basis.band, m_max, n_k, basis.grid.nodes_per_cell)?;
    CorrectionSolver::new(sets, basis.grid, omega_ref)?.solve(basis, f)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    /// `‖(-∂² + V - ω_ref)φ₁ - g‖ / ‖g‖` over the checked nodes.
    pub relative: f64,
    pub checked_nodes: usize,
    /// `max_n |⟨φ₁, û_{l,n}⟩| / ‖φ₁‖`.
    pub orthogonality: f64,
}

/// Applies `-∂² + V - ω_ref` to `phi1` with a fourth-order difference
/// Laplacian and compares with `g`. Nodes within two nodes of a segment
/// boundary, or of a non-periodic window end, are skipped.
pub fn correction_residual(
    phi1: &[Complex64],
    g: &[Complex64],
    basis: &WannierBasis,
    omega_ref: f64,
) -> ResidualReport {
    let grid = basis.grid;
    let nx = grid.nodes_per_cell;
    let n = grid.len();
    let dx = grid.dx();
    let v = basis.potential_cell();
    let near_boundary = |i: usize| {
        basis.boundary_nodes().iter().any(|&b| {
            let d = (i as i64 - b as i64).rem_euclid(nx as i64);
            d <= 2 || d >= nx as i64 - 2
        })
    };
    let at = |j: i64| phi1[j.rem_euclid(n as i64) as usize];
    let mut num = 0.0;
    let mut den = 0.0;
    let mut checked = 0;
    for idx in 0..n {
        if near_boundary(idx % nx) || (!basis.periodic && (idx < 2 || idx + 2 >= n)) {
            continue;
        }
        let j = idx as i64;
        let lap = (-at(j + 2) + 16.0 * at(j + 1) - 30.0 * at(j) + 16.0 * at(j - 1) - at(j - 2)) / (12.0 * dx * dx);
        let r = -lap + (v[idx % nx] - omega_ref) * phi1[idx] - g[idx];
        num += r.norm_sqr();
        den += g[idx].norm_sqr();
        checked += 1;
    }
    let norm = (phi1.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
    let orth = wannier_coefficients(basis, phi1).iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    ResidualReport {
        relative: (num / den).sqrt(),
        checked_nodes: checked,
        orthogonality: if norm > 0.0 { orth / norm } else { 0.0 },
    }
}

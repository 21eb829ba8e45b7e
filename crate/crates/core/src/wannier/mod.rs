//! Wannier functions of a single band, coupling constants of the lattice
//! model, overlap kernels and localisation diagnostics.
//!
//! `û_{l,0}(x) = (1/N_k) Σ_j u_l(x; k_j)` over a uniform k-grid, with every
//! Bloch field continued quasi-periodically across the window before the
//! sum. Shifted functions are `û_{l,n}(x) = û_{l,0}(x - 2πn)`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::floquet::{locate_bands, BlochSet, Gauge};
use crate::gp;
use crate::grid::{CellGrid, PERIOD};
use crate::potential::{PiecewisePotential, WellFamily};

/// Limit `ε -> 0` of `û_{l,0}` on `[0, 2π]`; zero outside.
pub fn asymptotic_profile(l: usize, a: f64, x: f64) -> f64 {
    if x < a || x > PERIOD {
        return 0.0;
    }
    let width = PERIOD - a;
    (2.0 / width).sqrt() * (PI * l as f64 * (PERIOD - x) / width).sin()
}

pub fn asymptotic_profile_cell(l: usize, a: f64, nodes: usize) -> Vec<f64> {
    let dx = PERIOD / nodes as f64;
    (0..nodes).map(|i| asymptotic_profile(l, a, i as f64 * dx)).collect()
}

/// `ω̂_n = (1/N) Σ_j ω(k_j) e^{-i2πn k_j}` for `n = 0..=n_max`, real part.
pub fn band_fourier(k: &[f64], omega: &[f64], n_max: usize) -> Vec<f64> {
    let nk = k.len() as f64;
    (0..=n_max)
        .map(|n| {
            k.iter()
                .zip(omega)
                .map(|(&kj, &w)| w * (2.0 * PI * n as f64 * kj).cos())
                .sum::<f64>()
                / nk
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeKind {
    AsymptoticProfile,
    ParallelTransport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WannierParams {
    pub n_k: usize,
    pub n_x: usize,
    pub n_w: usize,
    pub n_max: usize,
    pub gauge: GaugeKind,
}

impl Default for WannierParams {
    fn default() -> Self {
        Self { n_k: 64, n_x: 64, n_w: 8, n_max: 4, gauge: GaugeKind::AsymptoticProfile }
    }
}

#[derive(Clone, Debug)]
pub struct WannierBasis {
    pub band: usize,
    pub family: Option<WellFamily>,
    pub mu: f64,
    pub grid: CellGrid,
    /// Shifts wrap around the window (ring geometry) instead of truncating.
    pub periodic: bool,
    pub u0: Vec<f64>,
    pub omega_hat: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub h1v_norm: f64,
    /// Largest `|Im û_{l,0}|` discarded when taking the real part.
    pub imag_residue: f64,
    potential_cell: Vec<f64>,
    boundary_nodes: Vec<usize>,
}

impl WannierBasis {
    /// Sum a gauge-fixed Bloch set over the k-grid on `grid`.
    pub fn from_bloch(
        set: &BlochSet,
        grid: CellGrid,
        periodic: bool,
        potential: &PiecewisePotential,
        mu: f64,
        n_max: usize,
    ) -> Result<Self> {
        if set.nodes_per_cell != grid.nodes_per_cell {
            return Err(Error::Grid("Bloch set and window use different cell grids".into()));
        }
        let nx = grid.nodes_per_cell;
        let nk = set.len() as f64;
        let mut u0 = Vec::with_capacity(grid.len());
        let mut imag_residue: f64 = 0.0;
        for c in 0..grid.cells() {
            let cell = c as i64 + grid.first_cell();
            let phases: Vec<Complex64> =
                set.k.iter().map(|&k| Complex64::from_polar(1.0, 2.0 * PI * k * cell as f64)).collect();
            for i in 0..nx {
                let z: Complex64 = set.fields.iter().zip(&phases).map(|(f, p)| f[i] * p).sum::<Complex64>() / nk;
                imag_residue = imag_residue.max(z.im.abs());
                u0.push(z.re);
            }
        }
        if imag_residue > 1e-8 {
            return Err(Error::NotReal { band: set.band, residue: imag_residue });
        }
        let omega_hat = band_fourier(&set.k, &set.omega, n_max);
        let potential_cell = potential.sample_cell(nx)?;
        let boundary_nodes = potential.boundary_nodes(nx)?;
        let mut basis = Self {
            band: set.band,
            family: potential.family(),
            mu,
            grid,
            periodic,
            u0,
            alpha: if omega_hat.len() > 1 { omega_hat[1] / mu } else { 0.0 },
            omega_hat,
            beta: 0.0,
            h1v_norm: 0.0,
            imag_residue,
            potential_cell,
            boundary_nodes,
        };
        basis.beta = basis.u0.iter().map(|u| u.powi(4)).sum::<f64>() * grid.dx();
        let field: Vec<Complex64> = basis.u0.iter().map(|&u| Complex64::new(u, 0.0)).collect();
        basis.h1v_norm = gp::h1_norms(&field, &basis.potential_on_grid(), grid).weighted;
        Ok(basis)
    }

    pub fn potential_cell(&self) -> &[f64] {
        &self.potential_cell
    }

    pub fn potential_on_grid(&self) -> Vec<f64> {
        self.potential_cell.iter().copied().cycle().take(self.grid.len()).collect()
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn in_window(&self, n: i64) -> bool {
        n.unsigned_abs() as usize <= self.grid.cells_per_side
    }

    /// `û_{l,n}` at flat index `idx` of the window.
    pub fn value(&self, n: i64, idx: usize) -> f64 {
        let (cell, node) = self.grid.split(idx);
        let mut src = cell - n;
        if self.periodic {
            let cells = self.grid.cells() as i64;
            src = (src - self.grid.first_cell()).rem_euclid(cells) + self.grid.first_cell();
        }
        self.grid.flat(src, node).map_or(0.0, |j| self.u0[j])
    }

    /// `û_{l,n}` on the whole window.
    pub fn shifted(&self, n: i64) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.value(n, i)).collect()
    }

    fn check_shift(&self, n: i64) -> Result<()> {
        if self.in_window(n) {
            Ok(())
        } else {
            Err(Error::Window(format!("shift {n} outside the stored window ±{}", self.grid.cells_per_side)))
        }
    }

    /// `(α, β) = (ω̂_{l,1}/μ, ‖û_{l,0}‖⁴_{L⁴})`.
    pub fn coupling_constants(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    pub fn overlap_kernel(&self, n: i64, n1: i64, n2: i64, n3: i64) -> Result<f64> {
        for s in [n, n1, n2, n3] {
            self.check_shift(s)?;
        }
        let sum: f64 = (0..self.grid.len())
            .map(|i| self.value(n, i) * self.value(n1, i) * self.value(n2, i) * self.value(n3, i))
            .sum();
        Ok(sum * self.grid.dx())
    }

    pub fn inner(&self, n: i64, m: i64) -> f64 {
        (0..self.grid.len()).map(|i| self.value(n, i) * self.value(m, i)).sum::<f64>() * self.grid.dx()
    }

    pub fn gram_matrix(&self, range: RangeInclusive<i64>) -> Result<Vec<Vec<f64>>> {
        self.check_shift(*range.start())?;
        self.check_shift(*range.end())?;
        Ok(range.clone().map(|n| range.clone().map(|m| self.inner(n, m)).collect()).collect())
    }

    /// `sup_{x∈[0,2π]} |û_{l,0}(x) - û₀(x)|`.
    pub fn profile_error(&self) -> Result<f64> {
        let fam = self
            .family
            .ok_or_else(|| Error::Window("profile error needs the wall-well family parameters".into()))?;
        let nx = self.grid.nodes_per_cell;
        let profile = asymptotic_profile_cell(self.band, fam.a, nx);
        let start = self.grid.flat(0, 0).expect("cell 0 is always in the window");
        // the closed interval includes x = 2π, the first node of cell 1
        let mut err = (0..nx).map(|i| (self.u0[start + i] - profile[i]).abs()).fold(0.0, f64::max);
        if let Some(j) = self.grid.flat(1, 0) {
            err = err.max((self.u0[j] - asymptotic_profile(self.band, fam.a, PERIOD)).abs());
        }
        Ok(err)
    }

    /// Max of `|Σ_n sup_x |û_{l,n}(x)||` summed over all shifts in the window.
    pub fn shift_sum_bound(&self) -> f64 {
        let n = self.grid.cells_per_side as i64;
        (0..self.grid.len())
            .map(|i| (-n..n).map(|s| self.value(s, i).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Pointwise residual of `-û'' + Vû - Σ_{|n'|≤n_max} ω̂_{|n'|} û_{n'}` with a
    /// second-order difference Laplacian, skipping nodes on segment boundaries
    /// and the outermost `n_max + 1` cells where shifted copies are truncated.
    pub fn ode_residual(&self) -> f64 {
        let nx = self.grid.nodes_per_cell;
        let dx = self.grid.dx();
        let n_max = self.omega_hat.len() as i64 - 1;
        let margin = (n_max + 1) as usize;
        let cells = self.grid.cells();
        if cells <= 2 * margin {
            return f64::NAN;
        }
        let mut worst: f64 = 0.0;
        for c in margin..cells - margin {
            for i in 0..nx {
                if self.boundary_nodes.contains(&i) {
                    continue;
                }
                let idx = c * nx + i;
                let lap = (self.u0[idx + 1] - 2.0 * self.u0[idx] + self.u0[idx - 1]) / (dx * dx);
                let mut rhs = self.omega_hat[0] * self.u0[idx];
                for m in 1..=n_max {
                    rhs += self.omega_hat[m as usize] * (self.value(m, idx) + self.value(-m, idx));
                }
                let r = -lap + self.potential_cell[i] * self.u0[idx] - rhs;
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    pub fn decay_diagnostics(&self) -> Result<DecayReport> {
        let mu = self.mu;
        let hop: Vec<(usize, f64)> = self.omega_hat.iter().enumerate().skip(1).map(|(n, w)| (n, w.abs())).collect();
        let nx = self.grid.nodes_per_cell;
        let tail: Vec<(usize, f64)> = (1..self.grid.cells_per_side)
            .map(|n| {
                let sup = [n as i64, -(n as i64)]
                    .iter()
                    .filter_map(|&c| self.grid.flat(c, 0))
                    .flat_map(|start| self.u0[start..start + nx].iter().map(|u| u.abs()))
                    .fold(0.0, f64::max);
                (n, sup)
            })
            .collect();
        let bound_const = |pts: &[(usize, f64)]| pts.iter().map(|&(n, m)| m / mu.powi(n as i32)).fold(0.0, f64::max);
        let hc = bound_const(&hop);
        let tc = bound_const(&tail);
        let hopping_decay = hop.iter().map(|&(n, m)| DecayEntry { n, magnitude: m, bound: hc * mu.powi(n as i32) }).collect();
        let tail_decay = tail.iter().map(|&(n, m)| DecayEntry { n, magnitude: m, bound: tc * mu.powi(n as i32) }).collect();
        let slope_of = |pts: &[(usize, f64)]| -> Option<f64> {
            // points below double-precision noise carry no rate information
            let usable: Vec<&(usize, f64)> = pts.iter().filter(|(_, m)| *m > 1e-14).collect();
            let xs: Vec<f64> = usable.iter().map(|(n, _)| *n as f64).collect();
            let ys: Vec<f64> = usable.iter().map(|(_, m)| m.ln()).collect();
            fit_line(&xs, &ys).ok().map(|f| f.slope)
        };
        Ok(DecayReport {
            hopping_decay,
            tail_decay,
            profile_error: self.profile_error().unwrap_or(f64::NAN),
            fitted_rates: FittedRates { hopping_slope: slope_of(&hop), tail_slope: slope_of(&tail), log_mu: mu.ln() },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayEntry {
    pub n: usize,
    pub magnitude: f64,
    /// `c·μⁿ` with the smallest `c` that bounds every recorded magnitude.
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FittedRates {
    pub hopping_slope: Option<f64>,
    pub tail_slope: Option<f64>,
    pub log_mu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub hopping_decay: Vec<DecayEntry>,
    pub tail_decay: Vec<DecayEntry>,
    pub profile_error: f64,
    pub fitted_rates: FittedRates,
}

/// Wannier function of band `l` of the wall-well potential from analytic
/// Bloch functions, on a window of `n_w` periods per side.
pub fn wannier_function(v: &PiecewisePotential, l: usize, params: &WannierParams) -> Result<WannierBasis> {
    let family = v
        .family()
        .ok_or_else(|| Error::Window("Wannier construction needs a wall-well potential".into()))?;
    if params.n_w < 4 {
        return Err(Error::Window(format!("window must hold at least 4 periods per side, got {}", params.n_w)));
    }
    let bands = locate_bands(v, l + 1)?;
    let gauge = match params.gauge {
        GaugeKind::AsymptoticProfile => Gauge::Profile(asymptotic_profile_cell(l, family.a, params.n_x)),
        GaugeKind::ParallelTransport => Gauge::ParallelTransport,
    };
    let set = BlochSet::analytic(v, &bands[l - 1], l, params.n_k, params.n_x, &gauge)?;
    let grid = CellGrid::new(params.n_x, params.n_w)?;
    WannierBasis::from_bloch(&set, grid, false, v, family.mu(), params.n_max)
}

pub fn coupling_constants(basis: &WannierBasis) -> (f64, f64) {
    basis.coupling_constants()
}

/// Relative spread `max|α| / min|α|` over a sweep; above 10 the gauge or the
/// quadrature is suspect.
pub fn alpha_drift(alphas: &[f64]) -> f64 {
    let max = alphas.iter().map(|a| a.abs()).fold(0.0, f64::max);
    let min = alphas.iter().map(|a| a.abs()).fold(f64::INFINITY, f64::min);
    max / min
}

#[cfg(test)]
mod tests;

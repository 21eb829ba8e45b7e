//! Co-simulation of the lattice model and the continuum field, the
//! weighted-H¹ mismatch between them, the band projection and the off-band
//! correction, and the residual growth diagnostic.

mod correction;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

pub use correction::{correction_residual, solve_correction, CorrectionSolver, ResidualReport};

use crate::dnls::{check_truncation, dnls_evolve, LatticeState};
use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::floquet::collocation::GridSpectrum;
use crate::floquet::{locate_bands, BlochSet, Gauge};
use crate::gp::{gp_evolve_with, BlochPropagator, EvolveOptions, FieldOps, FieldState, Propagator, SplitStepFourier};
use crate::grid::CellGrid;
use crate::potential::PiecewisePotential;
use crate::wannier::{asymptotic_profile_cell, WannierBasis};

/// Lattice data at `T = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialLattice {
    SingleSite(f64),
    /// Equal amplitudes on sites 0 and 1.
    TwoSite(f64),
    /// Real amplitudes on consecutive sites; the middle entry sits on site 0
    /// (for an even count, the first of the two middle entries).
    Custom(Vec<f64>),
}

impl InitialLattice {
    pub fn amplitudes(&self, half_width: usize) -> Result<Vec<Complex64>> {
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * half_width + 1];
        let mut put = |n: i64, value: f64| -> Result<()> {
            let idx = n + half_width as i64;
            if idx < 0 || idx as usize >= amps.len() {
                return Err(Error::Window(format!("initial site {n} lies outside the lattice ±{half_width}")));
            }
            amps[idx as usize] = Complex64::new(value, 0.0);
            Ok(())
        };
        match self {
            Self::SingleSite(a) => put(0, *a)?,
            Self::TwoSite(a) => {
                put(0, *a)?;
                put(1, *a)?;
            }
            Self::Custom(values) => {
                let first = -((values.len() as i64 - 1) / 2);
                for (j, &v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::Domain { name: "custom", value: v, reason: "amplitudes must be finite" });
                    }
                    put(first + j as i64, v)?;
                }
            }
        }
        Ok(amps)
    }
}

/// Which discrete model supplies the Wannier basis and the field integrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisModel {
    /// Eigenfunctions of the discretised operator on the simulation ring,
    /// evolved with the exact discrete linear propagator.
    Grid,
    /// Analytic Bloch functions of the continuum operator, evolved with the
    /// Fourier split-step scheme.
    Continuum,
}

impl BasisModel {
    pub fn default_dt(self) -> f64 {
        match self {
            Self::Grid => 0.05,
            Self::Continuum => 2.5e-4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::Continuum => "continuum",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub eps_list: Vec<f64>,
    pub a: f64,
    pub band: usize,
    pub sigma: f64,
    pub t0: f64,
    pub initial: InitialLattice,
    pub n_k: usize,
    pub n_x: usize,
    pub n_w: usize,
    pub n_d: usize,
    pub n_lat: usize,
    pub n_max: usize,
    pub m_max: usize,
    /// Continuum step in fast time.
    pub dt: f64,
    /// Lattice step in slow time.
    pub dt_lattice: f64,
    pub sample_count: usize,
    pub basis: BasisModel,
    /// Run the residual diagnostic for this member of `eps_list`.
    pub gronwall_eps: Option<f64>,
    pub truncation_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eps_list: vec![0.6, 0.55, 0.5, 0.45],
            a: PI,
            band: 1,
            sigma: 1.0,
            t0: 1.0,
            initial: InitialLattice::SingleSite(1.0),
            n_k: 64,
            n_x: 64,
            n_w: 8,
            n_d: 32,
            n_lat: 24,
            n_max: 4,
            m_max: 16,
            dt: BasisModel::Grid.default_dt(),
            dt_lattice: 1e-3,
            sample_count: 64,
            basis: BasisModel::Grid,
            gronwall_eps: Some(0.5),
            truncation_threshold: 1e-8,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::ensure_domain;
        if self.eps_list.is_empty() {
            return Err(Error::Domain { name: "eps_list", value: f64::NAN, reason: "must not be empty" });
        }
        for &e in &self.eps_list {
            ensure_domain(e > 0.0 && e.is_finite(), "eps", e, "must be positive")?;
        }
        for w in self.eps_list.windows(2) {
            ensure_domain(w[1] < w[0], "eps_list", w[1], "must be strictly decreasing")?;
        }
        ensure_domain(self.a > 0.0 && self.a < 2.0 * PI, "a", self.a, "must lie in (0, 2π)")?;
        ensure_domain(self.band >= 1, "band", self.band as f64, "must be at least 1")?;
        crate::gp::check_sigma(self.sigma)?;
        ensure_domain(self.t0 > 0.0 && self.t0.is_finite(), "t0", self.t0, "must be positive")?;
        ensure_domain(self.dt > 0.0, "dt", self.dt, "must be positive")?;
        ensure_domain(self.dt_lattice > 0.0, "dt_lattice", self.dt_lattice, "must be positive")?;
        ensure_domain(self.sample_count >= 2, "sample_count", self.sample_count as f64, "needs at least 2 samples")?;
        ensure_domain(self.n_k >= 2 && self.n_k % 2 == 0, "n_k", self.n_k as f64, "must be even and at least 2")?;
        ensure_domain(self.n_x >= 8 && self.n_x % 2 == 0, "n_x", self.n_x as f64, "must be even and at least 8")?;
        ensure_domain(self.n_w >= 4, "n_w", self.n_w as f64, "must be at least 4")?;
        ensure_domain(self.n_lat >= 1, "n_lat", self.n_lat as f64, "must be at least 1")?;
        ensure_domain(self.n_d > self.n_lat, "n_d", self.n_d as f64, "must exceed the lattice half-width")?;
        ensure_domain(self.m_max > self.band, "m_max", self.m_max as f64, "must exceed the band index")?;
        ensure_domain(self.n_max >= 1, "n_max", self.n_max as f64, "must be at least 1")?;
        ensure_domain(self.truncation_threshold > 0.0, "truncation", self.truncation_threshold, "must be positive")?;
        if let Some(g) = self.gronwall_eps {
            ensure_domain(self.eps_list.contains(&g), "gronwall", g, "must be a member of eps_list")?;
        }
        let n_tot = 2 * self.n_d * self.n_x;
        if !n_tot.is_power_of_two() {
            return Err(Error::Grid(format!("field grid of {n_tot} nodes is not a power of two")));
        }
        Ok(())
    }

    pub fn field_grid(&self) -> Result<CellGrid> {
        CellGrid::new(self.n_x, self.n_d)
    }

    /// Slow sample times `T_i`, uniform on `[0, T0]` with both ends.
    pub fn slow_times(&self) -> Vec<f64> {
        let s = self.sample_count;
        (0..s).map(|i| self.t0 * i as f64 / (s - 1) as f64).collect()
    }
}

/// `μ^{1/2} e^{-iω̂_{l,0}t} Σ_n φ_n û_{l,n}` on the basis window.
pub fn synthesize_field(lattice: &LatticeState, basis: &WannierBasis, mu: f64, t: f64) -> Result<FieldState> {
    let hw = lattice.half_width() as i64;
    if !basis.in_window(hw) || (!basis.periodic && hw >= basis.grid.cells_per_side as i64) {
        return Err(Error::Window(format!(
            "lattice of half-width {hw} does not fit the basis window ±{}",
            basis.grid.cells_per_side
        )));
    }
    let carrier = Complex64::from_polar(mu.sqrt(), -basis.omega_hat[0] * t);
    let mut values = vec![Complex64::new(0.0, 0.0); basis.grid.len()];
    for n in -hw..=hw {
        let amp = lattice.site(n);
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let c = amp * carrier;
        for (idx, z) in values.iter_mut().enumerate() {
            let u = basis.value(n, idx);
            if u != 0.0 {
                *z += c * u;
            }
        }
    }
    let mut state = FieldState::new(basis.grid, values, lattice.sigma)?;
    state.time = t;
    Ok(state)
}

/// Shifts spanned by the stored basis.
pub(crate) fn basis_shifts(basis: &WannierBasis) -> std::ops::Range<i64> {
    let n = basis.grid.cells_per_side as i64;
    -n..n
}

/// Coefficients `⟨û_{l,n}, f⟩` over the stored shifts.
pub fn wannier_coefficients(basis: &WannierBasis, f: &[Complex64]) -> Vec<(i64, Complex64)> {
    let dx = basis.grid.dx();
    basis_shifts(basis)
        .map(|n| {
            let c: Complex64 = f.iter().enumerate().map(|(i, z)| z * basis.value(n, i)).sum::<Complex64>() * dx;
            (n, c)
        })
        .collect()
}

/// `Πf = Σ_n ⟨û_{l,n}, f⟩ û_{l,n}`.
pub fn band_project(f: &[Complex64], basis: &WannierBasis) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
    for (n, c) in wannier_coefficients(basis, f) {
        for (i, z) in out.iter_mut().enumerate() {
            *z += c * basis.value(n, i);
        }
    }
    out
}

/// Least squares of `log y` against `log μ`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(&(m, y)) = points.iter().find(|(m, y)| !(*m > 0.0 && *y > 0.0)) {
        return Err(Error::Domain {
            name: "scaling point",
            value: if m > 0.0 { y } else { m },
            reason: "log-log fits need positive values",
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    fit_line(&xs, &ys)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsRecord {
    pub eps: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub omega0: f64,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub sup_error: f64,
    /// `sup_error / μ^{3/2}`
    pub ratio: f64,
    /// `max |Q(t) - Q(0)| / Q(0)`
    pub q_drift: f64,
    /// `max |E(t) - E(0)| / |E(0)|`
    pub e_drift: f64,
    pub field_boundary_ratio: f64,
    pub lattice_boundary: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport {
    pub eps: f64,
    pub mu: f64,
    pub times: Vec<f64>,
    pub residual_norms: Vec<f64>,
    /// `‖φ₁(·,0)‖`, the size of `ψ(0) = -φ₁(·,0)`.
    pub correction_norm: f64,
    /// `T₀·sup_T‖φ⃗(T)‖_{l¹}`
    pub forcing: f64,
    /// `‖ψ(0)‖ + forcing`
    pub scale: f64,
    /// `max_t ‖ψ(t)‖ / scale`
    pub growth: f64,
    /// Smallest `C` with `‖ψ(t)‖ ≤ (‖ψ(0)‖ + C·T·sup‖φ⃗‖_{l¹}) e^{C·T}` at every sample.
    pub fitted_rate: f64,
}

#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub records: Vec<EpsRecord>,
    pub failures: Vec<(f64, Error)>,
    pub fit: Option<LineFit>,
    pub gronwall: Option<GronwallReport>,
}

impl ErrorReport {
    /// `max / min` of `sup_error / μ^{3/2}` over the completed runs.
    pub fn ratio_spread(&self) -> f64 {
        let max = self.records.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let min = self.records.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Ingredients of one validation run at fixed `ε`.
pub struct RunModel {
    pub potential: PiecewisePotential,
    pub mu: f64,
    pub basis: WannierBasis,
    pub ops: FieldOps,
    spectrum: Option<Arc<GridSpectrum>>,
    cfg: ExperimentConfig,
}

impl RunModel {
    pub fn build(cfg: &ExperimentConfig, eps: f64) -> Result<Self> {
        let potential = PiecewisePotential::wall_well(eps, cfg.a)?;
        let mu = crate::potential::small_parameter(eps, cfg.a);
        let grid = cfg.field_grid()?;
        let profile = asymptotic_profile_cell(cfg.band, cfg.a, cfg.n_x);
        let (basis, spectrum) = match cfg.basis {
            BasisModel::Grid => {
                let spectrum = Arc::new(GridSpectrum::new(&potential, cfg.n_x, grid.cells())?);
                let set = spectrum.bloch_set(cfg.band, Some(&profile))?;
                (WannierBasis::from_bloch(&set, grid, true, &potential, mu, cfg.n_max)?, Some(spectrum))
            }
            BasisModel::Continuum => {
                let bands = locate_bands(&potential, cfg.band + 1)?;
                let set = BlochSet::analytic(
                    &potential,
                    &bands[cfg.band - 1],
                    cfg.band,
                    cfg.n_k,
                    cfg.n_x,
                    &Gauge::Profile(profile),
                )?;
                (WannierBasis::from_bloch(&set, grid, false, &potential, mu, cfg.n_max)?, None)
            }
        };
        let ops = FieldOps::for_potential(&potential, grid)?;
        Ok(Self { potential, mu, basis, ops, spectrum, cfg: cfg.clone() })
    }

    pub fn propagator(&self, dt: f64) -> Result<Box<dyn Propagator + Send>> {
        let grid = self.basis.grid;
        Ok(match &self.spectrum {
            Some(s) => Box::new(BlochPropagator::new(s.clone(), grid, self.cfg.sigma, dt)?),
            None => Box::new(SplitStepFourier::new(&self.potential, grid, self.cfg.sigma, dt)?),
        })
    }

    /// Off-band resolvent built from the same model as the basis.
    pub fn correction_solver(&self) -> Result<CorrectionSolver> {
        let omega_ref = self.basis.omega_hat[0];
        let sets = match &self.spectrum {
            Some(s) => (1..=self.cfg.m_max)
                .filter(|&m| m != self.cfg.band)
                .map(|m| s.bloch_set(m, None))
                .collect::<Result<Vec<_>>>()?,
            None => CorrectionSolver::analytic_sets(&self.potential, self.cfg.band, self.cfg.m_max, self.cfg.n_k, self.cfg.n_x)?,
        };
        CorrectionSolver::new(sets, self.basis.grid, omega_ref)
    }

    pub fn lattice(&self) -> Result<LatticeState> {
        let (alpha, beta) = self.basis.coupling_constants();
        LatticeState::new(self.cfg.initial.amplitudes(self.cfg.n_lat)?, alpha, beta, self.cfg.sigma)
    }
}

impl Propagator for Box<dyn Propagator + Send> {
    fn dt(&self) -> f64 {
        (**self).dt()
    }
    fn set_dt(&mut self, dt: f64) -> Result<()> {
        (**self).set_dt(dt)
    }
    fn step(&mut self, values: &mut [Complex64]) -> Result<()> {
        (**self).step(values)
    }
}

fn relative_drift(values: impl Iterator<Item = f64>, reference: f64) -> f64 {
    let scale = reference.abs();
    values.map(|v| (v - reference).abs()).fold(0.0, f64::max) / if scale > 0.0 { scale } else { 1.0 }
}

/// One member of the sweep; the residual diagnostic runs when `gronwall`.
pub fn run_single(cfg: &ExperimentConfig, eps: f64, gronwall: bool) -> Result<(EpsRecord, Option<GronwallReport>)> {
    let model = RunModel::build(cfg, eps)?;
    let mu = model.mu;
    let lattice0 = model.lattice()?;
    let slow = cfg.slow_times();
    let lattice = dnls_evolve(&lattice0, &slow, cfg.dt_lattice)?;
    let last = lattice.last().expect("at least two samples");
    let lattice_boundary = lattice.iter().map(|s| s.boundary_amplitude()).fold(0.0, f64::max);
    check_truncation(last, cfg.truncation_threshold)?;

    let fast: Vec<f64> = slow.iter().map(|t| t / mu).collect();
    let mut field = synthesize_field(&lattice0, &model.basis, mu, 0.0)?;
    let mut prop = model.propagator(cfg.dt)?;
    let solver = if gronwall { Some(model.correction_solver()?) } else { None };

    let mut errors = Vec::with_capacity(fast.len());
    let mut conserved = Vec::with_capacity(fast.len());
    let mut residuals = Vec::new();
    let mut boundary: f64 = 0.0;
    let mut sample = 0usize;
    let opts = EvolveOptions { dt_max: cfg.dt, boundary_guard: None };
    gp_evolve_with(&mut field, &mut prop, &fast, opts, |state| {
        let t = state.time;
        let approx = synthesize_field(&lattice[sample], &model.basis, mu, t)?;
        let diff: Vec<Complex64> = state.values.iter().zip(&approx.values).map(|(a, b)| a - b).collect();
        errors.push(model.ops.weighted_h1_norm(&diff));
        conserved.push(model.ops.conserved(&state.values, state.sigma));
        boundary = boundary.max(state.boundary_ratio());
        if let Some(solver) = &solver {
            residuals.push(residual_norm(solver, &model, &lattice[sample], state, mu)?);
        }
        sample += 1;
        Ok(())
    })?;

    let sup_error = errors.iter().copied().fold(0.0, f64::max);
    let (alpha, beta) = model.basis.coupling_constants();
    let record = EpsRecord {
        eps,
        mu,
        alpha,
        beta,
        omega0: model.basis.omega_hat[0],
        times: fast,
        sup_error,
        ratio: sup_error / mu.powf(1.5),
        q_drift: relative_drift(conserved.iter().map(|c| c.q), conserved[0].q),
        e_drift: relative_drift(conserved.iter().map(|c| c.e), conserved[0].e),
        errors,
        field_boundary_ratio: boundary,
        lattice_boundary,
    };
    let report = solver.map(|_| {
        let l1 = lattice.iter().map(|s| s.l1_norm()).fold(0.0, f64::max);
        gronwall_summary(eps, mu, &record.times, residuals, cfg.t0 * l1, l1)
    });
    Ok((record, report))
}

/// `‖ψ(t)‖` for `ψ = (φ e^{iω̂₀t}/μ^{1/2} - φ₀)/μ - φ₁` in the weighted H¹ norm.
fn residual_norm(
    solver: &CorrectionSolver,
    model: &RunModel,
    lattice: &LatticeState,
    field: &FieldState,
    mu: f64,
) -> Result<f64> {
    let phi0 = synthesize_field(lattice, &model.basis, 1.0, 0.0)?;
    let source: Vec<Complex64> = phi0.values.iter().map(|z| -lattice.sigma * z.norm_sqr() * z).collect();
    let phi1 = solver.solve(&model.basis, &source)?;
    let carrier = Complex64::from_polar(1.0 / mu.sqrt(), model.basis.omega_hat[0] * field.time);
    let psi: Vec<Complex64> = field
        .values
        .iter()
        .zip(&phi0.values)
        .zip(&phi1)
        .map(|((f, p0), p1)| (f * carrier - p0) / mu - p1)
        .collect();
    Ok(model.ops.weighted_h1_norm(&psi))
}

pub(crate) fn gronwall_summary(
    eps: f64,
    mu: f64,
    times: &[f64],
    residual_norms: Vec<f64>,
    forcing: f64,
    l1: f64,
) -> GronwallReport {
    let psi0 = residual_norms[0];
    let scale = psi0 + forcing;
    let growth = residual_norms.iter().copied().fold(0.0, f64::max) / scale;
    let mut rate: f64 = 0.0;
    for (&t, &r) in times.iter().zip(&residual_norms) {
        let slow = mu * t;
        let envelope = |c: f64| (psi0 + c * slow * l1) * (c * slow).exp();
        if slow == 0.0 || r <= envelope(rate) {
            continue;
        }
        let mut lo = rate;
        let mut hi = rate.max(1.0);
        while envelope(hi) < r {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if envelope(mid) >= r {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        rate = hi;
    }
    GronwallReport {
        eps,
        mu,
        times: times.to_vec(),
        correction_norm: psi0,
        residual_norms,
        forcing,
        scale,
        growth,
        fitted_rate: rate,
    }
}

/// The full sweep. Runs are independent; a failing member is reported in
/// `failures` while the remaining members still complete.
pub fn run_validation(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let outcomes: Vec<(f64, Result<(EpsRecord, Option<GronwallReport>)>)> = cfg
        .eps_list
        .par_iter()
        .map(|&eps| (eps, run_single(cfg, eps, cfg.gronwall_eps == Some(eps))))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut gronwall = None;
    for (eps, outcome) in outcomes {
        match outcome {
            Ok((rec, g)) => {
                records.push(rec);
                if g.is_some() {
                    gronwall = g;
                }
            }
            Err(e) => failures.push((eps, e)),
        }
    }
    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.mu, r.sup_error)).collect();
    let fit = fit_scaling(&points).ok();
    Ok(ErrorReport { records, failures, fit, gronwall })
}

//! Gross–Pitaevskii field `i φ_t = -φ_xx + V φ + σ|φ|²φ` on a periodic
//! window of whole potential periods: conserved quantities, the weighted H¹
//! norm and two Strang-split time integrators.

mod exact;
mod split_step;

use num_complex::Complex64;

pub use exact::BlochPropagator;
pub use split_step::SplitStepFourier;

use crate::error::{Error, Result};
use crate::grid::CellGrid;
use crate::potential::PiecewisePotential;
use crate::spectral::Spectral;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub grid: CellGrid,
    pub values: Vec<Complex64>,
    pub time: f64,
    pub sigma: f64,
}

impl FieldState {
    pub fn new(grid: CellGrid, values: Vec<Complex64>, sigma: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!("{} samples for a grid of {}", values.len(), grid.len())));
        }
        check_sigma(sigma)?;
        Ok(Self { grid, values, time: 0.0, sigma })
    }

    pub fn zeros(grid: CellGrid, sigma: f64) -> Result<Self> {
        Self::new(grid, vec![Complex64::new(0.0, 0.0); grid.len()], sigma)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `sup` over the outermost period on each side divided by the global `sup`.
    pub fn boundary_ratio(&self) -> f64 {
        let nx = self.grid.nodes_per_cell;
        let n = self.values.len();
        let edge = self.values[..nx].iter().chain(&self.values[n - nx..]).map(|z| z.norm()).fold(0.0, f64::max);
        let sup = self.sup();
        if sup == 0.0 {
            0.0
        } else {
            edge / sup
        }
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma == 1.0 || sigma == -1.0 {
        Ok(())
    } else {
        Err(Error::Domain { name: "sigma", value: sigma, reason: "must be +1 or -1" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedPair {
    pub q: f64,
    pub e: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H1Norms {
    /// `√∫(|φ'|² + V|φ|² + |φ|²)`
    pub weighted: f64,
    /// `√∫(|φ'|² + |φ|²)`
    pub plain: f64,
}

/// Potential samples on the whole window, with each cell sampled the same way.
pub fn potential_on(v: &PiecewisePotential, grid: CellGrid) -> Result<Vec<f64>> {
    let cell = v.sample_cell(grid.nodes_per_cell)?;
    Ok(cell.iter().copied().cycle().take(grid.len()).collect())
}

/// Norms and conserved quantities on a fixed window; holds the FFT plan.
pub struct FieldOps {
    grid: CellGrid,
    spectral: Spectral,
    potential: Vec<f64>,
}

impl FieldOps {
    pub fn new(grid: CellGrid, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(Error::Grid("potential samples do not match the window".into()));
        }
        Ok(Self { grid, spectral: Spectral::new(grid.len(), grid.length()), potential })
    }

    pub fn for_potential(v: &PiecewisePotential, grid: CellGrid) -> Result<Self> {
        Self::new(grid, potential_on(v, grid)?)
    }

    pub fn grid(&self) -> CellGrid {
        self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    fn parts(&self, values: &[Complex64]) -> (f64, f64, f64, f64) {
        let d = self.spectral.derivative(values);
        let mut grad = 0.0;
        let mut pot = 0.0;
        let mut mass = 0.0;
        let mut quartic = 0.0;
        for ((z, dz), v) in values.iter().zip(&d).zip(&self.potential) {
            let a = z.norm_sqr();
            grad += dz.norm_sqr();
            pot += v * a;
            mass += a;
            quartic += a * a;
        }
        let dx = self.grid.dx();
        (grad * dx, pot * dx, mass * dx, quartic * dx)
    }

    pub fn h1_norms(&self, values: &[Complex64]) -> H1Norms {
        let (grad, pot, mass, _) = self.parts(values);
        H1Norms { weighted: (grad + pot + mass).sqrt(), plain: (grad + mass).sqrt() }
    }

    pub fn weighted_h1_norm(&self, values: &[Complex64]) -> f64 {
        self.h1_norms(values).weighted
    }

    pub fn conserved(&self, values: &[Complex64], sigma: f64) -> ConservedPair {
        let (grad, pot, mass, quartic) = self.parts(values);
        ConservedPair { q: mass, e: grad + pot + 0.5 * sigma * quartic }
    }
}

/// One-shot norms on `grid`; prefer [`FieldOps`] inside loops.
pub fn h1_norms(values: &[Complex64], potential: &[f64], grid: CellGrid) -> H1Norms {
    FieldOps::new(grid, potential.to_vec()).expect("potential sampled on the same grid").h1_norms(values)
}

pub fn conserved_quantities(state: &FieldState, v: &PiecewisePotential) -> Result<ConservedPair> {
    Ok(FieldOps::for_potential(v, state.grid)?.conserved(&state.values, state.sigma))
}

pub fn weighted_h1_norm(state: &FieldState, v: &PiecewisePotential) -> Result<f64> {
    Ok(FieldOps::for_potential(v, state.grid)?.weighted_h1_norm(&state.values))
}

/// A fixed-step integrator for the field equation.
pub trait Propagator {
    fn dt(&self) -> f64;
    fn set_dt(&mut self, dt: f64) -> Result<()>;
    /// Advance the samples by one step of `dt()`.
    fn step(&mut self, values: &mut [Complex64]) -> Result<()>;
}

/// Advance a state by one step of `dt` with a Fourier split-step propagator.
pub fn gp_step(state: &FieldState, dt: f64, v: &PiecewisePotential) -> Result<FieldState> {
    let mut prop = SplitStepFourier::new(v, state.grid, state.sigma, dt)?;
    let mut next = state.clone();
    prop.step(&mut next.values)?;
    next.time += dt;
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Upper bound on the step; each interval between samples is split into
    /// equal steps no longer than this.
    pub dt_max: f64,
    /// Abort when the outermost-period amplitude exceeds this fraction of the sup.
    pub boundary_guard: Option<f64>,
}

impl EvolveOptions {
    pub fn new(dt_max: f64) -> Self {
        Self { dt_max, boundary_guard: None }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<FieldState>,
    pub conserved: Vec<ConservedPair>,
}

/// Steps `state` through the increasing `times`, calling `visit` at each one.
/// A sample at the current time is visited without stepping.
pub fn gp_evolve_with<P: Propagator>(
    state: &mut FieldState,
    prop: &mut P,
    times: &[f64],
    opts: EvolveOptions,
    mut visit: impl FnMut(&FieldState) -> Result<()>,
) -> Result<()> {
    if !(opts.dt_max > 0.0) {
        return Err(Error::Domain { name: "dt", value: opts.dt_max, reason: "must be positive" });
    }
    for &t in times {
        let span = t - state.time;
        if span < -1e-12 * t.abs().max(1.0) {
            return Err(Error::Domain { name: "sample time", value: t, reason: "sample times must not decrease" });
        }
        if span > 0.0 {
            let steps = (span / opts.dt_max - 1e-9).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            if (dt - prop.dt()).abs() > 1e-15 * dt {
                prop.set_dt(dt)?;
            }
            for _ in 0..steps {
                prop.step(&mut state.values)?;
            }
        }
        state.time = t;
        if state.values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { time: t });
        }
        if let Some(limit) = opts.boundary_guard {
            let ratio = state.boundary_ratio();
            if ratio > limit {
                return Err(Error::Truncation { ratio, limit });
            }
        }
        visit(state)?;
    }
    Ok(())
}

/// [`gp_evolve_with`] collecting the sampled states and their `(Q, E)`.
pub fn gp_evolve<P: Propagator>(
    initial: &FieldState,
    prop: &mut P,
    ops: &FieldOps,
    times: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    let mut state = initial.clone();
    let mut samples = Vec::with_capacity(times.len());
    let mut conserved = Vec::with_capacity(times.len());
    gp_evolve_with(&mut state, prop, times, opts, |s| {
        conserved.push(ops.conserved(&s.values, s.sigma));
        samples.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory { samples, conserved })
}

pub(crate) fn nonlinear_phase(values: &mut [Complex64], coeff: f64) {
    for z in values {
        *z *= Complex64::from_polar(1.0, -coeff * z.norm_sqr());
    }
}

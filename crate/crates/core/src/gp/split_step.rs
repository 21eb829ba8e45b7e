use num_complex::Complex64;

use super::{check_sigma, potential_on, Propagator};
use crate::error::{Error, Result};
use crate::grid::CellGrid;
use crate::potential::PiecewisePotential;
use crate::spectral::Spectral;

/// Strang splitting: half potential-and-nonlinear phase, exact kinetic step
/// by the Fourier multiplier `e^{-i dt ξ²}`, half phase again.
pub struct SplitStepFourier {
    spectral: Spectral,
    potential: Vec<f64>,
    max_potential: f64,
    sigma: f64,
    dt: f64,
    kinetic: Vec<Complex64>,
}

impl SplitStepFourier {
    pub fn new(v: &PiecewisePotential, grid: CellGrid, sigma: f64, dt: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let potential = potential_on(v, grid)?;
        let max_potential = potential.iter().copied().fold(0.0, f64::max);
        let mut s = Self {
            spectral: Spectral::new(grid.len(), grid.length()),
            potential,
            max_potential,
            sigma,
            dt: 0.0,
            kinetic: Vec::new(),
        };
        s.set_dt(dt)?;
        Ok(s)
    }

    fn half_phase(&self, values: &mut [Complex64]) {
        let h = 0.5 * self.dt;
        for (z, v) in values.iter_mut().zip(&self.potential) {
            *z *= Complex64::from_polar(1.0, -h * (v + self.sigma * z.norm_sqr()));
        }
    }
}

impl Propagator for SplitStepFourier {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn set_dt(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain { name: "dt", value: dt, reason: "must be positive" });
        }
        self.dt = dt;
        self.kinetic = self.spectral.xi().iter().map(|&k| Complex64::from_polar(1.0, -dt * k * k)).collect();
        Ok(())
    }

    fn step(&mut self, values: &mut [Complex64]) -> Result<()> {
        let sup2 = values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let load = self.max_potential + sup2;
        if self.dt * load > 0.5 {
            return Err(Error::Accuracy { dt: self.dt, required: 0.5 / load });
        }
        self.half_phase(values);
        self.spectral.forward(values);
        for (z, m) in values.iter_mut().zip(&self.kinetic) {
            *z *= m;
        }
        self.spectral.inverse(values);
        self.half_phase(values);
        Ok(())
    }
}

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_sigma, nonlinear_phase, Propagator};
use crate::error::{Error, Result};
use crate::floquet::collocation::GridSpectrum;
use crate::grid::CellGrid;

/// Strang splitting with the exact discrete linear propagator: half
/// nonlinear phase, `e^{-i dt (K + V)}` applied sector by sector through the
/// ring's Bloch decomposition, half nonlinear phase.
pub struct BlochPropagator {
    spectrum: Arc<GridSpectrum>,
    sigma: f64,
    dt: f64,
    unitaries: Vec<DMatrix<Complex64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    local: DVector<Complex64>,
    image: DVector<Complex64>,
}

impl BlochPropagator {
    pub fn new(spectrum: Arc<GridSpectrum>, grid: CellGrid, sigma: f64, dt: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if grid.cells() != spectrum.cells || grid.nodes_per_cell != spectrum.nodes_per_cell {
            return Err(Error::Grid("ring spectrum and field window differ".into()));
        }
        let mut planner = FftPlanner::new();
        let nx = spectrum.nodes_per_cell;
        let mut s = Self {
            forward: planner.plan_fft_forward(spectrum.cells),
            inverse: planner.plan_fft_inverse(spectrum.cells),
            buf: vec![Complex64::new(0.0, 0.0); grid.len()],
            local: DVector::zeros(nx),
            image: DVector::zeros(nx),
            spectrum,
            sigma,
            dt: 0.0,
            unitaries: Vec::new(),
        };
        s.set_dt(dt)?;
        Ok(s)
    }

    /// `e^{-i dt (K + V)}` on the samples.
    pub fn linear(&mut self, values: &mut [Complex64]) {
        let p = self.spectrum.cells;
        let nx = self.spectrum.nodes_per_cell;
        for c in 0..p {
            for i in 0..nx {
                self.buf[i * p + c] = values[c * nx + i];
            }
        }
        self.forward.process(&mut self.buf);
        for (q, u) in self.unitaries.iter().enumerate() {
            for i in 0..nx {
                self.local[i] = self.buf[i * p + q];
            }
            self.image.gemv(Complex64::new(1.0, 0.0), u, &self.local, Complex64::new(0.0, 0.0));
            for i in 0..nx {
                self.buf[i * p + q] = self.image[i];
            }
        }
        self.inverse.process(&mut self.buf);
        let scale = 1.0 / p as f64;
        for c in 0..p {
            for i in 0..nx {
                values[c * nx + i] = self.buf[i * p + c] * scale;
            }
        }
    }
}

impl Propagator for BlochPropagator {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn set_dt(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain { name: "dt", value: dt, reason: "must be positive" });
        }
        self.dt = dt;
        self.unitaries = self
            .spectrum
            .sectors()
            .iter()
            .map(|s| {
                let phases = DMatrix::from_diagonal(&DVector::from_iterator(
                    s.values.len(),
                    s.values.iter().map(|&w| Complex64::from_polar(1.0, -dt * w)),
                ));
                &s.vectors * phases * s.vectors.adjoint()
            })
            .collect();
        Ok(())
    }

    fn step(&mut self, values: &mut [Complex64]) -> Result<()> {
        let sup2 = values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        if self.dt * sup2 > 0.5 {
            return Err(Error::Accuracy { dt: self.dt, required: 0.5 / sup2 });
        }
        let h = 0.5 * self.dt * self.sigma;
        nonlinear_phase(values, h);
        self.linear(values);
        nonlinear_phase(values, h);
        Ok(())
    }
}

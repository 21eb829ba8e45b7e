//! Discrete nonlinear Schrödinger lattice
//! `i φ̇_n = α(φ_{n+1} + φ_{n-1}) + σβ|φ_n|²φ_n` on sites `-N..=N` with zero
//! amplitudes beyond the ends, integrated by classical RK4.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    /// Amplitudes of sites `-half_width..=half_width`.
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl LatticeState {
    pub fn new(amplitudes: Vec<Complex64>, alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        if amplitudes.len() % 2 != 1 {
            return Err(Error::Window(format!("lattice must have an odd number of sites, got {}", amplitudes.len())));
        }
        crate::gp::check_sigma(sigma)?;
        Ok(Self { amplitudes, time: 0.0, alpha, beta, sigma })
    }

    pub fn half_width(&self) -> usize {
        self.amplitudes.len() / 2
    }

    /// Amplitude of site `n`; zero outside the lattice.
    pub fn site(&self, n: i64) -> Complex64 {
        let idx = n + self.half_width() as i64;
        if idx < 0 || idx as usize >= self.amplitudes.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[idx as usize]
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm()).sum()
    }

    pub fn boundary_amplitude(&self) -> f64 {
        let n = self.amplitudes.len();
        self.amplitudes[0].norm().max(self.amplitudes[n - 1].norm())
    }

    pub fn conj(&self) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(), ..self.clone() }
    }
}

fn rhs_into(amps: &[Complex64], alpha: f64, beta: f64, sigma: f64, out: &mut [Complex64]) {
    let n = amps.len();
    let zero = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let left = if j > 0 { amps[j - 1] } else { zero };
        let right = if j + 1 < n { amps[j + 1] } else { zero };
        let z = amps[j];
        let f = alpha * (left + right) + sigma * beta * z.norm_sqr() * z;
        out[j] = Complex64::new(f.im, -f.re);
    }
}

/// `φ̇` of the lattice equation.
pub fn dnls_rhs(state: &LatticeState) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
    rhs_into(&state.amplitudes, state.alpha, state.beta, state.sigma, &mut out);
    out
}

struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    fn step(&mut self, s: &mut LatticeState, h: f64) {
        let (a, b, sg) = (s.alpha, s.beta, s.sigma);
        let y = &mut s.amplitudes;
        rhs_into(y, a, b, sg, &mut self.k1);
        for j in 0..y.len() {
            self.tmp[j] = y[j] + 0.5 * h * self.k1[j];
        }
        rhs_into(&self.tmp, a, b, sg, &mut self.k2);
        for j in 0..y.len() {
            self.tmp[j] = y[j] + 0.5 * h * self.k2[j];
        }
        rhs_into(&self.tmp, a, b, sg, &mut self.k3);
        for j in 0..y.len() {
            self.tmp[j] = y[j] + h * self.k3[j];
        }
        rhs_into(&self.tmp, a, b, sg, &mut self.k4);
        for j in 0..y.len() {
            y[j] += h / 6.0 * (self.k1[j] + 2.0 * self.k2[j] + 2.0 * self.k3[j] + self.k4[j]);
        }
        s.time += h;
    }
}

/// Samples of the trajectory at each of `times` (non-decreasing, not before
/// `state.time`). Every interval runs in steps of `dt` with the last one
/// shortened to land exactly on the sample time.
pub fn dnls_evolve(state: &LatticeState, times: &[f64], dt: f64) -> Result<Vec<LatticeState>> {
    if !(dt > 0.0) {
        return Err(Error::Domain { name: "dT", value: dt, reason: "must be positive" });
    }
    let initial = state.norm_sq();
    let mut s = state.clone();
    let mut rk = Rk4::new(s.amplitudes.len());
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target < s.time - 1e-12 {
            return Err(Error::Domain { name: "sample time", value: target, reason: "sample times must not decrease" });
        }
        while target - s.time > 1e-12 * target.abs().max(1.0) {
            let h = dt.min(target - s.time);
            rk.step(&mut s, h);
        }
        s.time = target;
        let norm = s.norm_sq();
        if !norm.is_finite() {
            return Err(Error::NonFinite { time: target });
        }
        if norm > 100.0 * initial.max(f64::MIN_POSITIVE) {
            return Err(Error::Instability(format!("lattice norm grew from {initial:e} to {norm:e} by T = {target}")));
        }
        out.push(s.clone());
    }
    Ok(out)
}

/// Final state at `t_final`.
pub fn dnls_evolve_to(state: &LatticeState, t_final: f64, dt: f64) -> Result<LatticeState> {
    Ok(dnls_evolve(state, &[t_final], dt)?.pop().expect("one sample requested"))
}

/// Error if the outermost amplitudes exceed `threshold`.
pub fn check_truncation(state: &LatticeState, threshold: f64) -> Result<()> {
    let b = state.boundary_amplitude();
    if b > threshold {
        Err(Error::Truncation { ratio: b, limit: threshold })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(n: usize, a: Complex64, alpha: f64, beta: f64, sigma: f64) -> LatticeState {
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        amps[n] = a;
        LatticeState::new(amps, alpha, beta, sigma).unwrap()
    }

    #[test]
    fn decoupled_site_rotates() {
        let a = Complex64::new(0.8, 0.3);
        let s = single(3, a, 0.0, 0.6, 1.0);
        let d = dnls_rhs(&s);
        let expect = Complex64::new(0.0, -0.6) * a.norm_sqr() * a;
        assert!((d[3] - expect).norm() < 1e-15);
        assert!(d.iter().enumerate().all(|(j, z)| j == 3 || z.norm() == 0.0));
        let end = dnls_evolve_to(&s, 1.0, 1e-3).unwrap();
        let exact = a * Complex64::from_polar(1.0, -0.6 * a.norm_sqr());
        assert!((end.site(0) - exact).norm() < 1e-10);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let s = LatticeState::new(vec![Complex64::new(0.0, 0.0); 5], 1.0, 1.0, -1.0).unwrap();
        assert!(dnls_rhs(&s).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rejects_bad_sigma_and_even_lattices() {
        assert!(LatticeState::new(vec![Complex64::new(0.0, 0.0); 5], 1.0, 1.0, 0.5).is_err());
        assert!(LatticeState::new(vec![Complex64::new(0.0, 0.0); 4], 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn landing_hits_sample_times() {
        let s = single(4, Complex64::new(1.0, 0.0), 0.3, 0.5, 1.0);
        let out = dnls_evolve(&s, &[0.0, 0.0125, 0.5], 0.01).unwrap();
        assert_eq!(out[0].amplitudes, s.amplitudes);
        assert_eq!(out[1].time, 0.0125);
        assert_eq!(out[2].time, 0.5);
    }
}

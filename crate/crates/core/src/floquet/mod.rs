//! Spectrum of `L = -d²/dx² + V(x)` for piecewise-constant periodic `V`.
//!
//! Within a constant segment the equation `-u'' + h u = ω u` has closed-form
//! solutions, so transfer matrices, the monodromy discriminant and Bloch
//! functions are all evaluated analytically. Bands are the intervals where
//! `|tr M(ω)| <= 2`; band `l` runs from `tr = 2` to `tr = -2` for odd `l`
//! and the other way round for even `l`.

pub mod collocation;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::PERIOD;
use crate::potential::PiecewisePotential;

/// Below this separation from the segment height the shear branch is used.
const DEGENERATE_SPLIT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 };

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// `self · rhs`: `rhs` acts first.
    pub fn then_after(&self, rhs: &Self) -> Self {
        Self {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }
}

/// Propagator of `(u, u')` across a segment of constant `height` and `width`.
pub fn transfer_segment(height: f64, width: f64, omega: f64) -> TransferMatrix {
    let d = omega - height;
    if d.abs() < DEGENERATE_SPLIT {
        TransferMatrix { m11: 1.0, m12: width, m21: 0.0, m22: 1.0 }
    } else if d > 0.0 {
        let k = d.sqrt();
        let (s, c) = (k * width).sin_cos();
        TransferMatrix { m11: c, m12: s / k, m21: -k * s, m22: c }
    } else {
        let k = (-d).sqrt();
        let (s, c) = ((k * width).sinh(), (k * width).cosh());
        TransferMatrix { m11: c, m12: s / k, m21: k * s, m22: c }
    }
}

/// Transfer matrix over one full period, last segment leftmost.
pub fn monodromy(v: &PiecewisePotential, omega: f64) -> TransferMatrix {
    v.segments()
        .iter()
        .fold(TransferMatrix::IDENTITY, |acc, s| transfer_segment(s.height, s.width, omega).then_after(&acc))
}

pub fn discriminant(v: &PiecewisePotential, omega: f64) -> f64 {
    monodromy(v, omega).trace()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandEdges {
    pub lo: f64,
    pub hi: f64,
}

impl BandEdges {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn distance_to(&self, omega: f64) -> f64 {
        if omega < self.lo {
            self.lo - omega
        } else if omega > self.hi {
            omega - self.hi
        } else {
            0.0
        }
    }
}

/// Sign `s` such that `s·tr M` decreases from 2 to -2 across band `l`.
fn band_sign(l: usize) -> f64 {
    if l % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, run until the bracket
/// cannot shrink further in double precision.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimiser of `f` on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) < 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn scan_step(v: &PiecewisePotential, omega: f64) -> f64 {
    0.01 * (omega - v.min_height()).abs().sqrt().max(1.0)
}

/// Default scan ceiling: `(2 l_max)² + max height`.
pub fn default_ceiling(v: &PiecewisePotential, l_max: usize) -> f64 {
    (2.0 * l_max as f64).powi(2) + v.max_height()
}

pub fn locate_bands(v: &PiecewisePotential, l_max: usize) -> Result<Vec<BandEdges>> {
    locate_bands_below(v, l_max, default_ceiling(v, l_max))
}

/// First `l_max` bands, scanning upward from below `min V`.
///
/// Crossings of `tr = ±2` are refined by bisection. A reversal of `tr`
/// inside a band marks a (near-)closed gap; its extremum is located by
/// golden section and either shared as a common edge or split into the
/// two crossings around it.
pub fn locate_bands_below(v: &PiecewisePotential, l_max: usize, ceiling: f64) -> Result<Vec<BandEdges>> {
    if l_max == 0 {
        return Err(Error::BandSearch("l_max must be at least 1".into()));
    }
    let d = |w: f64| discriminant(v, w);
    let start = v.min_height() - 1.0;
    let mut bands = Vec::with_capacity(l_max);
    // inside band `l` since `lo`, or in the gap preceding band `l`
    let mut l = 1usize;
    let mut inside: Option<f64> = None;
    let mut prev2: Option<(f64, f64)> = None;
    let mut prev = (start, d(start));
    if prev.1 <= 2.0 {
        return Err(Error::BandSearch(format!("scan start {start} already inside the spectrum")));
    }
    while bands.len() < l_max {
        let w = prev.0 + scan_step(v, prev.0);
        if w > ceiling {
            return Err(Error::BandSearch(format!(
                "found {} of {l_max} bands below the ceiling {ceiling}",
                bands.len()
            )));
        }
        let dw = d(w);
        let s = band_sign(l);
        match inside {
            None => {
                if s * dw <= 2.0 {
                    let lo = bisect(prev.0, w, |x| s * d(x) - 2.0);
                    if s * dw < -2.0 {
                        // the whole band fits inside one scan step
                        let hi = bisect(lo, w, |x| s * d(x) + 2.0);
                        bands.push(BandEdges { lo, hi });
                        l += 1;
                        prev2 = None;
                    } else {
                        inside = Some(lo);
                        prev2 = Some((lo, s * 2.0));
                    }
                }
            }
            Some(lo) => {
                if s * dw < -2.0 {
                    let hi = bisect(prev.0, w, |x| s * d(x) + 2.0);
                    bands.push(BandEdges { lo, hi });
                    l += 1;
                    inside = None;
                    prev2 = None;
                } else if let Some(p2) = prev2.filter(|p2| s * (prev.1 - p2.1) < 0.0 && s * (dw - prev.1) > 0.0) {
                    let (m, dm) = golden_min(p2.0, w, |x| s * d(x));
                    if dm > -2.0 + 1e-7 {
                        return Err(Error::BandSearch(format!(
                            "discriminant reverses inside band {l} near omega = {m} without reaching the edge"
                        )));
                    }
                    let (hi, next_lo) = if dm < -2.0 {
                        (bisect(p2.0, m, |x| s * d(x) + 2.0), bisect(m, w, |x| s * d(x) + 2.0))
                    } else {
                        (m, m)
                    };
                    bands.push(BandEdges { lo, hi });
                    l += 1;
                    inside = Some(next_lo);
                    prev2 = Some((next_lo, -2.0 * s));
                } else {
                    prev2 = Some(prev);
                }
            }
        }
        prev = (w, dw);
    }
    Ok(bands)
}

/// `ω_l(k)`: the root of `tr M(ω) = 2cos(2πk)` inside band `l`.
pub fn dispersion(v: &PiecewisePotential, edges: &BandEdges, l: usize, k: f64) -> Result<f64> {
    let s = band_sign(l);
    let target = 2.0 * (2.0 * PI * k).cos();
    let g = |w: f64| s * (discriminant(v, w) - target);
    let (glo, ghi) = (g(edges.lo), g(edges.hi));
    const SLACK: f64 = 1e-9;
    if glo < -SLACK || ghi > SLACK {
        return Err(Error::Bracketing { band: l, k });
    }
    if glo <= 0.0 {
        return Ok(edges.lo);
    }
    if ghi >= 0.0 {
        return Ok(edges.hi);
    }
    Ok(bisect(edges.lo, edges.hi, g))
}

/// Midpoint grid of `n` nodes on `[-1/2, 1/2)`, symmetric under `k -> -k`.
pub fn midpoint_k_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -0.5 + (j as f64 + 0.5) / n as f64).collect()
}

/// Sampled dispersion of one band together with its Fourier coefficients.
#[derive(Clone, Debug)]
pub struct BandTable {
    pub band: usize,
    pub k_grid: Vec<f64>,
    pub omega: Vec<f64>,
    pub edges: BandEdges,
    pub fourier: Vec<f64>,
    /// Distance from the band center `ω̂_{l,0}` to the neighbouring bands.
    pub separation: f64,
}

impl BandTable {
    /// `bands` must include band `l + 1` for the separation to be meaningful.
    pub fn build(v: &PiecewisePotential, bands: &[BandEdges], l: usize, n_k: usize, n_max: usize) -> Result<Self> {
        let edges = *bands
            .get(l.wrapping_sub(1))
            .ok_or_else(|| Error::BandSearch(format!("band {l} not located")))?;
        let k_grid = midpoint_k_grid(n_k);
        let omega = symmetric_dispersion(v, &edges, l, &k_grid)?;
        let fourier = crate::wannier::band_fourier(&k_grid, &omega, n_max);
        let center = fourier[0];
        let separation = bands
            .iter()
            .enumerate()
            .filter(|(m, _)| m + 1 != l)
            .map(|(_, e)| e.distance_to(center))
            .fold(f64::INFINITY, f64::min);
        Ok(Self { band: l, k_grid, omega, edges, fourier, separation })
    }
}

/// Dispersion on a `k -> -k` symmetric grid, evaluated on `k > 0` and mirrored.
fn symmetric_dispersion(v: &PiecewisePotential, edges: &BandEdges, l: usize, k_grid: &[f64]) -> Result<Vec<f64>> {
    let n = k_grid.len();
    let half: Vec<f64> = (n / 2..n).into_par_iter().map(|j| dispersion(v, edges, l, k_grid[j])).collect::<Result<_>>()?;
    let mut omega = vec![0.0; n];
    for (off, w) in half.into_iter().enumerate() {
        omega[n / 2 + off] = w;
        omega[n - 1 - (n / 2 + off)] = w;
    }
    Ok(omega)
}

/// Samples of `u_l(x; k)` on `[0, 2π)`, normalised to unit norm over one period.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochField {
    pub band: usize,
    pub k: f64,
    pub omega: f64,
    pub values: Vec<Complex64>,
    /// `|u(2π) - e^{i2πk} u(0)|` from the propagated solution.
    pub seam_residual: f64,
}

impl BlochField {
    pub fn dx(&self) -> f64 {
        PERIOD / self.values.len() as f64
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx()
    }

    /// `∫₀^{2π} g(x) u(x) dx` for a real reference `g` sampled on the same nodes.
    pub fn overlap_real(&self, g: &[f64]) -> Complex64 {
        self.values.iter().zip(g).map(|(u, &r)| u * r).sum::<Complex64>() * self.dx()
    }

    fn rotate(&mut self, phase: Complex64) {
        for z in &mut self.values {
            *z *= phase;
        }
    }

    fn conj(&self) -> Self {
        Self {
            band: self.band,
            k: -self.k,
            omega: self.omega,
            values: self.values.iter().map(|z| z.conj()).collect(),
            seam_residual: self.seam_residual,
        }
    }
}

/// Bloch function at energy `omega` and quasimomentum `k`.
///
/// The eigenvector of the monodromy for `e^{i2πk}` is propagated with the
/// exact segment propagators to every node. With `gauge = Some(g)` the phase
/// makes `∫ g u` real and positive.
pub fn bloch_function_at(
    v: &PiecewisePotential,
    l: usize,
    k: f64,
    omega: f64,
    n_x: usize,
    gauge: Option<&[f64]>,
) -> Result<BlochField> {
    let starts = v.boundary_nodes(n_x)?;
    let dx = v.period() / n_x as f64;
    let m = monodromy(v, omega);
    let lambda = Complex64::from_polar(1.0, 2.0 * PI * k);
    let c1 = [Complex64::new(m.m12, 0.0), lambda - m.m11];
    let c2 = [lambda - m.m22, Complex64::new(m.m21, 0.0)];
    let norm = |c: &[Complex64; 2]| (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    let scale = m.m11.abs().max(m.m12.abs()).max(m.m21.abs()).max(m.m22.abs()).max(1.0);
    let mut vec0 = if norm(&c1) >= norm(&c2) { c1 } else { c2 };
    let nv = norm(&vec0);
    if nv < 1e-12 * scale {
        return Err(Error::Conditioning { omega, distance: nv / scale });
    }
    vec0 = [vec0[0] / nv, vec0[1] / nv];

    let mut values = vec![Complex64::new(0.0, 0.0); n_x];
    let mut state = vec0;
    for (s, seg) in v.segments().iter().enumerate() {
        let lo = starts[s];
        let hi = if s + 1 < starts.len() { starts[s + 1] } else { n_x };
        for (off, slot) in values[lo..hi].iter_mut().enumerate() {
            *slot = if off == 0 {
                state[0]
            } else {
                transfer_segment(seg.height, off as f64 * dx, omega).apply(state)[0]
            };
        }
        state = transfer_segment(seg.height, seg.width, omega).apply(state);
    }
    let seam = (state[0] - lambda * vec0[0]).norm().max((state[1] - lambda * vec0[1]).norm());

    let mut field = BlochField { band: l, k, omega, values, seam_residual: seam };
    let n = field.norm_sq().sqrt();
    field.rotate(Complex64::new(1.0 / n, 0.0));
    if let Some(g) = gauge {
        let ov = field.overlap_real(g);
        if ov.norm() < 1e-6 {
            return Err(Error::Gauge { band: l, k, overlap: ov.norm() });
        }
        field.rotate(ov.conj() / ov.norm());
    }
    Ok(field)
}

/// Bloch function of band `l` at quasimomentum `k`.
pub fn bloch_function(
    v: &PiecewisePotential,
    edges: &BandEdges,
    l: usize,
    k: f64,
    n_x: usize,
    gauge: Option<&[f64]>,
) -> Result<BlochField> {
    let omega = dispersion(v, edges, l, k)?;
    bloch_function_at(v, l, k, omega, n_x, gauge)
}

/// Phase convention for a family of Bloch functions over the k-grid.
#[derive(Clone, Debug, PartialEq)]
pub enum Gauge {
    /// Make the overlap with a real reference cell profile real and positive.
    Profile(Vec<f64>),
    /// Parallel transport across the midpoint grid, symmetrised so that
    /// `u(-k) = conj u(k)`.
    ParallelTransport,
}

/// One band's Bloch functions on a uniform k-grid, all sampled on the same
/// cell grid. Fields extend to other cells by `u(x + 2πc) = e^{i2πkc} u(x)`.
#[derive(Clone, Debug)]
pub struct BlochSet {
    pub band: usize,
    pub nodes_per_cell: usize,
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
    pub fields: Vec<Vec<Complex64>>,
}

impl BlochSet {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn dx(&self) -> f64 {
        PERIOD / self.nodes_per_cell as f64
    }

    /// Analytic Bloch functions on the midpoint grid of `n_k` nodes.
    /// Fields at `k < 0` are the conjugates of those at `-k`.
    pub fn analytic(
        v: &PiecewisePotential,
        edges: &BandEdges,
        l: usize,
        n_k: usize,
        n_x: usize,
        gauge: &Gauge,
    ) -> Result<Self> {
        if n_k < 2 || n_k % 2 != 0 {
            return Err(Error::Grid(format!("the k-grid needs an even number of nodes, got {n_k}")));
        }
        let k = midpoint_k_grid(n_k);
        let omega = symmetric_dispersion(v, edges, l, &k)?;
        let reference = match gauge {
            Gauge::Profile(g) => Some(g.as_slice()),
            Gauge::ParallelTransport => None,
        };
        let half: Vec<BlochField> = (n_k / 2..n_k)
            .into_par_iter()
            .map(|j| bloch_function_at(v, l, k[j], omega[j], n_x, reference))
            .collect::<Result<_>>()?;
        let mut fields = vec![Vec::new(); n_k];
        for (off, f) in half.into_iter().enumerate() {
            let j = n_k / 2 + off;
            fields[n_k - 1 - j] = f.conj().values;
            fields[j] = f.values;
        }
        let mut set = Self { band: l, nodes_per_cell: n_x, k, omega, fields };
        if matches!(gauge, Gauge::ParallelTransport) {
            set.parallel_transport();
        }
        Ok(set)
    }

    fn periodic_overlap(&self, a: usize, b: usize, shift: f64) -> Complex64 {
        // ⟨p_a, p_b⟩ with p(x) = e^{-ikx} u(x); `shift` adds to k_b
        let dx = self.dx();
        let (ka, kb) = (self.k[a], self.k[b] + shift);
        self.fields[a]
            .iter()
            .zip(&self.fields[b])
            .enumerate()
            .map(|(i, (ua, ub))| {
                let x = i as f64 * dx;
                ua.conj() * ub * Complex64::from_polar(1.0, (ka - kb) * x)
            })
            .sum::<Complex64>()
            * dx
    }

    /// Parallel transport on `k > 0`, a global phase making the overlap
    /// across `k = 0` positive, mirroring, then uniform distribution of the
    /// closing (Berry) phase as a linear phase in `k`.
    fn parallel_transport(&mut self) {
        let n = self.len();
        let h = n / 2;
        for j in h..n - 1 {
            let ov = self.periodic_overlap(j, j + 1, 0.0);
            let phase = ov.conj() / ov.norm();
            for z in &mut self.fields[j + 1] {
                *z *= phase;
            }
        }
        // overlap across k = 0 between conj(u_δ) and u_δ
        let dx = self.dx();
        let kd = self.k[h];
        let ov0: Complex64 = self.fields[h]
            .iter()
            .enumerate()
            .map(|(i, u)| u * u * Complex64::from_polar(1.0, -2.0 * kd * i as f64 * dx))
            .sum::<Complex64>()
            * dx;
        let gamma = Complex64::from_polar(1.0, -0.5 * ov0.arg());
        for j in h..n {
            for z in &mut self.fields[j] {
                *z *= gamma;
            }
            self.fields[n - 1 - j] = self.fields[j].iter().map(|z| z.conj()).collect();
        }
        let berry = self.periodic_overlap(n - 1, 0, 1.0).arg();
        for j in 0..n {
            let p = Complex64::from_polar(1.0, berry * self.k[j]);
            for z in &mut self.fields[j] {
                *z *= p;
            }
        }
        // move the Wannier center into the home period [0, 2π)
        let shift = (self.wannier_center() / PERIOD).floor();
        for j in 0..n {
            let p = Complex64::from_polar(1.0, 2.0 * PI * shift * self.k[j]);
            for z in &mut self.fields[j] {
                *z *= p;
            }
        }
    }

    /// `∫ x |w(x)|² dx` of `w = (1/N) Σ_j u(·; k_j)` over the three central periods.
    fn wannier_center(&self) -> f64 {
        let dx = self.dx();
        let nk = self.len() as f64;
        let mut moment = 0.0;
        let mut mass = 0.0;
        for c in -1i64..=1 {
            for i in 0..self.nodes_per_cell {
                let w: Complex64 = self
                    .k
                    .iter()
                    .zip(&self.fields)
                    .map(|(k, f)| f[i] * Complex64::from_polar(1.0, 2.0 * PI * k * c as f64))
                    .sum::<Complex64>()
                    / nk;
                let x = PERIOD * c as f64 + i as f64 * dx;
                moment += x * w.norm_sqr();
                mass += w.norm_sqr();
            }
        }
        moment / mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Segment;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn transfer_examples() {
        let t = transfer_segment(0.0, PI, 1.0);
        assert!(close(t.m11, -1.0, 1e-15) && close(t.m22, -1.0, 1e-15));
        assert!(close(t.m12, 0.0, 1e-15) && close(t.m21, 0.0, 1e-15));

        let t = transfer_segment(2.5, 1.3, 2.5);
        assert_eq!(t, TransferMatrix { m11: 1.0, m12: 1.3, m21: 0.0, m22: 1.0 });
        let t = transfer_segment(2.5, 1.3, 2.5 + 1e-13);
        assert_eq!(t.m12, 1.3);

        // cosh 2, sinh 2 / 2, 2 sinh 2 from a 30-digit evaluation
        let t = transfer_segment(4.0, 1.0, 0.0);
        assert!(close(t.m11, 3.762_195_691_083_631, 1e-14));
        assert!(close(t.m12, 1.813_430_203_923_509, 1e-14));
        assert!(close(t.m21, 7.253_720_815_694_038, 1e-14));
        assert!(close(t.m22, 3.762_195_691_083_631, 1e-14));
        assert!(close(t.det(), 1.0, 1e-13));
    }

    #[test]
    fn free_and_constant_discriminants() {
        let free = PiecewisePotential::free();
        for w in [0.1, 0.5, 2.0, 10.0] {
            let expected = 2.0 * (2.0 * PI * f64::sqrt(w)).cos();
            assert!(close(discriminant(&free, w), expected, 1e-10));
        }
        let c = 1.7;
        let flat = PiecewisePotential::new(
            PERIOD,
            vec![Segment { width: 1.0, height: c }, Segment { width: PERIOD - 1.0, height: c }],
            "split constant",
        )
        .unwrap();
        for w in [1.9, 2.5, 7.0] {
            let expected = 2.0 * (2.0 * PI * f64::sqrt(w - c)).cos();
            assert!(close(discriminant(&flat, w), expected, 1e-10));
        }
    }

    #[test]
    fn free_bands_touch() {
        let bands = locate_bands(&PiecewisePotential::free(), 3).unwrap();
        let expect = [(0.0, 0.25), (0.25, 1.0), (1.0, 2.25)];
        for (b, (lo, hi)) in bands.iter().zip(expect) {
            assert!(close(b.lo, lo, 1e-6), "{b:?}");
            assert!(close(b.hi, hi, 1e-6), "{b:?}");
        }
    }

    #[test]
    fn wall_well_bands_are_separated() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        let bands = locate_bands(&v, 3).unwrap();
        for pair in bands.windows(2) {
            assert!(pair[0].hi < pair[1].lo);
        }
        for b in &bands {
            assert!(close(discriminant(&v, b.lo).abs(), 2.0, 1e-8));
            assert!(close(discriminant(&v, b.hi).abs(), 2.0, 1e-8));
        }
        // the lowest band is exponentially narrow compared with the gap
        assert!(bands[0].width() < 1e-2);
        assert!(bands[1].lo - bands[0].hi > 1.0);
    }

    #[test]
    fn band_search_reports_low_ceiling() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        assert!(matches!(locate_bands_below(&v, 4, 1.0), Err(Error::BandSearch(_))));
        assert!(locate_bands(&v, 0).is_err());
    }

    #[test]
    fn free_dispersion() {
        let free = PiecewisePotential::free();
        let bands = locate_bands(&free, 1).unwrap();
        let w = dispersion(&free, &bands[0], 1, 0.25).unwrap();
        assert!(close(w, 0.0625, 1e-12));
        assert!(close(dispersion(&free, &bands[0], 1, 0.0).unwrap(), bands[0].lo, 1e-12));
    }

    #[test]
    fn dispersion_is_even() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        let bands = locate_bands(&v, 2).unwrap();
        for k in [0.1, 0.23, 0.37, 0.49] {
            let a = dispersion(&v, &bands[0], 1, k).unwrap();
            let b = dispersion(&v, &bands[0], 1, -k).unwrap();
            assert!(close(a, b, 1e-10));
        }
    }

    #[test]
    fn dispersion_rejects_wrong_band() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        let bands = locate_bands(&v, 2).unwrap();
        assert!(matches!(dispersion(&v, &bands[1], 1, 0.2), Err(Error::Bracketing { .. })));
    }

    #[test]
    fn free_bloch_wave() {
        let free = PiecewisePotential::free();
        let bands = locate_bands(&free, 1).unwrap();
        let f = bloch_function(&free, &bands[0], 1, 0.25, 64, None).unwrap();
        let amp = 1.0 / (2.0 * PI).sqrt();
        for (i, z) in f.values.iter().enumerate() {
            assert!(close(z.norm(), amp, 1e-10));
            // e^{i x/4} up to a global phase
            let x = i as f64 * f.dx();
            let rel = z / f.values[0] * Complex64::from_polar(1.0, -0.25 * x);
            assert!((rel - 1.0).norm() < 1e-9);
        }
        assert!(f.seam_residual < 1e-10);
    }

    #[test]
    fn bloch_at_zero_is_real_and_normalised() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        let bands = locate_bands(&v, 2).unwrap();
        let f = bloch_function(&v, &bands[0], 1, 0.0, 64, None).unwrap();
        let phase = f.values.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let phase = phase.conj() / phase.norm();
        assert!(f.values.iter().all(|z| (z * phase).im.abs() < 1e-9));
        let f = bloch_function(&v, &bands[0], 1, 0.3, 64, None).unwrap();
        assert!(close(f.norm_sq(), 1.0, 1e-8));
        assert!(f.seam_residual < 1e-8);
    }

    #[test]
    fn bloch_conjugation_gauge() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        let bands = locate_bands(&v, 2).unwrap();
        let profile = crate::wannier::asymptotic_profile_cell(1, PI, 64);
        let set = BlochSet::analytic(&v, &bands[0], 1, 16, 64, &Gauge::Profile(profile)).unwrap();
        for j in 0..8 {
            let (a, b) = (&set.fields[j], &set.fields[15 - j]);
            assert!(a.iter().zip(b).all(|(x, y)| (x - y.conj()).norm() < 1e-8));
        }
    }

    #[test]
    fn parallel_transport_is_conjugation_symmetric_and_smooth() {
        let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
        let bands = locate_bands(&v, 3).unwrap();
        let set = BlochSet::analytic(&v, &bands[1], 2, 32, 64, &Gauge::ParallelTransport).unwrap();
        for j in 0..16 {
            let (a, b) = (&set.fields[j], &set.fields[31 - j]);
            assert!(a.iter().zip(b).all(|(x, y)| (x - y.conj()).norm() < 1e-10));
        }
        let first = set.periodic_overlap(0, 1, 0.0).arg();
        for j in 0..31 {
            let ov = set.periodic_overlap(j, j + 1, 0.0);
            assert!((ov.arg() - first).abs() < 1e-8, "{j}: {ov}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monodromy_is_unimodular(w in -1.0f64..50.0, eps in 0.5f64..1.5) {
                // entries of size |M| carry rounding errors of u|M|, so det
                // cannot be resolved below u|M|²
                let v = PiecewisePotential::wall_well(eps, PI).unwrap();
                let m = monodromy(&v, w);
                let size = m.m11.abs().max(m.m12.abs()).max(m.m21.abs()).max(m.m22.abs());
                prop_assert!((m.det() - 1.0).abs() <= 1e-10 + 8.0 * f64::EPSILON * size * size);
            }

            #[test]
            fn monodromy_is_unimodular_for_moderate_walls(w in 0.5f64..50.0, eps in 0.8f64..1.5) {
                let v = PiecewisePotential::wall_well(eps, PI).unwrap();
                prop_assert!((monodromy(&v, w).det() - 1.0).abs() <= 1e-10);
            }
        }
    }
}

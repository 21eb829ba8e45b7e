use std::f64::consts::PI;

use super::*;
use crate::floquet::midpoint_k_grid;

#[test]
fn asymptotic_profile_values() {
    assert!((asymptotic_profile(1, PI, 1.5 * PI) - (2.0 / PI).sqrt()).abs() < 1e-15);
    assert_eq!(asymptotic_profile(1, PI, 0.5 * PI), 0.0);
    assert!(asymptotic_profile(2, PI, 1.5 * PI).abs() < 1e-15);
    assert_eq!(asymptotic_profile(1, PI, -0.1), 0.0);
}

#[test]
fn asymptotic_profile_quartic_integral() {
    let n = 4096;
    let cell = asymptotic_profile_cell(1, PI, n);
    let dx = PERIOD / n as f64;
    let beta: f64 = cell.iter().map(|u| u.powi(4)).sum::<f64>() * dx;
    assert!((beta - 3.0 / (2.0 * PI)).abs() < 1e-12);
    let norm: f64 = cell.iter().map(|u| u * u).sum::<f64>() * dx;
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn fourier_of_constant_and_free_bands() {
    let k = midpoint_k_grid(64);
    let flat = vec![2.5; 64];
    let c = band_fourier(&k, &flat, 3);
    assert!((c[0] - 2.5).abs() < 1e-14);
    assert!(c[1..].iter().all(|x| x.abs() < 1e-14));

    // the midpoint rule on k² has an O(1/N²) quadrature error
    let k = midpoint_k_grid(4096);
    let free: Vec<f64> = k.iter().map(|x| x * x).collect();
    let c = band_fourier(&k, &free, 3);
    assert!((c[0] - 1.0 / 12.0).abs() < 1e-7);
    for n in 1..=3 {
        let expected = (-1f64).powi(n as i32) / (2.0 * PI * PI * (n * n) as f64);
        assert!((c[n] - expected).abs() < 1e-6, "n = {n}: {} vs {expected}", c[n]);
    }
}

fn default_basis(eps: f64) -> WannierBasis {
    let v = PiecewisePotential::wall_well(eps, PI).unwrap();
    wannier_function(&v, 1, &WannierParams::default()).unwrap()
}

#[test]
fn basis_is_real_normalised_and_single_signed() {
    let b = default_basis(0.5);
    assert!(b.imag_residue < 1e-8);
    assert!((b.inner(0, 0) - 1.0).abs() < 1e-6);
    // mostly supported on the well [a, 2π] of cell 0
    let nx = b.grid.nodes_per_cell;
    let start = b.grid.flat(0, 0).unwrap();
    let well: f64 = b.u0[start + nx / 2..start + nx].iter().map(|u| u * u).sum::<f64>() * b.grid.dx();
    assert!(well > 0.9);
    assert!(b.u0[start + nx / 2..start + nx].iter().all(|&u| u > 0.0));
}

#[test]
fn kernel_and_translation() {
    let b = default_basis(0.5);
    let beta = b.overlap_kernel(0, 0, 0, 0).unwrap();
    assert!((beta - b.beta).abs() < 1e-14);
    let k = b.overlap_kernel(0, 0, 0, 1).unwrap();
    assert!(k.abs() < 1e-2 * beta);
    let shifted = b.overlap_kernel(2, 2, 2, 3).unwrap();
    assert!((shifted - k).abs() < 1e-8);
    assert!(b.overlap_kernel(0, 0, 0, 9).is_err());
}

#[test]
fn gram_matrix_is_identity() {
    let b = default_basis(0.5);
    let g = b.gram_matrix(-3..=3).unwrap();
    for (i, row) in g.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((x - expected).abs() < 1e-4, "({i},{j}) = {x}");
            assert!((x - g[j][i]).abs() < 1e-15);
        }
    }
}

#[test]
fn hopping_and_tails_decay() {
    let b = default_basis(0.5);
    assert!(b.omega_hat[2].abs() < 1e-2 * b.omega_hat[1].abs());
    let r = b.decay_diagnostics().unwrap();
    assert_eq!(r.hopping_decay.len(), 4);
    assert!(r.hopping_decay.windows(2).all(|w| w[0].n < w[1].n));
    assert!(r.tail_decay.windows(2).all(|w| w[1].magnitude < w[0].magnitude));
    assert!(r.tail_decay.iter().all(|e| e.magnitude >= 0.0 && e.magnitude <= e.bound * (1.0 + 1e-12)));
}

#[test]
fn ode_system_holds() {
    let b = default_basis(0.5);
    let dx = b.grid.dx();
    // second-order differencing of a function whose fourth derivative is O(ω²)
    assert!(b.ode_residual() < 5.0 * dx * dx, "residual {}", b.ode_residual());
}

#[test]
fn couplings_are_stable_under_refinement() {
    let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
    let coarse = wannier_function(&v, 1, &WannierParams::default()).unwrap();
    let fine_k = wannier_function(&v, 1, &WannierParams { n_k: 128, ..WannierParams::default() }).unwrap();
    assert!(((fine_k.alpha - coarse.alpha) / coarse.alpha).abs() < 1e-4);
    assert!(((fine_k.beta - coarse.beta) / coarse.beta).abs() < 1e-4);
}

#[test]
fn parallel_transport_gauge_agrees_with_profile_gauge() {
    let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
    let a = wannier_function(&v, 1, &WannierParams::default()).unwrap();
    let b = wannier_function(&v, 1, &WannierParams { gauge: GaugeKind::ParallelTransport, ..WannierParams::default() })
        .unwrap();
    // both gauges are smooth, so the functions agree up to sign
    let s = a.inner(0, 0).signum() * a.u0.iter().zip(&b.u0).map(|(x, y)| x * y).sum::<f64>().signum();
    let diff = a.u0.iter().zip(&b.u0).map(|(x, y)| (x - s * y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn rejects_small_windows_and_foreign_potentials() {
    let v = PiecewisePotential::wall_well(0.5, PI).unwrap();
    assert!(wannier_function(&v, 1, &WannierParams { n_w: 3, ..WannierParams::default() }).is_err());
    assert!(wannier_function(&PiecewisePotential::free(), 1, &WannierParams::default()).is_err());
}

#[test]
fn alpha_drift_ratio() {
    assert_eq!(alpha_drift(&[1.0, -2.0, 4.0]), 4.0);
}

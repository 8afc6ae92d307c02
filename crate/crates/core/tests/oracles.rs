use qim_core::gibbs::{center, make_state, GibbsState};
use qim_core::kubo::{
    divdiff_exp, kubo_n_point, kubo_oracle, kubo_quadrature, simplex_mc, DEFAULT_QUADRATURE_DEGREE,
};
use qim_core::sampling::{gaussian_hermitian, gaussian_psd};
use qim_core::HermitianOperator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn linear_state(d: usize) -> GibbsState {
    let h: Vec<f64> = (1..=d).map(|k| k as f64).collect();
    make_state(&HermitianOperator::from_real_diagonal(&h).unwrap(), 0.5).unwrap()
}

#[test]
fn divdiff_matches_simplex_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let nodes: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..0.0)).collect();
    let exact = divdiff_exp(&nodes);
    let est = simplex_mc(4, 10_000_000, 7, || {
        let x = nodes.clone();
        move |a: &[f64]| a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>().exp()
    });
    assert!(
        (est.value - exact).abs() <= 5.0 * est.stderr,
        "exact {exact} mc {} ± {}",
        est.value,
        est.stderr
    );
}

#[test]
fn kubo_against_oracles_small_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    for d in [2, 4] {
        let s = linear_state(d);
        for n in 2..=3 {
            let dirs: Vec<_> = (0..n).map(|_| gaussian_hermitian(&mut rng, d)).collect();
            let k = kubo_n_point(&s, &dirs).unwrap();
            let est = kubo_oracle(&s, &dirs, 200_000, 11).unwrap();
            assert!(k.with_oracle(&est).oracle_agrees().unwrap(), "d={d} n={n}");
        }
        let v = gaussian_hermitian(&mut rng, d);
        let dirs = [v.clone(), v];
        let q = kubo_quadrature(&s, &dirs, DEFAULT_QUADRATURE_DEGREE).unwrap();
        let k = kubo_n_point(&s, &dirs).unwrap().value;
        assert!((q - k).abs() <= 1e-6 * k.abs());
    }
}

#[test]
fn bkm_variance_is_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let s = make_state(&gaussian_psd(&mut rng, 5).scaled(4.0), 0.5).unwrap();
    for _ in 0..10 {
        let v = center(&s, &gaussian_hermitian(&mut rng, 5));
        let k = kubo_n_point(&s, &[v.clone(), v]).unwrap();
        assert!(k.value >= 0.0 && k.imag.abs() < 1e-12);
    }
}

#[test]
fn repeated_direction_values_are_real() {
    let mut rng = ChaCha8Rng::seed_from_u64(2027);
    let s = linear_state(4);
    let v = gaussian_hermitian(&mut rng, 4);
    for n in 1..=4 {
        let k = kubo_n_point(&s, &vec![v.clone(); n]).unwrap();
        assert!(k.imag.abs() <= 1e-10 * k.modulus().max(1e-300), "n={n}");
    }
}

use proptest::prelude::*;
use qim_core::epsnorms::{eps_norm, monotonicity_scan, default_eps_grid};
use qim_core::gibbs::{make_state, perturb, reg_mean, DEFAULT_LAMBDA_GRID};
use qim_core::kubo::{divdiff_exp, kubo_n_point};
use qim_core::manifold::transport;
use qim_core::sampling::{gaussian_hermitian, gaussian_psd};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn divdiff_is_symmetric(mut x in prop::collection::vec(-8.0f64..2.0, 1..7), k in 0usize..7) {
        let a = divdiff_exp(&x);
        let len = x.len();
        x.rotate_left(k % len);
        x.reverse();
        let b = divdiff_exp(&x);
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert!(a > 0.0);
    }

    #[test]
    fn divdiff_is_continuous_at_confluence(x in -6.0f64..1.0, y in -6.0f64..1.0, h in 1e-12f64..1e-4) {
        let a = divdiff_exp(&[x, x, y]);
        let b = divdiff_exp(&[x, x + h, y]);
        prop_assert!((a - b).abs() <= 2.0 * h * a.max(b) + 1e-15);
    }

    #[test]
    fn eps_norm_monotone_and_bracketed(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = gaussian_psd(&mut rng, d).shifted(1.0);
        let x = gaussian_hermitian(&mut rng, d);
        let r = monotonicity_scan(&x, &h, &default_eps_grid()).unwrap();
        prop_assert!(r.monotone && r.bracketed_by_endpoints);
        let low = eps_norm(&x, &h, 0.0).unwrap();
        prop_assert!(low <= r.omega_norm * (1.0 + 1e-10));
    }

    #[test]
    fn mean_is_lambda_independent(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = make_state(&gaussian_psd(&mut rng, d), 0.5).unwrap();
        let x = gaussian_hermitian(&mut rng, d);
        prop_assert!(reg_mean(&s, &x, &DEFAULT_LAMBDA_GRID).unwrap().lambda_independent());
    }

    #[test]
    fn kubo_is_cyclic(seed in any::<u64>(), d in 2usize..5, n in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = make_state(&gaussian_psd(&mut rng, d).scaled(2.0), 0.5).unwrap();
        let mut v: Vec<_> = (0..n).map(|_| gaussian_hermitian(&mut rng, d)).collect();
        let a = kubo_n_point(&s, &v).unwrap();
        v.rotate_left(1);
        let b = kubo_n_point(&s, &v).unwrap();
        let scale = a.modulus().max(1e-300);
        prop_assert!((a.value - b.value).abs() <= 1e-10 * scale);
        prop_assert!((a.imag - b.imag).abs() <= 1e-10 * scale);
    }

    #[test]
    fn transport_is_affine(seed in any::<u64>(), lam in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = make_state(&gaussian_psd(&mut rng, 4), 0.5).unwrap();
        let x = gaussian_hermitian(&mut rng, 4);
        let x = x.scaled(0.2 / a.frame().eps_norm(&x, 0.25).unwrap());
        let b = perturb(&a, &x, 0.25).unwrap();
        let z1 = gaussian_hermitian(&mut rng, 4);
        let z2 = gaussian_hermitian(&mut rng, 4);
        let mixed = transport(&(&(&z1 * lam) + &(&z2 * (1.0 - lam))), &a, &b);
        let sep = &(&transport(&z1, &a, &b) * lam) + &(&transport(&z2, &a, &b) * (1.0 - lam));
        prop_assert!(mixed.distance(&sep) <= 1e-13 * (1.0 + z1.op_norm() + z2.op_norm()));
    }
}

use affine_core::sample::{self, FormulaGen};
use affine_core::structures::{self, all_tuples, Assignment};
use affine_core::ultramean;
use affine_core::{F32Charge, F32Structure, F64Charge, F64Structure, RationalStructure, Scalar};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_f64(r: &affine_core::Rational) -> f64 {
    r.to_f64().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn float_evaluation_tracks_exact(seed in any::<u64>()) {
        let sig = sample::test_signature();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let m: RationalStructure = sample::random_structure(&mut r, &sig, 4, 6);
        let m64: F64Structure = m.map_scalar(to_f64);
        let m32: F32Structure = m.map_scalar(|v| to_f64(v) as f32);
        let phi = FormulaGen { sig: &sig, depth: 2, size: 10 }.formula(&mut r, &["x".to_string()]);
        for t in all_tuples(m.len(), 1) {
            let asg: Assignment = [("x".to_string(), t[0])].into();
            let exact = to_f64(&structures::eval(&m, &phi, &asg, 1).unwrap());
            let v64 = structures::eval(&m64, &phi, &asg, 1).unwrap();
            let v32 = structures::eval(&m32, &phi, &asg, 1).unwrap();
            prop_assert!((v64 - exact).abs() <= 1e-9, "{phi}: {v64} vs {exact}");
            prop_assert!(((v32 as f64) - exact).abs() <= 1e-4, "{phi}: {v32} vs {exact}");
        }
    }

    #[test]
    fn float_ultramean_tracks_exact(seed in any::<u64>()) {
        let sig = sample::test_signature();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let family: Vec<RationalStructure> = (0..2).map(|_| sample::random_structure(&mut r, &sig, 3, 6)).collect();
        let mu = sample::random_charge(&mut r, 2, 4);
        let sigma = FormulaGen { sig: &sig, depth: 2, size: 8 }.sentence(&mut r);
        let exact = structures::eval_sentence(&ultramean::ultramean(&family, &mu, 1).unwrap().structure, &sigma, 1).unwrap();

        let f64s: Vec<F64Structure> = family.iter().map(|m| m.map_scalar(to_f64)).collect();
        let mu64: F64Charge = mu.map_scalar(to_f64);
        let mean64 = ultramean::ultramean(&f64s, &mu64, 1).unwrap();
        let v64 = structures::eval_sentence(&mean64.structure, &sigma, 1).unwrap();
        prop_assert!(v64.eq_tol(&to_f64(&exact)));

        let f32s: Vec<F32Structure> = family.iter().map(|m| m.map_scalar(|v| to_f64(v) as f32)).collect();
        let mu32: F32Charge = mu.map_scalar(|v| to_f64(v) as f32);
        let mean32 = ultramean::ultramean(&f32s, &mu32, 1).unwrap();
        let v32 = structures::eval_sentence(&mean32.structure, &sigma, 1).unwrap();
        prop_assert!(v32.eq_tol(&(to_f64(&exact) as f32)));
    }
}

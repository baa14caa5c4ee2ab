use proptest::prelude::*;

use qai::estimation::{
    incompat_spectrum, reparametrize, sld_geometry, sld_set, EstimationReport, Tolerances,
};
use qai::linalg::{gellmann_basis, max_abs, DensityMatrix, HermitianMatrix, RMatrix};
use qai::model::{mixture_coordinates, qudit_mixture};
use qai::sampler::{conjectured_spectrum, random_state, sample_rng};

fn state(d: usize, seed: u64) -> DensityMatrix {
    random_state(d, &mut sample_rng(seed)).unwrap().rho
}

fn full_report(rho: &DensityMatrix) -> EstimationReport {
    let basis = gellmann_basis(rho.dim()).unwrap();
    let m = qudit_mixture(&mixture_coordinates(rho, &basis), &basis).unwrap();
    EstimationReport::from_model(&m, &Tolerances::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sld_solves_lyapunov_equation(d in 2usize..6, seed in any::<u64>(), k in 0usize..24) {
        let rho = state(d, seed);
        let basis = gellmann_basis(d).unwrap();
        let drho = &basis.generators()[k % basis.len()] * 0.5;
        let l = &sld_set(&rho, std::slice::from_ref(&drho), 1e-12).unwrap()[0];
        let lhs = (l.matrix() * rho.matrix() + rho.matrix() * l.matrix()) * qai::linalg::C64::new(0.5, 0.0);
        let scale = 1.0 / rho.eig().min();
        prop_assert!(max_abs(&(lhs - drho.matrix())) < 1e-12 * scale);
    }

    #[test]
    fn geometry_shapes(d in 2usize..5, seed in any::<u64>()) {
        let rho = state(d, seed);
        let basis = gellmann_basis(d).unwrap();
        let drhos: Vec<HermitianMatrix> =
            basis.generators().iter().map(|g| g * (1.0 / d as f64)).collect();
        let (q, u) = sld_geometry(&rho, &drhos, 1e-12).unwrap();
        prop_assert!((&q - q.transpose()).amax() == 0.0);
        prop_assert!((&u + u.transpose()).amax() == 0.0);
        let min = q.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min > 0.0);
    }

    #[test]
    fn spectrum_is_symmetric_and_bounded(d in 2usize..5, seed in any::<u64>()) {
        let rep = full_report(&state(d, seed));
        let s = &rep.i_spectrum;
        let n = s.len();
        for i in 0..n {
            prop_assert!((s[i] + s[n - 1 - i]).abs() < 1e-9);
        }
        prop_assert!(rep.r >= 0.0 && rep.r <= 1.0 + 1e-9);
        prop_assert!(rep.delta <= n / 2);
        prop_assert_eq!(rep.compat_bound, n - rep.delta);
    }

    #[test]
    fn full_tomography_spectrum_matches_pair_formula(d in 2usize..5, seed in any::<u64>()) {
        let rho = state(d, seed);
        let rep = full_report(&rho);
        let expected = conjectured_spectrum(&rho.eig().values);
        for (a, b) in rep.i_spectrum.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-7, "{} vs {}", a, b);
        }
    }

    #[test]
    fn ai_is_chart_invariant(seed in any::<u64>(), entries in prop::collection::vec(-1.0f64..1.0, 64)) {
        let rep = full_report(&state(3, seed));
        let p = rep.num_params();
        let b = RMatrix::identity(p, p) * 2.0 + RMatrix::from_row_slice(p, p, &entries[..p * p]) * 0.5;
        let (q, u) = reparametrize(&rep.q, &rep.u, &b).unwrap();
        let r = incompat_spectrum(&q, &u).unwrap()[0];
        prop_assert!((r - rep.r).abs() < 1e-8);
    }

    #[test]
    fn submodels_interlace(seed in any::<u64>(), mask in 1u32..255) {
        let rep = full_report(&state(3, seed));
        let subset: Vec<usize> = (0..8).filter(|i| mask & (1 << i) != 0).collect();
        let b = rep.submodel_bounds(&subset, 1e-8).unwrap();
        prop_assert!(b.holds(1e-8), "{:?}", b);
    }
}

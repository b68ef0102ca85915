use latteds::lattice::{
    boundary_faces, cube_sites, diff, div, grad, laplacian, omega, shift, stokes_sum, Boundary, CubeKind, CubeSpec,
    DiffKind, Field, LatticeWindow,
};
use proptest::prelude::*;

fn setup(dim: usize, radius: i64, seed: u64) -> (Field, Field, Field) {
    let w = LatticeWindow::new(dim, radius, Boundary::Periodic, 0).unwrap();
    let u = Field::random_integer(&w, 1, 50, seed);
    let v = Field::random_integer(&w, 1, 50, seed.wrapping_add(1));
    let vec = Field::random_integer(&w, dim, 50, seed.wrapping_add(2));
    (u, v, vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_difference_is_shifted_backward(dim in 1usize..=3, radius in 1i64..=4, seed: u64) {
        let (u, _, _) = setup(dim, radius, seed);
        for axis in 0..dim {
            let fwd = diff(&u, axis, DiffKind::Forward).unwrap();
            let shifted = shift(&diff(&u, axis, DiffKind::Backward).unwrap(), axis, 1).unwrap();
            prop_assert_eq!(fwd, shifted);
        }
    }

    #[test]
    fn product_rules(dim in 1usize..=3, radius in 1i64..=4, seed: u64) {
        let (u, w, _) = setup(dim, radius, seed);
        let uw = u.mul(&w).unwrap();
        for axis in 0..dim {
            let lhs = diff(&uw, axis, DiffKind::Forward).unwrap();
            let du = diff(&u, axis, DiffKind::Forward).unwrap();
            let dw = diff(&w, axis, DiffKind::Forward).unwrap();
            let tw = shift(&w, axis, 1).unwrap();
            let tu = shift(&u, axis, 1).unwrap();
            let first = du.mul(&tw).unwrap().add(&u.mul(&dw).unwrap()).unwrap();
            let second = du.mul(&w).unwrap().add(&tu.mul(&dw).unwrap()).unwrap();
            prop_assert_eq!(&lhs, &first);
            prop_assert_eq!(&lhs, &second);
        }
    }

    #[test]
    fn divergence_of_weighted_gradients(dim in 1usize..=3, radius in 1i64..=4, seed: u64) {
        let (u, w, _) = setup(dim, radius, seed);
        let lap = laplacian(&w);
        let u_lap = u.mul(&lap).unwrap();
        for (outer, inner) in [(DiffKind::Forward, DiffKind::Backward), (DiffKind::Backward, DiffKind::Forward)] {
            let lhs = div(&grad(&w, inner).unwrap().scale_by(&u).unwrap(), outer).unwrap();
            let cross = grad(&u, outer).unwrap().dot(&grad(&w, outer).unwrap()).unwrap();
            prop_assert_eq!(lhs, u_lap.add(&cross).unwrap());
        }
    }

    #[test]
    fn laplacian_factorizations(dim in 1usize..=3, radius in 1i64..=4, seed: u64) {
        let (u, _, _) = setup(dim, radius, seed);
        let lap = laplacian(&u);
        prop_assert_eq!(&lap, &div(&grad(&u, DiffKind::Forward).unwrap(), DiffKind::Backward).unwrap());
        prop_assert_eq!(&lap, &div(&grad(&u, DiffKind::Backward).unwrap(), DiffKind::Forward).unwrap());
    }

    #[test]
    fn stokes_identities(dim in 1usize..=3, radius in 1i64..=6, seed: u64) {
        let (_, _, v) = setup(dim, radius, seed);
        for kind in [CubeKind::CStar, CubeKind::C] {
            let (inside, boundary) = stokes_sum(&v, radius, kind).unwrap();
            prop_assert_eq!(inside, boundary);
        }
    }
}

#[test]
fn cube_cardinalities() {
    for dim in 1..=3 {
        for r in 1..=6i64 {
            let w = LatticeWindow::new(dim, r, Boundary::Periodic, 0).unwrap();
            let cube = cube_sites(&w, CubeSpec::star(r)).unwrap().len();
            assert_eq!(cube as i64, 2i64.pow(dim as u32) * r.pow(dim as u32));
            let faces = boundary_faces(&w, r, CubeKind::CStar).unwrap().len() as f64;
            let scaled = faces * (dim as f64).sqrt();
            let expected = omega(dim) * (r as f64).powi(dim as i32 - 1);
            assert!((scaled - expected).abs() <= 1e-9 * expected, "N={dim} r={r}: {scaled} vs {expected}");
        }
    }
}

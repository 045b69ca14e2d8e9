use num_complex::Complex64;
use proptest::prelude::*;

use unilab::analytic::{annulus, covering_map_zeros, psi, semigroup_param, HyperbolicAuto};
use unilab::certify::{check_m, PairFamily, Tolerances};
use unilab::numlin::{self, CMat, LinearMap};
use unilab::opbuild::{self, adjoint, backward_shift, composition_matrix, hs_left, hs_right, OpMatrix};
use unilab::spaces::{inner, CoeffVec, NormVariant, SpaceSpec};

fn cmat(n: usize, m: usize, vals: &[(f64, f64)]) -> CMat {
    CMat::from_fn(n, m, |i, j| {
        let (a, b) = vals[(i * m + j) % vals.len()];
        Complex64::new(a, b)
    })
}

fn pair() -> impl Strategy<Value = (f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0)
}

fn space() -> impl Strategy<Value = SpaceSpec> {
    (0usize..3, 2usize..12).prop_map(|(kind, n)| match kind {
        0 => SpaceSpec::hardy(n).unwrap(),
        1 => SpaceSpec::new(1.0, n, NormVariant::Derivative).unwrap(),
        _ => SpaceSpec::new(0.5, n, NormVariant::Power).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn annulus_radii_are_reciprocal(r in 0.0f64..0.999) {
        let (a, b) = annulus(r).unwrap();
        prop_assert!((a * b - 1.0).abs() < 1e-12);
        prop_assert!(a <= 1.0 && b >= 1.0);
    }

    #[test]
    fn automorphisms_form_a_semigroup(a in 0.01f64..0.95, b in 0.01f64..0.95, c in 0.01f64..0.95, z in pair()) {
        let z = Complex64::new(z.0, z.1) * 0.6;
        let ab = semigroup_param(a, b).unwrap();
        let bc = semigroup_param(b, c).unwrap();
        let left = semigroup_param(ab, c).unwrap();
        let right = semigroup_param(a, bc).unwrap();
        prop_assert!((left - right).abs() < 1e-12);
        // phi_a o phi_b = phi_ab, checked pointwise
        let fa = HyperbolicAuto::new(a).unwrap();
        let fb = HyperbolicAuto::new(b).unwrap();
        let fab = HyperbolicAuto::new(ab).unwrap();
        prop_assert!((fa.apply(fb.apply(z)) - fab.apply(z)).norm() < 1e-12);
        prop_assert!((fa.apply_inverse(fa.apply(z)) - z).norm() < 1e-12);
    }

    #[test]
    fn composition_columns_are_powers(r in -0.9f64..0.9, z in pair(), k in 0usize..8) {
        let n = 96;
        let c = composition_matrix(r, &SpaceSpec::hardy(n).unwrap()).unwrap();
        let z = Complex64::new(z.0, z.1) * 0.3;
        let series: Complex64 = (0..n).map(|i| c.entries()[(i, k)] * z.powu(i as u32)).sum();
        let phi = (z + r) / (1.0 + r * z);
        prop_assert!((series - phi.powu(k as u32)).norm() < 1e-11);
    }

    #[test]
    fn zero_sets_solve_the_covering_equation(r in 0.05f64..0.95, rho in 0.0f64..1.0, th in 0.0f64..6.28) {
        let (a, b) = annulus(r).unwrap();
        let m = a.powf(1.0 - (0.02 + 0.96 * rho)) * b.powf(0.02 + 0.96 * rho);
        let lambda = Complex64::from_polar(m, th);
        let zs = covering_map_zeros(r, lambda, 8).unwrap();
        prop_assert_eq!(zs.entries.len(), 17);
        let ks: Vec<i64> = zs.entries.iter().map(|e| e.k).collect();
        prop_assert_eq!(&ks[..5], &[0, -1, 1, -2, 2]);
        for e in &zs.entries {
            prop_assert!(e.residual < 1e-10);
            prop_assert!(e.point.log_boundary_gap() < 0.0);
            prop_assert!((psi(r, &e.point) - lambda).norm() < 1e-9 * lambda.norm());
            // z itself only resolves the boundary gap while it is above rounding
            if e.point.log_boundary_gap() > -30.0 {
                prop_assert!(e.point.z.norm() < 1.0);
            }
        }
    }

    #[test]
    fn weighted_adjoint_is_an_adjoint(s in space(), vals in prop::collection::vec(pair(), 1..40)) {
        let n = s.trunc();
        let a = OpMatrix::on_space(cmat(n, n, &vals), &s, "random").unwrap();
        let a_star = opbuild::weighted_adjoint(&a, &s).unwrap();
        let f = CoeffVec::new((0..n).map(|i| Complex64::new(vals[i % vals.len()].1, 1.0 / (i + 1) as f64)).collect(), &s).unwrap();
        let g = CoeffVec::new((0..n).map(|i| Complex64::new(0.5, vals[(3 * i) % vals.len()].0)).collect(), &s).unwrap();
        let lhs = inner(&a.apply(&f).unwrap(), &g, &s).unwrap();
        let rhs = inner(&f, &a_star.apply(&g).unwrap(), &s).unwrap();
        let scale = 1.0 + lhs.norm();
        prop_assert!((lhs - rhs).norm() < 1e-10 * scale);
        // the adjoint of the adjoint is the operator
        prop_assert!((adjoint(&a_star).unwrap().entries() - a.entries()).norm() < 1e-12 * (1.0 + a.entries().norm()));
    }

    #[test]
    fn opmatrix_binary_roundtrip(dom in space(), cod in space(), vals in prop::collection::vec(pair(), 1..50)) {
        let a = OpMatrix::new(cmat(cod.trunc(), dom.trunc(), &vals), dom, cod, 17, "roundtrip").unwrap();
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        let b = OpMatrix::read_from(&buf[..]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kernel_dims_survive_similarity(n in 4usize..14, k in 0usize..4, vals in prop::collection::vec(pair(), 8..60)) {
        let k = k.min(n - 1);
        let tol = 1e-8;
        let q = numlin::SubspaceBasis::span_of(&cmat(n, k.max(1), &vals), tol);
        let q = if k == 0 { CMat::zeros(n, 0) } else { q.columns().clone() };
        let r = CMat::identity(n, n) * Complex64::new(2.0, 0.0) + cmat(n, n, &vals) * Complex64::new(0.2 / n as f64, 0.0);
        let a = &r * (CMat::identity(n, n) - &q * q.adjoint());
        let s = CMat::identity(n, n) + cmat(n, n, &vals[1..]).scale(0.3 / n as f64);
        let s_inv = s.clone().try_inverse().unwrap();
        let b = &s * &a * s_inv;
        prop_assert_eq!(numlin::nullity(&a, tol), q.ncols());
        prop_assert_eq!(numlin::nullity(&b, tol), numlin::nullity(&a, tol));
        prop_assert_eq!(numlin::corank(&b, tol), numlin::corank(&a, tol));
    }

    #[test]
    fn left_multiplication_kernel_counts(n in 2usize..7) {
        let b = backward_shift(n).unwrap();
        let l = hs_left(&b).unwrap();
        let r = hs_right(&adjoint(&b).unwrap()).unwrap();
        prop_assert_eq!(l.kernel(1e-8).dim(), n * b.nullity(1e-8));
        prop_assert_eq!(l.nullity(1e-8), n);
        prop_assert_eq!(r.nullity(1e-8), n);
        // products of Kronecker factors stay structured and agree with dense products
        let lr = l.compose(&r).unwrap();
        prop_assert!(lr.is_kronecker());
        let dense = l.to_dense() * r.to_dense();
        prop_assert!((lr.to_dense() - dense).norm() < 1e-12);
    }
}

#[test]
fn check_m_is_symmetric_under_swapping() {
    let build = || {
        PairFamily::new(
            "(L_B, R_B*)",
            |n| {
                let b = backward_shift(n)?;
                Ok((hs_left(&b)?, hs_right(&adjoint(&b)?)?))
            },
            |n| {
                Ok((
                    opbuild::hs_left_on(&opbuild::backward_shift_section(n, 2 * n)?, n)?,
                    opbuild::hs_right_on(&opbuild::forward_shift_section(2 * n, n)?, n)?,
                ))
            },
        )
    };
    let tol = Tolerances::default();
    let a = check_m(&build(), &[4, 6, 8], &tol).unwrap();
    let b = check_m(&build().swapped(), &[4, 6, 8], &tol).unwrap();
    assert_eq!(a.verdict, b.verdict);
    for (x, y) in a.ladder.iter().zip(&b.ladder) {
        let (kx, ky) = (x.kernel_dims.unwrap(), y.kernel_dims.unwrap());
        assert_eq!(kx, [ky[1], ky[0]]);
        assert_eq!(x.intersection_dim, y.intersection_dim);
        assert_eq!(x.sum_dim, y.sum_dim);
        assert_eq!(x.product_kernel_dim, y.product_kernel_dim);
        assert!(x.product_kernel_dim >= x.sum_dim);
    }
}

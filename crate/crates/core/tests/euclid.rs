use std::f64::consts::{PI, TAU};

use erqm_core::{
    bilinear_pairing, check_psd, cluster_check, covariance_pairing, difference_matrix, generating_functional,
    gram_matrix, inner_product, invariance_check, log_slope, z_free, Complex64, CovarianceKernel, DMatrix,
    EuclideanMotion, ExponentialVector, Matrix4, TestFunction, Vector3, Vector4,
};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASS: f64 = 1.0;

fn free() -> CovarianceKernel {
    CovarianceKernel::free(MASS).unwrap()
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn bump(center: [f64; 4], st: f64, sx: f64, amp: f64) -> TestFunction {
    TestFunction::gaussian(center, st, sx, real(amp)).unwrap()
}

fn draw(rng: &mut ChaCha8Rng) -> TestFunction {
    let st = rng.random_range(0.2..0.6);
    let sx = rng.random_range(0.3..1.0);
    let tau = 5.0 * st + rng.random_range(0.05..1.5);
    let c = [tau, rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
    let amp = rng.random_range(0.3..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let f = bump(c, st, sx, amp);
    if rng.random_bool(0.3) {
        let q = [0; 4].map(|_| rng.random_range(-0.5..0.5));
        f.scaled(Complex64::from_polar(1.0, rng.random_range(0.0..TAU))).with_modulation(q)
    } else {
        f
    }
}

fn draw_motion(rng: &mut ChaCha8Rng) -> EuclideanMotion {
    let mut o = Matrix4::identity();
    for i in 0..4 {
        for j in (i + 1)..4 {
            o = EuclideanMotion::plane_rotation(i, j, rng.random_range(0.0..TAU)).unwrap().rotation() * o;
        }
    }
    let a = Vector4::from([0; 4].map(|_| rng.random_range(-2.0..2.0)));
    EuclideanMotion::new(o, a).unwrap()
}

/// Gauss-Hermite nodes and weights from the Golub-Welsch eigenproblem.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let j = DMatrix::from_fn(n, n, |r, c| if r + 1 == c || c + 1 == r { (r.max(c) as f64 / 2.0).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], PI.sqrt() * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `int d^4p/(2pi)^4 conj(f~) g~ / (p^2 + m^2)` by a product rule aligned to diagonal widths.
fn gh_pairing(f: &TestFunction, g: &TestFunction, n: usize) -> Complex64 {
    let (t, w) = gauss_hermite(n);
    let s: Vec<f64> = (0..4).map(|i| f.covariance()[(i, i)] + g.covariance()[(i, i)]).collect();
    let scale: Vec<f64> = s.iter().map(|s| (2.0 / s).sqrt()).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let p = Vector4::new(t[a] * scale[0], t[b] * scale[1], t[c] * scale[2], t[d] * scale[3]);
                    let wt = w[a] * w[b] * w[c] * w[d];
                    let gauss: f64 = (0..4).map(|i| 0.5 * s[i] * p[i] * p[i]).sum();
                    let v = f.fourier(&p).conj() * g.fourier(&p) * gauss.exp() / (p.norm_squared() + MASS * MASS);
                    total += wt * v;
                }
            }
        }
    }
    total * scale.iter().product::<f64>() / TAU.powi(4)
}

/// `E_1(x)` from its power series, for moderate `x`.
fn exp_integral_e1(x: f64) -> f64 {
    let gamma = 0.577_215_664_901_532_9;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -x / k as f64;
        sum -= term / k as f64;
        if term.abs() < 1e-18 {
            break;
        }
    }
    -gamma - x.ln() + sum
}

/// `K_1(x) = int_0^inf exp(-x cosh t) cosh t dt`.
fn bessel_k1(x: f64) -> f64 {
    let h = 0.01;
    (0..2000)
        .map(|i| {
            let t = i as f64 * h;
            let w = if i == 0 { 0.5 } else { 1.0 };
            w * (-x * t.cosh()).exp() * t.cosh()
        })
        .sum::<f64>()
        * h
}

#[test]
fn spherical_self_pairing_closed_form() {
    for sigma in [0.3, 0.6, 1.2] {
        let f = bump([3.0, 0.1, 0.0, -0.2], sigma, sigma, 1.0);
        let x = (sigma * MASS).powi(2);
        // 2 pi^2 sigma^8 int_0^inf p^3 exp(-sigma^2 p^2)/(p^2+m^2) dp
        let part = 0.5 * (1.0 / (sigma * sigma) - MASS * MASS * x.exp() * exp_integral_e1(x));
        let expect = 2.0 * PI * PI * sigma.powi(8) * part;
        let got = covariance_pairing(&f, &f, &free()).unwrap();
        assert!((got - expect).norm() < 1e-11 * expect, "sigma={sigma}: {got} vs {expect}");
    }
}

#[test]
fn pairing_matches_gauss_hermite_product_rule() {
    let f = bump([3.0, 0.2, -0.1, 0.0], 2.0, 2.5, 1.3);
    let g = bump([3.4, -0.3, 0.2, 0.5], 2.2, 3.0, -0.7).scaled(Complex64::from_polar(1.0, 0.4));
    let oracle = gh_pairing(&f, &g, 32);
    let got = covariance_pairing(&f, &g, &free()).unwrap();
    assert!((got - oracle).norm() < 1e-10 * oracle.norm(), "{got} vs {oracle}");
}

#[test]
fn separated_pairing_follows_radial_propagator() {
    let sigma = 0.3;
    let f = bump([3.0, 0.0, 0.0, 0.0], sigma, sigma, 1.0);
    let near = covariance_pairing(&f, &f, &free()).unwrap().norm();
    for r in [4.0, 10.0] {
        let g = bump([3.0, r / MASS, 0.0, 0.0], sigma, sigma, 1.0);
        let far = covariance_pairing(&f, &g, &free()).unwrap();
        // Gaussian smearing of a solution of (Laplacian - m^2) C = 0 multiplies it by exp(sigma^2 m^2)
        let ft0 = TAU * TAU * sigma.powi(4);
        let c = MASS * bessel_k1(MASS * r) / (4.0 * PI * PI * r);
        let expect = ft0 * ft0 * (sigma * MASS).powi(2).exp() * c;
        assert!((far.re - expect).abs() < 1e-8 * expect && far.im.abs() < 1e-12 * expect, "r={r}: {far} vs {expect}");
        if r == 10.0 {
            assert!(near / far.norm() > 5f64.exp());
        }
    }
}

#[test]
fn self_pairing_is_positive_real() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let f = draw(&mut rng);
        let f = TestFunction::new(*f.center(), *f.covariance(), real(f.amplitude().norm()), Vector4::zeros()).unwrap();
        let v = covariance_pairing(&f, &f, &free()).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-12 * v.re);
    }
}

#[test]
fn pairing_is_conjugate_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let (f, g) = (draw(&mut rng), draw(&mut rng));
        let a = covariance_pairing(&f, &g, &free()).unwrap();
        let b = covariance_pairing(&g, &f, &free()).unwrap();
        assert!((a - b.conj()).norm() < 1e-12 * a.norm().max(1e-300));
    }
}

#[test]
fn common_translation_leaves_pairing_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shift = EuclideanMotion::translation([0.7, -1.0, 0.4, 2.0]);
    for _ in 0..5 {
        let (f, g) = (draw(&mut rng), draw(&mut rng));
        let a = covariance_pairing(&f, &g, &free()).unwrap();
        let b = covariance_pairing(&shift.apply(&f), &shift.apply(&g), &free()).unwrap();
        assert!((a - b).norm() < 1e-9 * a.norm());
    }
}

#[test]
fn generating_functional_basics() {
    assert_eq!(z_free(&[], MASS).unwrap(), real(1.0));
    let f = bump([2.5, 0.0, 0.3, 0.0], 0.4, 0.6, 1.7);
    let z = z_free(std::slice::from_ref(&f), MASS).unwrap();
    assert!(z.re > 0.0 && z.re <= 1.0 && z.im.abs() < 1e-15);
    let expect = (-0.5 * covariance_pairing(&f, &f, &free()).unwrap()).exp();
    assert!((z - expect).norm() < 1e-15);
    for c in [0.5, 2.0, -1.5] {
        let zc = z_free(&[f.scaled(real(c))], MASS).unwrap();
        assert!((zc.re - z.re.powf(c * c)).abs() < 1e-10, "c={c}");
    }
    let split = z_free(&[f.scaled(real(0.4)), f.scaled(real(0.6))], MASS).unwrap();
    assert!((split - z).norm() < 1e-14);
}

#[test]
fn single_function_gram_is_real_and_bounded() {
    let f = bump([2.0, 0.0, 0.0, 0.0], 0.3, 0.5, 1.2);
    let m = gram_matrix(&[f], &free()).unwrap();
    let v = m[(0, 0)];
    assert!(v.im.abs() < 1e-14 && v.re > 0.0 && v.re <= 1.0, "{v}");
}

#[test]
fn gram_rejects_functions_reaching_negative_time() {
    let f = bump([1.0, 0.0, 0.0, 0.0], 0.3, 0.5, 1.0);
    assert!(gram_matrix(&[f], &free()).is_err());
}

#[test]
fn free_gram_of_eight_is_hermitian_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let fs: Vec<TestFunction> = (0..8).map(|_| draw(&mut rng)).collect();
        let m = gram_matrix(&fs, &free()).unwrap();
        assert!((&m - m.adjoint()).norm() < 1e-12);
        let (min, pass) = check_psd(&m, 1e-10);
        assert!(pass, "{min:e}");
    }
}

#[test]
fn separated_gram_is_nearly_diagonal() {
    let f = bump([2.0, 0.0, 0.0, 0.0], 0.3, 0.4, 1.0);
    let g = bump([2.0, 12.0, 0.0, 0.0], 0.3, 0.4, 1.0);
    let m = gram_matrix(&[f.clone(), g.clone()], &free()).unwrap();
    // Z[g - Theta f] = Z[g] Z[f] exp(<Theta f, C g>) for real f, g
    let cross = covariance_pairing(&f.time_reflected(), &g, &free()).unwrap().re;
    let zf = z_free(&[f], MASS).unwrap().re;
    let zg = z_free(&[g], MASS).unwrap().re;
    assert!((m[(0, 1)].re - zf * zg * cross.exp()).abs() < 1e-14);
    assert!(cross > 0.0 && cross < 1e-6);
}

#[test]
fn difference_matrix_is_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let fs: Vec<TestFunction> = (0..8).map(|_| draw(&mut rng)).collect();
    let (min, pass) = check_psd(&difference_matrix(&fs, &free()).unwrap(), 1e-10);
    assert!(pass, "{min:e}");
}

#[test]
fn perturbed_kernel_breaks_positivity() {
    let kernel = CovarianceKernel::perturbed(MASS, -0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let worst = (0..20)
        .map(|_| {
            let fs: Vec<TestFunction> = (0..8).map(|_| draw(&mut rng)).collect();
            check_psd(&gram_matrix(&fs, &kernel).unwrap(), 0.0).0
        })
        .fold(f64::INFINITY, f64::min);
    assert!(worst < -1e-6, "{worst:e}");
}

#[test]
fn inner_product_of_single_term() {
    let f = bump([2.0, 0.1, 0.0, 0.0], 0.3, 0.5, 0.8);
    let b = ExponentialVector::new(vec![(real(1.0), f.clone())]).unwrap();
    let v = inner_product(&b, &b, &free()).unwrap();
    let m = gram_matrix(&[f], &free()).unwrap();
    assert!((v - m[(0, 0)]).norm() < 1e-15 && v.re > 0.0);
    assert!(ExponentialVector::new(vec![]).is_err());
}

#[test]
fn inner_product_is_sesquilinear_and_cauchy_schwarz() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..5 {
        let mut vector = || {
            let terms = (0..3)
                .map(|_| (Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), draw(&mut rng)))
                .collect();
            ExponentialVector::new(terms).unwrap()
        };
        let (b, c) = (vector(), vector());
        let bc = inner_product(&b, &c, &free()).unwrap();
        let cb = inner_product(&c, &b, &free()).unwrap();
        let bb = inner_product(&b, &b, &free()).unwrap();
        let cc = inner_product(&c, &c, &free()).unwrap();
        assert!((bc - cb.conj()).norm() < 1e-12);
        assert!(bb.re >= -1e-10 && cc.re >= -1e-10);
        assert!(bc.norm_sqr() <= bb.re * cc.re + 1e-9);
    }
}

#[test]
fn invariance_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let src: Vec<TestFunction> = (0..2).map(|_| draw(&mut rng)).collect();
    let id = EuclideanMotion::new(Matrix4::identity(), Vector4::zeros()).unwrap();
    assert!(invariance_check(&src, &id, &free()).unwrap() < 1e-15);
    let shift = EuclideanMotion::translation([0.0, 1.0, 0.0, 0.0]);
    assert!(invariance_check(&src, &shift, &free()).unwrap() < 1e-9);
    let rot = EuclideanMotion::plane_rotation(1, 2, PI / 2.0).unwrap();
    assert!(invariance_check(&src, &rot, &free()).unwrap() < 1e-9);
    let boost_plane = EuclideanMotion::plane_rotation(0, 3, 0.7).unwrap();
    assert!(invariance_check(&src, &boost_plane, &free()).unwrap() < 1e-9);
}

#[test]
fn cluster_examples() {
    let f = vec![bump([2.0, 0.0, 0.0, 0.0], 0.3, 0.5, 1.5)];
    let g = vec![bump([2.5, 0.2, 0.0, 0.0], 0.4, 0.6, -1.0)];
    let ladder = [4.0, 5.0, 8.0, 10.0, 14.0, 20.0];
    let dir = Vector3::new(1.0, 1.0, 0.0);
    let none = cluster_check(&f, &[], &ladder, dir, &free()).unwrap();
    assert!(none.iter().all(|p| p.deviation == 0.0));
    let pts = cluster_check(&f, &g, &ladder, dir, &free()).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].deviation < w[0].deviation, "{pts:?}");
    }
    assert!(pts.last().unwrap().deviation < 1e-8);
    // the propagator tail falls like exp(-m r) r^{-3/2}
    let slope = log_slope(&pts[2..]);
    assert!(slope < -0.9 * MASS && slope > -1.4 * MASS, "{slope}");
    assert!(cluster_check(&f, &g, &ladder, Vector3::zeros(), &free()).is_err());
}

#[test]
fn bilinear_form_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (f, g) = (draw(&mut rng), draw(&mut rng));
    let a = bilinear_pairing(&f, &g, &free()).unwrap();
    let b = bilinear_pairing(&g, &f, &free()).unwrap();
    assert!((a - b).norm() < 1e-12 * a.norm());
    let z = generating_functional(std::slice::from_ref(&f), &free()).unwrap();
    assert!((z - (-0.5 * bilinear_pairing(&f, &f, &free()).unwrap()).exp()).norm() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn random_gram_is_psd(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs: Vec<TestFunction> = (0..n).map(|_| draw(&mut rng)).collect();
        let (min, pass) = check_psd(&gram_matrix(&fs, &free()).unwrap(), 1e-10);
        prop_assert!(pass, "{:e}", min);
    }

    #[test]
    fn random_difference_matrix_is_psd(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs: Vec<TestFunction> = (0..6).map(|_| draw(&mut rng)).collect();
        let (min, pass) = check_psd(&difference_matrix(&fs, &free()).unwrap(), 1e-10);
        prop_assert!(pass, "{:e}", min);
    }

    #[test]
    fn random_motion_invariance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src: Vec<TestFunction> = (0..2).map(|_| draw(&mut rng)).collect();
        let motion = draw_motion(&mut rng);
        prop_assert!(invariance_check(&src, &motion, &free()).unwrap() <= 1e-9);
    }

    #[test]
    fn random_cluster_decay(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = vec![draw(&mut rng)];
        let g = vec![draw(&mut rng)];
        let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0);
        let pts = cluster_check(&f, &g, &[4.0, 6.0, 9.0, 13.0, 20.0], dir, &free()).unwrap();
        for w in pts.windows(2) {
            prop_assert!(w[1].deviation < w[0].deviation || w[1].deviation == 0.0);
        }
        prop_assert!(pts.last().unwrap().deviation < 1e-8);
    }
}

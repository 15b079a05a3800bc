mod common;

use std::f64::consts::PI;

use dirac2d::discretize::{
    assemble, build_grid, factor_block, factor_potential, operator_compose, read_snapshot, BlockOperator,
    HermitianAmplitude, KernelSamples, KernelSpec, PotentialFamily, PotentialSpec, SpinorField,
};
use dirac2d::freeops::ExpansionTag;
use dirac2d::linalg::hermitian_eigenvalues;
use dirac2d::threshold::build_t;
use dirac2d::{Block, Complex64, CutoffSpec, Error, Point2};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn grid_integrates_constants_and_gaussians() {
    let g = build_grid(20, 3.0).unwrap();
    assert!((g.integrate(|_| 1.0) - 36.0).abs() < 1e-12);
    assert_eq!(g.len(), 400);
    assert!(g.weights().iter().all(|w| *w > 0.0));

    let g = build_grid(32, 8.0).unwrap();
    let s = g.integrate(|p| (-(p.x1 * p.x1 + p.x2 * p.x2)).exp());
    assert!((s - PI).abs() < 1e-8, "{s}");
}

#[test]
fn bracket_cube_is_truncation_limited() {
    let l = 40.0;
    let g = build_grid(64, l).unwrap();
    let s = g.integrate(|p| (1.0 + p.x1 * p.x1 + p.x2 * p.x2).powf(-1.5));
    // ∫ over the square = 2π − ∫₀^{2π} (1 + r_e(θ)²)^{−1/2} dθ, r_e the distance to the boundary
    let exterior = 8.0 * simpson(|t| (1.0 + (l / t.cos()).powi(2)).powf(-0.5), 0.0, PI / 4.0, 2000);
    assert!((s - (2.0 * PI - exterior)).abs() < 2e-3 * 2.0 * PI, "{s} vs {}", 2.0 * PI - exterior);
    assert!((s / (2.0 * PI) - 1.0).abs() < 0.025);
}

#[test]
fn grid_rejects_bad_parameters() {
    assert!(matches!(build_grid(6, 1.0), Err(Error::Validation(_))));
    assert!(matches!(build_grid(10, -1.0), Err(Error::Validation(_))));
    assert!(matches!(build_grid(10, f64::NAN), Err(Error::Validation(_))));
}

#[test]
fn factor_examples() {
    let g = build_grid(10, 4.0).unwrap();
    let fp = factor_potential(&PotentialSpec::zero(), &g).unwrap();
    assert!(fp.v.iter().all(|v| v.max_abs() == 0.0));
    assert!(fp.u.iter().all(|u| *u == [1.0, 1.0]));

    let spec = PotentialSpec::attractive_gaussian(1.0, 1.0);
    let fp = factor_potential(&spec, &g).unwrap();
    assert_eq!(fp.uniform_signature(), Some([-1.0, -1.0]));
    for (v, p) in fp.v.iter().zip(g.nodes()) {
        let e = (-(p.x1 * p.x1 + p.x2 * p.x2) / 2.0).exp();
        assert!((*v - Block::scalar(c(e))).max_abs() < 1e-14);
    }
    assert!(fp.reconstruction_error() < 1e-12);

    let mixed = PotentialSpec {
        family: PotentialFamily::Gaussian {
            amplitude: HermitianAmplitude { a11: 0.3, a22: -1.2, a12_re: 0.7, a12_im: -0.4 },
            width: 1.5,
        },
        coupling: 2.0,
    };
    let fp = factor_potential(&mixed, &g).unwrap();
    assert!(fp.reconstruction_error() < 1e-12);
    assert!(fp.u.iter().all(|u| *u == [-1.0, 1.0]));
}

#[test]
fn factor_block_rejects_non_hermitian() {
    let b = Block::new(c(1.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 1.0), c(2.0));
    assert!(matches!(factor_block(&b), Err(Error::Validation(_))));
    let b = Block::new(c(1.0), c(f64::NAN), c(f64::NAN), c(2.0));
    assert!(factor_block(&b).is_err());
    let spec = PotentialSpec::attractive_gaussian(1.0, -1.0);
    assert!(factor_potential(&spec, &build_grid(8, 1.0).unwrap()).is_err());
}

#[test]
fn g11_integrates_and_composes() {
    let l = 3.0;
    let g = build_grid(12, l).unwrap();
    let a = assemble(KernelSpec::Expansion(ExpansionTag::G11), &g, None, None).unwrap();
    let f = SpinorField::from_fn(&g, |_| [c(2.0), Complex64::new(0.0, -1.0)]);
    let out = a.apply(&f).unwrap();
    let area = 4.0 * l * l;
    for v in &out.values {
        assert!((v[0] - c(2.0 * area)).norm() < 1e-10);
        assert!((v[1] - Complex64::new(0.0, -area)).norm() < 1e-10);
    }

    let id = BlockOperator::identity(&g);
    let same = operator_compose(&a, &id).unwrap();
    assert!((same.matrix() - a.matrix()).norm_max() < 1e-14);

    let aa = operator_compose(&a, &a).unwrap();
    let f = SpinorField::from_fn(&g, |p| [c(p.x1 * p.x1), Complex64::new(p.x2, 1.0)]);
    let mass = f.integral();
    let out = aa.apply(&f).unwrap();
    for v in &out.values {
        for k in 0..2 {
            assert!((v[k] - mass[k] * area).norm() < 1e-9 * (1.0 + (mass[k] * area).norm()));
        }
    }

    let other = build_grid(14, l).unwrap();
    assert!(matches!(operator_compose(&a, &BlockOperator::identity(&other)), Err(Error::GridMismatch)));
}

#[test]
fn g00_and_t_are_self_adjoint() {
    let g = build_grid(14, 12.0).unwrap();
    let a = assemble(KernelSpec::Expansion(ExpansionTag::G00), &g, None, None).unwrap();
    assert!(a.is_self_adjoint());
    assert!(a.asymmetry() < 1e-10 * a.max_abs().max(1.0));
    let fp = factor_potential(&common::gaussian(1.3), &g).unwrap();
    let t = build_t(&fp, &g).unwrap();
    assert!(t.asymmetry() < 1e-10);
}

/// (−Δ)⁻¹ e^{−|x|²} = −[log r (1 − e^{−r²})/2 + ∫_r^∞ s log s e^{−s²} ds]
fn newtonian_gaussian(r: f64) -> f64 {
    let tail = simpson(|s| if s > 0.0 { s * s.ln() * (-s * s).exp() } else { 0.0 }, r, 9.0, 6000);
    let head = if r > 0.0 { r.ln() * (1.0 - (-r * r).exp()) / 2.0 } else { 0.0 };
    -(head + tail)
}

#[test]
fn g10_is_the_newtonian_potential() {
    assert!((newtonian_gaussian(0.0) - 0.577_215_664_9 / 4.0).abs() < 1e-6);
    let g = build_grid(32, 12.0).unwrap();
    let a = assemble(KernelSpec::Expansion(ExpansionTag::G10), &g, None, None).unwrap();
    let f = SpinorField::from_fn(&g, |p| [c((-(p.x1 * p.x1 + p.x2 * p.x2)).exp()), c(0.0)]);
    let u = a.apply(&f).unwrap();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (p, v) in g.nodes().iter().zip(&u.values) {
        let r = p.norm();
        if r <= 4.0 {
            let exact = newtonian_gaussian(r);
            worst = worst.max((v[0].re - exact).abs());
            scale = scale.max(exact.abs());
            assert!(v[0].im.abs() < 1e-14 && v[1].norm() < 1e-14);
        }
    }
    assert!(worst < 0.01 * scale, "{worst} / {scale}");
}

#[test]
fn laplacian_inverts_g10() {
    let g = build_grid(32, 12.0).unwrap();
    let n = g.n_per_axis();
    let a = assemble(KernelSpec::Expansion(ExpansionTag::G10), &g, None, None).unwrap();
    let bump = |p: Point2| (-(p.x1 * p.x1 + p.x2 * p.x2)).exp();
    let f = SpinorField::from_fn(&g, |p| [c(bump(p)), c(0.0)]);
    let u: Vec<f64> = a.apply(&f).unwrap().values.iter().map(|v| v[0].re).collect();
    let d = g.diff_matrix();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d2[i * n + j] = (0..n).map(|m| d[i * n + m] * d[m * n + j]).sum();
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = g.nodes()[i * n + j];
            if p.x1.abs().max(p.x2.abs()) > 3.0 {
                continue;
            }
            let lap: f64 = (0..n).map(|m| d2[i * n + m] * u[m * n + j] + d2[j * n + m] * u[i * n + m]).sum();
            worst = worst.max((-lap - bump(p)).abs());
        }
    }
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn weighted_supnorm_examples() {
    let pts = vec![Point2::new(0.0, 0.0), Point2::new(3.0, -1.0), Point2::new(-7.0, 2.5)];
    let id = KernelSamples::from_fn(pts.clone(), pts.clone(), |_, _| Block::IDENTITY);
    assert!((id.weighted_supnorm(0.0) - 1.0).abs() < 1e-15);
    let br = |p: Point2| (1.0 + p.x1 * p.x1 + p.x2 * p.x2).sqrt();
    let k = KernelSamples::from_fn(pts.clone(), pts, |x, y| Block::scalar(c(br(x) * br(y))));
    assert!((dirac2d::discretize::weighted_supnorm(&k, 1.0) - 1.0).abs() < 1e-14);

    let g = build_grid(14, 12.0).unwrap();
    let cutoff = CutoffSpec::default();
    let mu = assemble(KernelSpec::Mu0 { lambda: 0.05, cutoff }, &g, None, None).unwrap();
    let s = mu.weighted_supnorm(0.0);
    assert!(s > 0.0 && s <= 0.05, "{s}");
}

#[test]
fn t_spectrum_converges_under_refinement() {
    let spec = PotentialSpec::attractive_gaussian(0.5, 2.0);
    let smallest = |n: usize| {
        let g = common::grid(n);
        let t = build_t(&factor_potential(&spec, &g).unwrap(), &g).unwrap();
        let mut s: Vec<f64> = hermitian_eigenvalues(t.matrix().as_ref()).unwrap().iter().map(|e| e.abs()).collect();
        s.sort_by(f64::total_cmp);
        s.truncate(5);
        s
    };
    let (a, b) = (smallest(20), smallest(40));
    for (x, y) in a.iter().zip(&b) {
        assert!(common::rel(*x, *y) < 0.02, "{a:?} vs {b:?}");
    }
}

#[test]
fn integral_bound_is_uniform_near_the_diagonal() {
    // ∫⟨z⟩^{−5/2}|x − z|^{−1}|z − y|^{−1/2}dz stays bounded as y → x
    let g = build_grid(48, 40.0).unwrap();
    let ax = g.axis();
    let n = ax.len();
    let mid = |k: usize| 0.5 * (ax[k] + ax[k + 1]);
    let x = Point2::new(mid(n / 2), mid(n / 2 - 3));
    let mut values = Vec::new();
    for k in n / 2 + 1..n - 1 {
        let y = Point2::new(mid(k), x.x2);
        let i = g.integrate(|z| {
            (1.0 + z.x1 * z.x1 + z.x2 * z.x2).powf(-1.25) / (x - z).norm() / (z - y).norm().sqrt()
        });
        values.push(((x - y).norm(), i));
    }
    let top = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let near = values[0].1;
    assert!(top < 20.0, "{values:?}");
    assert!(top < 1.5 * near, "{values:?}");
    assert!(values.windows(2).all(|w| w[1].1 <= w[0].1 * 1.05), "{values:?}");
}

#[test]
fn snapshot_round_trip() {
    let g = build_grid(8, 2.0).unwrap();
    let a = assemble(KernelSpec::Expansion(ExpansionTag::G21), &g, None, None).unwrap();
    let mut buf = Vec::new();
    a.write_snapshot(&mut buf, "G21", 0.0).unwrap();
    let s = read_snapshot(buf.as_slice()).unwrap();
    assert_eq!((s.rows, s.cols, s.tag.as_str(), s.lambda, s.half_width), (64, 64, "G21", 0.0, 2.0));
    for i in 0..64 {
        for j in 0..64 {
            assert_eq!(s.blocks[i * 64 + j], a.kernel_block(i, j));
        }
    }
    assert!(read_snapshot(&buf[..buf.len() - 3]).is_err());
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(read_snapshot(bad.as_slice()), Err(Error::Snapshot(_))));
}

//! Acceptance run: one PASS/FAIL line per criterion on stderr, then a single
//! assertion that all of them passed. Tolerances are fixed below.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use scaled_lattice::baselines::{gauss_hermite_1d, gauss_hermite_level, smolyak_quadrature, tensor_quadrature};
use scaled_lattice::bernoulli::{
    bernoulli_magnitude_bound, factorial, periodic_scaled_bernoulli_poly, scaled_bernoulli_poly, BernoulliDegree, Interval,
};
use scaled_lattice::integrator::{integrate, truncation_bound, DecayCondition, Integrand};
use scaled_lattice::kernels::{
    korobov_kernel_box, korobov_kernel_cube, sobolev_inner_product, sobolev_kernel_box, sobolev_kernel_cube, sobolev_norm,
    KernelKind, KernelSection, SmoothnessOrder,
};
use scaled_lattice::lattice::{
    cbc_construct, wce_korobov_bruteforce, wce_korobov_closed_form, BoxDomain, GeneratingVector, BASE2_SEQUENCE_VECTOR,
};
use scaled_lattice::partials::{FnPartials, MixedPartialOracle};
use scaled_lattice::projection::{periodize_on_box, projection_error_bound, PeriodizationForm, Periodized};
use scaled_lattice::quadrature::{adaptive_integrate, GaussLegendre};
use scaled_lattice::testbed::{
    box_integral, separable_decay_sup, IntegrandSpecFile, LogisticFamily, NormalFamily, ProductIntegrand, TestFamily,
};
use scaled_lattice_cli::{fit_slope, run_baseline, run_convergence, BaselineMethod};

const SIGMAS: [f64; 3] = [0.6, 1.6, 2.6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    // unbuffered stderr, so the lines survive test-output capture
    let _ = writeln!(std::io::stderr().lock(), "ACCEPTANCE {id} {tag} {name}: {}", o.detail);
}

fn al(a: u32) -> SmoothnessOrder {
    SmoothnessOrder::new(a).unwrap()
}

fn deg(t: u32) -> BernoulliDegree {
    BernoulliDegree::new(t).unwrap()
}

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn paper_vector(d: usize) -> GeneratingVector {
    GeneratingVector::new(1 << 8, BASE2_SEQUENCE_VECTOR.to_vec()).unwrap().truncated(d).unwrap()
}

fn f1_paper_sets() -> Vec<LogisticFamily> {
    let mut out = Vec::new();
    for &s in &SIGMAS {
        out.push(LogisticFamily::new(vec![3.0, -3.0], vec![2.0, 2.0], s).unwrap());
        out.push(LogisticFamily::new(vec![1.0, -1.0, 0.0], vec![1.0, 1.0, 1.0], s).unwrap());
    }
    out
}

fn convergence_order() -> Outcome {
    const THRESHOLDS: [f64; 3] = [-0.7, -1.65, -2.5];
    let gv = paper_vector(2);
    let mut pass = true;
    let mut detail = Vec::new();
    for (&sigma, &limit) in SIGMAS.iter().zip(&THRESHOLDS) {
        let spec = IntegrandSpecFile {
            family: TestFamily::Logistic(LogisticFamily::new(vec![3.0, -3.0], vec![2.0, 2.0], sigma).unwrap()),
            decompose: false,
        };
        let records = run_convergence(&spec, &gv, 8, 16).unwrap();
        let fit = fit_slope(&records).unwrap();
        pass &= fit.slope <= limit;
        detail.push(format!("sigma={sigma}: slope {:.3} (<= {limit}), r2 {:.3}", fit.slope, fit.r2));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn exact_values() -> Outcome {
    const TOL: f64 = 1e-10;
    let quad = |f: &dyn ProductIntegrand, j: usize, lo: f64, hi: f64| {
        adaptive_integrate(|x| f.factor(j, 0, x), lo, hi, &f.factor_kinks(j), 0.0, 1e-14)
    };
    let mut worst = 0.0f64;
    for f in f1_paper_sets() {
        let reference: f64 = (0..f.mu().len())
            .map(|j| quad(&f, j, f.mu()[j] - 80.0 * f.s()[j], f.mu()[j] + 80.0 * f.s()[j]))
            .product();
        worst = worst.max((f.exact_integral().unwrap() - reference).abs() / reference.abs());
    }
    for &sigma in &SIGMAS {
        for d in [2, 3] {
            let f = NormalFamily::new(sigma, d).unwrap();
            let reference: f64 = (0..d).map(|j| quad(&f, j, -40.0, 40.0)).product();
            worst = worst.max((f.exact_integral().unwrap() - reference).abs() / reference.abs());
        }
    }
    Outcome { pass: worst <= TOL, detail: format!("max relative deviation {worst:.2e} (<= {TOL:.0e}) over 12 parameter sets") }
}

fn wce_oracles() -> Outcome {
    const TOL_REL: f64 = 1e-6;
    const TOL_ANALYTIC: f64 = 1e-12;
    const HMAX: u64 = 1000;
    let mut failures = Vec::new();
    let mut worst_by_alpha = [0.0f64; 2];
    for alpha in [1u32, 2] {
        for d in [1usize, 2] {
            for m in 0..=6 {
                let n = 1u64 << m;
                let gv = if n == 1 { GeneratingVector::new(1, vec![1; d]).unwrap() } else { cbc_construct(n, d, al(alpha)).unwrap() };
                let closed = wce_korobov_closed_form(&gv, al(alpha)).unwrap();
                let brute = wce_korobov_bruteforce(&gv, al(alpha), HMAX).unwrap();
                let rel = (closed - brute).abs() / closed;
                worst_by_alpha[alpha as usize - 1] = worst_by_alpha[alpha as usize - 1].max(rel);
                if rel > TOL_REL {
                    failures.push(format!("n={n},d={d},alpha={alpha}"));
                }
            }
        }
    }
    let one = wce_korobov_closed_form(&GeneratingVector::new(1, vec![1]).unwrap(), al(1)).unwrap();
    let two = wce_korobov_closed_form(&GeneratingVector::new(2, vec![1]).unwrap(), al(1)).unwrap();
    let analytic = (one - (1.0f64 / 12.0).sqrt()).abs().max((two - (1.0f64 / 48.0).sqrt()).abs());
    Outcome {
        pass: failures.is_empty() && analytic <= TOL_ANALYTIC,
        detail: format!(
            "closed vs brute (hmax={HMAX}) worst rel alpha=1 {:.2e}, alpha=2 {:.2e} (<= {TOL_REL:.0e}); {} of 28 cases fail; analytic n=1,2 deviation {analytic:.1e} (<= {TOL_ANALYTIC:.0e})",
            worst_by_alpha[0],
            worst_by_alpha[1],
            failures.len()
        ),
    }
}

type Poly1 = FnPartials<Box<dyn Fn(&[u32], &[f64]) -> f64 + Sync>>;

/// Polynomial `sum c_k x^k` in one variable with all derivatives.
fn poly(c: Vec<f64>) -> Poly1 {
    FnPartials::new(
        1,
        8,
        Box::new(move |tau: &[u32], x: &[f64]| {
            let k = tau[0] as usize;
            (k..c.len())
                .map(|i| c[i] * (i - k + 1..=i).map(|v| v as f64).product::<f64>() * x[0].powi((i - k) as i32))
                .sum()
        }),
    )
}

fn projection_invariants() -> Outcome {
    const TOL: f64 = 1e-8;
    const TOL_IDEM: f64 = 1e-10;
    const TOL_WORKED: f64 = 1e-12;
    let bd = PeriodizationForm::BoundaryDifference;
    let unit = BoxDomain::unit(1);
    let wide = BoxDomain::new(vec![iv(-1.0, 2.0)]).unwrap();
    let cases: Vec<(&str, Poly1, Vec<BoxDomain>)> = vec![
        ("x", poly(vec![0.0, 1.0]), vec![unit.clone(), wide.clone()]),
        ("x^2", poly(vec![0.0, 0.0, 1.0]), vec![unit.clone(), wide.clone()]),
        ("B~2", poly(vec![1.0 / 6.0, -1.0, 1.0]), vec![unit.clone()]),
    ];
    let rule = GaussLegendre::new(64);
    let (mut e_int, mut e_bnd, mut e_idem, mut e_norm) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    for (_, f, boxes) in &cases {
        for bx in boxes {
            let (lo, hi) = (bx.intervals()[0].a(), bx.intervals()[0].b());
            for alpha in [1, 2] {
                let big_f = |x: f64| periodize_on_box(f, al(alpha), bx, &[x], bd).unwrap();
                let int_f = rule.integrate(lo, hi, |x| f.value(&[x]).unwrap());
                e_int = e_int.max((rule.integrate(lo, hi, big_f) - int_f).abs());
                e_bnd = e_bnd.max((big_f(lo) - big_f(hi)).abs());
                let per = Periodized::new(f, al(alpha), bx.clone()).unwrap();
                for i in 0..=20 {
                    let x = lo + (hi - lo) * i as f64 / 20.0;
                    let twice = periodize_on_box(&per, al(alpha), bx, &[x], bd).unwrap();
                    e_idem = e_idem.max((twice - big_f(x)).abs());
                }
                let nf = sobolev_norm(&per, al(alpha), bx, &[]).unwrap();
                let n0 = sobolev_norm(f, al(alpha), bx, &[]).unwrap();
                e_norm = e_norm.max(nf - n0);
            }
        }
    }
    let mut e_worked = 0.0f64;
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        e_worked = e_worked.max((periodize_on_box(&cases[0].1, al(1), &unit, &[x], bd).unwrap() - 0.5).abs());
        e_worked = e_worked.max((periodize_on_box(&cases[1].1, al(2), &unit, &[x], bd).unwrap() - 1.0 / 3.0).abs());
    }
    let pass = e_int <= TOL && e_bnd <= TOL && e_idem <= TOL_IDEM && e_norm <= TOL && e_worked <= TOL_WORKED;
    Outcome {
        pass,
        detail: format!(
            "integral {e_int:.1e}, boundary {e_bnd:.1e} (<= {TOL:.0e}); idempotence {e_idem:.1e} (<= {TOL_IDEM:.0e}); \
             norm excess {e_norm:.1e} (<= {TOL:.0e}); worked values {e_worked:.1e} (<= {TOL_WORKED:.0e})"
        ),
    }
}

/// `B^{[a,b]}_tau(x) / tau!`.
fn bn(t: u32, i: Interval, x: f64) -> f64 {
    scaled_bernoulli_poly(deg(t), i, x).unwrap() / factorial(t)
}

fn bernoulli_suite() -> Outcome {
    const TOL_INT: f64 = 1e-12;
    const TOL_FD: f64 = 1e-6;
    const FD_STEP: f64 = 1e-5;
    const ULPS: f64 = 8.0;
    let eps = f64::EPSILON;
    let rule = GaussLegendre::new(64);
    let mut rng = StdRng::seed_from_u64(5);
    let mut fails: Vec<String> = Vec::new();
    for i in [iv(0.0, 1.0), iv(-1.0, 1.0), iv(-3.0, 5.0)] {
        let (a, b, len) = (i.a(), i.b(), i.length());
        for t in 1..=8u32 {
            // tolerances are relative to the magnitude bound when that exceeds 1
            let scale = bernoulli_magnitude_bound(deg(t), i).unwrap().max(1.0);
            let integral = rule.integrate(a, b, |x| bn(t, i, x));
            if integral.abs() > TOL_INT * scale * len {
                fails.push(format!("zero-integral t={t} [{a},{b}]"));
            }
            for _ in 0..20 {
                let x = rng.random_range(a + 2.0 * FD_STEP..b - 2.0 * FD_STEP);
                let fd = (bn(t, i, x + FD_STEP) - bn(t, i, x - FD_STEP)) / (2.0 * FD_STEP);
                if (fd - bn(t - 1, i, x)).abs() > TOL_FD * scale {
                    fails.push(format!("derivative t={t} [{a},{b}] x={x}"));
                }
                let s = rng.random_range(0.0..len);
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                if (bn(t, i, a + s) - sign * bn(t, i, b - s)).abs() > ULPS * eps * scale {
                    fails.push(format!("symmetry t={t} [{a},{b}] s={s}"));
                }
                if bn(t, i, x).abs() > bernoulli_magnitude_bound(deg(t), i).unwrap() {
                    fails.push(format!("magnitude t={t} [{a},{b}] x={x}"));
                }
                if t >= 2 {
                    // dyadic points keep x + k(b - a) exact
                    let xd = a + (rng.random_range(0..64) as f64) * len / 64.0;
                    let base = periodic_scaled_bernoulli_poly(deg(t), i, xd).unwrap();
                    for k in [-3.0, -1.0, 1.0, 4.0] {
                        let shifted = periodic_scaled_bernoulli_poly(deg(t), i, xd + k * len).unwrap();
                        if (shifted - base).abs() > ULPS * eps * scale * factorial(t) {
                            fails.push(format!("periodicity t={t} [{a},{b}] x={xd} k={k}"));
                        }
                    }
                }
            }
        }
    }
    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            "zero-integral, derivative chain, symmetry, periodicity, magnitude: all hold for tau <= 8 on [0,1], [-1,1], [-3,5]".into()
        } else {
            format!("{} violations, first: {}", fails.len(), fails[0])
        },
    }
}

fn min_eigenvalue(points: &[Vec<f64>], k: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let g = DMatrix::from_fn(points.len(), points.len(), |r, c| k(&points[r], &points[c]));
    g.symmetric_eigenvalues().min()
}

fn kernel_validity() -> Outcome {
    const TOL_REPRO: f64 = 1e-8;
    const ULPS: f64 = 8.0;
    const TOL_PSD: f64 = -1e-10;
    let unit = BoxDomain::unit(1);
    let x_fn = poly(vec![0.0, 1.0]);
    let b2 = poly(vec![1.0 / 6.0, -1.0, 1.0]);
    let mut e_repro = 0.0f64;
    for i in 1..=9 {
        let y = i as f64 / 10.0;
        // Sobolev kernel reproduces f(x) = x; the Korobov kernel reproduces the
        // periodic B~2 and projects x onto its periodization, the constant 1/2
        let sob = KernelSection::new(KernelKind::Sobolev, al(1), unit.clone(), vec![y]).unwrap();
        let kor = KernelSection::new(KernelKind::Korobov, al(1), unit.clone(), vec![y]).unwrap();
        let br = [vec![y]];
        e_repro = e_repro.max((sobolev_inner_product(&x_fn, &sob, al(1), &unit, &br).unwrap() - y).abs());
        e_repro = e_repro.max((sobolev_inner_product(&b2, &kor, al(1), &unit, &br).unwrap() - b2.value(&[y]).unwrap()).abs());
        e_repro = e_repro.max((sobolev_inner_product(&x_fn, &kor, al(1), &unit, &br).unwrap() - 0.5).abs());
    }
    let mut rng = StdRng::seed_from_u64(6);
    let mut e_box = 0.0f64;
    let unit2 = BoxDomain::unit(2);
    for _ in 0..200 {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let y = [rng.random::<f64>(), rng.random::<f64>()];
        for a in 1..=3 {
            for (bv, cv) in [
                (korobov_kernel_box(al(a), &unit2, &x, &y).unwrap(), korobov_kernel_cube(al(a), &x, &y).unwrap()),
                (sobolev_kernel_box(al(a), &unit2, &x, &y).unwrap(), sobolev_kernel_cube(al(a), &x, &y).unwrap()),
            ] {
                e_box = e_box.max((bv - cv).abs() / (f64::EPSILON * cv.abs()));
            }
        }
    }
    let mut min_eig = f64::INFINITY;
    let boxes = [unit2.clone(), BoxDomain::symmetric(2.0, 2).unwrap()];
    for bx in &boxes {
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|_| bx.intervals().iter().map(|i| rng.random_range(i.a()..i.b())).collect())
            .collect();
        for a in 1..=3 {
            min_eig = min_eig.min(min_eigenvalue(&pts, |x, y| korobov_kernel_box(al(a), bx, x, y).unwrap()));
            min_eig = min_eig.min(min_eigenvalue(&pts, |x, y| sobolev_kernel_box(al(a), bx, x, y).unwrap()));
        }
    }
    Outcome {
        pass: e_repro <= TOL_REPRO && e_box <= ULPS && min_eig >= TOL_PSD,
        detail: format!(
            "reproducing {e_repro:.1e} (<= {TOL_REPRO:.0e}); box vs cube {e_box:.1} ulp (<= {ULPS}); min Gram eigenvalue {min_eig:.2e} (>= {TOL_PSD:.0e})"
        ),
    }
}

fn baseline_sanity() -> Outcome {
    const TOL_GH: f64 = 1e-14;
    let gh2 = gauss_hermite_1d(2).unwrap().apply(|x| x * x);
    let e_gh = (gh2 - PI.sqrt() / 2.0).abs();
    let g = |x: &[f64]| (1.0 + x[0].abs().powf(1.6)) * (0.3 * x[0]).cos();
    let mut smolyak_equal = true;
    for level in 0..=7 {
        let tensor = tensor_quadrature(&gauss_hermite_level(level).unwrap(), 1, g).unwrap();
        smolyak_equal &= smolyak_quadrature(level, 1, g).unwrap() == tensor;
    }
    let f2 = NormalFamily::new(1.6, 2).unwrap();
    let exact = f2.exact_integral().unwrap();
    let gv = paper_vector(2).with_n(1 << 14).unwrap();
    let lat = (integrate(&f2, &gv).unwrap().estimate - exact).abs() / exact;
    let (gh_est, evals) = run_baseline(BaselineMethod::GhTensor, 7, &TestFamily::Normal(f2)).unwrap();
    let gh = (gh_est - exact).abs() / exact;
    Outcome {
        pass: e_gh <= TOL_GH && smolyak_equal && lat < gh,
        detail: format!(
            "2-point GH error {e_gh:.1e} (<= {TOL_GH:.0e}); Smolyak == tensor at d=1: {smolyak_equal}; \
             f2 sigma=1.6 d=2: lattice n=16384 rel {lat:.2e} vs GH {evals} points rel {gh:.2e}"
        ),
    }
}

fn bound_formulas() -> Outcome {
    const TOL: f64 = 1e-12;
    let exp1 = DecayCondition::exponential(1.0, 2.0, 1.0).unwrap();
    let e_trunc = (truncation_bound(&exp1, 1.0, al(1), 1, 1.0).unwrap() - 2.0 / 1f64.exp()).abs();
    let e_proj = (projection_error_bound(&exp1, 1.0, al(2), &BoxDomain::symmetric(3.0, 2).unwrap()).unwrap()
        - 9.0 * 36.0 * (-3.0f64).exp())
    .abs();
    // f2 has no finite sup norm at its own rate beta = 1/2; use beta = 1/4
    let decay = DecayCondition::exponential(0.25, 2.0, 2.0).unwrap();
    let mut worst_trunc = 0.0f64;
    let mut worst_proj = 0.0f64;
    for &sigma in &SIGMAS {
        for d in [1, 2] {
            let f = NormalFamily::new(sigma, d).unwrap();
            let alpha = f.smoothness();
            let norm = separable_decay_sup(&f, &decay, alpha.get() - 1, 30.0, 6001).unwrap();
            for a in [2.0, 3.0, 4.0] {
                let bx = BoxDomain::symmetric(a, d).unwrap();
                let measured = (f.exact_integral().unwrap() - box_integral(&f, &bx).unwrap()).abs();
                let bound = truncation_bound(&decay, norm, alpha, d, a).unwrap();
                worst_trunc = worst_trunc.max(measured / bound);
                let pb = projection_error_bound(&decay, norm, alpha, &bx).unwrap();
                let k = 12;
                for idx in 0..(k + 1usize).pow(d as u32) {
                    let x: Vec<f64> = (0..d)
                        .map(|j| -a + 2.0 * a * ((idx / (k + 1).pow(j as u32)) % (k + 1)) as f64 / k as f64)
                        .collect();
                    let big_f = periodize_on_box(&f, alpha, &bx, &x, PeriodizationForm::BoundaryDifference).unwrap();
                    worst_proj = worst_proj.max((big_f - f.eval(&x)).abs() / pb);
                }
            }
        }
    }
    Outcome {
        pass: e_trunc <= TOL && e_proj <= TOL && worst_trunc <= 1.0 && worst_proj <= 1.0,
        detail: format!(
            "2/e deviation {e_trunc:.1e}, 9*36*e^-3 deviation {e_proj:.1e} (<= {TOL:.0e}); \
             f2 measured/bound max: truncation {worst_trunc:.2e}, projection {worst_proj:.2e} (<= 1)"
        ),
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("convergence order", convergence_order),
        ("exact-value reproduction", exact_values),
        ("worst-case-error oracle equivalence", wce_oracles),
        ("projection invariants", projection_invariants),
        ("Bernoulli identities", bernoulli_suite),
        ("kernel validity", kernel_validity),
        ("baseline sanity", baseline_sanity),
        ("bound formulas", bound_formulas),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        report(i as u32 + 1, name, &o);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

//! Acceptance criteria for the Fibonacci scheme and its Borel decorations.
//!
//! Each test prints one `[PASS]`/`[FAIL]` line per criterion; run with
//! `cargo test -p cutproject --test acceptance -- --nocapture --test-threads=1`
//! to see them.

use std::time::{Duration, Instant};

use cutproject::averaging::{
    autocorrelation_estimate, birkhoff_product_average, convergence_scan, density_estimate,
    fourier_bohr_estimate, FourierBohrEstimate, Kernel, KernelShape, ScanOp,
};
use cutproject::diffraction::{
    cpp_check, fourier_bohr_at, predicted_autocorrelation, predicted_diffraction,
    predicted_fourier_bohr, DualMatch,
};
use cutproject::modelset::{cut_project, decompose, make_borel_counterexample, GammaRule};
use cutproject::oracle::{scan_lattice, scan_peaks};
use cutproject::torus::{fundamental_domain_draw, recover_parameters, verify_inclusion};
use cutproject::window::{covariogram, measure, sandwich};
use cutproject::{
    dual_cps, enumerate_lattice, lattice_density, Aabb, Complex64, Cps, Patch, Window, TAU,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DENSITY_TOL: f64 = 1e-2;
const AUTOCORR_TOL: f64 = 5e-3;
const CPP_TOL: f64 = 2e-2;
const NON_DUAL_TOL: f64 = 1e-2;
const BIRKHOFF_TOL: f64 = 2e-2;

const DRAW_SEED: u64 = 20_240_601;

fn report(id: &str, ok: bool, detail: String) {
    println!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{id} failed: {detail}");
}

fn generic_draw(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fundamental_domain_draw(&Cps::fibonacci(), &mut rng)
}

fn patch(w: &Window, s: &[f64], t: &[f64], r: f64) -> Patch {
    cut_project(&Cps::fibonacci(), w, s, t, &Aabb::interval(-r, r)).unwrap()
}

fn in_k_range(k: &[f64]) -> bool {
    (0.0..=5.0).contains(&k[0])
}

#[test]
fn c1_density_law() {
    let start = Instant::now();
    let (s, t) = generic_draw(DRAW_SEED);
    let w = Window::fibonacci();
    let patches: Vec<Patch> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&r| patch(&w, &s, &t, r))
        .collect();
    let predicted = TAU / 5f64.sqrt();
    let table =
        convergence_scan(&ScanOp::Density, &patches, Complex64::new(predicted, 0.0)).unwrap();
    let errs: Vec<f64> = table.rows.iter().map(|r| r.abs_error).collect();
    let elapsed = start.elapsed();
    let ok = errs[2] < DENSITY_TOL
        && table.error_tail_non_increasing
        && elapsed < Duration::from_secs(5);
    report(
        "C1 density law",
        ok,
        format!(
            "errors at R=1e2,1e3,1e4: {:.3e} {:.3e} {:.3e}; {elapsed:?}",
            errs[0], errs[1], errs[2]
        ),
    );
}

#[test]
fn c2_autocorrelation() {
    let start = Instant::now();
    let cps = Cps::fibonacci();
    let w = Window::fibonacci();
    let (s, t) = generic_draw(DRAW_SEED);
    let p = patch(&w, &s, &t, 1e4);
    let emp = autocorrelation_estimate(&p, &cps, 10.0).unwrap();
    let pred = predicted_autocorrelation(&cps, &w, 10.0).unwrap();
    let mut keys: Vec<&Vec<i64>> = emp.coefficients.keys().chain(pred.keys()).collect();
    keys.sort();
    keys.dedup();
    let worst = keys
        .iter()
        .map(|n| (emp.value(n) - pred.get(*n).map_or(0.0, |c| c.value)).abs())
        .fold(0.0, f64::max);
    // the covariogram oracle at z = 1: θ([−1, τ−1) ∩ [0, τ)) = τ − 1
    let z1 = pred[&vec![1, 0]].value;
    let elapsed = start.elapsed();
    let ok = worst < AUTOCORR_TOL
        && (z1 - (TAU - 1.0) / 5f64.sqrt()).abs() < 1e-12
        && keys.len() > 5
        && elapsed < Duration::from_secs(30);
    report(
        "C2 autocorrelation",
        ok,
        format!(
            "{} differences, max |η − dens·c| = {worst:.3e}; {elapsed:?}",
            keys.len()
        ),
    );
}

#[test]
fn c3_diffraction_and_cpp() {
    let cps = Cps::fibonacci();
    let w = Window::fibonacci();
    let (s, t) = generic_draw(DRAW_SEED);
    let p = patch(&w, &s, &t, 1e4);
    let spectrum = predicted_diffraction(&cps, &w, 5.0, 1e-3).unwrap();
    let top = spectrum.strongest(5, |pk| in_k_range(&pk.k));
    assert_eq!(top.len(), 5);

    let mut worst_cpp: f64 = 0.0;
    let mut worst_phase: f64 = 0.0;
    let mut fbs = Vec::new();
    for pk in &top {
        let a = fourier_bohr_estimate(&p, &pk.k).unwrap();
        worst_cpp = worst_cpp.max((a.value.norm_sqr() - pk.intensity).abs());
        let predicted =
            predicted_fourier_bohr(&cps, &w, &s, &t, &pk.k, &DualMatch::default()).unwrap();
        worst_phase = worst_phase.max((a.value - predicted).norm());
        fbs.push(a);
    }
    let sub = cutproject::diffraction::DiffractionSpectrum {
        peaks: top.iter().map(|p| (*p).clone()).collect(),
        ..spectrum.clone()
    };
    let cpp = cpp_check(&sub, &fbs, CPP_TOL).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(DRAW_SEED + 3);
    let mut worst_non_dual: f64 = 0.0;
    for _ in 0..5 {
        let k = vec![rng.gen_range(0.0..5.0)];
        let pred = predicted_fourier_bohr(&cps, &w, &s, &t, &k, &DualMatch::default()).unwrap();
        assert_eq!(
            pred,
            Complex64::new(0.0, 0.0),
            "draw {k:?} hit a dual point"
        );
        worst_non_dual = worst_non_dual.max(fourier_bohr_estimate(&p, &k).unwrap().value.norm());
    }

    let oracle = scan_peaks(&cps, &w, 5.0, 1e-3, 50);
    let same_list = oracle == spectrum.peaks;

    let ok = cpp.all_pass()
        && worst_cpp < CPP_TOL
        && worst_phase < CPP_TOL
        && worst_non_dual < NON_DUAL_TOL
        && same_list;
    report(
        "C3 diffraction + CPP",
        ok,
        format!(
            "top-5 max ||a|²−I| = {worst_cpp:.3e}, max |a−a_pred| = {worst_phase:.3e}, \
             non-dual max |a| = {worst_non_dual:.3e}, {} peaks == oracle: {same_list}",
            spectrum.peaks.len()
        ),
    );
}

#[test]
fn c4_translation_and_decomposition() {
    let cps = Cps::fibonacci();
    let w = Window::fibonacci();
    let region = Aabb::interval(-1e3, 1e3);
    let base = cut_project(&cps, &w, &[0.0], &[0.0], &region).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(DRAW_SEED + 4);
    let mut translates_ok = true;
    for _ in 0..10 {
        let u = vec![rng.gen_range(-40i64..=40), rng.gen_range(-40i64..=40)];
        let lp = cps.point(&u);
        // −λ + Λ(λ⋆ + W) = Λ(W)
        let a = cut_project(&cps, &w, &lp.x, &lp.x_star, &region).unwrap();
        let same_points = a
            .points
            .iter()
            .map(|p| &p.x)
            .eq(base.points.iter().map(|p| &p.x));
        // Λ(λ⋆ + W) = λ + Λ(W), compared on integer coordinates
        let b = cut_project(&cps, &w, &[0.0], &lp.x_star, &region.translate(&lp.x)).unwrap();
        let shifted: Vec<Vec<i64>> = base
            .coordinate_set()
            .into_iter()
            .map(|n| vec![n[0] + u[0], n[1] + u[1]])
            .collect();
        translates_ok &= same_points && b.coordinate_set() == shifted;
    }

    let u = Window::interval(1e-9, 0.3);
    let (rest, inner) = decompose(&cps, &w, &u, &region).unwrap();
    let mut union: Vec<Vec<i64>> = rest.coordinate_set();
    union.extend(inner.coordinate_set());
    union.sort();
    let disjoint = union.windows(2).all(|p| p[0] != p[1]);
    let partition_ok =
        disjoint && union == base.coordinate_set() && !inner.is_empty() && !rest.is_empty();

    report(
        "C4 translation identities",
        translates_ok && partition_ok,
        format!(
            "10 lattice translates exact: {translates_ok}; Λ(K) = Λ(K∖U) ⊔ Λ(U): {partition_ok}"
        ),
    );
}

#[test]
fn c5_borel_counterexample() {
    let cps = Cps::fibonacci();
    let w = Window::fibonacci();
    let dens = lattice_density(&cps);
    let p_keep = 0.5;
    let a = TAU / 2.0;
    let r = 1e4;
    let ex = make_borel_counterexample(
        &cps,
        &w,
        &GammaRule::Bernoulli {
            p: p_keep,
            seed: DRAW_SEED,
        },
        a,
        &Aabb::interval(-r, r),
        20.0,
    )
    .unwrap();
    let b = &ex.window;

    // t = 0: the cut reproduces Γ
    let at_zero = patch(b, &[0.0], &[0.0], r);
    let reproduces = at_zero.coordinate_set() == ex.gamma.coordinate_set();
    let rho = density_estimate(&at_zero).unwrap();
    let thinned_ok = (rho - p_keep * dens * TAU).abs() < DENSITY_TOL;
    let measure_ok = (measure(b) - a).abs() < 1e-15;
    // Γ sits in the density class of B_a, which is the point of the construction
    let density_class_ok = (rho - dens * measure(b)).abs() < DENSITY_TOL;

    // expected failure: L¹ autocorrelation prediction at t = 0
    let emp = autocorrelation_estimate(&at_zero, &cps, 10.0).unwrap();
    let pred = predicted_autocorrelation(&cps, b, 10.0).unwrap();
    let mut keys: Vec<&Vec<i64>> = emp.coefficients.keys().chain(pred.keys()).collect();
    keys.sort();
    keys.dedup();
    let autocorr_gap = keys
        .iter()
        .map(|n| (emp.value(n) - pred.get(*n).map_or(0.0, |c| c.value)).abs())
        .fold(0.0, f64::max);
    let autocorr_expected_fail = autocorr_gap > 3.0 * AUTOCORR_TOL;

    // expected failure: CPP against the L¹ spectrum at t = 0, over every
    // listed peak with k in [0, 5]
    let spectrum = predicted_diffraction(&cps, b, 5.0, 1e-3).unwrap();
    let listed: Vec<_> = spectrum
        .peaks
        .iter()
        .filter(|pk| in_k_range(&pk.k))
        .cloned()
        .collect();
    let top: Vec<_> = spectrum
        .strongest(5, |pk| in_k_range(&pk.k))
        .into_iter()
        .cloned()
        .collect();
    let fbs: Vec<FourierBohrEstimate> = listed
        .iter()
        .map(|pk| fourier_bohr_estimate(&at_zero, &pk.k).unwrap())
        .collect();
    let sub = cutproject::diffraction::DiffractionSpectrum {
        peaks: listed.clone(),
        ..spectrum.clone()
    };
    let cpp = cpp_check(&sub, &fbs, CPP_TOL).unwrap();
    let cpp_expected_fail = cpp.failures().count() >= 1;

    // generic t: B_a behaves as its L¹ class, criteria 1–3 hold
    let (s, t) = generic_draw(DRAW_SEED + 5);
    let k_window = Window::from_boxes(1, vec![ex.cube.clone()]).unwrap();
    let gen: Vec<Patch> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&rr| patch(b, &s, &t, rr))
        .collect();
    let same_as_cube = gen[2].coordinate_set() == patch(&k_window, &s, &t, r).coordinate_set();
    let table = convergence_scan(&ScanOp::Density, &gen, Complex64::new(dens * a, 0.0)).unwrap();
    let gen_density_ok =
        table.final_error().unwrap() < DENSITY_TOL && table.error_tail_non_increasing;
    let gen_emp = autocorrelation_estimate(&gen[2], &cps, 10.0).unwrap();
    let gen_auto = keys_max_gap(&gen_emp, &pred);
    let mut gen_cpp_worst: f64 = 0.0;
    let mut gen_non_dual: f64 = 0.0;
    for pk in &top {
        let a_emp = fourier_bohr_estimate(&gen[2], &pk.k).unwrap();
        gen_cpp_worst = gen_cpp_worst.max((a_emp.value.norm_sqr() - pk.intensity).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DRAW_SEED + 6);
    for _ in 0..5 {
        let k = vec![rng.gen_range(0.0..5.0)];
        gen_non_dual = gen_non_dual.max(fourier_bohr_estimate(&gen[2], &k).unwrap().value.norm());
    }
    let generic_ok = same_as_cube
        && gen_density_ok
        && gen_auto < AUTOCORR_TOL
        && gen_cpp_worst < CPP_TOL
        && gen_non_dual < NON_DUAL_TOL;

    let ok = reproduces
        && thinned_ok
        && measure_ok
        && density_class_ok
        && autocorr_expected_fail
        && cpp_expected_fail
        && generic_ok;
    report(
        "C5 Borel counterexample",
        ok,
        format!(
            "t=0: Γ reproduced {reproduces}, dens {rho:.5} vs p·dens(L)·τ {:.5}; \
             expected-fail autocorr gap {autocorr_gap:.3e} (> {:.1e}), CPP failures {}; \
             generic t: density err {:.2e}, autocorr {gen_auto:.2e}, CPP {gen_cpp_worst:.2e}, non-dual {gen_non_dual:.2e}",
            p_keep * dens * TAU,
            3.0 * AUTOCORR_TOL,
            cpp.failures().count(),
            table.final_error().unwrap(),
        ),
    );
}

fn keys_max_gap(
    emp: &cutproject::averaging::AutocorrelationEstimate,
    pred: &std::collections::BTreeMap<Vec<i64>, cutproject::diffraction::LatticeCoefficient>,
) -> f64 {
    emp.coefficients
        .keys()
        .chain(pred.keys())
        .map(|n| (emp.value(n) - pred.get(n).map_or(0.0, |c| c.value)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn c6_null_decoration_neutrality() {
    let cps = Cps::fibonacci();
    let w = Window::fibonacci();
    let decorated = w
        .with_overrides(vec![vec![3.0], vec![-2.5]], vec![vec![0.1], vec![-0.5]])
        .unwrap();
    let same = measure(&w) == measure(&decorated)
        && (0..50).all(|i| {
            let t = [i as f64 * 0.07 - 1.7];
            covariogram(&w, &t) == covariogram(&decorated, &t)
        })
        && predicted_autocorrelation(&cps, &w, 10.0).unwrap()
            == predicted_autocorrelation(&cps, &decorated, 10.0).unwrap()
        && predicted_diffraction(&cps, &w, 5.0, 1e-4).unwrap()
            == predicted_diffraction(&cps, &decorated, 5.0, 1e-4).unwrap()
        && (1..20).all(|n| {
            sandwich(&w, n).inner.geometric() == sandwich(&decorated, n).inner.geometric()
                && sandwich(&w, n).outer.geometric() == sandwich(&decorated, n).outer.geometric()
        })
        && predicted_diffraction(&cps, &w, 5.0, 1e-3)
            .unwrap()
            .peaks
            .iter()
            .all(|pk| {
                let opts = DualMatch::default();
                predicted_fourier_bohr(&cps, &w, &[0.3], &[0.1], &pk.k, &opts).unwrap()
                    == predicted_fourier_bohr(&cps, &decorated, &[0.3], &[0.1], &pk.k, &opts)
                        .unwrap()
                    && fourier_bohr_at(&cps, &w, &[0.0], &[0.0], &pk.k, &pk.l)
                        == fourier_bohr_at(&cps, &decorated, &[0.0], &[0.0], &pk.k, &pk.l)
            });
    report(
        "C6 null-decoration neutrality",
        same,
        "measure, covariogram, sandwich, autocorrelation, spectrum, Fourier–Bohr bitwise equal"
            .into(),
    );
}

#[test]
fn c7_torus_round_trip() {
    let cps = Cps::fibonacci();
    let w = Window::fibonacci();
    let mut rng = ChaCha8Rng::seed_from_u64(DRAW_SEED + 7);
    let mut ok_count = 0;
    let mut widths_ok = true;
    let mut worst_width: f64 = 0.0;
    for _ in 0..20 {
        let (s0, t0) = fundamental_domain_draw(&cps, &mut rng);
        let fine = patch(&w, &s0, &t0, 1e3);
        let coarse = patch(&w, &s0, &t0, 1e2);
        let tp = recover_parameters(&fine, &cps, &w).unwrap();
        let tp_coarse = recover_parameters(&coarse, &cps, &w).unwrap();
        let contains = tp.contains_class(&cps, &s0, &t0).unwrap();
        let verified = tp.verified && verify_inclusion(&fine, &cps, &w, &tp.s, &tp.t).unwrap();
        if contains && verified {
            ok_count += 1;
        }
        widths_ok &= tp.max_width() <= tp_coarse.max_width();
        worst_width = worst_width.max(tp.max_width());
    }
    report(
        "C7 torus round-trip",
        ok_count == 20 && widths_ok,
        format!("{ok_count}/20 recovered and verified; width(1e3) ≤ width(1e2): {widths_ok}; max width {worst_width:.2e}"),
    );
}

#[test]
fn c8_genericity_probe() {
    let kernels = vec![
        Kernel {
            center: vec![0.0],
            halfwidth: 0.4,
            shape: KernelShape::Box,
        },
        Kernel {
            center: vec![1.0],
            halfwidth: 0.3,
            shape: KernelShape::Triangle,
        },
        Kernel {
            center: vec![1.0 + TAU],
            halfwidth: 0.3,
            shape: KernelShape::Triangle,
        },
    ];
    let step = 0.3 / 8.0;
    let w = Window::fibonacci();
    let (s1, t1) = generic_draw(DRAW_SEED + 8);
    let (s2, t2) = generic_draw(DRAW_SEED + 9);
    let a1 = birkhoff_product_average(&patch(&w, &s1, &t1, 1e4), &kernels, step).unwrap();
    let a2 = birkhoff_product_average(&patch(&w, &s2, &t2, 1e4), &kernels, step).unwrap();
    let ok = (a1 - a2).abs() < BIRKHOFF_TOL && a1 > 0.01;
    report(
        "C8 genericity probe",
        ok,
        format!(
            "Birkhoff averages {a1:.5} vs {a2:.5}, |Δ| = {:.2e}",
            (a1 - a2).abs()
        ),
    );
}

#[test]
fn c9_enumeration_oracles() {
    let cps = Cps::fibonacci();
    let dual = dual_cps(&cps).unwrap();
    let boxes = [
        (Aabb::interval(-5.0, 5.0), Aabb::interval(-10.0, 10.0)),
        (Aabb::interval(-40.0, 37.5), Aabb::interval(-1.0, TAU - 1.0)),
        (Aabb::interval(3.0, 3.5), Aabb::interval(-50.0, 50.0)),
        (Aabb::interval(-60.0, 60.0), Aabb::interval(-2.0, -1.0)),
    ];
    let mut ok = true;
    let mut total = 0;
    for (phys, int) in &boxes {
        let fast = enumerate_lattice(&cps, phys, int, 100_000).unwrap();
        let brute = scan_lattice(cps.lattice(), phys, int, 150);
        ok &= fast == brute;
        let fast_dual = dual.lattice().enumerate(phys, int, 100_000).unwrap();
        let brute_dual = scan_lattice(dual.lattice(), phys, int, 150);
        ok &= fast_dual == brute_dual;
        total += fast.len() + fast_dual.len();
    }
    report(
        "C9 enumeration oracles",
        ok,
        format!(
            "{} boxes, {total} points, lattice and dual equal to integer-cube scans",
            boxes.len()
        ),
    );
}

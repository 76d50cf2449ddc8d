mod common;

use common::*;
use phasefit_core::dataio::{Dataset, GroupedDataset};
use phasefit_core::fit::*;
use phasefit_core::matfun::Matrix;
use phasefit_core::ocp::OneCutPointPhaseType;
use phasefit_core::phd::{ErlangBranch, PhaseType, StructureKind, StructureSpec};
use phasefit_core::Lifetime;

fn classical(r: &FitResult) -> &PhaseType {
    match &r.model {
        FittedModel::Classical(p) => p,
        FittedModel::OneCutPoint(_) => panic!("expected a classical model"),
    }
}

fn ocp_rates(r: &FitResult) -> (f64, f64) {
    match &r.model {
        FittedModel::OneCutPoint(o) => (-o.t1()[(0, 0)], -o.t2()[(0, 0)]),
        FittedModel::Classical(_) => panic!("expected a cut-point model"),
    }
}

fn draws(model: &impl Lifetime, n: usize, seed: u64) -> Dataset {
    Dataset::new(model.sample(n, seed).unwrap()).unwrap()
}

fn exp_data(n: usize, seed: u64) -> Dataset {
    draws(&StructureSpec::Exponential { rate: 1.0 }.build().unwrap(), n, seed)
}

fn assert_ascent(r: &FitResult) {
    for w in r.loglik_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-9, "trace dropped from {} to {}", w[0], w[1]);
    }
}

#[test]
fn erlang_recovers_generating_rate() {
    let d = draws(&StructureSpec::Erlang { states: 2, rate: 1.0 }.build().unwrap(), 10_000, 1);
    let r = em_fit_point(&d, StructureKind::Erlang, 2, &FitOptions::default()).unwrap();
    let rate = -classical(&r).subgen()[(0, 0)];
    assert!((0.97..=1.03).contains(&rate), "{rate}");
}

#[test]
fn exponential_fit_is_closed_form() {
    let d = exp_data(500, 3);
    let r = em_fit_point(&d, StructureKind::Erlang, 1, &FitOptions::default()).unwrap();
    let rate = -classical(&r).subgen()[(0, 0)];
    let mle = d.len() as f64 / d.values().iter().sum::<f64>();
    assert!((rate - mle).abs() <= 1e-10 * mle);
}

#[test]
fn grouped_exponential() {
    let d = exp_data(10_000, 4);
    let g = GroupedDataset::equal_width(&d, 50, 8.0).unwrap();
    let opts = FitOptions::default();
    let e1 = em_fit_group(&g, StructureKind::Erlang, 1, &opts).unwrap();
    let rate = -classical(&e1).subgen()[(0, 0)];
    assert!((0.95..=1.05).contains(&rate), "{rate}");
    assert_ascent(&e1);
    let e2 = em_fit_group(&g, StructureKind::Erlang, 2, &opts).unwrap();
    let g2 = em_fit_group(&g, StructureKind::General, 2, &opts).unwrap();
    assert!(e2.loglik <= g2.loglik + 1e-6);
    assert_ascent(&g2);
    assert_eq!(e2.method, FitMethod::Group);
}

#[test]
fn grouped_without_truncation_and_hyper_erlang() {
    let d = exp_data(2_000, 5);
    let g = GroupedDataset::from_dataset(&d, vec![0.0, 0.25, 0.5, 1.0, 2.0, f64::INFINITY]).unwrap();
    let opts = FitOptions { restarts: 2, ..FitOptions::default() };
    for s in [StructureKind::Cf1, StructureKind::HyperErlang] {
        let r = em_fit_group(&g, s, 2, &opts).unwrap();
        assert_ascent(&r);
        assert_eq!(r.structure(), s);
    }
}

#[test]
fn density_targets() {
    let opts = FitOptions::default();
    let exp = |x: f64| (-x).exp();
    let r = fit_density(&exp, 20.0, 64, StructureKind::Erlang, 1, &opts).unwrap();
    assert!((-classical(&r).subgen()[(0, 0)] - 1.0).abs() < 1e-3);
    assert_eq!(r.method, FitMethod::Density);

    let erl3 = |x: f64| 8.0 * x * x * (-2.0 * x).exp() / 2.0;
    let r = fit_density(&erl3, 20.0, 64, StructureKind::Erlang, 3, &opts).unwrap();
    assert!((-classical(&r).subgen()[(0, 0)] - 2.0).abs() < 1e-3);
}

#[test]
fn density_weibull_general_eight_states() {
    let (k, s) = (3.0f64, 0.5f64);
    let pdf = |x: f64| k / s * (x / s).powf(k - 1.0) * (-(x / s).powf(k)).exp();
    let cdf = |x: f64| 1.0 - (-(x / s).powf(k)).exp();
    let r = fit_density(&pdf, 1.5, 64, StructureKind::General, 8, &FitOptions::default()).unwrap();
    assert_ascent(&r);
    let ph = classical(&r);
    let ks = (0..=3000)
        .map(|i| i as f64 * 1.5 / 3000.0)
        .map(|x| (ph.cdf(x).unwrap() - cdf(x)).abs())
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS = {ks}");
}

#[test]
fn ocp_on_homogeneous_data() {
    let n = 10_000;
    let d = exp_data(n, 6);
    let a = 1.0;
    let r = fit_ocp(&d, 1, a, &FitOptions::default()).unwrap();
    let (l1, l2) = ocp_rates(&r);
    let d1 = d.values().iter().filter(|&&y| y <= a).count() as f64;
    let d2 = n as f64 - d1;
    assert!((l1 - 1.0).abs() < 3.0 / d1.sqrt(), "{l1}");
    assert!((l2 - 1.0).abs() < 3.0 / d2.sqrt(), "{l2}");
    assert_eq!(r.n_params, 2);
    assert!((r.aic - aic(r.loglik, 2)).abs() < 1e-12);
}

#[test]
fn ocp_detects_faster_second_zone() {
    let truth = OneCutPointPhaseType::erlang(2, 1.0, 3.0, 2.0).unwrap();
    let d = draws(&truth, 3_000, 7);
    let r = fit_ocp(&d, 2, 2.0, &FitOptions::default()).unwrap();
    let (l1, l2) = ocp_rates(&r);
    assert!(l2 > l1, "{l1} {l2}");
    assert!(r.converged);
}

#[test]
fn em_ascent_on_random_instances() {
    let opts = FitOptions { restarts: 1, max_iter: 300, ..FitOptions::default() };
    let structures = [StructureKind::General, StructureKind::Cf1, StructureKind::HyperErlang, StructureKind::Erlang];
    for case in 0..12u64 {
        let mut r = rng(case);
        let m = 1 + (case as usize % 4);
        let t = random_subgenerator(&mut r, m, 1.0);
        let truth = PhaseType::new(random_alpha(&mut r, m), t).unwrap();
        let d = draws(&truth, 300, case);
        let s = structures[case as usize % 4];
        let fit = em_fit_point(&d, s, m + 1, &FitOptions { seed: case, ..opts }).unwrap();
        assert_ascent(&fit);
        assert_eq!(fit.loglik, *fit.loglik_trace.last().unwrap());
        assert!((fit.loglik - loglik(&fit.model, &d)).abs() < 1e-9 * fit.loglik.abs().max(1.0));
    }
}

#[test]
fn converged_fits_are_fixed_points() {
    let d = draws(&StructureSpec::Erlang { states: 3, rate: 2.0 }.build().unwrap(), 400, 8);
    let opts = FitOptions { restarts: 2, ..FitOptions::default() };
    for s in [StructureKind::General, StructureKind::Cf1, StructureKind::Erlang, StructureKind::HyperErlang] {
        let r = em_fit_point(&d, s, 3, &opts).unwrap();
        assert!(r.converged, "{s}");
        let next = em_step_point(classical(&r), &d).unwrap();
        assert!((next - r.loglik).abs() < opts.rel_tol * r.loglik.abs(), "{s}: {next} vs {}", r.loglik);
    }
}

#[test]
fn structures_are_preserved() {
    let d = draws(&StructureSpec::Erlang { states: 2, rate: 1.5 }.build().unwrap(), 400, 9);
    let opts = FitOptions { restarts: 2, ..FitOptions::default() };

    let g = em_fit_point(&d, StructureKind::General, 3, &opts).unwrap();
    let p = classical(&g);
    assert_eq!(g.n_params, 11);
    PhaseType::new(p.alpha().to_vec(), p.subgen().clone()).unwrap();

    let c = em_fit_point(&d, StructureKind::Cf1, 4, &opts).unwrap();
    let p = classical(&c);
    let rates: Vec<f64> = (0..4).map(|i| -p.subgen()[(i, i)]).collect();
    assert!(rates.windows(2).all(|w| w[0] <= w[1]));
    for i in 0..4 {
        for j in 0..4 {
            if j != i && j != i + 1 {
                assert_eq!(p.subgen()[(i, j)], 0.0);
            }
        }
    }
    assert_eq!(c.n_params, 7);

    let e = em_fit_point(&d, StructureKind::Erlang, 3, &opts).unwrap();
    let p = classical(&e);
    assert_eq!(p.alpha(), &[1.0, 0.0, 0.0]);
    assert!((0..3).all(|i| p.subgen()[(i, i)] == p.subgen()[(0, 0)]));
    assert_eq!(e.n_params, 1);
}

#[test]
fn hyper_erlang_finds_branch_shapes() {
    let truth = StructureSpec::HyperErlang {
        branches: vec![
            ErlangBranch { weight: 0.4, shape: 1, rate: 1.0 },
            ErlangBranch { weight: 0.6, shape: 3, rate: 6.0 },
        ],
    }
    .build()
    .unwrap();
    let d = draws(&truth, 4_000, 10);
    let r = em_fit_point(&d, StructureKind::HyperErlang, 4, &FitOptions::default()).unwrap();
    let p = classical(&r);
    let t = p.subgen();
    let mut shapes = Vec::new();
    let mut len = 0;
    for i in 0..4 {
        len += 1;
        if i == 3 || t[(i, i + 1)] == 0.0 {
            shapes.push(len);
            len = 0;
        }
    }
    shapes.sort_unstable();
    assert_eq!(shapes, vec![1, 3]);
    assert_eq!(r.n_params, 3);
    assert_ascent(&r);
}

#[test]
fn erlang_scale_equivariance() {
    let d = draws(&StructureSpec::Erlang { states: 3, rate: 0.7 }.build().unwrap(), 800, 11);
    let c = 37.5;
    let scaled = d.scaled(c).unwrap();
    let opts = FitOptions::default();
    let a = em_fit_point(&d, StructureKind::Erlang, 3, &opts).unwrap();
    let b = em_fit_point(&scaled, StructureKind::Erlang, 3, &opts).unwrap();
    let (ra, rb) = (-classical(&a).subgen()[(0, 0)], -classical(&b).subgen()[(0, 0)]);
    assert!((rb - ra / c).abs() < 1e-6 * ra / c);
    assert!((b.loglik - (a.loglik - d.len() as f64 * c.ln())).abs() < 1e-6);
}

#[test]
fn seeded_fits_are_deterministic() {
    let d = exp_data(300, 12);
    let opts = FitOptions::with_seed(99);
    let a = em_fit_point(&d, StructureKind::General, 3, &opts).unwrap();
    let b = em_fit_point(&d, StructureKind::General, 3, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn weights_act_as_replication() {
    let d = Dataset::weighted(vec![0.5, 1.0, 2.0], vec![2.0, 1.0, 3.0]).unwrap();
    let rep = Dataset::new(vec![0.5, 0.5, 1.0, 2.0, 2.0, 2.0]).unwrap();
    let opts = FitOptions::default();
    let a = em_fit_point(&d, StructureKind::Erlang, 2, &opts).unwrap();
    let b = em_fit_point(&rep, StructureKind::Erlang, 2, &opts).unwrap();
    assert!((a.loglik - b.loglik).abs() < 1e-12);
}

#[test]
fn general_sweep_is_nondecreasing() {
    let d = exp_data(400, 13);
    let rows = sweep_states(&d, &[StructureKind::General], 1..=3, &FitOptions::default()).unwrap();
    assert_eq!(rows.len(), 3);
    let ll: Vec<f64> = rows.iter().map(|r| r.outcome.as_ref().unwrap().fit.loglik).collect();
    for w in ll.windows(2) {
        assert!(w[1] >= w[0] - 1e-6 * w[0].abs(), "{ll:?}");
    }
    let row = rows[0].outcome.as_ref().unwrap();
    assert!((0.0..=1.0).contains(&row.gof.p_value));
}

#[test]
fn sweep_row_order() {
    let d = exp_data(200, 14);
    let opts = FitOptions { restarts: 1, ..FitOptions::default() };
    let rows = sweep_states(&d, &[StructureKind::Erlang, StructureKind::Cf1], 1..=2, &opts).unwrap();
    let keys: Vec<(usize, StructureKind)> = rows.iter().map(|r| (r.m, r.structure)).collect();
    assert_eq!(
        keys,
        vec![(1, StructureKind::Erlang), (1, StructureKind::Cf1), (2, StructureKind::Erlang), (2, StructureKind::Cf1)]
    );
}

#[test]
fn cut_point_scan_uses_deciles() {
    let d = exp_data(500, 15);
    let rows = scan_cut_points(&d, 1, None, &FitOptions::default());
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.outcome.is_ok()));
    assert!(rows.windows(2).all(|w| w[0].cut < w[1].cut));
    let bad = scan_cut_points(&d, 1, Some(&[1e9]), &FitOptions::default());
    assert!(bad[0].outcome.is_err());
}

#[test]
fn rotterdam_anchors() {
    let d = rotterdam();
    assert_eq!(d.len(), 1077);
    // the printed middle row sums to +4e-10; its diagonal is taken as minus the off-diagonal sum
    let t = Matrix::from_rows(&[
        vec![-0.001254913, 0.0, 0.0],
        vec![0.006190975, -(0.006190975 + 0.0009023664), 0.0009023664],
        vec![0.0, 0.001480004, -0.001483781],
    ])
    .unwrap();
    let published = PhaseType::new(vec![0.0, 0.0, 1.0], t).unwrap();
    assert!((loglik(&published, &d) + 8912.38).abs() < 5.0);

    let e = em_fit_point(&d, StructureKind::Erlang, 2, &FitOptions::default()).unwrap();
    let rate = -classical(&e).subgen()[(0, 0)];
    assert!((rate - 0.00116).abs() < 0.02 * 0.00116);
    assert!((e.loglik + 8925.59).abs() < 2.0);

    let o = fit_ocp(&d, 2, 3250.0, &FitOptions::default()).unwrap();
    let (l1, l2) = ocp_rates(&o);
    assert!((l1 - 0.00113).abs() < 0.02 * 0.00113);
    assert!((l2 - 0.00175).abs() < 0.02 * 0.00175);
    assert!((o.loglik + 8915.34).abs() < 2.0);
    assert!(o.aic < e.aic);
}

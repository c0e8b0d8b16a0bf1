use gwpt::harness::*;
use gwpt::quadrature::{build_grid, Distribution};
use gwpt::reconstruct::relative_l2;

fn a1ii(eps: f64, nz: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(TestId::A1ii, eps);
    cfg.nz1 = nz;
    cfg.nz3 = nz;
    cfg.nz4 = nz;
    cfg
}

#[test]
fn two_point_legendre_rule() {
    let g = build_grid(Distribution::Uniform, 2, 1).unwrap();
    let x = g.points_1d().unwrap();
    assert!((x[0] + 0.5773502692).abs() < 1e-10 && (x[1] - 0.5773502692).abs() < 1e-10);
    assert_eq!(g.weights(), &[0.5, 0.5]);
}

#[test]
fn gwpt_matches_closed_form_for_quadratic_potential() {
    for eps in [1.0 / 32.0, 1.0 / 128.0, 1.0 / 256.0] {
        let mut cfg = ExperimentConfig::preset(TestId::A1i, eps);
        cfg.nz1 = 8;
        cfg.nz2 = 8;
        cfg.nz3 = 8;
        let g = run_gwpt(&cfg, true).unwrap();
        let h = heller_fields(&cfg, &g.m3).unwrap();
        for (a, b) in g.psi().unwrap().iter().zip(&h) {
            let e = relative_l2(a, b).unwrap();
            assert!(e <= 1e-6, "eps {eps}: {e:e}");
        }
    }
}

#[test]
fn reference_solver_is_second_order_against_closed_form() {
    let cfg = ExperimentConfig::preset(TestId::A1i, 1.0 / 32.0);
    let err = |nz4: usize, dt: f64| {
        let c = ExperimentConfig {
            ds_dt: dt,
            nz4,
            ..cfg.clone()
        };
        let r = run_reference(&c).unwrap();
        let h = heller_fields(&c, &r.m4).unwrap();
        r.psi
            .iter()
            .zip(&h)
            .map(|(a, b)| relative_l2(a, b).unwrap())
            .fold(0.0, f64::max)
    };
    let coarse = err(2, 1.0 / 600.0);
    let fine = err(2, 1.0 / 1200.0);
    let order = (coarse / fine).log2();
    assert!((1.9..2.1).contains(&order), "order {order}");
    let frozen = err(4, 1.0 / 600.0);
    assert!(
        (frozen / 9.151e-5 - 1.0).abs() < 0.02,
        "reference-mesh error {frozen:e}"
    );
}

#[test]
fn z_derivative_table_anchors() {
    let rows: Vec<ZDiagnostics> = [1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&e| {
            let cfg = a1ii(e, 300);
            zdiag(&cfg, &run_gwpt(&cfg, true).unwrap()).unwrap()
        })
        .collect();
    assert!(
        (rows[0].psi / 40.5971 - 1.0).abs() < 0.01,
        "{}",
        rows[0].psi
    );
    assert!((rows[0].w / 0.0618 - 1.0).abs() < 0.02, "{}", rows[0].w);
    let ratio = rows[1].psi / rows[0].psi;
    assert!((ratio / (96.1058 / 40.5971) - 1.0).abs() < 0.02, "{ratio}");
}

#[test]
fn comparison_against_reference_is_in_expected_range() {
    let row = run_comparison(&a1ii(1.0 / 64.0, 64)).unwrap();
    assert!(
        row.er_psi <= 3.0 * 3.2442e-5 && row.er_psi >= 3.2442e-5 / 30.0,
        "Er psi {:e}",
        row.er_psi
    );
    let row = run_comparison(&a1ii(1.0 / 128.0, 64)).unwrap();
    assert!(
        (row.j.er1 / 1.6e-7).log10().abs() < 0.5,
        "Er1 {:e}",
        row.j.er1
    );
    assert!(
        (row.j.er2 / 4.3e-7).log10().abs() < 0.5,
        "Er2 {:e}",
        row.j.er2
    );
}

#[test]
fn spectral_decay_in_nz2() {
    let mut cfg = a1ii(1.0 / 128.0, 64);
    let errs: Vec<f64> = [2usize, 8, 32]
        .iter()
        .map(|&n| {
            cfg.nz2 = n;
            nz2_self_convergence(&cfg).unwrap().er_psi
        })
        .collect();
    assert!((errs[0] / 1.3e-3).log10().abs() < 0.5, "{errs:?}");
    assert!(
        errs[2] < 1e-8 && errs[1] < 1e-5 * errs[0] / 1e-3,
        "{errs:?}"
    );
}

#[test]
fn two_dimensional_test_runs() {
    let mut cfg = ExperimentConfig::preset(TestId::D, 0.1);
    for n in [&mut cfg.nz1, &mut cfg.nz2, &mut cfg.nz3, &mut cfg.nz4] {
        *n = 6;
    }
    let g = run_gwpt(&cfg, true).unwrap();
    assert_eq!(g.m3.len(), 36);
    let mass = g
        .psi()
        .unwrap()
        .iter()
        .map(|f| f.mass())
        .fold(0.0, |a: f64, m| a.max((m - 1.0).abs()));
    assert!(mass < 1e-8, "{mass:e}");
}

#[test]
fn degenerate_single_node_pipeline() {
    let mut cfg = a1ii(1.0 / 32.0, 1);
    cfg.nz2 = 1;
    let g = run_gwpt(&cfg, true).unwrap();
    assert_eq!(g.psi().unwrap().len(), 1);
}

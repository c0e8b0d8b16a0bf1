//! Property suites shared by the `properties` and `acceptance` targets.

use gwpt::interp::{spline_fit_with, EndCondition};
use gwpt::packet::{rk4_step, PacketParams};
use gwpt::potential::Potential;
use gwpt::quadrature::{build_grid, expect, Distribution};
use gwpt::wprop::{default_eta_grid, propagate_w, w_initial};
use gwpt::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn dist() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        Just(Distribution::Uniform),
        Just(Distribution::StandardNormal)
    ]
}

/// Gauss rules integrate every polynomial of degree `2n - 1` exactly.
pub fn quadrature_exactness() -> Result<(), String> {
    let strategy = (dist(), 1usize..=24)
        .prop_flat_map(|(d, n)| (Just(d), Just(n), prop::collection::vec(-1.0f64..1.0, 2 * n)));
    run(96, strategy, |(d, n, coeffs)| {
        let g = build_grid(d, n, 1).unwrap();
        let vals: Vec<f64> = g
            .iter()
            .map(|(z, _)| coeffs.iter().rev().fold(0.0, |acc, c| acc * z[0] + c))
            .collect();
        let exact: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * d.moment(m as u32))
            .sum();
        let scale: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c.abs() * d.moment((m + m % 2) as u32))
            .sum::<f64>()
            .max(1.0);
        let got = expect(&vals, &g).unwrap();
        prop_assert!(
            (got - exact).abs() <= 1e-11 * scale,
            "{:?} n={} got {} exact {}",
            d,
            n,
            got,
            exact
        );
        Ok(())
    })
}

fn knots() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 5..40).prop_map(|gaps| {
        let mut x = -1.0;
        let mut out = vec![x];
        for g in gaps {
            x += g;
            out.push(x);
        }
        out
    })
}

/// Not-a-knot splines reproduce cubics, natural splines reproduce lines,
/// and both interpolate their data.
pub fn spline_reproduction() -> Result<(), String> {
    let strategy = (knots(), prop::array::uniform4(-2.0f64..2.0), 0.0f64..1.0);
    run(128, strategy, |(xs, c, u)| {
        let cubic = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        let line = |x: f64| c[0] + c[1] * x;
        let (a, b) = (xs[0], xs[xs.len() - 1]);
        let x = a + u * (b - a);
        let ys: Vec<f64> = xs.iter().map(|&x| cubic(x)).collect();
        let s = spline_fit_with(&xs, &ys, EndCondition::NotAKnot).unwrap();
        let scale = 1.0 + b.abs().max(a.abs()).powi(3) * 8.0;
        prop_assert!((s.eval(x) - cubic(x)).abs() <= 1e-10 * scale);
        let dc = c[1] + x * (2.0 * c[2] + 3.0 * x * c[3]);
        prop_assert!((s.derivative(x) - dc).abs() <= 1e-9 * scale);
        let yl: Vec<f64> = xs.iter().map(|&x| line(x)).collect();
        let n = spline_fit_with(&xs, &yl, EndCondition::Natural).unwrap();
        prop_assert!((n.eval(x) - line(x)).abs() <= 1e-11 * scale);
        prop_assert!((n.derivative(x) - c[1]).abs() <= 1e-10 * scale);
        for (k, &xk) in xs.iter().enumerate() {
            prop_assert!((s.eval(xk) - ys[k]).abs() <= 1e-12 * scale);
        }
        Ok(())
    })
}

fn integrate(mut s: PacketParams, v: &Potential, t: f64, dt: f64) -> PacketParams {
    let n = (t / dt).ceil() as usize;
    let h = t / n as f64;
    for _ in 0..n {
        s = rk4_step(&s, v, &[], 0.1, h).unwrap();
    }
    s
}

/// RK4 packet flow against the free Riccati solution and the harmonic oscillator.
pub fn rk4_closed_form() -> Result<(), String> {
    let strategy = (
        -2.0f64..2.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
        0.3f64..2.0,
        0.1f64..1.0,
        0.5f64..2.0,
    );
    run(24, strategy, |(q0, p0, ar, ai, t, c)| {
        let a0 = Complex64::new(ar, ai);
        let free = integrate(
            PacketParams::initial(q0, p0, a0),
            &Potential::free(),
            t,
            2.5e-4,
        );
        let alpha = a0 / (1.0 + 2.0 * a0 * t);
        prop_assert!(
            (free.alpha - alpha).norm() <= 1e-10,
            "alpha {} vs {}",
            free.alpha,
            alpha
        );
        prop_assert!((free.q - (q0 + p0 * t)).abs() <= 1e-12);
        prop_assert!((free.p - p0).abs() <= 1e-14);
        prop_assert!((free.b * free.b - free.alpha.im).abs() <= 1e-10);
        let h = integrate(
            PacketParams::initial(q0, p0, a0),
            &Potential::harmonic(c, vec![]),
            t,
            2.5e-4,
        );
        let w = (2.0 * c).sqrt();
        prop_assert!((h.q - (q0 * (w * t).cos() + p0 / w * (w * t).sin())).abs() <= 1e-10);
        prop_assert!((h.p - (p0 * (w * t).cos() - q0 * w * (w * t).sin())).abs() <= 1e-10);
        Ok(())
    })
}

/// The Gaussian ground state only picks up the phase `exp(-i∫α_I)`.
pub fn wprop_ground_state_rotation() -> Result<(), String> {
    let grid = default_eta_grid();
    let strategy = (0.2f64..3.0, -1.0f64..1.0, 1usize..120, 0.5f64..3.0);
    run(48, strategy, |(a, b, steps, amp)| {
        let dt = 0.01;
        let alpha_i = |t: f64| a + b * a * t / 2.0;
        let times: Vec<f64> = (0..=2 * steps).map(|j| j as f64 * dt / 2.0).collect();
        let samples: Vec<PacketParams> = times
            .iter()
            .map(|&t| PacketParams::initial(0.0, 0.0, Complex64::new(0.0, alpha_i(t))))
            .collect();
        let w0 = w_initial(amp, &grid).unwrap();
        let w = propagate_w(
            &w0,
            &samples,
            &times,
            &Potential::harmonic(1.0, vec![]),
            &[],
            0.05,
            &[],
        )
        .unwrap()
        .pop()
        .unwrap();
        let t = times[times.len() - 1];
        let theta = a * t + b * a * t * t / 4.0;
        let rot = Complex64::from_polar(1.0, -theta);
        let err = w
            .values
            .iter()
            .zip(&w0.values)
            .map(|(x, y)| (x - y * rot).norm())
            .fold(0.0, f64::max);
        prop_assert!(err <= 1e-11 * amp, "err {} theta {}", err, theta);
        Ok(())
    })
}

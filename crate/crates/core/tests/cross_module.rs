use std::f64::consts::PI;

use heis_core::ccmetric::cc_distance;
use heis_core::cuts::{cut_distance, CutMeasure, HalfSpace, WeightedCut};
use heis_core::distortion::{lp_distortion, sample_ball, BallSpec, FiniteMetric};
use heis_core::lines::{sample_lines, Line};
use heis_core::monotone::{defect_line, is_step, trace_line, SetOracle};
use heis_core::{Box3, HPoint};

#[test]
fn half_space_traces_are_steps_on_sampled_lines() {
    let window = Box3::cube(2.0).unwrap();
    let halves = [
        HalfSpace::vertical(0.4, 0.3, 1),
        HalfSpace::horizontal(HPoint::new(0.2, -0.5, 0.7), -1),
    ];
    for l in sample_lines(&window, 500, 17).unwrap() {
        let (t0, t1) = l.clip_to_box(&window).unwrap_or((-1.0, 1.0));
        for h in &halves {
            let tr = trace_line(&SetOracle::half_space(h), &l, t0, t1, 128).unwrap();
            assert!(is_step(&tr));
            assert_eq!(defect_line(&tr), 0.0);
        }
    }
}

#[test]
fn finite_cut_metric_is_additive_along_lines() {
    // Half-space cuts restricted to a line are monotone, so d_Σ is additive there.
    let atoms = vec![
        WeightedCut { half_space: HalfSpace::vertical(0.1, 0.0, 1), weight: 1.5 },
        WeightedCut { half_space: HalfSpace::vertical(1.9, 0.4, -1), weight: 0.5 },
        WeightedCut { half_space: HalfSpace::horizontal(HPoint::new(0.3, 0.3, -0.2), 1), weight: 2.0 },
    ];
    let sigma = CutMeasure::Finite { atoms, signed: false };
    let line = Line::new(HPoint::new(-0.2, 0.1, 0.05), PI / 5.0);
    let ts = [-2.0, -0.7, 0.15, 1.3, 2.4];
    let d = |s: f64, t: f64| cut_distance(&sigma, &line.point(s), &line.point(t)).unwrap().value;
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            for k in j + 1..ts.len() {
                assert_eq!(d(ts[i], ts[k]), d(ts[i], ts[j]) + d(ts[j], ts[k]));
            }
        }
    }
}

#[test]
fn ball_metric_embeds_with_certified_distortion() {
    let pts = sample_ball(1.0, BallSpec::Random { count: 9 }, 21, None).unwrap();
    assert!(pts.iter().all(|p| cc_distance(&HPoint::IDENTITY, p) <= 1.0));
    let m = FiniteMetric::from_points(&pts).unwrap();
    let dec = lp_distortion(&m).unwrap();
    assert!(dec.distortion >= 1.0);
    assert!(dec.certificate.unwrap().max_residual() < 1e-6);
    assert!(dec.sandwich_violation(&m).unwrap() < 1e-8);
}

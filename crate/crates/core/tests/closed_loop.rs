use asmc::math::TheoremBounds;
use asmc::plants::Plant;
use asmc::presets;
use asmc::sim::{run_scenario, verify_theorem3, TrajectoryLog};

fn run(
    name: &str,
    dt: Option<f64>,
    t_end: Option<f64>,
) -> (asmc::scenario::LoadedScenario, TrajectoryLog) {
    let l = presets::load_with(name, dt, t_end).unwrap();
    let log = run_scenario(&l.scenario).unwrap();
    (l, log)
}

#[test]
fn halving_dt_changes_terminal_state_at_first_order() {
    let terminal = |dt: f64| {
        let (_, log) = run("regulation-smooth", Some(dt), None);
        log.state(log.len() - 1)[0]
    };
    let (a, b, c) = (terminal(2e-4), terminal(1e-4), terminal(5e-5));
    let (d1, d2) = ((a - b).abs(), (b - c).abs());
    assert!(d1 <= 2e-4 && d2 <= 1e-4, "{d1:e} {d2:e}");
    let order = (d1 / d2).log2();
    assert!(order > 0.8, "observed order {order}");
}

#[test]
fn regulation_hovers_near_eta() {
    let (l, log) = run("regulation-smooth", None, None);
    let eta = l.new_adaptive().unwrap().layer().unwrap().eta();
    let tail = &log.s[log.t.partition_point(|&t| t < 20.0)..];
    let mean = tail.iter().map(|s| s.abs()).sum::<f64>() / tail.len() as f64;
    assert!((0.5 * eta..2.0 * eta).contains(&mean), "mean |s| = {mean}");
}

#[test]
fn regulation_overshoot_stays_below_delta() {
    let (l, log) = run("regulation-smooth", None, None);
    let p = l.new_adaptive().unwrap();
    let bounds = TheoremBounds::compute(log.vprime[0], p.k, p.rho, l.mu(), p.phi, None).unwrap();
    let report = verify_theorem3(&log, &bounds);
    assert_eq!(report.satisfied(), Some(true), "{report:?}");
}

#[test]
fn adaptive_gain_respects_rate_limit_on_square_wave() {
    let (l, log) = run("regulation-square", None, None);
    let rho = l.new_adaptive().unwrap().rho;
    assert!(log.gain_rate.iter().all(|r| r.abs() <= 1.0 / rho));
    assert!(log.gain.iter().all(|g| *g >= 0.0));
    assert!(log.s.iter().all(|s| s.is_finite()));
}

#[test]
fn tracking_error_follows_sliding_variable() {
    // on the surface s = e' + 6e, so a slowly varying steady s gives e ~ s/6
    let (l, log) = run("tracking", None, None);
    let Plant::Tracking { lambda, reference } = l.scenario.plant else {
        unreachable!()
    };
    let from = log.t.partition_point(|&t| t < 25.0);
    let e_max = (from..log.len())
        .map(|i| (log.state(i)[0] - reference.eval(log.t[i]).0).abs())
        .fold(0.0f64, f64::max);
    let s_max = log.s[from..].iter().fold(0.0f64, |a, s| a.max(s.abs()));
    assert!(
        e_max <= 1.2 * s_max / lambda,
        "{e_max} vs {}",
        s_max / lambda
    );
}

#[test]
fn delta_f_column_matches_plant_drift() {
    // along the true plant, s' = h + u + Δf
    let (l, log) = run("tracking", None, Some(3.0));
    let plant = l.scenario.plant;
    let Plant::Tracking { lambda, reference } = plant else {
        unreachable!()
    };
    for i in (0..log.len()).step_by(97) {
        let (x, t) = (log.state(i), log.t[i]);
        let mut dx = [0.0; 2];
        plant
            .deriv(x, t, log.u[i], &l.scenario.uncertainty, &mut dx)
            .unwrap();
        let (_, yd1, yd2) = reference.eval(t);
        let s_dot = dx[1] - yd2 + lambda * (dx[0] - yd1);
        let expected = plant.surface(x, t).h + log.u[i] + log.delta_f[i];
        assert!(
            (s_dot - expected).abs() <= 1e-9 * expected.abs().max(1.0),
            "{s_dot} vs {expected}"
        );
    }
}

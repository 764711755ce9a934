use std::fmt::Write;

use asmc::scenario::LoadedScenario;
use asmc::sim::RunMetrics;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

pub fn metrics_text(l: &LoadedScenario, m: &RunMetrics, rows: usize) -> String {
    let s = &l.scenario;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}: {} on {} plant, {} disturbance, {rows} samples at dt = {}",
        s.name,
        s.controller.name(),
        s.plant.name(),
        s.uncertainty.kind.name(),
        s.integration.dt
    );
    let _ = writeln!(
        out,
        "  reach time to |s| <= 2 eta  {}",
        opt(m.reach_time_to_band)
    );
    let _ = writeln!(
        out,
        "  steady |s| mean / max       {:.6e} / {:.6e}",
        m.steady_band_mean, m.steady_band_max
    );
    let _ = writeln!(
        out,
        "  chattering index            {:.6e}",
        m.chattering_index
    );
    let _ = writeln!(out, "  max gain                    {:.6}", m.max_gain);
    let _ = writeln!(
        out,
        "  overshoot after band entry  {}",
        opt(m.overshoot_into_sprime)
    );
    if let Some(ok) = m.theorem2_satisfied {
        let _ = writeln!(out, "  reach bound holds           {ok}");
    }
    out
}

pub fn comparison_table(rows: &[(&LoadedScenario, &RunMetrics)]) -> String {
    let best = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.chattering_index.total_cmp(&b.1 .1.chattering_index))
        .map(|(i, _)| i);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "  {:<24} {:<15} {:>9} {:>12} {:>12} {:>12} {:>10}",
        "scenario", "controller", "reach [s]", "band mean", "band max", "chattering", "max gain"
    );
    for (i, (l, m)) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{} {:<24} {:<15} {:>9} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.4}",
            if Some(i) == best { "*" } else { " " },
            l.scenario.name,
            l.scenario.controller.name(),
            opt(m.reach_time_to_band),
            m.steady_band_mean,
            m.steady_band_max,
            m.chattering_index,
            m.max_gain
        );
    }
    let _ = writeln!(out, "* lowest chattering index");
    out
}

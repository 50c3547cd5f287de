//! `simulate`: wing trajectory and per-probe strain, `ξ` and firing probability.

use obskit_core::neural_encoding::{nla, project_series};
use obskit_core::numerics::Vector;
use obskit_core::wing::{periodic_initial_state, simulate_wing, StrainKind};

use crate::config::{InitialState, RunConfig};
use crate::output::{num, OutputDir};

pub fn run(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<()> {
    let model = cfg.wing_model()?;
    let stroke = cfg.kinematics.stroke();
    let sim = &cfg.simulate;
    if sim.beats == 0 {
        anyhow::bail!(crate::ConfigError("simulate.beats must be at least 1".into()));
    }
    let coefficients = sim
        .probes
        .iter()
        .map(|p| {
            StrainKind::ALL
                .iter()
                .map(|&k| model.strain_coefficients(p[0], p[1], k))
                .collect::<obskit_core::Result<Vec<_>>>()
        })
        .collect::<obskit_core::Result<Vec<_>>>()?;

    let step = stroke.t_beat / cfg.steps_per_beat as f64;
    let x0 = match sim.initial {
        InitialState::Periodic => periodic_initial_state(&model, &stroke, 0.0, step)?,
        InitialState::Zero => Vector::zeros(model.state_dim()),
    };
    let run = simulate_wing(&model, &stroke, &x0, 0.0, sim.beats as f64 * stroke.t_beat, step)?;
    let tr = &run.trajectory;
    let n = model.mode_count();

    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("eta{i}")));
    header.extend((1..=n).map(|i| format!("eta_dot{i}")));
    header.extend(["P", "Q", "R", "psi", "theta", "alpha"].map(String::from));
    let rows: Vec<Vec<String>> = tr
        .times
        .iter()
        .zip(&tr.states)
        .zip(&run.kinematics)
        .map(|((&t, x), k)| {
            let mut row = vec![num(t)];
            row.extend(x.iter().map(|&v| num(v)));
            row.extend(k.angles.iter().map(|&v| num(v)));
            row
        })
        .collect();
    out.csv("trajectory.csv", "simulate", &header, &rows)?;

    let header: Vec<String> = ["probe", "x", "y", "kind", "t", "strain", "xi", "p_fire"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for (pi, (probe, per_kind)) in sim.probes.iter().zip(&coefficients).enumerate() {
        for (kind, k) in StrainKind::ALL.iter().zip(per_kind) {
            let strain: Vec<f64> = tr.states.iter().map(|x| (0..n).map(|i| k[i] * x[i]).sum()).collect();
            let xi = project_series(&strain, step, &cfg.encoder)?;
            let offset = strain.len() - xi.len();
            for (j, (&t, &s)) in tr.times.iter().zip(&strain).enumerate() {
                let (xi_s, p_s) = match j.checked_sub(offset) {
                    Some(m) => (num(xi[m]), num(nla(xi[m], &cfg.encoder))),
                    None => (String::new(), String::new()),
                };
                rows.push(vec![
                    pi.to_string(),
                    num(probe[0]),
                    num(probe[1]),
                    kind.to_string(),
                    num(t),
                    num(s),
                    xi_s,
                    p_s,
                ]);
            }
        }
    }
    out.csv("probes.csv", "simulate", &header, &rows)
}

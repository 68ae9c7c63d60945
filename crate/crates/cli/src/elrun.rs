//! Driver for the early-learning subcommand: trajectory and/or kappa
//! sweep, with CSV outputs and line plots.

use std::path::Path;

use probcal::earlylearn::{
    kappa_sweep, run_trajectory, save_kappa_rows, save_trajectory, KappaSweepConfig,
    TrajectoryConfig,
};
use probcal::{Error, Result};

use crate::config::{EarlylearnSection, SweepSection, TrajectorySection};
use crate::svg::render_line_svg;

pub fn run_earlylearn(section: &EarlylearnSection, seed: u64, out: &Path) -> Result<()> {
    if section.trajectory.is_none() && section.sweep.is_none() {
        return Err(Error::invalid_argument(
            "earlylearn config needs a trajectory and/or sweep section",
        ));
    }
    std::fs::create_dir_all(out)?;

    if let Some(t) = &section.trajectory {
        let traj = run_trajectory(&trajectory_config(t, seed))?;
        save_trajectory(&traj, out.join("trajectory.csv"))?;
        let points: Vec<(f64, f64)> = traj.points.iter().map(|p| (p.k as f64, p.mse_p)).collect();
        render_line_svg(&points, "gradient step", "mse_p", out.join("trajectory_mse.svg"))?;
    }

    if let Some(s) = &section.sweep {
        let rows = kappa_sweep(&sweep_config(s, seed))?;
        save_kappa_rows(&rows, out.join("sweep.csv"))?;
        let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.kappa, r.separable_rate)).collect();
        render_line_svg(&points, "kappa", "separable rate", out.join("sweep_rate.svg"))?;
    }
    Ok(())
}

pub fn trajectory_config(t: &TrajectorySection, seed: u64) -> TrajectoryConfig {
    TrajectoryConfig {
        n: t.n,
        dim: t.dim,
        gamma: t.gamma,
        gamma0: t.gamma0,
        eta: t.eta,
        steps: t.steps,
        eval_every: t.eval_every,
        resample: t.resample,
        seed,
    }
}

pub fn sweep_config(s: &SweepSection, seed: u64) -> KappaSweepConfig {
    KappaSweepConfig {
        kappas: s.kappas.clone(),
        n: s.n,
        gamma: s.gamma,
        trials: s.trials,
        gd_steps: s.gd_steps,
        eta: s.eta,
        seed,
    }
}

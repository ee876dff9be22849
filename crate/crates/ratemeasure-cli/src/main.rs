use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ratemeasure::config::RunConfig;
use ratemeasure::experiments::{
    run_convergence_experiment, run_stability_experiment, ConvergenceSettings, StabilitySettings,
};
use ratemeasure::output;
use ratemeasure::pricing::{
    martingale_residual, summarize_ensemble, supermartingale_check, yield_curve,
};
use ratemeasure::reference::{deterministic_flow, flow_discount_identity};
use ratemeasure::solver::{simulate_ensemble, Scheme};

/// Simplex-constrained rate-measure dynamics: simulation, pricing and
/// diagnostics.
#[derive(Parser)]
#[command(name = "ratemeasure", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and export them as CSV.
    Simulate(Common),
    /// Price the configured initial curve and export maturity/price/yield.
    Price(Common),
    /// Tabulate the deterministic flow at a fixed time.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Flow time (defaults to `flow.t` from the config, then the horizon).
        #[arg(long)]
        t: Option<f64>,
    },
    /// Run martingale, supermartingale and invariant diagnostics.
    Check(Common),
    /// Atomic-approximation convergence experiment.
    Converge(Common),
    /// Stability (Gronwall envelope) experiment.
    Stability(Common),
}

/// Exit codes: 0 success, 1 validation error, 2 failed bound assertion.
fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_bounds_hold) => {
            if all_bounds_hold {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", common.config.display()))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&common.out)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", common.out.display()))?;
    Ok(cfg)
}

fn write_out(common: &Common, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = common.out.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = load_config(&common)?;
            let setup = cfg.simulation()?;
            let ensemble = simulate_ensemble(&setup.sim, &setup.x0)?;
            write_out(&common, "paths.csv", &output::paths_csv(&ensemble))?;
            Ok(true)
        }
        Command::Price(common) => {
            let cfg = load_config(&common)?;
            let mu0 = cfg.initial_measure()?;
            let curve = yield_curve(&mu0, &cfg.maturities)?;
            write_out(&common, "curve.csv", &output::curve_csv(&curve))?;
            Ok(true)
        }
        Command::Flow { common, t } => {
            let cfg = load_config(&common)?;
            let mu0 = cfg.initial_measure()?;
            let t = t.or(cfg.flow_t).unwrap_or(cfg.horizon);
            let mu_t = deterministic_flow(&mu0, t)?;
            write_out(&common, "flow.csv", &output::flow_csv(&mu0, &mu_t))?;
            let (lhs, rhs) = flow_discount_identity(&mu0, 0.0, t)?;
            let mut report = String::new();
            report.push_str(&format!("flow time t = {t}\n"));
            report.push_str(&format!(
                "short rate R_t = {}\n",
                ratemeasure::operators::short_rate(&mu_t)
            ));
            report.push_str(&format!("normalizer ratio G_t/G_0 = {lhs}\n"));
            report.push_str(&format!("bond price P(0, t) = {rhs}\n"));
            write_out(&common, "report.txt", &report)?;
            Ok(true)
        }
        Command::Check(common) => {
            let cfg = load_config(&common)?;
            let setup = cfg.simulation()?;
            let mut checkpoints: Vec<f64> = cfg
                .maturities
                .iter()
                .copied()
                .filter(|&t| t <= setup.sim.horizon + 1e-12)
                .collect();
            if checkpoints.is_empty() {
                checkpoints.push(setup.sim.horizon);
            }
            let summary = summarize_ensemble(&setup.sim, &setup.x0, &checkpoints)?;

            let mut report = String::new();
            let mut ok = true;
            report.push_str(&format!(
                "diagnostics: {} paths, dt = {}, scheme = {}\n",
                setup.sim.n_paths, setup.sim.dt, setup.sim.scheme
            ));
            for &t in &checkpoints {
                let mart = martingale_residual(&summary, t)?;
                let tol = 3.0 * mart.std_error + 10.0 * setup.sim.dt;
                let pass = mart.mean.abs() <= tol;
                ok &= pass;
                report.push_str(&format!(
                    "martingale T={t}: residual {} (SE {}, tolerance 3*SE + 10*dt = {}) {}\n",
                    mart.mean,
                    mart.std_error,
                    tol,
                    if pass { "PASS" } else { "FAIL" }
                ));
            }
            for &t in &checkpoints {
                let sup = supermartingale_check(&summary, t)?;
                let tol = 3.0 * sup.std_error;
                let pass = sup.mean <= tol;
                ok &= pass;
                report.push_str(&format!(
                    "supermartingale T={t}: mean(R_T) - R_0 = {} (SE {}, one-sided tolerance 3*SE = {}) {}\n",
                    sup.mean,
                    sup.std_error,
                    tol,
                    if pass { "PASS" } else { "FAIL" }
                ));
            }
            let mass_ok = summary.max_mass_error <= 1e-12;
            ok &= mass_ok;
            report.push_str(&format!(
                "mass conservation: max |sum - 1| = {} (tolerance 1e-12) {}\n",
                summary.max_mass_error,
                if mass_ok { "PASS" } else { "FAIL" }
            ));
            let positivity_ok = match setup.sim.scheme {
                Scheme::ProjectedEuler => summary.min_weight >= 0.0,
                Scheme::Exponential => summary.min_active_weight > 0.0,
            };
            ok &= positivity_ok;
            report.push_str(&format!(
                "positivity: min weight = {}, min initially-positive weight = {} {}\n",
                summary.min_weight,
                summary.min_active_weight,
                if positivity_ok { "PASS" } else { "FAIL" }
            ));
            report.push_str(&format!(
                "verdict: {}\n",
                if ok { "PASS" } else { "FAIL" }
            ));
            write_out(&common, "report.txt", &report)?;
            Ok(ok)
        }
        Command::Converge(common) => {
            let cfg = load_config(&common)?;
            let settings = ConvergenceSettings {
                interval: cfg.interval()?,
                target: match &cfg.weights {
                    ratemeasure::config::WeightsSpec::Target(t) => t.clone(),
                    ratemeasure::config::WeightsSpec::Values(_) => {
                        anyhow::bail!(
                            "config error: key 'weights.target': the convergence experiment \
                             needs a named target distribution"
                        )
                    }
                },
                field: cfg.field()?,
                dt: cfg.dt,
                horizon: cfg.horizon,
                scheme: cfg.scheme,
                seed: cfg.seed,
                n_paths: cfg.n_paths,
                levels: cfg.convergence_levels.clone(),
            };
            let report = run_convergence_experiment(&settings)?;
            write_out(&common, "report.txt", &report.to_string())?;
            Ok(report.bound_satisfied)
        }
        Command::Stability(common) => {
            let cfg = load_config(&common)?;
            let setup = cfg.simulation()?;
            let eps = cfg.stability_perturbation;
            let weights_a = setup.x0.coords().to_vec();
            if weights_a.len() < 2 {
                anyhow::bail!(
                    "config error: key 'support.points': the stability experiment needs at \
                     least two atoms"
                );
            }
            let mut weights_b = weights_a.clone();
            weights_b[0] += eps;
            let last = weights_b.len() - 1;
            weights_b[last] -= eps;
            if weights_b.iter().any(|&w| w < 0.0) {
                anyhow::bail!(
                    "config error: key 'stability.perturbation': perturbation {eps} drives a \
                     weight negative"
                );
            }
            let settings = StabilitySettings {
                interval: cfg.interval()?,
                support: setup.sim.support.clone(),
                weights_a,
                weights_b,
                field: setup.sim.field.clone(),
                dt: cfg.dt,
                horizon: cfg.horizon,
                scheme: cfg.scheme,
                seed: cfg.seed,
                n_paths: cfg.n_paths,
            };
            let report = run_stability_experiment(&settings)?;
            write_out(&common, "report.txt", &report.to_string())?;
            Ok(report.bound_satisfied)
        }
    }
}

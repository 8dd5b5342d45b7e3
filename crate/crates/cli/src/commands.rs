//! The subcommands, as library functions writing into an output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use topo_smear::field::{field_to_csv, save_field, FieldFormat};
use topo_smear::functional::{wasserstein_norm, FunctionalSpec};
use topo_smear::persistence::diagram_of;
use topo_smear::smear::{self, Mode, Optimizer, StumpConfig};
use topo_smear::transfer::{critical_smear, SmearConfig, SmearHeatmap};
use topo_smear::ScalarField;

use crate::config::RunConfig;
use crate::{CliError, Result};

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

pub struct RunResult {
    /// Final field in the input's orientation.
    pub field: ScalarField,
    pub output: smear::RunOutput,
}

/// `run`: descent from the configured input; writes `final.csv`,
/// `final.png`, `loss_log.csv` and `diagram.csv` (diagram of the final field
/// in the optimizer's orientation).
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    let dir = cfg.output_dir()?;
    let f0 = cfg.working_input()?;
    let stump = cfg.stump_config(f0.len())?;
    let out = smear::run(&f0, &stump, cfg.mode()?)?;
    let field = if cfg.superlevel()? {
        out.field.negated()
    } else {
        out.field.clone()
    };
    ensure_dir(dir)?;
    write_file(dir, "final.csv", &field_to_csv(&field))?;
    save_field(&field, dir.join("final.png"), FieldFormat::Png8)?;
    write_file(dir, "loss_log.csv", &out.loss_log_csv())?;
    write_file(dir, "diagram.csv", &diagram_of(&out.field).to_csv())?;
    Ok(RunResult { field, output: out })
}

/// When a bench arm stops and how often it is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Time { total: Duration, every: Duration },
    Steps { total: usize, every: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPoint {
    pub arm: &'static str,
    pub step: usize,
    /// Optimizer time only; evaluations are not counted.
    pub elapsed_ms: f64,
    pub loss: f64,
    pub reduction_pct: f64,
}

pub const BENCH_HEADER: &str = "arm,step,elapsed_ms,loss,reduction_pct";

/// Full-resolution, noise-free mixed loss used to compare the arms.
pub fn eval_loss(f: &ScalarField, f0: &ScalarField, cfg: &StumpConfig, eval: &FunctionalSpec) -> Result<f64> {
    let topo = wasserstein_norm(&diagram_of(f), eval);
    let data = cfg.data_term.value(f, f0)?;
    Ok(topo_smear::functional::mixed_loss(topo, data, cfg.alpha)?)
}

/// Runs one optimizer arm under `budget`, evaluating the common loss at
/// checkpoints on the arm's own monotonic clock.
pub fn bench_arm(
    arm: &'static str,
    f0: &ScalarField,
    cfg: &StumpConfig,
    mode: Mode,
    eval: &FunctionalSpec,
    budget: Budget,
) -> Result<Vec<BenchPoint>> {
    let mut opt = Optimizer::new(f0, cfg, mode)?;
    let l0 = eval_loss(f0, f0, cfg, eval)?;
    let point = |step, elapsed: Duration, loss: f64| BenchPoint {
        arm,
        step,
        elapsed_ms: elapsed.as_secs_f64() * 1e3,
        loss,
        reduction_pct: if l0 > 0.0 { 100.0 * (l0 - loss) / l0 } else { 0.0 },
    };
    let mut points = vec![point(0, Duration::ZERO, l0)];
    let mut elapsed = Duration::ZERO;
    let mut next_time = Duration::ZERO;
    loop {
        let done = match budget {
            Budget::Time { total, .. } => elapsed >= total,
            Budget::Steps { total, .. } => opt.steps_taken() >= total,
        };
        if done {
            break;
        }
        let start = Instant::now();
        opt.step()?;
        elapsed += start.elapsed();
        let due = match budget {
            Budget::Time { total, every } => {
                let due = elapsed >= next_time + every || elapsed >= total;
                if due {
                    while next_time + every <= elapsed {
                        next_time += every;
                    }
                }
                due
            }
            Budget::Steps { total, every } => {
                opt.steps_taken() % every.max(1) == 0 || opt.steps_taken() == total
            }
        };
        if due {
            let loss = eval_loss(opt.field(), f0, cfg, eval)?;
            points.push(point(opt.steps_taken(), elapsed, loss));
        }
    }
    Ok(points)
}

pub fn bench_csv(points: &[BenchPoint]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{:.3},{},{}",
            p.arm, p.step, p.elapsed_ms, p.loss, p.reduction_pct
        );
    }
    out
}

/// `bench`: STUMP and vanilla arms, one after the other, from the same
/// input; writes `bench.csv`. With `steps` set both arms run that many steps,
/// otherwise each gets `budget_secs` (default 180) of optimizer time.
pub fn bench(cfg: &RunConfig) -> Result<Vec<BenchPoint>> {
    let dir = cfg.output_dir()?;
    let f0 = cfg.working_input()?;
    let stump = cfg.stump_config(f0.len())?;
    let mut vanilla = stump;
    vanilla.functional.p = cfg.vanilla_p.unwrap_or(2.0);
    let eval = stump.functional.with_p(cfg.eval_p.unwrap_or(1.0));
    eval.validate()?;
    let budget = match cfg.steps {
        Some(total) => Budget::Steps {
            total,
            every: cfg.eval_every.unwrap_or(10),
        },
        None => {
            let secs = |key, v: f64| {
                if v > 0.0 && v.is_finite() {
                    Ok(Duration::from_secs_f64(v))
                } else {
                    Err(CliError::Value {
                        key,
                        message: format!("{v} is not a positive duration"),
                    })
                }
            };
            Budget::Time {
                total: secs("budget_secs", cfg.budget_secs.unwrap_or(180.0))?,
                every: secs("eval_secs", cfg.eval_secs.unwrap_or(1.0))?,
            }
        }
    };
    let mut points = bench_arm("stump", &f0, &stump, Mode::Stump, &eval, budget)?;
    points.extend(bench_arm("vanilla", &f0, &vanilla, Mode::Vanilla, &eval, budget)?);
    ensure_dir(dir)?;
    write_file(dir, "bench.csv", &bench_csv(&points))?;
    Ok(points)
}

/// Settings `smearvis` uses when neither the file nor the flags give them.
pub fn smear_defaults() -> RunConfig {
    RunConfig {
        life_min: Some(30.0),
        endpoints: Some("both".into()),
        sign: Some("minimize".into()),
        eps: Some(50.0),
        patch: Some(5),
        n_samples: Some(1000),
        n_proj: Some(20),
        ..RunConfig::default()
    }
}

/// `smearvis`: critical smear of the configured functional; writes
/// `heat_birth.csv`, `heat_death.csv` and the composite `heat.png`.
pub fn smearvis(cfg: &RunConfig) -> Result<SmearHeatmap> {
    let cfg = cfg.clone().or(&smear_defaults());
    let dir = cfg.output_dir()?;
    let f = cfg.working_input()?;
    let spec = cfg.functional()?;
    let smear_cfg = SmearConfig {
        eps: cfg.eps()?,
        downsample: cfg.downsample()?,
        n_samples: cfg.n_samples.unwrap_or(1000),
        n_proj: cfg.n_proj.unwrap_or(20),
        seed: cfg.seed()?,
    };
    let mut heat = critical_smear(&f, &spec, &smear_cfg)?;
    if cfg.superlevel()? {
        heat.birth_heat = heat.birth_heat.negated();
        heat.death_heat = heat.death_heat.negated();
    }
    ensure_dir(dir)?;
    write_file(dir, "heat_birth.csv", &field_to_csv(&heat.birth_heat))?;
    write_file(dir, "heat_death.csv", &field_to_csv(&heat.death_heat))?;
    heat.save_composite_png(dir.join("heat.png"))?;
    Ok(heat)
}

/// `diagram`: persistence diagram CSV of the configured input, in the
/// optimizer's orientation.
pub fn diagram(cfg: &RunConfig) -> Result<String> {
    Ok(diagram_of(&cfg.working_input()?).to_csv())
}

/// `gen`: writes `<kind>.csv` and `<kind>.png` into `dir`.
pub fn gen(kind: &str, cfg: &RunConfig, dir: &Path) -> Result<ScalarField> {
    if !matches!(kind, "wells" | "circle" | "blobs") {
        return Err(CliError::Value {
            key: "generator",
            message: format!("unknown generator `{kind}`"),
        });
    }
    let cfg = RunConfig {
        input: Some(kind.to_string()),
        ..cfg.clone()
    };
    let f = cfg.load_input()?;
    ensure_dir(dir)?;
    write_file(dir, &format!("{kind}.csv"), &field_to_csv(&f))?;
    save_field(&f, dir.join(format!("{kind}.png")), FieldFormat::Png8)?;
    Ok(f)
}

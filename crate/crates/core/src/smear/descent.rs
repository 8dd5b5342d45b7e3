//! One smeared descent step: perturb, downsample, differentiate the coarse
//! diagram, push the gradient back to the source grid, add the data-fit
//! gradient and take an Adam step.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{downsample, sample_weighting, AdamParams, AdamState, DownsampleSpec};
use crate::backprop::{compose_downsample_gradient, pullback_gradient};
use crate::error::{Error, Result};
use crate::field::{add_uniform_noise, bce, bce_gradient, mse, mse_gradient, ScalarField};
use crate::functional::{diagram_gradient, mixed_loss, wasserstein_norm, FunctionalSpec};
use crate::persistence::diagram_of;

pub const LOSS_LOG_HEADER: &str = "step,wall_ms,topo_loss,data_loss,total_loss";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataTerm {
    Mse,
    Bce,
}

impl DataTerm {
    pub fn value(&self, f: &ScalarField, f0: &ScalarField) -> Result<f64> {
        match self {
            DataTerm::Mse => mse(f, f0),
            DataTerm::Bce => bce(f, f0),
        }
    }

    pub fn gradient(&self, f: &ScalarField, f0: &ScalarField) -> Result<ScalarField> {
        match self {
            DataTerm::Mse => mse_gradient(f, f0),
            DataTerm::Bce => bce_gradient(f, f0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Stump,
    /// Plain topological gradient: no noise, no downsampling.
    Vanilla,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpConfig {
    pub functional: FunctionalSpec,
    pub alpha: f64,
    pub data_term: DataTerm,
    pub eps: f64,
    pub downsample: DownsampleSpec,
    pub adam: AdamParams,
    pub steps: usize,
    pub seed: u64,
}

impl StumpConfig {
    /// The configuration actually iterated in `mode`.
    pub fn for_mode(&self, mode: Mode) -> Self {
        match mode {
            Mode::Stump => *self,
            Mode::Vanilla => Self {
                eps: 0.0,
                downsample: DownsampleSpec::identity(),
                ..*self
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.functional.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha = {}", self.alpha)));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {}", self.eps)));
        }
        if self.downsample.patch == 0 {
            return Err(Error::InvalidParameter("patch size must be >= 1".into()));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::InvalidParameter(format!("lr = {}", self.adam.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    /// Functional value on the (noisy, downsampled) approximate.
    pub topo: f64,
    pub data: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub wall_ms: f64,
    pub losses: StepLosses,
}

impl StepRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.step, self.wall_ms, self.losses.topo, self.losses.data, self.losses.total
        )
    }
}

pub fn loss_log_csv(log: &[StepRecord]) -> String {
    let mut out = String::from(LOSS_LOG_HEADER);
    out.push('\n');
    for r in log {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Full mixed-loss gradient at `field` for one draw of noise and weighting.
pub fn stump_gradient<R: rand::Rng + ?Sized>(
    field: &ScalarField,
    f0: &ScalarField,
    cfg: &StumpConfig,
    rng: &mut R,
) -> Result<(ScalarField, StepLosses)> {
    let noisy = add_uniform_noise(field, cfg.eps, rng)?;
    let w = sample_weighting(&cfg.downsample, field.shape(), rng);
    let coarse = downsample(&noisy, &w)?;
    let diag = diagram_of(&coarse);
    let topo = wasserstein_norm(&diag, &cfg.functional);
    let dgrad = diagram_gradient(&diag, &cfg.functional);
    let coarse_grad = pullback_gradient(&dgrad, coarse.shape())?;
    let mut grad = compose_downsample_gradient(&coarse_grad, &w)?;

    let data = cfg.data_term.value(field, f0)?;
    let data_grad = cfg.data_term.gradient(field, f0)?;
    let a = cfg.alpha;
    for (g, d) in grad.values_mut().iter_mut().zip(data_grad.values()) {
        *g = a * *g + (1.0 - a) * d;
    }
    let total = mixed_loss(topo, data, a)?;
    Ok((grad, StepLosses { topo, data, total }))
}

/// Stateful descent loop; each call to [`Optimizer::step`] is one iteration.
#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: StumpConfig,
    f0: ScalarField,
    field: ScalarField,
    adam: AdamState,
    rng: ChaCha8Rng,
    step: usize,
}

impl Optimizer {
    /// Starts at `f0`, which is also the data-fit target.
    pub fn new(f0: &ScalarField, cfg: &StumpConfig, mode: Mode) -> Result<Self> {
        let cfg = cfg.for_mode(mode);
        cfg.validate()?;
        Ok(Self {
            adam: AdamState::new(cfg.adam, f0.len()),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            f0: f0.clone(),
            field: f0.clone(),
            cfg,
            step: 0,
        })
    }

    pub fn config(&self) -> &StumpConfig {
        &self.cfg
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn target(&self) -> &ScalarField {
        &self.f0
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn step(&mut self) -> Result<StepRecord> {
        let start = Instant::now();
        let (grad, losses) = stump_gradient(&self.field, &self.f0, &self.cfg, &mut self.rng)?;
        self.adam.step(&grad, &mut self.field)?;
        self.step += 1;
        Ok(StepRecord {
            step: self.step,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            losses,
        })
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: ScalarField,
    pub log: Vec<StepRecord>,
}

impl RunOutput {
    pub fn loss_log_csv(&self) -> String {
        loss_log_csv(&self.log)
    }
}

/// Iterates `cfg.steps` descent steps from `f0`.
pub fn run(f0: &ScalarField, cfg: &StumpConfig, mode: Mode) -> Result<RunOutput> {
    let mut opt = Optimizer::new(f0, cfg, mode)?;
    let mut log = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        log.push(opt.step()?);
    }
    Ok(RunOutput {
        field: opt.into_field(),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{EndpointMask, Sign};
    use crate::smear::Measure;
    use rand::Rng;

    fn random_field(rows: usize, cols: usize, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_fn(rows, cols, |_, _| rng.gen_range(0.0..255.0))
    }

    fn config(steps: usize) -> StumpConfig {
        StumpConfig {
            functional: FunctionalSpec::new(1.0, 0, 10.0),
            alpha: 0.9,
            data_term: DataTerm::Mse,
            eps: 20.0,
            downsample: DownsampleSpec::new(2, Measure::SimplexUniform).unwrap(),
            adam: AdamParams::default(),
            steps,
            seed: 17,
        }
    }

    #[test]
    fn zero_steps_returns_input() {
        let f = random_field(6, 6, 1);
        let out = run(&f, &config(0), Mode::Stump).unwrap();
        assert_eq!(out.field, f);
        assert!(out.log.is_empty());
        assert_eq!(out.loss_log_csv(), format!("{LOSS_LOG_HEADER}\n"));
    }

    #[test]
    fn trajectory_is_reproducible() {
        let f = random_field(10, 10, 2);
        let a = run(&f, &config(20), Mode::Stump).unwrap();
        let b = run(&f, &config(20), Mode::Stump).unwrap();
        assert_eq!(a.field, b.field);
        let losses = |o: &RunOutput| o.log.iter().map(|r| r.losses).collect::<Vec<_>>();
        assert_eq!(losses(&a), losses(&b));
    }

    #[test]
    fn degenerate_config_matches_vanilla_gradient() {
        let f = random_field(8, 8, 3);
        let mut cfg = config(1);
        cfg.alpha = 1.0;
        cfg.eps = 0.0;
        cfg.downsample = DownsampleSpec::new(1, Measure::SimplexUniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (g1, _) = stump_gradient(&f, &f, &cfg, &mut rng).unwrap();
        let vanilla = cfg.for_mode(Mode::Vanilla);
        let (g2, _) = stump_gradient(&f, &f, &vanilla, &mut rng).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn vanilla_mode_disables_smearing() {
        let cfg = config(1).for_mode(Mode::Vanilla);
        assert_eq!(cfg.eps, 0.0);
        assert_eq!(cfg.downsample.patch, 1);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = config(1);
        cfg.alpha = 1.2;
        assert!(Optimizer::new(&random_field(3, 3, 0), &cfg, Mode::Stump).is_err());
    }

    #[test]
    fn maximizing_death_raises_wall() {
        // two basins separated by a wall; pushing the wall's death pixel up
        let f = ScalarField::new(1, 5, vec![0.0, 20.0, 30.0, 20.0, 5.0]).unwrap();
        let mut cfg = config(50);
        cfg.functional = FunctionalSpec::new(1.0, 0, 1.0)
            .with_sign(Sign::Maximize)
            .with_mask(EndpointMask::DeathsOnly)
            .with_essential(crate::functional::EssentialPolicy::Exclude);
        cfg.eps = 0.0;
        cfg.alpha = 1.0;
        cfg.downsample = DownsampleSpec::identity();
        let out = run(&f, &cfg, Mode::Stump).unwrap();
        assert!(out.field.values()[2] > 31.0);
        assert_eq!(out.field.values()[0], 0.0);
    }
}

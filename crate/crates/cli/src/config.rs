//! Run configuration: a flat `key = value` file, overridable field by field
//! from the command line.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use topo_smear::field::{load_field, FieldFormat};
use topo_smear::functional::{EndpointMask, EssentialPolicy, FunctionalSpec, RegionSpec, Sign};
use topo_smear::smear::{AdamParams, DataTerm, DownsampleSpec, Measure, Mode, StumpConfig};
use topo_smear::ScalarField;

use crate::gen::{gen_blobs, gen_circle, gen_double_well, BlobParams, WellParams};
use crate::preset::Preset;
use crate::{CliError, Result};

/// Every setting is optional here; defaults come from the preset and then
/// from the subcommand. Unknown keys in the file are an error.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Generator name (wells, circle, blobs) or a .csv/.png path.
    #[arg(long)]
    pub input: Option<String>,
    /// Input file format: csv, png8 or png16 (default: from the extension).
    #[arg(long)]
    pub format: Option<String>,
    /// Generator grid size (square).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub gen_seed: Option<u64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub n_blobs: Option<usize>,

    /// Task preset: wells, circle, blobs or segmentation.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub hom_dim: Option<u8>,
    /// births, deaths or both.
    #[arg(long)]
    pub endpoints: Option<String>,
    /// minimize or maximize.
    #[arg(long)]
    pub sign: Option<String>,
    /// exclude or clamp.
    #[arg(long)]
    pub essential: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub birth_min: Option<f64>,
    #[arg(long)]
    pub birth_max: Option<f64>,
    #[arg(long)]
    pub life_min: Option<f64>,
    #[arg(long)]
    pub life_max: Option<f64>,
    /// Optimize superlevel-set topology by negating the field.
    #[arg(long)]
    pub superlevel: Option<bool>,

    /// Topological weight; default 1 - 1/P.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// mse or bce.
    #[arg(long)]
    pub data_term: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub patch: Option<usize>,
    /// center, vertex or simplex.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub adam_eps: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// stump or vanilla.
    #[arg(long)]
    pub mode: Option<String>,

    /// Samples for `smearvis`.
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Slices per sliced matching in `smearvis`.
    #[arg(long)]
    pub n_proj: Option<usize>,
    /// Wall budget per arm for `bench`, in seconds.
    #[arg(long)]
    pub budget_secs: Option<f64>,
    /// Seconds between loss evaluations in a timed `bench`.
    #[arg(long)]
    pub eval_secs: Option<f64>,
    /// Steps between loss evaluations in a step-limited `bench`.
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Wasserstein exponent of the common `bench` loss.
    #[arg(long)]
    pub eval_p: Option<f64>,
    /// p used by the vanilla arm of `bench`.
    #[arg(long)]
    pub vanilla_p: Option<f64>,

    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    /// Settings present in `other` replace ours.
    pub fn overlay(&mut self, other: &RunConfig) {
        overlay!(self, other;
            input, format, size, gen_seed, n_points, n_blobs,
            preset, hom_dim, endpoints, sign, essential, p,
            birth_min, birth_max, life_min, life_max, superlevel,
            alpha, data_term, eps, patch, measure, lr, beta1, beta2, adam_eps,
            steps, seed, mode, n_samples, n_proj, budget_secs, eval_secs,
            eval_every, eval_p, vanilla_p, output);
    }

    /// Fill unset settings from `defaults`.
    pub fn or(mut self, defaults: &RunConfig) -> Self {
        let mut merged = defaults.clone();
        merged.overlay(&self);
        std::mem::swap(&mut self, &mut merged);
        self
    }

    pub fn preset(&self) -> Result<Option<Preset>> {
        self.preset.as_deref().map(str::parse).transpose()
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or(CliError::Missing("seed"))
    }

    pub fn output_dir(&self) -> Result<&Path> {
        self.output.as_deref().ok_or(CliError::Missing("output"))
    }

    pub fn superlevel(&self) -> Result<bool> {
        Ok(self
            .superlevel
            .or(self.preset()?.map(|p| p.defaults().superlevel))
            .unwrap_or(false))
    }

    /// Loads or generates the input, in its original orientation.
    pub fn load_input(&self) -> Result<ScalarField> {
        let input = self.input.as_deref().ok_or(CliError::Missing("input"))?;
        let size = self.size.unwrap_or(64);
        let gen_seed = self.gen_seed.unwrap_or(0);
        match input {
            "wells" => gen_double_well(size, size, &WellParams::default()),
            "circle" => gen_circle(size, size, self.n_points.unwrap_or(20), None, gen_seed),
            "blobs" => {
                let params = BlobParams {
                    n_blobs: self.n_blobs.unwrap_or(3),
                    ..BlobParams::default()
                };
                gen_blobs(size, size, &params, gen_seed)
            }
            path => {
                let format = match self.format.as_deref() {
                    Some(f) => parse_format(f)?,
                    None => format_from_extension(Path::new(path))?,
                };
                Ok(load_field(path, format)?)
            }
        }
    }

    /// Input in the orientation the optimizer works in.
    pub fn working_input(&self) -> Result<ScalarField> {
        let f = self.load_input()?;
        Ok(if self.superlevel()? { f.negated() } else { f })
    }

    pub fn functional(&self) -> Result<FunctionalSpec> {
        let preset = self.preset()?.map(|p| p.defaults().functional);
        let hom_dim = self
            .hom_dim
            .or(preset.map(|f| f.hom_dim))
            .ok_or(CliError::Missing("hom_dim (or preset)"))?;
        let mut spec = preset.unwrap_or_else(|| FunctionalSpec::new(1.0, hom_dim, 0.0));
        if spec.hom_dim != hom_dim {
            spec.hom_dim = hom_dim;
            spec.essential_policy = EssentialPolicy::default_for(hom_dim);
        }
        if let Some(p) = self.p {
            spec.p = p;
        }
        if let Some(s) = &self.sign {
            spec.sign = match s.as_str() {
                "minimize" => Sign::Minimize,
                "maximize" => Sign::Maximize,
                _ => return Err(bad("sign", s)),
            };
        }
        if let Some(m) = &self.endpoints {
            spec.endpoint_mask = match m.as_str() {
                "births" => EndpointMask::BirthsOnly,
                "deaths" => EndpointMask::DeathsOnly,
                "both" => EndpointMask::Both,
                _ => return Err(bad("endpoints", m)),
            };
        }
        if let Some(e) = &self.essential {
            spec.essential_policy = match e.as_str() {
                "exclude" => EssentialPolicy::Exclude,
                "clamp" => EssentialPolicy::ClampToMax,
                _ => return Err(bad("essential", e)),
            };
        }
        let r = spec.region;
        spec.region = RegionSpec::new(
            self.birth_min.unwrap_or(r.birth_min),
            self.birth_max.unwrap_or(r.birth_max),
            self.life_min.unwrap_or(r.life_min),
            self.life_max.unwrap_or(r.life_max),
        )?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn mode(&self) -> Result<Mode> {
        match self.mode.as_deref().unwrap_or("stump") {
            "stump" => Ok(Mode::Stump),
            "vanilla" => Ok(Mode::Vanilla),
            m => Err(bad("mode", m)),
        }
    }

    pub fn downsample(&self) -> Result<DownsampleSpec> {
        let patch = self
            .patch
            .or(self.preset()?.map(|p| p.defaults().patch))
            .unwrap_or(5);
        let measure = match self.measure.as_deref().unwrap_or("simplex") {
            "center" => Measure::Center,
            "vertex" => Measure::VertexUniform,
            "simplex" => Measure::SimplexUniform,
            m => return Err(bad("measure", m)),
        };
        Ok(DownsampleSpec::new(patch, measure)?)
    }

    pub fn eps(&self) -> Result<f64> {
        Ok(self
            .eps
            .or(self.preset()?.map(|p| p.defaults().eps))
            .unwrap_or(0.0))
    }

    /// Full descent configuration for an input with `n_pixels` pixels.
    pub fn stump_config(&self, n_pixels: usize) -> Result<StumpConfig> {
        let data_term = match self.data_term.as_deref() {
            Some("mse") => DataTerm::Mse,
            Some("bce") => DataTerm::Bce,
            Some(other) => return Err(bad("data_term", other)),
            None => self
                .preset()?
                .map_or(DataTerm::Mse, |p| p.defaults().data_term),
        };
        let d = AdamParams::default();
        let cfg = StumpConfig {
            functional: self.functional()?,
            alpha: self.alpha.unwrap_or(1.0 - 1.0 / n_pixels as f64),
            data_term,
            eps: self.eps()?,
            downsample: self.downsample()?,
            adam: AdamParams {
                lr: self.lr.unwrap_or(d.lr),
                beta1: self.beta1.unwrap_or(d.beta1),
                beta2: self.beta2.unwrap_or(d.beta2),
                eps_hat: self.adam_eps.unwrap_or(d.eps_hat),
            },
            steps: self.steps.unwrap_or(10_000),
            seed: self.seed()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn bad(key: &'static str, value: &str) -> CliError {
    CliError::Value {
        key,
        message: format!("`{value}` is not recognized"),
    }
}

pub fn parse_format(s: &str) -> Result<FieldFormat> {
    match s {
        "csv" => Ok(FieldFormat::Csv),
        "png8" => Ok(FieldFormat::Png8),
        "png16" => Ok(FieldFormat::Png16),
        _ => Err(bad("format", s)),
    }
}

fn format_from_extension(path: &Path) -> Result<FieldFormat> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(FieldFormat::Csv),
        Some("png") => Ok(FieldFormat::Png8),
        _ => Err(CliError::Value {
            key: "format",
            message: format!("cannot infer the format of {}", path.display()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridden_by_flags() {
        let mut cfg = RunConfig::parse("input = \"blobs\"\nseed = 3\neps = 10.0\npreset = \"blobs\"").unwrap();
        let flags = RunConfig {
            eps: Some(20.0),
            ..RunConfig::default()
        };
        cfg.overlay(&flags);
        assert_eq!(cfg.eps, Some(20.0));
        assert_eq!(cfg.seed, Some(3));
        let stump = cfg.stump_config(4096).unwrap();
        assert_eq!(stump.eps, 20.0);
        assert_eq!(stump.alpha, 1.0 - 1.0 / 4096.0);
        assert_eq!(stump.adam.lr, 0.05);
        assert_eq!(stump.steps, 10_000);
        assert_eq!(stump.functional.hom_dim, 0);
    }

    #[test]
    fn unknown_key_and_missing_seed() {
        assert!(RunConfig::parse("colour = 3").is_err());
        let cfg = RunConfig::parse("preset = \"wells\"").unwrap();
        assert!(matches!(cfg.stump_config(10), Err(CliError::Missing("seed"))));
    }

    #[test]
    fn explicit_functional_without_preset() {
        let cfg = RunConfig::parse(
            "hom_dim = 1\nendpoints = \"births\"\nsign = \"maximize\"\nlife_min = 5.0\np = 2.0",
        )
        .unwrap();
        let f = cfg.functional().unwrap();
        assert_eq!(f.hom_dim, 1);
        assert_eq!(f.p, 2.0);
        assert_eq!(f.endpoint_mask, EndpointMask::BirthsOnly);
        assert_eq!(f.region.life_min, 5.0);
        assert!(RunConfig::parse("hom_dim = 1\nsign = \"up\"").unwrap().functional().is_err());
    }

    #[test]
    fn defaults_fill_only_missing() {
        let cfg = RunConfig {
            eps: Some(1.0),
            ..RunConfig::default()
        };
        let d = RunConfig {
            eps: Some(50.0),
            patch: Some(5),
            ..RunConfig::default()
        };
        let m = cfg.or(&d);
        assert_eq!((m.eps, m.patch), (Some(1.0), Some(5)));
    }

    #[test]
    fn superlevel_follows_preset() {
        let cfg = RunConfig::parse("input = \"circle\"\npreset = \"circle\"").unwrap();
        assert!(cfg.superlevel().unwrap());
        assert_eq!(cfg.working_input().unwrap(), cfg.load_input().unwrap().negated());
    }
}

//! Task presets: which diagram feature to move, in which direction, and the
//! noise level each task runs with.

use std::str::FromStr;

use topo_smear::functional::{EndpointMask, EssentialPolicy, FunctionalSpec, RegionSpec, Sign};
use topo_smear::smear::DataTerm;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Raise a wall between two depressions (sublevel H0, deaths up).
    Wells,
    /// Make a bright ring close earlier (superlevel H1, births).
    Circle,
    /// Raise the bridges between bright blobs (superlevel H0, deaths).
    Blobs,
    /// Thin-structure cleanup on a user image with a BCE data term.
    Segmentation,
}

impl FromStr for Preset {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "wells" => Ok(Preset::Wells),
            "circle" => Ok(Preset::Circle),
            "blobs" => Ok(Preset::Blobs),
            "segmentation" => Ok(Preset::Segmentation),
            _ => Err(CliError::Value {
                key: "preset",
                message: format!("unknown preset `{s}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetDefaults {
    pub functional: FunctionalSpec,
    pub eps: f64,
    pub patch: usize,
    pub data_term: DataTerm,
    /// Optimize the negated field and negate back on export.
    pub superlevel: bool,
}

impl Preset {
    pub fn defaults(self) -> PresetDefaults {
        let base = |dim, life| FunctionalSpec {
            p: 1.0,
            region: RegionSpec::lifetime_above(life),
            hom_dim: dim,
            sign: Sign::Minimize,
            endpoint_mask: EndpointMask::Both,
            essential_policy: EssentialPolicy::Exclude,
        };
        match self {
            Preset::Wells => PresetDefaults {
                functional: base(0, 50.0)
                    .with_sign(Sign::Maximize)
                    .with_mask(EndpointMask::DeathsOnly),
                eps: 50.0,
                patch: 2,
                data_term: DataTerm::Mse,
                superlevel: false,
            },
            Preset::Circle => PresetDefaults {
                functional: base(1, 50.0)
                    .with_sign(Sign::Maximize)
                    .with_mask(EndpointMask::BirthsOnly),
                eps: 100.0,
                patch: 5,
                data_term: DataTerm::Mse,
                superlevel: true,
            },
            Preset::Blobs => PresetDefaults {
                functional: base(0, 50.0).with_mask(EndpointMask::DeathsOnly),
                eps: 50.0,
                patch: 3,
                data_term: DataTerm::Mse,
                superlevel: true,
            },
            Preset::Segmentation => PresetDefaults {
                functional: base(0, 70.0),
                eps: 20.0,
                patch: 4,
                data_term: DataTerm::Bce,
                superlevel: false,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in ["wells", "circle", "blobs", "segmentation"] {
            let p: Preset = name.parse().unwrap();
            p.defaults().functional.validate().unwrap();
        }
        assert!("donut".parse::<Preset>().is_err());
        let w = Preset::Wells.defaults().functional;
        assert_eq!((w.hom_dim, w.sign, w.endpoint_mask), (0, Sign::Maximize, EndpointMask::DeathsOnly));
        let c = Preset::Circle.defaults().functional;
        assert_eq!((c.hom_dim, c.sign, c.endpoint_mask), (1, Sign::Maximize, EndpointMask::BirthsOnly));
        let b = Preset::Blobs.defaults().functional;
        assert_eq!((b.hom_dim, b.sign, b.endpoint_mask), (0, Sign::Minimize, EndpointMask::DeathsOnly));
    }
}

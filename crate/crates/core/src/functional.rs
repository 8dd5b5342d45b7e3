//! Thresholded p-Wasserstein norms of persistence diagrams and their
//! gradients with respect to dot coordinates.

use crate::error::{Error, Result};
use crate::persistence::{Dot, PersistenceDiagram};

/// Open box in birth-lifetime coordinates. All four inequalities are strict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub birth_min: f64,
    pub birth_max: f64,
    pub life_min: f64,
    pub life_max: f64,
}

impl RegionSpec {
    pub fn new(birth_min: f64, birth_max: f64, life_min: f64, life_max: f64) -> Result<Self> {
        if !(birth_min <= birth_max) || !(life_min <= life_max) || !(life_min >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bad region [{birth_min}, {birth_max}, {life_min}, {life_max}]"
            )));
        }
        Ok(Self {
            birth_min,
            birth_max,
            life_min,
            life_max,
        })
    }

    /// Every dot with lifetime above `life_min`.
    pub fn lifetime_above(life_min: f64) -> Self {
        Self {
            birth_min: f64::NEG_INFINITY,
            birth_max: f64::INFINITY,
            life_min,
            life_max: f64::INFINITY,
        }
    }

    pub fn contains(&self, birth: f64, lifetime: f64) -> bool {
        self.birth_min < birth
            && birth < self.birth_max
            && self.life_min < lifetime
            && lifetime < self.life_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointMask {
    BirthsOnly,
    DeathsOnly,
    Both,
}

/// How a dot with infinite death enters the functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EssentialPolicy {
    Exclude,
    /// Death is taken to be the field maximum, attained at the argmax pixel.
    ClampToMax,
}

impl EssentialPolicy {
    pub fn default_for(hom_dim: u8) -> Self {
        if hom_dim == 0 {
            Self::ClampToMax
        } else {
            Self::Exclude
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalSpec {
    pub p: f64,
    pub region: RegionSpec,
    pub hom_dim: u8,
    pub sign: Sign,
    pub endpoint_mask: EndpointMask,
    pub essential_policy: EssentialPolicy,
}

impl FunctionalSpec {
    /// Minimize the p-norm of `hom_dim` dots living longer than `life_min`.
    pub fn new(p: f64, hom_dim: u8, life_min: f64) -> Self {
        Self {
            p,
            region: RegionSpec::lifetime_above(life_min),
            hom_dim,
            sign: Sign::Minimize,
            endpoint_mask: EndpointMask::Both,
            essential_policy: EssentialPolicy::default_for(hom_dim),
        }
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_mask(mut self, mask: EndpointMask) -> Self {
        self.endpoint_mask = mask;
        self
    }

    pub fn with_essential(mut self, policy: EssentialPolicy) -> Self {
        self.essential_policy = policy;
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!("p = {} must be >= 1", self.p)));
        }
        if self.hom_dim > 1 {
            return Err(Error::InvalidParameter(format!(
                "homological dimension {} unsupported",
                self.hom_dim
            )));
        }
        RegionSpec::new(
            self.region.birth_min,
            self.region.birth_max,
            self.region.life_min,
            self.region.life_max,
        )?;
        Ok(())
    }

    fn sign_factor(&self) -> f64 {
        match self.sign {
            Sign::Minimize => 1.0,
            Sign::Maximize => -1.0,
        }
    }
}

/// A dot as the functional sees it: finite death and its death pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedDot {
    /// Index into `diagram.dots`.
    pub index: usize,
    pub birth: f64,
    pub death: f64,
    pub birth_vertex: usize,
    pub death_vertex: usize,
}

/// Dots of `spec.hom_dim` inside the region, with essential deaths resolved.
pub fn selected_dots(diag: &PersistenceDiagram, spec: &FunctionalSpec) -> Vec<SelectedDot> {
    diag.dots
        .iter()
        .enumerate()
        .filter(|(_, d)| d.dim == spec.hom_dim)
        .filter_map(|(index, d)| resolve(index, d, diag, spec))
        .filter(|s| spec.region.contains(s.birth, s.death - s.birth))
        .collect()
}

fn resolve(
    index: usize,
    d: &Dot,
    diag: &PersistenceDiagram,
    spec: &FunctionalSpec,
) -> Option<SelectedDot> {
    let (death, death_vertex) = match d.death_vertex {
        Some(v) => (d.death, v),
        None => match spec.essential_policy {
            EssentialPolicy::Exclude => return None,
            EssentialPolicy::ClampToMax => (diag.max_value, diag.max_vertex),
        },
    };
    Some(SelectedDot {
        index,
        birth: d.birth,
        death,
        birth_vertex: d.birth_vertex,
        death_vertex,
    })
}

/// `sum (d - b)^p` over selected dots, negated for maximization tasks.
pub fn wasserstein_norm(diag: &PersistenceDiagram, spec: &FunctionalSpec) -> f64 {
    let total: f64 = selected_dots(diag, spec)
        .iter()
        .map(|s| (s.death - s.birth).powf(spec.p))
        .sum();
    spec.sign_factor() * total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotGradient {
    pub dot: SelectedDot,
    pub d_birth: f64,
    pub d_death: f64,
}

/// Partial derivatives of the functional with respect to each selected dot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagramGradient {
    pub entries: Vec<DotGradient>,
}

impl DiagramGradient {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.d_birth == 0.0 && e.d_death == 0.0)
    }
}

pub fn diagram_gradient(diag: &PersistenceDiagram, spec: &FunctionalSpec) -> DiagramGradient {
    let sign = spec.sign_factor();
    let entries = selected_dots(diag, spec)
        .into_iter()
        .map(|dot| {
            let slope = sign * spec.p * (dot.death - dot.birth).powf(spec.p - 1.0);
            let (mut d_birth, mut d_death) = (-slope, slope);
            match spec.endpoint_mask {
                EndpointMask::BirthsOnly => d_death = 0.0,
                EndpointMask::DeathsOnly => d_birth = 0.0,
                EndpointMask::Both => {}
            }
            DotGradient {
                dot,
                d_birth,
                d_death,
            }
        })
        .collect();
    DiagramGradient { entries }
}

/// `alpha * topo + (1 - alpha) * data`.
pub fn mixed_loss(topo: f64, data: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(alpha * topo + (1.0 - alpha) * data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(pairs: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram {
            field_shape: (1, 2 * pairs.len()),
            dots: pairs
                .iter()
                .enumerate()
                .map(|(i, &(b, d))| Dot {
                    dim: 0,
                    birth: b,
                    death: d,
                    birth_vertex: 2 * i,
                    death_vertex: Some(2 * i + 1),
                })
                .collect(),
            max_vertex: 0,
            max_value: 0.0,
        }
    }

    #[test]
    fn norm_direct_evaluation() {
        let d = diag(&[(0.0, 3.0), (1.0, 2.0), (0.0, 0.3)]);
        assert_eq!(wasserstein_norm(&d, &FunctionalSpec::new(1.0, 0, 0.5)), 4.0);
        assert_eq!(wasserstein_norm(&diag(&[]), &FunctionalSpec::new(1.0, 0, 0.5)), 0.0);
        let d = diag(&[(0.0, 40.0), (10.0, 70.0)]);
        assert_eq!(wasserstein_norm(&d, &FunctionalSpec::new(2.0, 0, 50.0)), 3600.0);
    }

    #[test]
    fn maximize_negates() {
        let d = diag(&[(0.0, 3.0), (1.0, 2.0)]);
        let spec = FunctionalSpec::new(2.0, 0, 0.0);
        assert_eq!(
            wasserstein_norm(&d, &spec.with_sign(Sign::Maximize)),
            -wasserstein_norm(&d, &spec)
        );
    }

    #[test]
    fn gradient_sign_and_mask() {
        let d = diag(&[(1.0, 2.0)]);
        let g = diagram_gradient(&d, &FunctionalSpec::new(1.0, 0, 0.0));
        assert_eq!((g.entries[0].d_birth, g.entries[0].d_death), (-1.0, 1.0));
        let spec = FunctionalSpec::new(2.0, 0, 0.0)
            .with_sign(Sign::Maximize)
            .with_mask(EndpointMask::DeathsOnly);
        let g = diagram_gradient(&d, &spec);
        assert_eq!((g.entries[0].d_birth, g.entries[0].d_death), (0.0, -2.0));
    }

    #[test]
    fn region_boundary_is_open() {
        let d = diag(&[(0.0, 50.0)]);
        let spec = FunctionalSpec::new(1.0, 0, 50.0);
        assert!(diagram_gradient(&d, &spec).entries.is_empty());
        assert_eq!(wasserstein_norm(&d, &spec), 0.0);
    }

    #[test]
    fn essential_policies() {
        let mut d = diag(&[(1.0, 2.0)]);
        d.dots.push(Dot {
            dim: 0,
            birth: 0.0,
            death: f64::INFINITY,
            birth_vertex: 5,
            death_vertex: None,
        });
        d.max_value = 10.0;
        d.max_vertex = 7;
        let spec = FunctionalSpec::new(1.0, 0, 0.0);
        assert_eq!(spec.essential_policy, EssentialPolicy::ClampToMax);
        assert_eq!(wasserstein_norm(&d, &spec), 11.0);
        let sel = selected_dots(&d, &spec);
        assert_eq!(sel[1].death_vertex, 7);
        let excl = spec.with_essential(EssentialPolicy::Exclude);
        assert_eq!(wasserstein_norm(&d, &excl), 1.0);
        assert_eq!(EssentialPolicy::default_for(1), EssentialPolicy::Exclude);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pairs = [(0.3, 4.1), (1.7, 2.9), (-2.0, 5.5), (0.0, 0.2)];
        let h = 1e-6;
        for p in [1.0, 2.0] {
            for sign in [Sign::Minimize, Sign::Maximize] {
                let spec = FunctionalSpec::new(p, 0, 0.5).with_sign(sign);
                let g = diagram_gradient(&diag(&pairs), &spec);
                for e in &g.entries {
                    let i = e.dot.index;
                    let eval = |db: f64, dd: f64| {
                        let mut q = pairs.to_vec();
                        q[i].0 += db;
                        q[i].1 += dd;
                        wasserstein_norm(&diag(&q), &spec)
                    };
                    let fb = (eval(h, 0.0) - eval(-h, 0.0)) / (2.0 * h);
                    let fd = (eval(0.0, h) - eval(0.0, -h)) / (2.0 * h);
                    assert!((fb - e.d_birth).abs() <= 1e-6 * e.d_birth.abs());
                    assert!((fd - e.d_death).abs() <= 1e-6 * e.d_death.abs());
                }
            }
        }
    }

    #[test]
    fn mixed_loss_convexity() {
        assert_eq!(mixed_loss(3.0, 5.0, 1.0).unwrap(), 3.0);
        let alpha = 1.0 - 1.0 / 10000.0;
        let v = mixed_loss(2.0, 4.0, alpha).unwrap();
        assert!((v - (0.9999 * 2.0 + 0.0001 * 4.0)).abs() < 1e-12);
        assert!((mixed_loss(7.0, 7.0, 0.37).unwrap() - 7.0).abs() < 1e-12);
        assert!(mixed_loss(1.0, 1.0, 1.5).is_err());
    }
}

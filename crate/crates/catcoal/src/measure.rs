//! Driving measures for the coalescent.
//!
//! A [`LambdaMeasure`] is one of three kinds: the Kingman point mass at zero
//! (pairwise mergers only, index `alpha = 2`), the Beta(2-alpha, alpha)
//! family, or a general density on (0, 1) that is strongly regularly varying
//! at zero with index `alpha` in (1, 2). Every kind carries a positive
//! `scale` multiplying the whole measure; rates are linear in it.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Kind discriminant, mirroring the accepted `kind=` config values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Kingman,
    Beta,
    GeneralDensity,
}

/// Named density builtins accepted by `kind=density density=<name>`.
#[derive(Clone)]
pub enum DensityFn {
    /// `f(p) = p^(1-alpha)`: the bare regularly varying prototype, `A = 1`
    /// at unit scale.
    PurePower,
    /// The Beta(2-alpha, alpha) probability density. Same measure as
    /// `kind=beta`; used to cross-check quadrature against closed forms.
    BetaDensity,
    /// Arbitrary density with its regular-variation constant declared by the
    /// caller (unit-scale value of `lim f(p)/p^(1-alpha)`).
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, a_lambda: f64, name: String },
}

impl fmt::Debug for DensityFn {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityFn::PurePower => write!(fm, "PurePower"),
            DensityFn::BetaDensity => write!(fm, "BetaDensity"),
            DensityFn::Custom { name, .. } => write!(fm, "Custom({name})"),
        }
    }
}

/// A finite measure on [0, 1] driving the coalescent.
#[derive(Debug, Clone)]
pub struct LambdaMeasure {
    kind: MeasureKind,
    alpha: f64,
    scale: f64,
    density: Option<DensityFn>,
}

/// ln of the Beta function.
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

impl LambdaMeasure {
    /// The unit point mass at zero, times `scale`. Index `alpha = 2`.
    pub fn kingman(scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(Self { kind: MeasureKind::Kingman, alpha: 2.0, scale, density: None })
    }

    /// The Beta(2-alpha, alpha) probability measure, times `scale`.
    pub fn beta(alpha: f64, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("beta measure needs alpha in (1, 2), got {alpha}")));
        }
        Ok(Self { kind: MeasureKind::Beta, alpha, scale, density: None })
    }

    /// A general strongly regularly varying density with index `alpha`.
    pub fn density(alpha: f64, density: DensityFn, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("density measure needs alpha in (1, 2), got {alpha}")));
        }
        Ok(Self { kind: MeasureKind::GeneralDensity, alpha, scale, density: Some(density) })
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same measure with the scale replaced.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        let mut m = self.clone();
        m.scale = scale;
        Ok(m)
    }

    /// The regular-variation constant of the full (scaled) measure:
    /// `lim_{p -> 0} f(p) / p^(1-alpha)`. `None` for Kingman, where no
    /// density exists.
    pub fn a_lambda(&self) -> Option<f64> {
        match self.kind {
            MeasureKind::Kingman => None,
            MeasureKind::Beta => {
                Some(self.scale * (-ln_beta(2.0 - self.alpha, self.alpha)).exp())
            }
            MeasureKind::GeneralDensity => {
                let unit = match self.density.as_ref().expect("density kind carries a density") {
                    DensityFn::PurePower => 1.0,
                    DensityFn::BetaDensity => (-ln_beta(2.0 - self.alpha, self.alpha)).exp(),
                    DensityFn::Custom { a_lambda, .. } => *a_lambda,
                };
                Some(self.scale * unit)
            }
        }
    }

    /// Total mass of the measure, `Lambda[0, 1]`.
    pub fn total_mass(&self) -> f64 {
        match self.kind {
            MeasureKind::Kingman | MeasureKind::Beta => self.scale,
            MeasureKind::GeneralDensity => {
                match self.density.as_ref().expect("density kind carries a density") {
                    DensityFn::BetaDensity => self.scale,
                    // 1 / (2 - alpha) integrates p^(1-alpha) over (0, 1).
                    DensityFn::PurePower => self.scale / (2.0 - self.alpha),
                    DensityFn::Custom { .. } => self
                        .quadrature_mass()
                        .expect("custom density must have a finite mass"),
                }
            }
        }
    }

    /// Pointwise density of the scaled measure at `p` in (0, 1).
    /// Only defined for the density kinds.
    pub fn density_at(&self, p: f64) -> Result<f64> {
        let density = self
            .density
            .as_ref()
            .ok_or_else(|| Error::Domain(format!("{:?} measure has no density", self.kind)))?;
        let unit = match density {
            DensityFn::PurePower => p.powf(1.0 - self.alpha),
            DensityFn::BetaDensity => {
                p.powf(1.0 - self.alpha)
                    * (1.0 - p).powf(self.alpha - 1.0)
                    * (-ln_beta(2.0 - self.alpha, self.alpha)).exp()
            }
            DensityFn::Custom { f, .. } => f(p),
        };
        Ok(self.scale * unit)
    }

    /// Total mass by quadrature. Uses the same singularity-absorbing
    /// substitution as the rate integrals.
    pub fn quadrature_mass(&self) -> Result<f64> {
        crate::rates::density_lambda_bk_quadrature(self, 2, 2, 1e-10, 1e-10)
    }

    /// Parse a plain-text key-value fragment such as
    /// `kind=beta alpha=1.5 scale=1.0`, `kind=kingman`, or
    /// `kind=density alpha=1.5 density=pure_power`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut kind = None;
        let mut alpha = None;
        let mut scale = 1.0_f64;
        let mut density = None;
        for token in spec.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{token}`")))?;
            match key {
                "kind" => kind = Some(value.to_string()),
                "alpha" => {
                    alpha = Some(value.parse::<f64>().map_err(|_| {
                        Error::Config(format!("alpha is not a number: `{value}`"))
                    })?)
                }
                "scale" => {
                    scale = value.parse::<f64>().map_err(|_| {
                        Error::Config(format!("scale is not a number: `{value}`"))
                    })?
                }
                "density" => {
                    density = Some(match value {
                        "pure_power" => DensityFn::PurePower,
                        "beta_density" => DensityFn::BetaDensity,
                        other => {
                            return Err(Error::Config(format!("unknown density builtin `{other}`")))
                        }
                    })
                }
                other => return Err(Error::Config(format!("unknown measure key `{other}`"))),
            }
        }
        match kind.as_deref() {
            Some("kingman") => Self::kingman(scale),
            Some("beta") => {
                let alpha = alpha.ok_or_else(|| Error::Config("beta measure needs alpha=".into()))?;
                Self::beta(alpha, scale)
            }
            Some("density") => {
                let alpha =
                    alpha.ok_or_else(|| Error::Config("density measure needs alpha=".into()))?;
                let density =
                    density.ok_or_else(|| Error::Config("density measure needs density=".into()))?;
                Self::density(alpha, density, scale)
            }
            Some(other) => Err(Error::Config(format!("unknown measure kind `{other}`"))),
            None => Err(Error::Config("measure spec needs kind=".into())),
        }
    }

    /// Canonical config fragment for output headers.
    pub fn spec_string(&self) -> String {
        match self.kind {
            MeasureKind::Kingman => format!("kind=kingman scale={}", self.scale),
            MeasureKind::Beta => format!("kind=beta alpha={} scale={}", self.alpha, self.scale),
            MeasureKind::GeneralDensity => {
                let name = match self.density.as_ref() {
                    Some(DensityFn::PurePower) => "pure_power".to_string(),
                    Some(DensityFn::BetaDensity) => "beta_density".to_string(),
                    Some(DensityFn::Custom { name, .. }) => name.clone(),
                    None => "?".to_string(),
                };
                format!("kind=density alpha={} density={} scale={}", self.alpha, name, self.scale)
            }
        }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive and finite, got {scale}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kingman_is_alpha_two() {
        let m = LambdaMeasure::kingman(1.0).unwrap();
        assert_eq!(m.alpha(), 2.0);
        assert_eq!(m.kind(), MeasureKind::Kingman);
        assert!(m.a_lambda().is_none());
        assert_eq!(m.total_mass(), 1.0);
    }

    #[test]
    fn beta_constant_matches_gamma_product() {
        // A = scale / (Gamma(2-alpha) Gamma(alpha)); at alpha = 1.5 both
        // Gamma factors multiply to pi/2.
        let m = LambdaMeasure::beta(1.5, 1.0).unwrap();
        assert_relative_eq!(m.a_lambda().unwrap(), 2.0 / std::f64::consts::PI, max_relative = 1e-12);
        let scaled = LambdaMeasure::beta(1.5, 3.0).unwrap();
        assert_relative_eq!(scaled.a_lambda().unwrap(), 6.0 / std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn alpha_domain_is_enforced() {
        assert!(LambdaMeasure::beta(1.0, 1.0).is_err());
        assert!(LambdaMeasure::beta(2.0, 1.0).is_err());
        assert!(LambdaMeasure::beta(0.5, 1.0).is_err());
        assert!(LambdaMeasure::density(2.0, DensityFn::PurePower, 1.0).is_err());
        assert!(LambdaMeasure::kingman(0.0).is_err());
        assert!(LambdaMeasure::kingman(-1.0).is_err());
    }

    #[test]
    fn density_regular_variation_limit() {
        // f(p) / p^(1-alpha) must approach a_lambda along p -> 0.
        for (m, expect) in [
            (LambdaMeasure::density(1.5, DensityFn::PurePower, 1.0).unwrap(), 1.0),
            (
                LambdaMeasure::density(1.5, DensityFn::BetaDensity, 2.0).unwrap(),
                4.0 / std::f64::consts::PI,
            ),
        ] {
            let mut prev_err = f64::INFINITY;
            for exp in 2..=8 {
                let p = 10f64.powi(-exp);
                let ratio = m.density_at(p).unwrap() / p.powf(1.0 - m.alpha());
                let err = (ratio - expect).abs();
                assert!(err <= prev_err + 1e-12, "ratio should settle toward A");
                prev_err = err;
            }
            assert!(prev_err < 1e-6);
        }
    }

    #[test]
    fn total_mass_matches_quadrature() {
        for m in [
            LambdaMeasure::density(1.5, DensityFn::PurePower, 1.0).unwrap(),
            LambdaMeasure::density(1.5, DensityFn::BetaDensity, 1.0).unwrap(),
            LambdaMeasure::density(1.2, DensityFn::PurePower, 2.5).unwrap(),
        ] {
            assert_relative_eq!(m.total_mass(), m.quadrature_mass().unwrap(), max_relative = 1e-8);
        }
    }

    #[test]
    fn parse_round_trips() {
        let m = LambdaMeasure::parse("kind=beta alpha=1.5 scale=1.0").unwrap();
        assert_eq!(m.kind(), MeasureKind::Beta);
        assert_eq!(m.alpha(), 1.5);
        assert_eq!(m.scale(), 1.0);

        let m = LambdaMeasure::parse("kind=kingman").unwrap();
        assert_eq!(m.kind(), MeasureKind::Kingman);

        let m = LambdaMeasure::parse("kind=density alpha=1.5 density=pure_power").unwrap();
        assert_eq!(m.kind(), MeasureKind::GeneralDensity);
        assert_eq!(LambdaMeasure::parse(&m.spec_string()).unwrap().spec_string(), m.spec_string());

        assert!(LambdaMeasure::parse("kind=beta").is_err());
        assert!(LambdaMeasure::parse("kind=weird").is_err());
        assert!(LambdaMeasure::parse("alpha=1.5").is_err());
        assert!(LambdaMeasure::parse("kind=beta alpha=abc").is_err());
    }
}

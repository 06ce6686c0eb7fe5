//! Surface configuration files.
//!
//! ```json
//! {"family": "double-corrugation", "period": [6.283185307179586, 6.283185307179586],
//!  "profiles": [{"kind": "piecewise-linear", "amplitude": 1.0,
//!                "breakpoints": [1.5707963267948966, 4.71238898038469]}, ...]}
//! ```
//!
//! Translation surfaces list two space curves under `"curves"` instead of
//! profiles; the sheared family adds `"gamma"`. Profile periods default to the
//! chart period in their direction.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use corruga_core::{Family, Profile, ProfileKind, SpaceCurve, SurfaceChart, Vec3};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    /// `piecewise-linear`, `piecewise-quadratic` or `sinusoidal`.
    pub kind: String,
    /// Slope scale for the piecewise kinds, value amplitude for `sinusoidal`.
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub drift: [f64; 3],
    /// Periodic profile added to each coordinate, `null` for none.
    #[serde(default)]
    pub components: [Option<ProfileConfig>; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub family: String,
    #[serde(default = "default_period")]
    pub period: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<ProfileConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_period() -> [f64; 2] {
    [TAU, TAU]
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ProfileConfig {
    pub fn sgn_cos() -> Self {
        ProfileConfig {
            kind: "piecewise-linear".into(),
            amplitude: 1.0,
            breakpoints: vec![0.5 * PI, 1.5 * PI],
            period: None,
        }
    }

    pub fn triangle_slope() -> Self {
        ProfileConfig { kind: "piecewise-quadratic".into(), amplitude: 1.0, breakpoints: vec![0.0, PI], period: None }
    }

    pub fn cosine(amplitude: f64) -> Self {
        ProfileConfig { kind: "sinusoidal".into(), amplitude, breakpoints: Vec::new(), period: None }
    }

    pub fn to_profile(&self, default_period: f64) -> Result<Profile, CliError> {
        let kind = match self.kind.as_str() {
            "piecewise-linear" => ProfileKind::PiecewiseLinear,
            "piecewise-quadratic" => ProfileKind::PiecewiseQuadratic,
            "sinusoidal" => ProfileKind::Sinusoidal,
            other => return Err(invalid(format!("unknown profile kind `{other}`"))),
        };
        let period = self.period.unwrap_or(default_period);
        Ok(Profile::new(kind, self.amplitude, period, &self.breakpoints)?)
    }
}

impl CurveConfig {
    fn to_curve(&self, period: f64) -> Result<SpaceCurve, CliError> {
        let mut comps = [None, None, None];
        for (slot, c) in comps.iter_mut().zip(&self.components) {
            *slot = c.as_ref().map(|p| p.to_profile(period)).transpose()?;
        }
        let [x, y, z] = self.drift;
        Ok(SpaceCurve::new(Vec3::new(x, y, z), comps, period)?)
    }
}

impl SurfaceConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn family(&self) -> Result<Family, CliError> {
        Family::from_name(&self.family).ok_or_else(|| invalid(format!("unknown family `{}`", self.family)))
    }

    fn profiles_needed(&self, n: usize) -> Result<Vec<Profile>, CliError> {
        if self.profiles.len() != n {
            return Err(invalid(format!("family `{}` takes {n} profile(s), got {}", self.family, self.profiles.len())));
        }
        self.profiles.iter().zip(self.period).map(|(p, t)| p.to_profile(t)).collect()
    }

    pub fn to_chart(&self) -> Result<SurfaceChart, CliError> {
        let family = self.family()?;
        if family != Family::TranslationSurface && !self.curves.is_empty() {
            return Err(invalid("only translation surfaces take curves"));
        }
        if family != Family::ShearedDoubleCorrugation && self.gamma.is_some() {
            return Err(invalid("only the sheared family takes gamma"));
        }
        let chart = match family {
            Family::Plane => {
                self.profiles_needed(0)?;
                SurfaceChart::plane(self.period)?
            }
            Family::SimpleCorrugation => {
                let mut p = self.profiles_needed(1)?;
                SurfaceChart::simple_corrugation(p.remove(0), self.period[1])?
            }
            Family::DoubleCorrugation | Family::MiuraLike | Family::ShearedDoubleCorrugation => {
                let mut p = self.profiles_needed(2)?;
                let (f, g) = (p.remove(0), p.remove(0));
                match family {
                    Family::DoubleCorrugation => SurfaceChart::double_corrugation(f, g)?,
                    Family::MiuraLike => SurfaceChart::miura_like(f, g)?,
                    _ => {
                        let gamma = self.gamma.ok_or_else(|| invalid("the sheared family needs gamma"))?;
                        SurfaceChart::sheared_double_corrugation(f, g, gamma)?
                    }
                }
            }
            Family::TranslationSurface => {
                self.profiles_needed(0)?;
                if self.curves.len() != 2 {
                    return Err(invalid("a translation surface takes exactly two curves"));
                }
                let alpha = self.curves[0].to_curve(self.period[0])?;
                let beta = self.curves[1].to_curve(self.period[1])?;
                SurfaceChart::translation_surface(alpha, beta)?
            }
        };
        if chart.period() != self.period {
            return Err(invalid(format!("profile periods {:?} do not match the chart period {:?}", chart.period(), self.period)));
        }
        Ok(chart)
    }
}

fn surface(family: Family, profiles: Vec<ProfileConfig>) -> SurfaceConfig {
    SurfaceConfig { family: family.name().into(), period: default_period(), profiles, curves: Vec::new(), gamma: None }
}

/// The built-in example surfaces, by name.
pub fn builtin(name: &str) -> Option<SurfaceConfig> {
    let sgn = ProfileConfig::sgn_cos;
    Some(match name {
        "plane" => surface(Family::Plane, vec![]),
        "corrugation" => surface(Family::SimpleCorrugation, vec![sgn()]),
        "eggbox" => surface(Family::DoubleCorrugation, vec![sgn(), sgn()]),
        "hybrid" => surface(Family::DoubleCorrugation, vec![ProfileConfig::triangle_slope(), sgn()]),
        "miura" => surface(Family::MiuraLike, vec![sgn(), sgn()]),
        "translation" => {
            let lift = |amp: f64| {
                let mut p = sgn();
                p.amplitude = amp;
                p
            };
            let mut s = surface(Family::TranslationSurface, vec![]);
            s.curves = vec![
                CurveConfig { drift: [1.0, 0.0, 0.0], components: [None, None, Some(sgn())] },
                CurveConfig {
                    drift: [0.3, 1.0, 0.0],
                    components: [Some(lift(0.5)), None, Some(ProfileConfig::triangle_slope())],
                },
            ];
            s
        }
        "smooth-corrugation" => surface(Family::SimpleCorrugation, vec![ProfileConfig::cosine(0.5)]),
        "smooth-eggbox" => surface(Family::DoubleCorrugation, vec![ProfileConfig::cosine(0.5), ProfileConfig::cosine(0.3)]),
        "sheared" => {
            let mut s = surface(Family::ShearedDoubleCorrugation, vec![sgn(), sgn()]);
            s.gamma = Some(1.0);
            s
        }
        _ => return None,
    })
}

pub const BUILTIN_NAMES: [&str; 9] = [
    "plane",
    "corrugation",
    "eggbox",
    "hybrid",
    "miura",
    "translation",
    "smooth-corrugation",
    "smooth-eggbox",
    "sheared",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_build() {
        for name in BUILTIN_NAMES {
            let cfg = builtin(name).unwrap();
            cfg.to_chart().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        for name in BUILTIN_NAMES {
            let cfg = builtin(name).unwrap();
            let back: SurfaceConfig = serde_json::from_str(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_chart().unwrap(), cfg.to_chart().unwrap());
        }
    }

    #[test]
    fn defaults_apply() {
        let cfg: SurfaceConfig = serde_json::from_str(r#"{"family": "simple-corrugation", "profiles": [{"kind": "sinusoidal"}]}"#).unwrap();
        let chart = cfg.to_chart().unwrap();
        assert_eq!(chart.period(), [TAU, TAU]);
        assert_eq!(chart.profiles().0.unwrap().amplitude(), 1.0);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let cases = [
            r#"{"family": "torus"}"#,
            r#"{"family": "plane", "profiles": [{"kind": "sinusoidal"}]}"#,
            r#"{"family": "double-corrugation", "profiles": [{"kind": "sinusoidal"}]}"#,
            r#"{"family": "simple-corrugation", "profiles": [{"kind": "zigzag"}]}"#,
            r#"{"family": "simple-corrugation", "profiles": [{"kind": "piecewise-linear"}]}"#,
            r#"{"family": "simple-corrugation", "profiles": [{"kind": "sinusoidal", "period": 1.0}]}"#,
            r#"{"family": "sheared-double-corrugation", "profiles": [{"kind": "sinusoidal"}, {"kind": "sinusoidal"}]}"#,
            r#"{"family": "plane", "gamma": 1.0}"#,
        ];
        for c in cases {
            let cfg: SurfaceConfig = serde_json::from_str(c).unwrap();
            assert!(cfg.to_chart().is_err(), "{c}");
        }
        assert!(serde_json::from_str::<SurfaceConfig>(r#"{"family": "plane", "colour": 1}"#).is_err());
    }
}

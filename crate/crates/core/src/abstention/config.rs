use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// The fifteen operator-tunable parameters. Serialises as a flat object;
/// unknown keys are rejected so a typo'd threshold cannot pass silently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbstentionConfig {
    /// Best artist score that activates the artist-driven regime.
    pub tau_artist: f64,
    /// Combined score needed to accept under the artist-driven regime.
    pub tau_artist_accept: f64,
    pub tau_t: f64,
    pub mu_t: f64,
    pub tau_c: f64,
    pub mu_c: f64,
    pub tau_f: f64,
    pub mu_f: f64,
    /// Token vs. trigram weight.
    pub alpha: f64,
    /// (artist, title, subject)
    pub artist_regime_weights: [f64; 3],
    /// (title, subject)
    pub title_regime_weights: [f64; 2],
    /// (artist, subject)
    pub fallback_weights: [f64; 2],
    pub label_first: bool,
    pub strict_abstention: bool,
    pub force_visual: bool,
}

impl Default for AbstentionConfig {
    fn default() -> Self {
        AbstentionConfig {
            tau_artist: 0.45,
            tau_artist_accept: 0.38,
            tau_t: 0.52,
            mu_t: 0.05,
            tau_c: 0.44,
            mu_c: 0.04,
            tau_f: 0.42,
            mu_f: 0.04,
            alpha: 0.65,
            artist_regime_weights: [0.46, 0.36, 0.18],
            title_regime_weights: [0.78, 0.22],
            fallback_weights: [0.70, 0.30],
            label_first: true,
            strict_abstention: true,
            force_visual: false,
        }
    }
}

/// The eight acceptance thresholds and margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdParam {
    TauArtist,
    TauArtistAccept,
    TauT,
    MuT,
    TauC,
    MuC,
    TauF,
    MuF,
}

impl ThresholdParam {
    pub const ALL: [ThresholdParam; 8] = [
        ThresholdParam::TauArtist,
        ThresholdParam::TauArtistAccept,
        ThresholdParam::TauT,
        ThresholdParam::MuT,
        ThresholdParam::TauC,
        ThresholdParam::MuC,
        ThresholdParam::TauF,
        ThresholdParam::MuF,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ThresholdParam::TauArtist => "tau_artist",
            ThresholdParam::TauArtistAccept => "tau_artist_accept",
            ThresholdParam::TauT => "tau_t",
            ThresholdParam::MuT => "mu_t",
            ThresholdParam::TauC => "tau_c",
            ThresholdParam::MuC => "mu_c",
            ThresholdParam::TauF => "tau_f",
            ThresholdParam::MuF => "mu_f",
        }
    }

    pub fn get(self, cfg: &AbstentionConfig) -> f64 {
        match self {
            ThresholdParam::TauArtist => cfg.tau_artist,
            ThresholdParam::TauArtistAccept => cfg.tau_artist_accept,
            ThresholdParam::TauT => cfg.tau_t,
            ThresholdParam::MuT => cfg.mu_t,
            ThresholdParam::TauC => cfg.tau_c,
            ThresholdParam::MuC => cfg.mu_c,
            ThresholdParam::TauF => cfg.tau_f,
            ThresholdParam::MuF => cfg.mu_f,
        }
    }

    pub fn slot(self, cfg: &mut AbstentionConfig) -> &mut f64 {
        match self {
            ThresholdParam::TauArtist => &mut cfg.tau_artist,
            ThresholdParam::TauArtistAccept => &mut cfg.tau_artist_accept,
            ThresholdParam::TauT => &mut cfg.tau_t,
            ThresholdParam::MuT => &mut cfg.mu_t,
            ThresholdParam::TauC => &mut cfg.tau_c,
            ThresholdParam::MuC => &mut cfg.mu_c,
            ThresholdParam::TauF => &mut cfg.tau_f,
            ThresholdParam::MuF => &mut cfg.mu_f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigViolation {
    pub parameter: String,
    pub message: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.parameter, self.message)
    }
}

fn check_unit(name: &str, v: f64, out: &mut Vec<ConfigViolation>) {
    if !(0.0..=1.0).contains(&v) {
        out.push(ConfigViolation {
            parameter: name.into(),
            message: format!("must lie in [0, 1], got {v}"),
        });
    }
}

fn check_weights(name: &str, w: &[f64], out: &mut Vec<ConfigViolation>) {
    if w.iter().any(|x| !(0.0..=1.0).contains(x)) {
        out.push(ConfigViolation {
            parameter: name.into(),
            message: format!("every weight must lie in [0, 1], got {w:?}"),
        });
        return;
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        out.push(ConfigViolation {
            parameter: name.into(),
            message: format!("weights must sum to 1, got {sum}"),
        });
    }
}

impl AbstentionConfig {
    /// Enumerates every offending parameter rather than stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<ConfigViolation>> {
        let mut out = Vec::new();
        for p in ThresholdParam::ALL {
            check_unit(p.name(), p.get(self), &mut out);
        }
        check_unit("alpha", self.alpha, &mut out);
        check_weights("artist_regime_weights", &self.artist_regime_weights, &mut out);
        check_weights("title_regime_weights", &self.title_regime_weights, &mut out);
        check_weights("fallback_weights", &self.fallback_weights, &mut out);
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Copy with every threshold and margin shifted by `delta`, clamped to [0, 1].
    pub fn with_thresholds_shifted(&self, delta: f64) -> Self {
        let mut cfg = self.clone();
        for p in ThresholdParam::ALL {
            let slot = p.slot(&mut cfg);
            *slot = (*slot + delta).clamp(0.0, 1.0);
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn defaults_are_valid() {
        assert_eq!(AbstentionConfig::default().validate(), Ok(()));
    }

    #[test]
    fn serialises_exactly_fifteen_keys() {
        let v = serde_json::to_value(AbstentionConfig::default()).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), 15);
        assert_eq!(obj["tau_artist_accept"], 0.38);
        assert_eq!(obj["artist_regime_weights"], serde_json::json!([0.46, 0.36, 0.18]));
        let back: AbstentionConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, AbstentionConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<AbstentionConfig>(r#"{"tau_tilte": 0.5}"#).unwrap_err();
        assert!(err.to_string().contains("tau_tilte"));
    }

    #[test]
    fn missing_keys_take_defaults() {
        let cfg: AbstentionConfig = serde_json::from_str(r#"{"tau_t": 0.6}"#).unwrap();
        assert_eq!(cfg.tau_t, 0.6);
        assert_eq!(cfg.mu_t, 0.05);
    }

    #[test]
    fn weight_sum_violation_names_tuple() {
        let cfg = AbstentionConfig {
            artist_regime_weights: [0.4, 0.3, 0.2],
            ..Default::default()
        };
        let errs = cfg.validate().unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].parameter, "artist_regime_weights");
    }

    #[test]
    fn boundary_title_weights_accepted() {
        let cfg = AbstentionConfig {
            title_regime_weights: [0.9, 0.1],
            ..Default::default()
        };
        assert_eq!(cfg.validate(), Ok(()));
    }

    #[test]
    fn all_violations_enumerated() {
        let cfg = AbstentionConfig {
            tau_t: 1.5,
            mu_f: -0.1,
            alpha: f64::NAN,
            fallback_weights: [0.5, 0.6],
            ..Default::default()
        };
        let names: Vec<_> = cfg.validate().unwrap_err().into_iter().map(|v| v.parameter).collect();
        assert_eq!(names, ["tau_t", "mu_f", "alpha", "fallback_weights"]);
    }

    #[test]
    fn shift_clamps() {
        let cfg = AbstentionConfig::default().with_thresholds_shifted(0.6);
        assert_eq!(cfg.tau_t, 1.0);
        assert!((cfg.mu_t - 0.65).abs() < 1e-12);
    }
}

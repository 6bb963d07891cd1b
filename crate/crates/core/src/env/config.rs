use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::converter::{channels_for, ActionMode, Converter, ConverterSpec, Topology};
use crate::drive::{LoadParams, MotorKind, MotorModel};
use crate::error::{Error, Result};
use crate::integrate::IntegratorMethod;
use crate::reference::ReferenceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// Weighted sum of absolute errors, negated.
    Wsae,
    /// Weighted sum of squared errors, negated.
    Wsse,
    /// `1 − WSAE` sum.
    Swsae,
    /// `1 − WSSE` sum.
    Swsse,
}

impl RewardKind {
    pub fn is_shifted(self) -> bool {
        matches!(self, RewardKind::Swsae | RewardKind::Swsse)
    }
}

/// Reward returned on the step that violates a limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LimitPenalty {
    Zero,
    Constant { value: f64 },
    /// `−1 / (1 − γ)`, with `γ` the agent's discount factor.
    QBased { gamma: f64 },
}

/// Complete environment configuration. Per-entry maps are keyed by the entry
/// names of [`MotorKind::entries`]; missing weights and noise levels are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub motor: MotorModel,
    pub converter: ConverterSpec,
    pub load: LoadParams,
    pub integrator: IntegratorMethod,
    /// Sampling time in seconds.
    pub tau: f64,
    pub episode_length: usize,
    pub prediction_horizon: usize,
    pub reward_function: RewardKind,
    #[serde(default)]
    pub reward_weights: BTreeMap<String, f64>,
    /// Factor between nominal values and hard limits.
    pub safety_margin: f64,
    pub nominal: BTreeMap<String, f64>,
    #[serde(default)]
    pub noise_levels: BTreeMap<String, f64>,
    pub limit_penalty: LimitPenalty,
    #[serde(default)]
    pub zero_references: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reference: ReferenceConfig,
}

fn nominal_defaults(kind: MotorKind) -> BTreeMap<String, f64> {
    let pairs: &[(&str, f64)] = match kind {
        MotorKind::Series | MotorKind::PermanentlyExcited => {
            &[("omega", 368.0), ("torque", 250.0), ("i", 50.0), ("u", 420.0), ("u_sup", 420.0)]
        }
        MotorKind::ExternallyExcited => &[
            ("omega", 368.0),
            ("torque", 250.0),
            ("i_a", 50.0),
            ("i_e", 50.0),
            ("u_a", 420.0),
            ("u_e", 420.0),
            ("u_sup", 420.0),
        ],
        MotorKind::Shunt => {
            &[("omega", 368.0), ("torque", 250.0), ("i_a", 50.0), ("i_e", 10.0), ("u", 420.0), ("u_sup", 420.0)]
        }
        MotorKind::Pmsm => &[
            ("omega", 942.0),
            ("torque", 30.0),
            ("i_a", 100.0),
            ("i_b", 100.0),
            ("i_c", 100.0),
            ("u_a", 150.0),
            ("u_b", 150.0),
            ("u_c", 150.0),
            ("u_sup", 300.0),
        ],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl EnvConfig {
    /// Default configuration for a motor family and action mode. DC motors are
    /// fed by a 1QC, the PMSM by a B6 bridge; the speed is the tracked quantity.
    pub fn default_for(kind: MotorKind, mode: ActionMode) -> Self {
        let nominal = nominal_defaults(kind);
        let (topology, u_sup) = if kind.is_dc() { (Topology::OneQuadrant, 420.0) } else { (Topology::B6, 300.0) };
        EnvConfig {
            motor: MotorModel::default_for(kind),
            converter: ConverterSpec::new(topology, mode, u_sup),
            load: LoadParams::default(),
            integrator: IntegratorMethod::Rk4,
            tau: 1e-4,
            episode_length: 10_000,
            prediction_horizon: 1,
            reward_function: RewardKind::Swsae,
            reward_weights: BTreeMap::from([("omega".to_string(), 1.0)]),
            safety_margin: 1.3,
            nominal,
            noise_levels: BTreeMap::new(),
            limit_penalty: LimitPenalty::Zero,
            zero_references: Vec::new(),
            seed: 0,
            reference: ReferenceConfig::default(),
        }
    }

    /// Parses an environment id of the form `<motor>-<cont|disc>-v0`.
    pub fn from_id(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split('-').collect();
        let [motor, mode, "v0"] = parts.as_slice() else {
            return Err(Error::config(format!("unknown environment id '{id}', expected <motor>-<cont|disc>-v0")));
        };
        let kind = MotorKind::from_id(motor).ok_or_else(|| Error::config(format!("unknown motor '{motor}' in '{id}'")))?;
        let mode = match *mode {
            "cont" => ActionMode::Continuous,
            "disc" => ActionMode::Discrete,
            other => return Err(Error::config(format!("unknown action type '{other}' in '{id}'"))),
        };
        Ok(Self::default_for(kind, mode))
    }

    /// Environment id matching this configuration.
    pub fn id(&self) -> String {
        let mode = match self.converter.mode {
            ActionMode::Continuous => "cont",
            ActionMode::Discrete => "disc",
        };
        format!("{}-{mode}-v0", self.motor.kind())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: EnvConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes to toml")
    }

    /// Applies `overrides` on top of this configuration. Tables merge
    /// recursively; unknown keys are rejected with the key named in the error.
    ///
    /// `reward_weights` is replaced as a whole, so overriding it selects a new
    /// set of tracked entries.
    pub fn with_overrides(&self, overrides: &toml::Table) -> Result<Self> {
        let mut base = toml::Table::try_from(self).map_err(|e| Error::config(e.to_string()))?;
        if let Some(w) = overrides.get("reward_weights") {
            base.insert("reward_weights".to_string(), w.clone());
        }
        merge_tables(&mut base, overrides);
        let cfg: EnvConfig = base.try_into().map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable hex digest of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("configuration serializes to json");
        let hash = Sha256::digest(&json);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.motor.validate()?;
        self.load.validate()?;
        self.integrator.validate()?;
        let kind = self.motor.kind();
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::config(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.episode_length == 0 {
            return Err(Error::config("episode_length must be >= 1"));
        }
        if self.prediction_horizon == 0 {
            return Err(Error::config("prediction_horizon must be >= 1"));
        }
        if !(self.safety_margin.is_finite() && self.safety_margin >= 1.0) {
            return Err(Error::config(format!("safety_margin must be >= 1, got {}", self.safety_margin)));
        }
        let known = |name: &str| kind.entry_index(name).is_some();
        for (section, map) in [("reward_weights", &self.reward_weights), ("noise_levels", &self.noise_levels)] {
            for (name, v) in map {
                if !known(name) {
                    return Err(Error::config(format!("{section}: unknown entry '{name}' for {kind} motor")));
                }
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(Error::config(format!("{section}.{name} must be >= 0, got {v}")));
                }
            }
        }
        for (name, v) in &self.nominal {
            if !known(name) || name == "epsilon" {
                return Err(Error::config(format!("nominal: unknown or non-configurable entry '{name}'")));
            }
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::config(format!("nominal.{name} must be > 0, got {v}")));
            }
        }
        for entry in kind.entries() {
            if entry.name != "epsilon" && !self.nominal.contains_key(entry.name) {
                return Err(Error::config(format!("nominal value for '{}' missing", entry.name)));
            }
        }
        let weight_sum: f64 = self.reward_weights.values().sum();
        if weight_sum <= 0.0 {
            return Err(Error::config("at least one reward weight must be positive"));
        }
        if (weight_sum - 1.0).abs() > 1e-9 {
            log::warn!("reward weights sum to {weight_sum}, rewards leave their nominal range");
        }
        for name in &self.zero_references {
            if self.reward_weights.get(name).copied().unwrap_or(0.0) <= 0.0 {
                return Err(Error::config(format!("zero reference for '{name}', which has no positive reward weight")));
            }
        }
        match self.limit_penalty {
            LimitPenalty::Zero => {}
            LimitPenalty::Constant { value } => {
                if !(value.is_finite() && value < 0.0) {
                    return Err(Error::config(format!("constant limit penalty must be < 0, got {value}")));
                }
            }
            LimitPenalty::QBased { gamma } => {
                crate::env::reward::violation_penalty(&LimitPenalty::QBased { gamma })?;
            }
        }
        let channels = channels_for(&self.converter, kind.is_dc(), kind.input_len())?;
        Converter::new(self.converter, self.tau, channels)?;
        self.reference.validate()?;
        Ok(())
    }
}

fn merge_tables(base: &mut toml::Table, overrides: &toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(key.clone(), value.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_id() {
        for kind in MotorKind::ALL {
            for mode in ["cont", "disc"] {
                let cfg = EnvConfig::from_id(&format!("{kind}-{mode}-v0")).unwrap();
                cfg.validate().unwrap();
                assert_eq!(cfg.id(), format!("{kind}-{mode}-v0"));
            }
        }
    }

    #[test]
    fn bad_ids_rejected() {
        for id in ["series-cont", "dc-cont-v0", "series-fast-v0", "series-cont-v1"] {
            assert!(EnvConfig::from_id(id).unwrap_err().is_config(), "{id}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = EnvConfig::from_id("extex-disc-v0").unwrap();
        let back = EnvConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.digest(), back.digest());
    }

    #[test]
    fn unknown_key_named_in_error() {
        let cfg = EnvConfig::from_id("series-cont-v0").unwrap();
        let overrides: toml::Table = toml::from_str("[load]\nfoo = 1.0").unwrap();
        let msg = cfg.with_overrides(&overrides).unwrap_err().to_string();
        assert!(msg.contains("foo"), "{msg}");

        let mut text = cfg.to_toml_string();
        text.push_str("\nbogus_key = 3\n");
        let msg = EnvConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(msg.contains("bogus_key"), "{msg}");
    }

    #[test]
    fn overrides_merge_nested_tables() {
        let cfg = EnvConfig::from_id("series-cont-v0").unwrap();
        let overrides: toml::Table =
            toml::from_str("tau = 5e-5\n[motor]\nr_a = 3.0\n[limit_penalty]\nmode = \"q_based\"\ngamma = 0.9").unwrap();
        let cfg = cfg.with_overrides(&overrides).unwrap();
        assert_eq!(cfg.tau, 5e-5);
        assert_eq!(cfg.motor.dc_params().unwrap().r_a, 3.0);
        assert_eq!(cfg.motor.dc_params().unwrap().l_a, 6.3e-3);
        assert_eq!(cfg.limit_penalty, LimitPenalty::QBased { gamma: 0.9 });
    }

    #[test]
    fn reward_weights_are_replaced() {
        let cfg = EnvConfig::from_id("series-cont-v0").unwrap();
        let overrides: toml::Table = toml::from_str("[reward_weights]\ni = 1.0").unwrap();
        let cfg = cfg.with_overrides(&overrides).unwrap();
        assert_eq!(cfg.reward_weights, BTreeMap::from([("i".to_string(), 1.0)]));
    }

    #[test]
    fn invalid_values_rejected() {
        let base = EnvConfig::from_id("series-cont-v0").unwrap();
        let cases = [
            "safety_margin = 0.5",
            "[limit_penalty]\nmode = \"q_based\"\ngamma = 1.0",
            "[limit_penalty]\nmode = \"constant\"\nvalue = 2.0",
            "[reward_weights]\nomega = 0.0",
            "[reward_weights]\nphi = 1.0",
            "zero_references = [\"i\"]",
            "[converter]\ninterlocking_time = -1.0",
        ];
        for case in cases {
            let overrides: toml::Table = toml::from_str(case).unwrap();
            assert!(base.with_overrides(&overrides).unwrap_err().is_config(), "{case}");
        }
    }
}

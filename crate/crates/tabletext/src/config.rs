//! Run configuration: training hyperparameters, beam settings, presets, and
//! the key=value config-file format (flags > file > defaults).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub d: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub bptt_truncation: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub gamma_l: f64,
    pub gamma_r: f64,
    pub use_reconstruction: bool,
    /// Forces tau uniform (gate bypassed) at training and inference; the
    /// gate supervision term is dropped. Ablation experiments only.
    #[serde(default)]
    pub ablate_gate: bool,
    /// Global-norm gradient clip; 0 disables.
    pub grad_clip: f64,
    pub min_count: usize,
}

impl Default for TrainConfig {
    /// Desk-scale defaults; optimizer hyperparameters follow the reference
    /// setup (lr 0.15, decay 0.97, dropout 0.3, weights 1/0.05/1/1 and
    /// 0.05/0.05).
    fn default() -> Self {
        TrainConfig {
            d: 16,
            lr: 0.15,
            lr_decay: 0.97,
            dropout: 0.3,
            batch_size: 2,
            bptt_truncation: 100,
            max_epochs: 30,
            seed: 1,
            lambda1: 1.0,
            lambda2: 0.05,
            lambda3: 1.0,
            lambda4: 1.0,
            gamma_l: 0.05,
            gamma_r: 0.05,
            use_reconstruction: false,
            ablate_gate: false,
            grad_clip: 5.0,
            min_count: 1,
        }
    }
}

impl TrainConfig {
    /// Full-scale preset: d=600, batch 5, truncation 100.
    pub fn paper() -> Self {
        TrainConfig { d: 600, batch_size: 5, ..TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.d % 2 != 0 {
            return Err(Error::Config(format!(
                "dimension d must be even and >= 2, got {}",
                self.d
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout must be in [0,1), got {}", self.dropout)));
        }
        for (name, l) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda4", self.lambda4),
        ] {
            if l < 0.0 {
                return Err(Error::Config(format!("{name} must be >= 0, got {l}")));
            }
        }
        if self.batch_size == 0 || self.bptt_truncation == 0 {
            return Err(Error::Config("batch_size and bptt_truncation must be >= 1".into()));
        }
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be >= 1".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` pair; unknown keys are rejected.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: std::num::ParseFloatError| Error::Config(format!("{key}: {e}"));
        let bad_i = |e: std::num::ParseIntError| Error::Config(format!("{key}: {e}"));
        match key {
            "d" => self.d = value.parse().map_err(bad_i)?,
            "lr" => self.lr = value.parse().map_err(bad)?,
            "lr_decay" => self.lr_decay = value.parse().map_err(bad)?,
            "dropout" => self.dropout = value.parse().map_err(bad)?,
            "batch_size" => self.batch_size = value.parse().map_err(bad_i)?,
            "bptt_truncation" => self.bptt_truncation = value.parse().map_err(bad_i)?,
            "max_epochs" => self.max_epochs = value.parse().map_err(bad_i)?,
            "seed" => self.seed = value.parse().map_err(bad_i)?,
            "lambda1" => self.lambda1 = value.parse().map_err(bad)?,
            "lambda2" => self.lambda2 = value.parse().map_err(bad)?,
            "lambda3" => self.lambda3 = value.parse().map_err(bad)?,
            "lambda4" => self.lambda4 = value.parse().map_err(bad)?,
            "gamma_l" => self.gamma_l = value.parse().map_err(bad)?,
            "gamma_r" => self.gamma_r = value.parse().map_err(bad)?,
            "use_reconstruction" => {
                self.use_reconstruction = value
                    .parse()
                    .map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "ablate_gate" => {
                self.ablate_gate = value
                    .parse()
                    .map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "grad_clip" => self.grad_clip = value.parse().map_err(bad)?,
            "min_count" => self.min_count = value.parse().map_err(bad_i)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a config file: one `key = value` per line, `#` comments.
    pub fn apply_file(&mut self, content: &str) -> Result<()> {
        for (i, raw) in content.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key = value, got {raw:?}"),
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam_size: usize,
    /// Maximum number of emitted tokens before generation is cut off.
    pub max_length: usize,
    /// Cap on inferred static plan length.
    pub max_plan_length: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig { beam_size: 5, max_length: 60, max_plan_length: 30 }
    }
}

impl BeamConfig {
    pub fn paper() -> Self {
        BeamConfig { beam_size: 5, max_length: 850, max_plan_length: 80 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam_size must be >= 1".into()));
        }
        if self.max_length == 0 || self.max_plan_length == 0 {
            return Err(Error::Config("max_length and max_plan_length must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults_and_rejects_unknown_keys() {
        let mut cfg = TrainConfig::default();
        cfg.apply_file("d = 8\nlr = 0.2 # comment\n\n# full line comment\nseed=9\n").unwrap();
        assert_eq!(cfg.d, 8);
        assert_eq!(cfg.lr, 0.2);
        assert_eq!(cfg.seed, 9);
        assert!(cfg.apply_file("mystery = 1\n").is_err());
    }

    #[test]
    fn odd_dimension_rejected() {
        let cfg = TrainConfig { d: 7, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn paper_preset_values() {
        let cfg = TrainConfig::paper();
        assert_eq!(cfg.d, 600);
        assert_eq!(cfg.batch_size, 5);
        assert_eq!(cfg.lr, 0.15);
        assert_eq!(cfg.lr_decay, 0.97);
        assert_eq!(cfg.dropout, 0.3);
        assert_eq!(cfg.bptt_truncation, 100);
        assert_eq!((cfg.lambda1, cfg.lambda2, cfg.lambda3, cfg.lambda4), (1.0, 0.05, 1.0, 1.0));
        assert_eq!((cfg.gamma_l, cfg.gamma_r), (0.05, 0.05));
        assert_eq!(BeamConfig::paper().beam_size, 5);
    }
}

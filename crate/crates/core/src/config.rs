//! Scene configuration files and configuration hashing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::PhysicsConfig;
use crate::env::EnvConfig;
use crate::error::EnvError;
use crate::learner::TrainConfig;

/// Physics plus environment settings, as stored in a scene JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub physics: PhysicsConfig,
    pub env: EnvConfig,
}

impl SceneConfig {
    pub fn full_scale() -> Self {
        Self {
            physics: PhysicsConfig::full_scale(),
            env: EnvConfig::default(),
        }
    }

    /// 9×9 net with 20 ms physics steps.
    pub fn desk_scale() -> Self {
        Self {
            physics: PhysicsConfig::desk_scale(),
            env: EnvConfig::default(),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "full" => Some(Self::full_scale()),
            "desk" => Some(Self::desk_scale()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        self.physics.validate()?;
        self.env.validate(&self.physics)
    }

    pub fn from_json(text: &str) -> Result<Self, EnvError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| EnvError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn hash(&self) -> String {
        hash_json(&serde_json::to_value(self).expect("scene serialises"))
    }
}

/// SHA-256 of the scene and, when given, the training configuration.
pub fn config_hash(scene: &SceneConfig, train: Option<&TrainConfig>) -> String {
    let value = serde_json::json!({ "scene": scene, "train": train });
    hash_json(&value)
}

fn hash_json(value: &serde_json::Value) -> String {
    let text = serde_json::to_string(value).expect("json value serialises");
    hex::encode(Sha256::digest(text.as_bytes()))
}

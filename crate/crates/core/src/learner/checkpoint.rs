//! Versioned JSON snapshot of the policy parameters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{ActorCritic, MlpShape};
use crate::error::LearnerError;
use crate::scalar::Real;

pub const CHECKPOINT_FORMAT: &str = "tethernet-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// Hash of the scene and training configuration the policy was trained with.
    pub config_hash: String,
    pub global_step: u64,
    pub shape: MlpShape,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new<T: Real>(net: &ActorCritic<T>, config_hash: &str, global_step: u64) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_hash: config_hash.into(),
            global_step,
            shape: net.shape.clone(),
            params: net.params.iter().map(|p| p.as_f64()).collect(),
        }
    }

    pub fn network<T: Real>(&self) -> Result<ActorCritic<T>, LearnerError> {
        ActorCritic::from_params(
            self.shape.clone(),
            self.params.iter().map(|p| T::of(*p)).collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        let c: Self =
            serde_json::from_str(text).map_err(|e| LearnerError::Checkpoint(e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(LearnerError::Checkpoint(format!(
                "unknown format {:?}",
                c.format
            )));
        }
        if c.version != CHECKPOINT_VERSION {
            return Err(LearnerError::Checkpoint(format!(
                "unsupported version {}",
                c.version
            )));
        }
        c.network::<f64>()?;
        Ok(c)
    }

    /// Writes through a temporary file so a crash never leaves a truncated checkpoint.
    pub fn save(&self, path: &Path) -> Result<(), LearnerError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_json())
            .map_err(|e| LearnerError::Checkpoint(format!("{}: {e}", tmp.display())))?;
        fs::rename(&tmp, path)
            .map_err(|e| LearnerError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, LearnerError> {
        let text = fs::read_to_string(path)
            .map_err(|e| LearnerError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = ActorCritic::<f64>::orthogonal(MlpShape::new(26, vec![64, 64], 2), &mut rng);
        let c = Checkpoint::new(&net, "abc", 42);
        let back = Checkpoint::from_json(&c.to_json()).unwrap();
        assert_eq!(back.network::<f64>().unwrap(), net);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        assert!(Checkpoint::from_json("{").is_err());
        let mut c = Checkpoint::new(
            &ActorCritic::<f64>::zeros(MlpShape::new(2, vec![3], 2)),
            "",
            0,
        );
        c.params.pop();
        assert!(matches!(
            Checkpoint::from_json(&c.to_json()),
            Err(LearnerError::Shape(_))
        ));
        c.version = 9;
        assert!(Checkpoint::from_json(&c.to_json()).is_err());
    }
}

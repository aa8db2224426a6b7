//! JSON model descriptions.
//!
//! ```json
//! {"epsilon": 0.1, "theta": 0.01, "panel_path": "panel.txt"}
//! {"n": 4, "initial": [0.5, 0.5], "transition": [[0.9, 0.1], [0.1, 0.9]]}
//! {"n": 2, "alphabet": 2, "probs": [0.1, 0.2, 0.3, 0.4]}
//! ```

use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{read_panel, ExplicitJointModel, HmmModel, MarkovChainModel, SequenceModel};
use crate::error::{Error, Result};
use crate::sequence::{parse_symbols, Alphabet, Symbol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Hmm {
        epsilon: f64,
        theta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        panel_path: Option<PathBuf>,
        /// Inline panel rows, as an alternative to `panel_path`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        panel: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet: Option<usize>,
    },
    Markov {
        n: usize,
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
    Explicit {
        n: usize,
        alphabet: usize,
        probs: Vec<f64>,
    },
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// Builds the model; relative panel paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<AnyModel> {
        match self {
            ModelConfig::Hmm {
                epsilon,
                theta,
                panel_path,
                panel,
                alphabet,
            } => {
                let rows = match (panel_path, panel) {
                    (Some(p), None) => read_panel(base_dir.join(p))?,
                    (None, Some(rows)) => rows
                        .iter()
                        .map(|r| parse_symbols(r))
                        .collect::<Result<Vec<_>>>()?,
                    _ => return Err(Error::input("give exactly one of panel_path or panel")),
                };
                let alphabet = match alphabet {
                    Some(a) => Alphabet::new(*a)?,
                    None => infer_alphabet(&rows)?,
                };
                Ok(AnyModel::Hmm(HmmModel::new(rows, alphabet, *epsilon, *theta)?))
            }
            ModelConfig::Markov {
                n,
                initial,
                transition,
            } => {
                let alphabet = Alphabet::new(initial.len())?;
                let flat = transition.iter().flatten().copied().collect();
                Ok(AnyModel::Markov(MarkovChainModel::new(
                    *n,
                    alphabet,
                    initial.clone(),
                    flat,
                )?))
            }
            ModelConfig::Explicit { n, alphabet, probs } => Ok(AnyModel::Explicit(
                ExplicitJointModel::new(*n, Alphabet::new(*alphabet)?, probs.clone())?,
            )),
        }
    }
}

/// Binary unless the panel uses larger symbols.
pub(crate) fn infer_alphabet(panel: &[Vec<Symbol>]) -> Result<Alphabet> {
    let max = panel.iter().flatten().copied().max().unwrap_or(0) as usize;
    Alphabet::new((max + 1).max(2))
}

/// Any of the built-in models, for callers that pick one at run time.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Explicit(ExplicitJointModel<f64>),
    Markov(MarkovChainModel<f64>),
    Hmm(HmmModel<f64>),
}

impl AnyModel {
    pub fn as_hmm(&self) -> Option<&HmmModel<f64>> {
        match self {
            AnyModel::Hmm(h) => Some(h),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn SequenceModel<f64> {
        match self {
            AnyModel::Explicit(m) => m,
            AnyModel::Markov(m) => m,
            AnyModel::Hmm(m) => m,
        }
    }
}

impl SequenceModel<f64> for AnyModel {
    fn len(&self) -> usize {
        self.inner().len()
    }

    fn arity(&self, i: usize) -> usize {
        self.inner().arity(i)
    }

    fn joint_prob(&self, x: &[Symbol]) -> Result<f64> {
        self.inner().joint_prob(x)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<Symbol> {
        self.inner().sample(rng)
    }
}

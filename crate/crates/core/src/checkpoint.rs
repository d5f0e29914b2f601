//! Single-document JSON checkpoints holding configs and named tensors.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use adequa_autodiff::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discriminator::{Discriminator, DiscriminatorConfig};
use crate::error::{contract, Result};
use crate::generator::{Generator, GeneratorConfig};
use crate::params::ParamSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section<C> {
    pub config: C,
    pub tensors: BTreeMap<String, Tensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub generator: Section<GeneratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminator: Option<Section<DiscriminatorConfig>>,
}

fn section<C: Clone>(config: &C, params: &ParamSet) -> Section<C> {
    Section {
        config: config.clone(),
        tensors: params.iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
    }
}

/// Reorder named tensors into the layout of `reference`.
fn restore(reference: ParamSet, tensors: &BTreeMap<String, Tensor>) -> Result<ParamSet> {
    if reference.len() != tensors.len() {
        return Err(contract(format!(
            "checkpoint holds {} tensors, configuration expects {}",
            tensors.len(),
            reference.len()
        )));
    }
    let mut out = ParamSet::new();
    for (name, _) in reference.iter() {
        let t = tensors
            .get(name)
            .ok_or_else(|| contract(format!("checkpoint is missing tensor {name}")))?;
        out.insert(name, t.clone());
    }
    Ok(out)
}

impl Checkpoint {
    pub fn new(generator: &Generator, discriminator: Option<&Discriminator>) -> Self {
        Self {
            generator: section(&generator.config, &generator.params),
            discriminator: discriminator.map(|d| section(&d.config, &d.params)),
        }
    }

    pub fn generator(&self) -> Result<Generator> {
        let c = self.generator.config.clone();
        let layout = Generator::seeded(c.clone(), 0)?.params;
        Generator::from_params(c, restore(layout, &self.generator.tensors)?)
    }

    pub fn discriminator(&self) -> Result<Option<Discriminator>> {
        let Some(s) = &self.discriminator else {
            return Ok(None);
        };
        let layout = Discriminator::new(s.config.clone(), &mut ChaCha8Rng::seed_from_u64(0))?.params;
        Ok(Some(Discriminator::from_params(s.config.clone(), restore(layout, &s.tensors)?)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

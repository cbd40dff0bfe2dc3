//! Reference datasets with known governing equations.

pub mod burgers;
pub mod consistency;
pub mod dataset;
pub mod diffusion;
pub mod porous;
pub mod reaction_diffusion;

use serde::{Deserialize, Serialize};

pub use burgers::{gen_burgers, BurgersConfig, BurgersInitial};
pub use dataset::Dataset;
pub use diffusion::{gen_diffusion, DiffusionConfig};
pub use porous::{gen_porous_medium, PorousConfig};
pub use reaction_diffusion::{gen_reaction_diffusion, RdConfig, RdInitial};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorConfig {
    Diffusion(DiffusionConfig),
    Burgers(BurgersConfig),
    Porous(PorousConfig),
    ReactionDiffusion(RdConfig),
}

impl GeneratorConfig {
    pub fn generate(&self) -> Result<Dataset> {
        match self {
            GeneratorConfig::Diffusion(c) => gen_diffusion(c),
            GeneratorConfig::Burgers(c) => gen_burgers(c),
            GeneratorConfig::Porous(c) => gen_porous_medium(c),
            GeneratorConfig::ReactionDiffusion(c) => gen_reaction_diffusion(c),
        }
    }
}

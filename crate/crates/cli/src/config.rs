//! Run configuration: a JSON file whose every key has a default, with
//! command-line flags layered on top.

use std::path::{Path, PathBuf};

use clap::Args;
use frscat::classifier::EvalProtocol;
use frscat::features::{default_order_grid, PatchConfig};
use frscat::fixtures::TextureSpec;
use frscat::{FilterBankSpec, FractionalOrderPair};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub bank: FilterBankSpec,
    /// `[alpha1, alpha2]` settings swept by `features`.
    pub order_grid: Vec<[f64; 2]>,
    pub patch: PatchConfig,
    pub protocol: EvalProtocol,
    pub texture: TextureSpec,
    /// Seed for synthetic fixtures.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            bank: FilterBankSpec::default(),
            order_grid: default_order_grid().iter().map(|o| [o.alpha1, o.alpha2]).collect(),
            patch: PatchConfig::default(),
            protocol: EvalProtocol::default(),
            texture: TextureSpec::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(e.to_string()).at(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()).at(path))
    }

    pub fn orders(&self) -> CliResult<Vec<FractionalOrderPair>> {
        if self.order_grid.is_empty() {
            return Err(CliError::Config("order_grid is empty".into()));
        }
        self.order_grid
            .iter()
            .map(|&[a, b]| FractionalOrderPair::new(a, b).map_err(Into::into))
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        self.bank.validate()?;
        self.orders()?;
        self.protocol.validate()?;
        let p = &self.patch;
        if p.window == 0 || p.stride == 0 || !(p.overlap_threshold > 0.0 && p.overlap_threshold <= 1.0) {
            return Err(CliError::Config(format!(
                "patch needs positive window and stride and overlap_threshold in (0, 1], got {p:?}"
            )));
        }
        Ok(())
    }
}

/// Flags shared by every command that reads a configuration.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// JSON configuration file; missing keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of wavelet scales S.
    #[arg(long)]
    pub scales: Option<usize>,
    /// Number of orientations K.
    #[arg(long)]
    pub angles: Option<usize>,
    #[arg(long)]
    pub sigma_phi: Option<f64>,
    #[arg(long)]
    pub sigma_psi: Option<f64>,
    /// Bank grid width in samples.
    #[arg(long)]
    pub grid_width: Option<usize>,
    /// Bank grid height in samples.
    #[arg(long)]
    pub grid_height: Option<usize>,
    /// Deepest scattering order.
    #[arg(long)]
    pub max_order: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = RunConfig::load(self.config.as_deref())?;
        let b = &mut c.bank;
        if let Some(v) = self.scales {
            b.num_scales = v;
        }
        if let Some(v) = self.angles {
            b.num_angles = v;
        }
        if let Some(v) = self.sigma_phi {
            b.sigma_phi = v;
        }
        if let Some(v) = self.sigma_psi {
            b.sigma_psi = v;
        }
        if let Some(v) = self.grid_width {
            b.grid_width = v;
        }
        if let Some(v) = self.grid_height {
            b.grid_height = v;
        }
        if let Some(v) = self.max_order {
            b.max_order = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
            c.protocol.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

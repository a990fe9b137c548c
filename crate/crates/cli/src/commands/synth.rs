use std::path::{Path, PathBuf};

use frscat::features::default_order_grid;
use frscat::fixtures::{class_separation, fixture_set, to_unit_range, TextureSpec};
use frscat::io::{write_pnm, PnmImage};
use frscat::{build_morlet_bank, FractionalOrderPair};
use serde::{Deserialize, Serialize};

use crate::config::ConfigArgs;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, read_gray, relative_to, write_json};

/// The classical transform should barely tell the two classes apart.
pub const CLASSICAL_RATIO_MAX: f64 = 1.2;
/// Some fractional setting should separate them clearly.
pub const FRACTIONAL_RATIO_MIN: f64 = 1.4;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestImage {
    #[serde(default)]
    pub name: Option<String>,
    /// Image path relative to the manifest.
    pub file: String,
    /// Label mask path relative to the manifest.
    #[serde(default)]
    pub mask: Option<String>,
    #[serde(default)]
    pub class: Option<i32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderRatio {
    pub alpha1: f64,
    pub alpha2: f64,
    pub ratio: f64,
}

/// Measured class separation of the stored images, with pass thresholds.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discriminability {
    pub classical_ratio: f64,
    pub best_fractional_ratio: f64,
    pub best_order: [f64; 2],
    pub ratios: Vec<OrderRatio>,
    pub classical_ratio_max: f64,
    pub best_fractional_ratio_min: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub texture: Option<TextureSpec>,
    pub images: Vec<ManifestImage>,
    #[serde(default)]
    pub discriminability: Option<Discriminability>,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(e.to_string()).at(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Io(e.to_string()).at(path))
    }
}

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Fixture root; images go to `synthetic/`, the manifest to the root.
    #[arg(long)]
    pub out: PathBuf,
}

fn write(img: &PnmImage, path: &Path) -> CliResult<()> {
    write_pnm(img, path).map_err(|e| CliError::from(e).at(path))
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg = args.config.resolve()?;
    let spec = cfg.texture;
    if spec.size == 0 || !(spec.cutoff > 0.0 && spec.cutoff <= 0.5) {
        return Err(CliError::Config(format!("texture needs size > 0 and cutoff in (0, 0.5], got {spec:?}")));
    }
    FractionalOrderPair::new(spec.chirp_order, 1.0)?;
    let bank = build_morlet_bank(&cfg.bank.clone().with_grid(spec.size, spec.size))?;

    ensure_dir(&args.out.join("synthetic"))?;
    let manifest_path = args.out.join("manifest.json");
    let mut images = Vec::new();
    for f in fixture_set(&spec, cfg.seed) {
        let file = format!("synthetic/{}.pgm", f.name);
        let mask = format!("synthetic/{}_mask.pgm", f.name);
        write(&PnmImage::from_real_scaled(&to_unit_range(&f.image), 0.0, 1.0), &args.out.join(&file))?;
        write(&PnmImage::from_mask(&f.mask)?, &args.out.join(&mask))?;
        images.push(ManifestImage { name: Some(f.name), file, mask: Some(mask), class: Some(f.class) });
    }

    // Measure on the quantized files, which is what consumers will read.
    let mut stored = Vec::with_capacity(images.len());
    for im in &images {
        stored.push((im.class.unwrap_or(0), read_gray(&relative_to(&manifest_path, &im.file))?));
    }
    let grid = default_order_grid();
    let ratios = class_separation(&stored, &bank, &grid)?;
    let classical = grid.iter().zip(&ratios).find(|(o, _)| o.is_classical()).map_or(f64::NAN, |(_, r)| *r);
    let (best_order, best) = grid
        .iter()
        .zip(&ratios)
        .filter(|(o, _)| !o.is_classical())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(o, r)| (*o, *r))
        .expect("grid has fractional settings");
    let disc = Discriminability {
        classical_ratio: classical,
        best_fractional_ratio: best,
        best_order: [best_order.alpha1, best_order.alpha2],
        ratios: grid.iter().zip(&ratios).map(|(o, &ratio)| OrderRatio { alpha1: o.alpha1, alpha2: o.alpha2, ratio }).collect(),
        classical_ratio_max: CLASSICAL_RATIO_MAX,
        best_fractional_ratio_min: FRACTIONAL_RATIO_MIN,
    };
    let manifest = Manifest { seed: Some(cfg.seed), texture: Some(spec), images, discriminability: Some(disc) };
    write_json(&manifest_path, &manifest)?;

    println!(
        "{} images; separation ratio {classical:.4} at (1, 1), {best:.4} at {best_order}",
        manifest.images.len()
    );
    if classical > CLASSICAL_RATIO_MAX || best < FRACTIONAL_RATIO_MIN {
        eprintln!(
            "warning: separation outside the expected band (classical <= {CLASSICAL_RATIO_MAX}, best >= {FRACTIONAL_RATIO_MIN})"
        );
    }
    Ok(())
}

use std::path::PathBuf;

use frscat::io::{write_pnm, PnmImage};
use frscat::scattering::{energy_report, EnergyRow, LayerEnergy};
use frscat::{build_morlet_bank, scatter, FractionalOrderPair};
use serde::Serialize;

use crate::config::ConfigArgs;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, path_label, read_gray, write_json};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Input PGM/PPM; color images are averaged to gray.
    pub image: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Fractional order along the width axis.
    #[arg(long, default_value_t = 1.0)]
    pub alpha1: f64,
    /// Fractional order along the height axis.
    #[arg(long, default_value_t = 1.0)]
    pub alpha2: f64,
}

#[derive(Serialize)]
struct Range {
    index: usize,
    path: String,
    order: usize,
    min: f64,
    max: f64,
    mean: f64,
    energy: f64,
}

#[derive(Serialize)]
struct Ledger<'a> {
    orders: FractionalOrderPair,
    input_energy: f64,
    layers: &'a [LayerEnergy],
    residual: f64,
    /// Energy fractions; absent for an all-zero input.
    report: Option<Vec<EnergyRow>>,
}

pub fn run(args: &Args) -> CliResult<()> {
    let orders = FractionalOrderPair::new(args.alpha1, args.alpha2)?;
    let cfg = args.config.resolve()?;
    let x = read_gray(&args.image)?;
    let bank = build_morlet_bank(&cfg.bank.clone().with_grid(x.width(), x.height()))?;
    let result = scatter(&x, &bank, orders)?;

    let coeff_dir = args.out.join("coefficients");
    ensure_dir(&coeff_dir)?;
    let mut ranges = Vec::with_capacity(result.len());
    for (index, (path, c)) in result.iter().enumerate() {
        let (min, max) = c.min_max();
        let label = path_label(path);
        let file = coeff_dir.join(format!("{index:04}_{label}.pgm"));
        write_pnm(&PnmImage::from_real_scaled(c, min, max), &file).map_err(|e| CliError::from(e).at(&file))?;
        ranges.push(Range { index, path: label, order: path.order(), min, max, mean: c.mean(), energy: c.norm_sq() });
    }
    write_json(&args.out.join("ranges.json"), &ranges)?;

    let input_energy = x.norm_sq();
    let report = if input_energy > 0.0 { Some(energy_report(&result, input_energy)?) } else { None };
    let ledger = Ledger { orders, input_energy, layers: result.ledger(), residual: result.residual_energy(), report };
    write_json(&args.out.join("ledger.json"), &ledger)?;

    println!("{} paths at {orders}, coefficient energy {:.6e} of {:.6e}", result.len(), result.energy(), input_energy);
    Ok(())
}

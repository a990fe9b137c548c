use std::path::PathBuf;

use frscat::io::{write_pnm, PnmImage};
use frscat::scattering::path_count;
use frscat::{build_morlet_bank, littlewood_paley, ComplexImage, FilterBankSpec, LPReport, RealImage};
use serde::Serialize;

use crate::config::ConfigArgs;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Directory for `lp_report.json` and the filter magnitude images.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the report as JSON on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    spec: &'a FilterBankSpec,
    normalization: f64,
    num_paths: usize,
    littlewood_paley: LPReport,
}

/// Centered `|h|` so that zero frequency lands mid-image.
fn centered_magnitude(h: &ComplexImage) -> RealImage {
    let (w, ht) = h.dims();
    RealImage::from_fn(w, ht, |x, y| h.get((x + w - w / 2) % w, (y + ht - ht / 2) % ht).norm())
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg = args.config.resolve()?;
    let bank = build_morlet_bank(&cfg.bank)?;
    let spec = bank.spec();
    let report = Report {
        spec,
        normalization: bank.normalization(),
        num_paths: path_count(spec.num_scales, spec.num_angles, spec.max_order),
        littlewood_paley: littlewood_paley(&bank),
    };
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_json(&dir.join("lp_report.json"), &report)?;
        let mut images = vec![("phi".to_string(), centered_magnitude(bank.phi_hat()))];
        for ((j, k), h) in bank.band_pass() {
            images.push((format!("psi_j{j}k{k}"), centered_magnitude(h)));
        }
        // One shared scale keeps relative filter gains visible.
        let peak = images.iter().map(|(_, m)| m.min_max().1).fold(0.0f64, f64::max);
        for (name, m) in &images {
            let path = dir.join(format!("{name}.pgm"));
            write_pnm(&PnmImage::from_real_scaled(m, 0.0, peak), &path).map_err(|e| CliError::from(e).at(&path))?;
        }
    }
    if args.json || args.out.is_none() {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let lp = &report.littlewood_paley;
        println!(
            "{} filters, {} paths, LP sum in [{:.4}, {:.4}], epsilon {:.4}",
            1 + spec.num_scales * spec.num_angles,
            report.num_paths,
            lp.min_sum,
            lp.max_sum,
            lp.epsilon
        );
    }
    Ok(())
}

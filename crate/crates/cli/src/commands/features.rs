use std::path::{Path, PathBuf};

use frscat::io::save_tensor;
use frscat::{assemble_q, build_morlet_bank, enumerate_paths, extract_patches, normalize_patch, FeatureTensor, LabeledPatch};

use crate::commands::synth::Manifest;
use crate::config::ConfigArgs;
use crate::error::{CliError, CliResult};
use crate::output::{csv_writer, parse_pair, path_label, read_image, relative_to};

#[derive(clap::Args, Debug)]
#[command(group(clap::ArgGroup::new("input").required(true).multiple(true).args(["manifest", "pair"])))]
pub struct Args {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// JSON manifest listing images and their masks.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// An `IMAGE:MASK` pair; may be repeated.
    #[arg(long, value_parser = parse_pair)]
    pub pair: Vec<(PathBuf, PathBuf)>,
    /// Output tensor file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the features as CSV, one row per (order, patch).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn inputs(args: &Args) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    if let Some(path) = &args.manifest {
        let manifest = Manifest::load(path)?;
        for entry in &manifest.images {
            let mask = entry.mask.as_deref().ok_or_else(|| {
                CliError::Data(format!("manifest entry {} has no mask", entry.file)).at(path)
            })?;
            out.push((relative_to(path, &entry.file), relative_to(path, mask)));
        }
    }
    out.extend(args.pair.iter().cloned());
    if out.is_empty() {
        return Err(CliError::Data("no input images".into()));
    }
    Ok(out)
}

fn load_patches(id: usize, image: &Path, mask: &Path, cfg: &crate::config::RunConfig) -> CliResult<Vec<LabeledPatch>> {
    let img = read_image(image)?.to_multi_image();
    let m = read_image(mask)?.to_mask().map_err(|e| CliError::from(e).at(mask))?;
    let patches = extract_patches(&img, &m, id, &cfg.patch).map_err(|e| CliError::from(e).at(image))?;
    Ok(patches.iter().map(normalize_patch).collect())
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg = args.config.resolve()?;
    let orders = cfg.orders()?;
    let mut patches = Vec::new();
    for (id, (image, mask)) in inputs(args)?.iter().enumerate() {
        patches.extend(load_patches(id, image, mask, &cfg)?);
    }
    if patches.is_empty() {
        return Err(CliError::Data("no patch passed the overlap threshold".into()));
    }
    let bank = build_morlet_bank(&cfg.bank)?;
    let tensor = assemble_q(&patches, &bank, &orders)?;
    save_tensor(&tensor, &args.out).map_err(|e| CliError::from(e).at(&args.out))?;
    if let Some(csv) = &args.csv {
        write_csv(csv, &tensor, &patches, &bank)?;
    }
    let (l, n, d) = tensor.dims();
    let targets = tensor.labels().iter().filter(|&&c| c == frscat::features::TARGET_LABEL).count();
    println!("{n} patches ({targets} target, {} background), {l} features, {d} order settings", n - targets);
    Ok(())
}

fn write_csv(path: &Path, t: &FeatureTensor, patches: &[LabeledPatch], bank: &frscat::FilterBank) -> CliResult<()> {
    let spec = bank.spec();
    let channels = patches[0].channels.len();
    let mut header = vec!["alpha1".to_string(), "alpha2".into(), "image".into(), "x".into(), "y".into(), "label".into()];
    for p in enumerate_paths(spec.num_scales, spec.num_angles, spec.max_order) {
        let label = path_label(&p);
        header.extend((0..channels).map(|c| format!("{label}_c{c}")));
    }
    let mut w = csv_writer(path)?;
    w.write_record(&header)?;
    for (d, o) in t.order_grid().iter().enumerate() {
        for (n, p) in patches.iter().enumerate() {
            let mut row = vec![
                o.alpha1.to_string(),
                o.alpha2.to_string(),
                p.source.image_id.to_string(),
                p.source.x.to_string(),
                p.source.y.to_string(),
                p.label.to_string(),
            ];
            row.extend(t.feature(d, n).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

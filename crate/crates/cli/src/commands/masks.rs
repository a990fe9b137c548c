use std::path::PathBuf;

use frscat::{f1_score, match_objects, object_dice, object_hausdorff};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{csv_writer, parse_pair, read_image};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// A `SEGMENTATION:GROUND_TRUTH` pair of label PGMs; may be repeated.
    #[arg(long, value_parser = parse_pair, required = true)]
    pub pair: Vec<(PathBuf, PathBuf)>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct Row {
    segmentation: String,
    ground_truth: String,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    precision: f64,
    recall: f64,
    f1: f64,
    dice: f64,
    hausdorff: f64,
}

pub fn run(args: &Args) -> CliResult<()> {
    let mut rows = Vec::with_capacity(args.pair.len());
    for (seg_path, gt_path) in &args.pair {
        let seg = read_image(seg_path)?.to_mask().map_err(|e| CliError::from(e).at(seg_path))?;
        let gt = read_image(gt_path)?.to_mask().map_err(|e| CliError::from(e).at(gt_path))?;
        let table = match_objects(&seg, &gt)?;
        let f1 = f1_score(&table);
        rows.push(Row {
            segmentation: seg_path.display().to_string(),
            ground_truth: gt_path.display().to_string(),
            tp: table.tp,
            fp: table.fp,
            fn_: table.fn_,
            precision: f1.precision,
            recall: f1.recall,
            f1: f1.f1,
            dice: object_dice(&seg, &gt)?,
            hausdorff: object_hausdorff(&seg, &gt)?,
        });
    }
    if args.json {
        let text = serde_json::to_string_pretty(&rows)?;
        match &args.out {
            Some(p) => std::fs::write(p, text + "\n").map_err(|e| CliError::Io(e.to_string()).at(p))?,
            None => println!("{text}"),
        }
        return Ok(());
    }
    match &args.out {
        Some(p) => {
            let mut w = csv_writer(p)?;
            rows.iter().try_for_each(|r| w.serialize(r))?;
            w.flush()?;
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            rows.iter().try_for_each(|r| w.serialize(r))?;
            w.flush()?;
        }
    }
    Ok(())
}

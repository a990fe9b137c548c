use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use frscat::classifier::decompose_class;
use frscat::io::{load_models, load_tensor, save_models, ModelSet};
use frscat::{classify as classify_one, evaluate as run_protocol, FeatureTensor, FractionalOrderPair};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::csv_writer;

fn open_tensor(path: &Path) -> CliResult<FeatureTensor> {
    load_tensor(path).map_err(|e| CliError::from(e).at(path))
}

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    /// Feature tensor written by `features`.
    pub tensor: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Order slice to train on, by position in the tensor's order grid.
    #[arg(long, conflicts_with_all = ["alpha1", "alpha2"])]
    pub order_index: Option<usize>,
    /// Order slice to train on, by value (with `--alpha2`).
    #[arg(long, requires = "alpha2")]
    pub alpha1: Option<f64>,
    #[arg(long, requires = "alpha1")]
    pub alpha2: Option<f64>,
    /// Subspace dimension per class.
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
}

/// Position of `o` in the tensor's order grid.
fn find_order(t: &FeatureTensor, o: FractionalOrderPair) -> CliResult<usize> {
    t.order_grid().iter().position(|g| *g == o).ok_or_else(|| {
        let have: Vec<String> = t.order_grid().iter().map(|g| g.to_string()).collect();
        CliError::Data(format!("order {o} not in tensor (have {})", have.join(" ")))
    })
}

fn slice_index(args: &TrainArgs, t: &FeatureTensor) -> CliResult<usize> {
    match (args.order_index, args.alpha1, args.alpha2) {
        (Some(d), _, _) if d < t.num_orders() => Ok(d),
        (Some(d), _, _) => Err(CliError::Data(format!("order index {d} out of range 0..{}", t.num_orders()))),
        (None, Some(a), Some(b)) => find_order(t, FractionalOrderPair::new(a, b)?),
        _ => Ok(0),
    }
}

/// Signal indices per class, ascending class id.
fn by_class(labels: &[i32]) -> BTreeMap<i32, Vec<usize>> {
    let mut classes: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        classes.entry(c).or_default().push(i);
    }
    classes
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let t = open_tensor(&args.tensor)?;
    let d = slice_index(args, &t)?;
    let mut models = Vec::new();
    for (class, idx) in by_class(t.labels()) {
        let samples: Vec<&[f64]> = idx.iter().map(|&i| t.feature(d, i)).collect();
        models.push(decompose_class(class, &samples)?.model(args.dim)?);
    }
    let set = ModelSet { orders: t.order_grid()[d], models };
    save_models(&set, &args.out).map_err(|e| CliError::from(e).at(&args.out))?;
    println!("{} class models of dimension {} at {}", set.models.len(), args.dim, set.orders);
    Ok(())
}

#[derive(clap::Args, Debug)]
pub struct ClassifyArgs {
    /// Feature tensor holding the signals to label.
    pub tensor: PathBuf,
    /// Model file written by `train`.
    #[arg(long)]
    pub models: PathBuf,
    /// Output CSV: one row per signal.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn classify(args: &ClassifyArgs) -> CliResult<()> {
    let t = open_tensor(&args.tensor)?;
    let set = load_models(&args.models).map_err(|e| CliError::from(e).at(&args.models))?;
    let d = find_order(&t, set.orders)?;
    if set.feature_len() != t.feature_len() {
        return Err(CliError::Data(format!(
            "models expect {} features, tensor has {}",
            set.feature_len(),
            t.feature_len()
        )));
    }
    let mut w = csv_writer(&args.out)?;
    let mut header = vec!["index".to_string(), "label".into(), "predicted".into()];
    header.extend(set.models.iter().map(|m| format!("error_{}", m.class_id)));
    w.write_record(&header)?;
    let mut correct = 0;
    for (n, &label) in t.labels().iter().enumerate() {
        let c = classify_one(t.feature(d, n), &set.models)?;
        correct += usize::from(c.label == label);
        let mut row = vec![n.to_string(), label.to_string(), c.label.to_string()];
        row.extend(c.errors.iter().map(|e| e.1.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    let n = t.num_signals();
    println!("{correct}/{n} agree with stored labels ({:.4} error)", 1.0 - correct as f64 / n as f64);
    Ok(())
}

#[derive(clap::Args, Debug)]
pub struct EvaluateArgs {
    /// Feature tensor written by `features`.
    pub tensor: PathBuf,
    /// JSON configuration; only its `protocol` section is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV: one row per order setting.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Fraction of each class used for training.
    #[arg(long)]
    pub train_ratio: Option<f64>,
    /// Comma-separated PCA dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let mut protocol = RunConfig::load(args.config.as_deref())?.protocol;
    if let Some(v) = args.seed {
        protocol.seed = v;
    }
    if let Some(v) = args.repetitions {
        protocol.repetitions = v;
    }
    if let Some(v) = args.train_ratio {
        protocol.train_ratio = v;
    }
    if let Some(v) = &args.dims {
        protocol.pca_dims = v.clone();
    }
    protocol.validate()?;
    let t = open_tensor(&args.tensor)?;
    let table = run_protocol(&t, &protocol)?;

    let mut w = csv_writer(&args.out)?;
    let mut header = vec!["alpha1".to_string(), "alpha2".into()];
    header.extend(table.pca_dims.iter().map(|k| format!("d{k}")));
    header.push("min".into());
    w.write_record(&header)?;
    let mins = table.min_per_order();
    for ((o, row), min) in table.order_grid.iter().zip(&table.errors).zip(&mins) {
        let mut rec = vec![o.alpha1.to_string(), o.alpha2.to_string()];
        rec.extend(row.iter().map(|e| e.to_string()));
        rec.push(min.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    let best = mins.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(d, e)| (table.order_grid[d], *e));
    if let Some((o, e)) = best {
        println!("lowest error {e:.4} at {o} over {} order settings", table.order_grid.len());
    }
    Ok(())
}

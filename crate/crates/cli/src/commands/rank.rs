use std::path::PathBuf;

use clap::ValueEnum;
use frscat::metrics::{aggregate_ranks, SCORE_COLUMNS};
use frscat::{rank_aggregate, MethodScores, RankRow, TieRule};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Ties {
    /// Tied methods share the mean of their positions.
    Average,
    /// Tied methods all take the best position.
    Min,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// CSV with a `method` column and the six score columns
    /// (f1_a, f1_b, dice_a, dice_b, hausdorff_a, hausdorff_b). Extra
    /// columns are ignored.
    pub scores: PathBuf,
    /// The score columns already hold ranks; only aggregate them.
    #[arg(long)]
    pub ranks: bool,
    #[arg(long, value_enum, default_value_t = Ties::Average)]
    pub ties: Ties,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_scores(path: &PathBuf) -> CliResult<Vec<MethodScores>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::from(e).at(path))?;
    let headers = r.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Data(format!("missing column {name}")).at(path))
    };
    let method = find("method")?;
    let cols = SCORE_COLUMNS.iter().map(|c| find(c)).collect::<CliResult<Vec<_>>>()?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut scores = [0.0; 6];
        for (s, &c) in scores.iter_mut().zip(&cols) {
            let raw = rec.get(c).unwrap_or("").trim();
            *s = raw.parse().map_err(|_| {
                CliError::Data(format!("row {}: {:?} is not a number", line + 2, raw)).at(path)
            })?;
        }
        out.push(MethodScores { method: rec.get(method).unwrap_or("").trim().to_string(), scores });
    }
    if out.is_empty() {
        return Err(CliError::Data("no methods listed".into()).at(path));
    }
    Ok(out)
}

pub fn run(args: &Args) -> CliResult<()> {
    let methods = read_scores(&args.scores)?;
    let rows: Vec<RankRow> = if args.ranks {
        methods
            .into_iter()
            .map(|m| {
                let (rank_sum, weighted_rank_sum) = aggregate_ranks(&m.scores);
                RankRow { method: m.method, ranks: m.scores, rank_sum, weighted_rank_sum }
            })
            .collect()
    } else {
        let rule = match args.ties {
            Ties::Average => TieRule::Average,
            Ties::Min => TieRule::Min,
        };
        rank_aggregate(&methods, rule)?
    };
    let mut header = vec!["method".to_string()];
    header.extend(SCORE_COLUMNS.iter().map(|c| c.to_string()));
    header.extend(["rs".to_string(), "wrs".to_string()]);
    let write = |w: &mut csv::Writer<Box<dyn std::io::Write>>| -> CliResult<()> {
        w.write_record(&header)?;
        for r in &rows {
            let mut rec = vec![r.method.clone()];
            rec.extend(r.ranks.iter().map(|v| v.to_string()));
            rec.push(r.rank_sum.to_string());
            rec.push(r.weighted_rank_sum.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    };
    let sink: Box<dyn std::io::Write> = match &args.out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| CliError::Io(e.to_string()).at(p))?),
        None => Box::new(std::io::stdout()),
    };
    write(&mut csv::Writer::from_writer(sink))
}

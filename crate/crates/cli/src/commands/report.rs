use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use nbv_core::planner::{read_trace, StrategyKind};

use super::{output_dir, read_json, write_text};
use super::select::FinalMetrics;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Selection run directories.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One strategy row of `table.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub strategy: StrategyKind,
    pub runs: usize,
    pub mean_final_psnr: f64,
    pub mean_final_ssim: f64,
    pub mean_rounds: f64,
}

pub const TABLE_HEADER: &str = "strategy,runs,mean_final_psnr,mean_final_ssim,mean_rounds";
pub const CURVE_HEADER: &str = "strategy,round,mean_psnr,runs";

pub fn report(args: &ReportArgs, root: &Path) -> CliResult<Vec<ReportRow>> {
    // strategy -> (finals, per-round psnr lists)
    let mut finals: BTreeMap<&'static str, (StrategyKind, Vec<FinalMetrics>, Vec<Vec<f64>>)> = BTreeMap::new();
    for run in &args.runs {
        let trace_path = run.join("trace.csv");
        if !trace_path.exists() {
            return Err(CliError::data(run, "run has no trace.csv"));
        }
        let trace = read_trace(&trace_path).map_err(CliError::core(format!("run {}", run.display())))?;
        let fin: FinalMetrics = read_json(&run.join("final.json"))?;
        if trace.len() != fin.rounds {
            return Err(CliError::data(run, "trace length disagrees with final.json"));
        }
        let entry = finals
            .entry(fin.strategy.name())
            .or_insert_with(|| (fin.strategy, Vec::new(), Vec::new()));
        // Round r curve point: test PSNR before the r-th selection; the last
        // point is the final field.
        let mut curve: Vec<f64> = trace.iter().map(|r| r.psnr).collect();
        curve.push(fin.final_psnr);
        entry.2.push(curve);
        entry.1.push(fin);
    }

    let mut rows = Vec::new();
    let mut table = format!("{TABLE_HEADER}\n");
    let mut curves = format!("{CURVE_HEADER}\n");
    for (name, (kind, fins, series)) in &finals {
        let n = fins.len() as f64;
        let row = ReportRow {
            strategy: *kind,
            runs: fins.len(),
            mean_final_psnr: fins.iter().map(|f| f.final_psnr).sum::<f64>() / n,
            mean_final_ssim: fins.iter().map(|f| f.final_ssim).sum::<f64>() / n,
            mean_rounds: fins.iter().map(|f| f.rounds as f64).sum::<f64>() / n,
        };
        writeln!(
            table,
            "{name},{},{},{},{}",
            row.runs, row.mean_final_psnr, row.mean_final_ssim, row.mean_rounds
        )
        .unwrap();
        let longest = series.iter().map(Vec::len).max().unwrap_or(0);
        for r in 0..longest {
            let pts: Vec<f64> = series.iter().filter_map(|s| s.get(r).copied()).collect();
            let m = pts.iter().sum::<f64>() / pts.len() as f64;
            writeln!(curves, "{name},{r},{m},{}", pts.len()).unwrap();
        }
        rows.push(row);
    }
    let dir = output_dir(&args.out, root, "report".into())?;
    write_text(&dir.join("table.csv"), &table)?;
    write_text(&dir.join("curve.csv"), &curves)?;
    print!("{table}");
    Ok(rows)
}

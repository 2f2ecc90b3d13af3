//! Offline analysis: per-task metrics from session logs, and the
//! statistics used to relate them.

use std::fs::File;
use std::io;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use circuitlab::analysis::{load_records, metrics_rows, write_metrics_csv, Table};
use circuitlab::library::load_library;
use circuitlab_core::analytics::stats;
use circuitlab_core::task::DesignConstraints;
use circuitlab_core::zvt::ScorePolicy;

#[derive(Parser)]
#[command(
    name = "analyzectl",
    about = "Derive metrics and statistics from study logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write one CSV row per participant and experiment task to stdout.
    Metrics {
        logdir: PathBuf,
        /// Task library used to label task groups.
        #[arg(long)]
        library: Option<PathBuf>,
        /// Average all four test matrices instead of the first three.
        #[arg(long)]
        zvt_all: bool,
    },
    /// Compute a statistic over columns of a CSV file.
    Stats(StatsArgs),
}

#[derive(Args)]
#[group(id = "statistic", required = true, multiple = false)]
struct Which {
    #[arg(long)]
    pearson: bool,
    #[arg(long)]
    spearman: bool,
    #[arg(long)]
    kendall: bool,
    /// Cronbach's alpha over the item columns.
    #[arg(long)]
    alpha: bool,
    /// Welch's ANOVA of a value column grouped by a label column.
    #[arg(long)]
    welch: bool,
    /// Standardize one column.
    #[arg(long)]
    zscores: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    which: Which,
    csv: PathBuf,
    /// First column (correlations, z-scores). Defaults to the first column.
    #[arg(long)]
    x: Option<String>,
    /// Second column (correlations). Defaults to the second column.
    #[arg(long)]
    y: Option<String>,
    /// Label column for Welch's ANOVA. Defaults to the first column.
    #[arg(long)]
    group: Option<String>,
    /// Value column for Welch's ANOVA. Defaults to the second column.
    #[arg(long)]
    value: Option<String>,
    /// Item columns for alpha, comma separated. Defaults to all columns.
    #[arg(long, value_delimiter = ',')]
    items: Vec<String>,
}

fn column(table: &Table, name: Option<&str>, fallback: usize) -> Result<usize> {
    match name {
        Some(n) => Ok(table.column_index(n)?),
        None if fallback < table.headers.len() => Ok(fallback),
        None => anyhow::bail!("the file has fewer than {} columns", fallback + 1),
    }
}

fn run_stats(args: &StatsArgs) -> Result<()> {
    let file = File::open(&args.csv).with_context(|| args.csv.display().to_string())?;
    let table = Table::read(file)?;
    let w = &args.which;
    if w.pearson || w.spearman || w.kendall {
        let a = column(&table, args.x.as_deref(), 0)?;
        let b = column(&table, args.y.as_deref(), 1)?;
        let (x, y) = table.pairs(a, b)?;
        let (name, value) = if w.pearson {
            ("pearson", stats::pearson(&x, &y)?)
        } else if w.spearman {
            ("spearman", stats::spearman(&x, &y)?)
        } else {
            ("kendall_tau_b", stats::kendall_tau_b(&x, &y)?)
        };
        println!("statistic,n,value");
        println!("{name},{},{value}", x.len());
    } else if w.alpha {
        let rows = if args.items.is_empty() {
            table.matrix()?
        } else {
            let cols = args
                .items
                .iter()
                .map(|c| table.column_index(c))
                .collect::<Result<Vec<_>, _>>()?;
            let data = cols
                .iter()
                .map(|&c| table.column(c))
                .collect::<Result<Vec<_>, _>>()?;
            (0..table.rows.len())
                .map(|r| data.iter().map(|col| col[r]).collect())
                .collect()
        };
        let alpha = stats::cronbach_alpha(&rows)?;
        println!("statistic,n,value");
        println!("cronbach_alpha,{},{alpha}", rows.len());
    } else if w.welch {
        let g = column(&table, args.group.as_deref(), 0)?;
        let v = column(&table, args.value.as_deref(), 1)?;
        let groups: Vec<Vec<f64>> = table.grouped(g, v)?.into_values().collect();
        let r = stats::welch_anova(&groups)?;
        println!("statistic,groups,f,df_between,df_within");
        println!(
            "welch_anova,{},{},{},{}",
            groups.len(),
            r.f,
            r.df_between,
            r.df_within
        );
    } else {
        let c = column(&table, args.x.as_deref(), 0)?;
        let z = stats::zscores(&table.column(c)?)?;
        println!("{},z", table.headers[c]);
        for (row, z) in table.rows.iter().zip(z) {
            println!("{},{z}", row[c]);
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Cmd::Metrics {
            logdir,
            library,
            zvt_all,
        } => {
            let policy = if zvt_all {
                ScorePolicy::all_four()
            } else {
                ScorePolicy::default()
            };
            let library = library
                .map(|p| load_library(&p, &DesignConstraints::default()))
                .transpose()?;
            let records = load_records(&logdir, &policy)?;
            let rows = metrics_rows(&records, library.as_ref());
            write_metrics_csv(&rows, io::stdout().lock())?;
        }
        Cmd::Stats(args) => run_stats(&args)?,
    }
    Ok(())
}

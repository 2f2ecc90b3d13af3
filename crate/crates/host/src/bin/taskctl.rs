//! Task library tool: validation, solution listing and truth tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use circuitlab::format::serialize_task;
use circuitlab::library::{read_manifest, read_task};
use circuitlab_core::circuit::SwitchAssignment;
use circuitlab_core::task::{validate_task, DesignConstraints, Task};

#[derive(Parser)]
#[command(name = "taskctl", about = "Validate and inspect circuit tasks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a task file or a library directory.
    Validate {
        path: PathBuf,
        /// Minimum nonlinearity of every output.
        #[arg(long = "min-nl")]
        min_nl: Option<u32>,
        /// Minimum distance between any two outputs, up to complement.
        #[arg(long = "min-pair")]
        min_pair: Option<u32>,
    },
    /// Print the switch settings that solve each task.
    Solutions { path: PathBuf },
    /// Print the truth table of each task.
    Table { path: PathBuf },
    /// Rewrite task files in canonical form.
    Fmt {
        path: PathBuf,
        /// Report files that are not canonical instead of rewriting them.
        #[arg(long)]
        check: bool,
    },
}

/// Tasks at `path`: a single file, or every task listed in a library
/// manifest. Per-file failures are returned alongside.
fn collect(path: &Path) -> Result<Vec<(PathBuf, Result<Task>)>> {
    if path.is_dir() {
        let groups = read_manifest(path)?;
        Ok(groups
            .into_iter()
            .flat_map(|(group, paths)| {
                paths.into_iter().map(move |p| {
                    let task = read_task(&p).map_err(anyhow::Error::from).and_then(|t| {
                        anyhow::ensure!(
                            t.group == group,
                            "listed under {group} but declares group {}",
                            t.group
                        );
                        Ok(t)
                    });
                    (p, task)
                })
            })
            .collect())
    } else {
        let task = read_task(path).map_err(anyhow::Error::from);
        Ok(vec![(path.to_path_buf(), task)])
    }
}

fn validate(path: &Path, constraints: &DesignConstraints) -> Result<bool> {
    let mut ok = true;
    let mut seen = std::collections::HashSet::new();
    for (file, task) in collect(path)? {
        match task {
            Ok(task) => {
                let report = validate_task(&task, constraints);
                print!("{report}");
                if !seen.insert(task.id.clone()) {
                    println!("  error: task id {} appears twice", task.id);
                    ok = false;
                }
                ok &= report.is_valid();
            }
            Err(e) => {
                println!("{}: FAILED\n  error: {e:#}", file.display());
                ok = false;
            }
        }
    }
    println!(
        "{}",
        if ok {
            "all tasks valid"
        } else {
            "validation failed"
        }
    );
    Ok(ok)
}

fn solutions(path: &Path) -> Result<()> {
    for (file, task) in collect(path)? {
        let task = task.with_context(|| file.display().to_string())?;
        let circuit = task.netlist.compile().with_context(|| task.id.clone())?;
        let sols = circuit.solutions(circuitlab_core::circuit::DEFAULT_ENUMERATION_CAP)?;
        let list: Vec<String> = sols.iter().map(ToString::to_string).collect();
        println!("{}: {}", task.id, list.join(", "));
    }
    Ok(())
}

fn table(path: &Path) -> Result<()> {
    for (file, task) in collect(path)? {
        let task = task.with_context(|| file.display().to_string())?;
        let circuit = task.netlist.compile().with_context(|| task.id.clone())?;
        let tables = circuit.truth_table()?;
        let n = circuit.switch_count();
        println!("task {} (target {})", task.id, task.target_outputs);
        let switches: Vec<String> = task.netlist.inputs().iter().map(|e| e.id.clone()).collect();
        println!(
            "{} | {}",
            switches.join(" "),
            circuit.output_ids().join(" ")
        );
        for i in 0..(1usize << n) {
            let a = SwitchAssignment::from_index(i, n);
            let ins: Vec<String> = switches
                .iter()
                .zip(&a.0)
                .map(|(id, &b)| format!("{:>w$}", b as u8, w = id.len()))
                .collect();
            let outs: Vec<String> = circuit
                .output_ids()
                .iter()
                .zip(&tables)
                .map(|(id, t)| format!("{:>w$}", t[i] as u8, w = id.len()))
                .collect();
            let mark = if circuit.check(&a)?.correct {
                "  *"
            } else {
                ""
            };
            println!("{} | {}{mark}", ins.join(" "), outs.join(" "));
        }
        println!();
    }
    Ok(())
}

fn fmt(path: &Path, check: bool) -> Result<bool> {
    let mut ok = true;
    for (file, task) in collect(path)? {
        let task = task.with_context(|| file.display().to_string())?;
        let canonical = serialize_task(&task);
        let current = std::fs::read(&file).with_context(|| file.display().to_string())?;
        if current == canonical {
            continue;
        }
        if check {
            println!("{}: not canonical", file.display());
            ok = false;
        } else {
            std::fs::write(&file, canonical).with_context(|| file.display().to_string())?;
            println!("{}: rewritten", file.display());
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Validate {
            path,
            min_nl,
            min_pair,
        } => {
            let mut c = DesignConstraints::default();
            if let Some(v) = min_nl {
                c.min_io_nonlinearity = v;
            }
            if let Some(v) = min_pair {
                c.min_output_pair_distance = v;
            }
            validate(&path, &c)
        }
        Cmd::Solutions { path } => solutions(&path).map(|()| true),
        Cmd::Table { path } => table(&path).map(|()| true),
        Cmd::Fmt { path, check } => fmt(&path, check),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

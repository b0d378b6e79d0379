//! Batch command-line frontend.
//!
//! Subcommands: `verify`, `certify`, `table1`, `forge`, `sample-grid`,
//! `dataset {export,validate}`. Primary outputs go to stdout (or the
//! requested files) and are byte-identical across reruns with the same
//! flags and seed. `NMLAB_THREADS` caps parallelism.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success; for `certify`: LocalMinimum; for `forge`: converged to a minimum or degenerate point |
//! | 1    | a verification claim failed, or `forge` did not converge |
//! | 2    | `certify`/`forge`: Saddle |
//! | 3    | `certify`: NotCritical |
//! | 4    | `certify`: Degenerate |
//! | 64   | malformed weight file or bad flag value |
//! | 65   | invalid dataset (contents violate the schema or smoothness preconditions) |
//! | 73   | cannot create or write an output file |

pub mod constants;
pub mod verify;
pub mod weights_io;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::certify::{classify_critical, Classification, DEFAULT_TOL_EIG_REL, DEFAULT_TOL_GRAD};
use crate::datasets::{builtin, load_json, save_json, BuiltinDataset, Dataset};
use crate::forge::{forge, ForgeConfig};
use crate::optim::{run_table, sample_grid, GridBounds, OptimizerKind, TableHyper, TableSpec};
use crate::tinynet::LossKind;
use verify::Claim;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_SADDLE: i32 = 2;
pub const EXIT_NOT_CRITICAL: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_CANTCREAT: i32 = 73;

#[derive(Parser)]
#[command(
    name = "nmlab",
    version,
    about = "Certify and reproduce suboptimal local minima of tiny neural networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Re-derive one of the embedded claims (or `all`) and print the
    /// verification report.
    Verify {
        /// thm1 | prop1 | prop2 | prop3 | blindspot | lemma1 | all
        claim: String,
    },
    /// Classify a weight file as a critical point and print the
    /// certificate.
    Certify {
        #[arg(long)]
        weights: PathBuf,
        /// Builtin dataset name or a dataset JSON file.
        #[arg(long)]
        dataset: String,
        /// nll | mse (defaults to the architecture's natural loss)
        #[arg(long)]
        loss: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TOL_GRAD)]
        tol_grad: f64,
        #[arg(long, default_value_t = DEFAULT_TOL_EIG_REL)]
        tol_eig_rel: f64,
    },
    /// Run the convergence-rate grid and write CSV + JSON + provenance.
    Table1(Table1Args),
    /// Data-space descent making the weight file a critical point of the
    /// dataset; prints the forge result.
    Forge {
        #[arg(long)]
        weights: PathBuf,
        /// Builtin dataset name or a dataset JSON file.
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 100.0)]
        step_size: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        target_gradnorm: f64,
        #[arg(long, default_value_t = 1e-6)]
        fd_step: f64,
        /// Also write the result JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample model outputs over a rectangle and write a CSV grid.
    SampleGrid {
        #[arg(long)]
        weights: PathBuf,
        /// x_min,x_max,y_min,y_max
        #[arg(long, default_value = "0,1,0,1")]
        bounds: String,
        #[arg(long)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Builtin dataset export and dataset-file validation.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
}

#[derive(Args)]
pub struct Table1Args {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 5)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub h_min: usize,
    #[arg(long, default_value_t = 7)]
    pub h_max: usize,
    #[arg(long, default_value_t = 0.5)]
    pub gd_lr_sigmoid: f64,
    #[arg(long, default_value_t = 0.05)]
    pub gd_lr_relu: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub adam_lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub adam_beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub adam_beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub adam_eps: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_steps: usize,
    /// Add the per-point SGD optimizer to the grid.
    #[arg(long, default_value_t = false)]
    pub sgd: bool,
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("nmlab: {message}");
    code
}

fn resolve_dataset(spec: &str) -> Result<Dataset, (i32, String)> {
    if let Ok(name) = BuiltinDataset::from_str(spec) {
        return Ok(builtin(name));
    }
    load_json(Path::new(spec)).map_err(|e| (EXIT_DATA, e.to_string()))
}

fn load_weights_or_usage(path: &Path) -> Result<crate::tinynet::ParamVector, (i32, String)> {
    weights_io::load_weights(path).map_err(|e| (EXIT_USAGE, e.to_string()))
}

fn write_or_cantcreat(path: &Path, contents: &str) -> Result<(), (i32, String)> {
    std::fs::write(path, contents)
        .map_err(|e| (EXIT_CANTCREAT, format!("writing {}: {e}", path.display())))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report types serialize"));
}

/// Runs one parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match run_command(cli.command) {
        Ok(code) => code,
        Err((code, message)) => fail(code, message),
    }
}

fn run_command(command: Command) -> Result<i32, (i32, String)> {
    match command {
        Command::Verify { claim } => cmd_verify(&claim),
        Command::Certify { weights, dataset, loss, tol_grad, tol_eig_rel } => {
            cmd_certify(&weights, &dataset, loss.as_deref(), tol_grad, tol_eig_rel)
        }
        Command::Table1(args) => cmd_table1(&args),
        Command::Forge { weights, dataset, step_size, max_iters, target_gradnorm, fd_step, out } => {
            let cfg = ForgeConfig { step_size, max_iters, target_gradnorm, fd_step, freeze_labels: true };
            cmd_forge(&weights, &dataset, &cfg, out.as_deref())
        }
        Command::SampleGrid { weights, bounds, res, out } => {
            cmd_sample_grid(&weights, &bounds, res, &out)
        }
        Command::Dataset { action } => cmd_dataset(action),
    }
}

fn cmd_verify(claim: &str) -> Result<i32, (i32, String)> {
    let claims: Vec<Claim> = if claim.eq_ignore_ascii_case("all") {
        Claim::ALL.to_vec()
    } else {
        vec![Claim::from_str(claim).map_err(|e| (EXIT_USAGE, e.to_string()))?]
    };
    let mut reports = Vec::new();
    for c in claims {
        let report = verify::verify(c).map_err(|e| (EXIT_DATA, e.to_string()))?;
        eprintln!(
            "{}: {}",
            report.claim,
            match report.status {
                verify::VerificationStatus::Confirmed => "confirmed",
                verify::VerificationStatus::ConfirmedWithCorrection => "confirmed (with correction)",
                verify::VerificationStatus::Failed => "FAILED",
            }
        );
        reports.push(report);
    }
    let any_failed = reports.iter().any(|r| r.status == verify::VerificationStatus::Failed);
    if reports.len() == 1 {
        print_json(&reports[0]);
    } else {
        print_json(&reports);
    }
    Ok(if any_failed { EXIT_FAILED } else { EXIT_OK })
}

fn cmd_certify(
    weights: &Path,
    dataset: &str,
    loss: Option<&str>,
    tol_grad: f64,
    tol_eig_rel: f64,
) -> Result<i32, (i32, String)> {
    let p = load_weights_or_usage(weights)?;
    let d = resolve_dataset(dataset)?;
    let kind = match loss {
        Some(s) => LossKind::from_str(s).map_err(|e| (EXIT_USAGE, e.to_string()))?,
        None => p.natural_loss_kind(),
    };
    if kind != p.natural_loss_kind() {
        return Err((
            EXIT_USAGE,
            format!("loss '{kind}' does not apply to architecture '{}'", p.arch_name()),
        ));
    }
    let cert = classify_critical(&p, &d, kind, tol_grad, tol_eig_rel)
        .map_err(|e| (EXIT_DATA, e.to_string()))?;
    print_json(&cert);
    Ok(match cert.classification {
        Classification::LocalMinimum => EXIT_OK,
        Classification::Saddle => EXIT_SADDLE,
        Classification::NotCritical => EXIT_NOT_CRITICAL,
        Classification::Degenerate => EXIT_DEGENERATE,
    })
}

fn cmd_table1(args: &Table1Args) -> Result<i32, (i32, String)> {
    let hyper = TableHyper {
        gd_lr_sigmoid: args.gd_lr_sigmoid,
        gd_lr_relu: args.gd_lr_relu,
        sgd_lr_sigmoid: args.gd_lr_sigmoid,
        sgd_lr_relu: args.gd_lr_relu,
        adam_lr: args.adam_lr,
        adam_beta1: args.adam_beta1,
        adam_beta2: args.adam_beta2,
        adam_eps: args.adam_eps,
        max_steps: args.max_steps,
    };
    let mut spec = TableSpec::full_grid(args.trials, args.seed);
    spec.h_min = args.h_min;
    spec.h_max = args.h_max;
    spec.hyper = hyper;
    if args.sgd {
        spec.optimizers.push(OptimizerKind::Sgd);
    }
    spec.validate().map_err(|e| (EXIT_USAGE, e.to_string()))?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| (EXIT_CANTCREAT, format!("creating {}: {e}", args.out.display())))?;
    let table = run_table(&spec).map_err(|e| (EXIT_DATA, e.to_string()))?;

    let csv_path = args.out.join("table1.csv");
    write_or_cantcreat(&csv_path, &table.to_csv())?;
    let json_path = args.out.join("table1.json");
    write_or_cantcreat(
        &json_path,
        &(serde_json::to_string_pretty(&table).expect("table serializes") + "\n"),
    )?;
    // provenance sidecar: everything needed to reproduce the run
    let sidecar = serde_json::json!({
        "base_seed": spec.base_seed,
        "trials": spec.trials,
        "h_min": spec.h_min,
        "h_max": spec.h_max,
        "optimizers": spec.optimizers,
        "activations": spec.activations,
        "datasets": spec.datasets.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "hyper": spec.hyper,
        "initialization": "i.i.d. uniform[-1,1) per parameter, SplitMix64 stream per trial seed",
        "trial_seed": "mix_seed(base_seed, cell_index, trial_index)",
        "success_rule": "zero training error at output threshold 0.5, checked every step",
    });
    write_or_cantcreat(
        &args.out.join("config.json"),
        &(serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n"),
    )?;
    eprintln!("wrote {}", csv_path.display());
    Ok(EXIT_OK)
}

fn cmd_forge(
    weights: &Path,
    dataset: &str,
    cfg: &ForgeConfig,
    out: Option<&Path>,
) -> Result<i32, (i32, String)> {
    let p = load_weights_or_usage(weights)?;
    let d = resolve_dataset(dataset)?;
    let result = forge(&p, &d, cfg).map_err(|e| (EXIT_DATA, e.to_string()))?;
    let json = serde_json::to_string_pretty(&result).expect("forge result serializes");
    if let Some(path) = out {
        write_or_cantcreat(path, &(json.clone() + "\n"))?;
    }
    println!("{json}");
    Ok(if !result.converged {
        EXIT_FAILED
    } else {
        match result.certificate.classification {
            Classification::LocalMinimum | Classification::Degenerate => EXIT_OK,
            Classification::Saddle => EXIT_SADDLE,
            Classification::NotCritical => EXIT_NOT_CRITICAL,
        }
    })
}

fn cmd_sample_grid(
    weights: &Path,
    bounds: &str,
    res: usize,
    out: &Path,
) -> Result<i32, (i32, String)> {
    let p = load_weights_or_usage(weights)?;
    let parts: Vec<f64> = bounds
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| (EXIT_USAGE, format!("bad bounds '{bounds}': {e}")))?;
    if parts.len() != 4 {
        return Err((EXIT_USAGE, format!("bounds need 4 comma-separated numbers, got {}", parts.len())));
    }
    let bounds = GridBounds { x_min: parts[0], x_max: parts[1], y_min: parts[2], y_max: parts[3] };
    let grid = sample_grid(&p, bounds, res).map_err(|e| (EXIT_USAGE, e.to_string()))?;
    write_or_cantcreat(out, &grid.to_csv())?;
    eprintln!("wrote {}", out.display());
    Ok(EXIT_OK)
}

#[derive(Subcommand)]
pub enum DatasetAction {
    /// Write a builtin dataset as JSON.
    Export {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a dataset file against the schema and invariants.
    Validate { file: PathBuf },
}

fn cmd_dataset(action: DatasetAction) -> Result<i32, (i32, String)> {
    match action {
        DatasetAction::Export { name, out } => {
            let b = BuiltinDataset::from_str(&name).map_err(|e| (EXIT_USAGE, e.to_string()))?;
            save_json(&builtin(b), &out)
                .map_err(|e| (EXIT_CANTCREAT, format!("writing {}: {e}", out.display())))?;
            eprintln!("wrote {}", out.display());
            Ok(EXIT_OK)
        }
        DatasetAction::Validate { file } => match load_json(&file) {
            Ok(d) => {
                eprintln!(
                    "{}: valid {} dataset, {} points, dimension {}",
                    file.display(),
                    d.task(),
                    d.len(),
                    d.dim()
                );
                Ok(EXIT_OK)
            }
            Err(e) => Err((EXIT_DATA, e.to_string())),
        },
    }
}

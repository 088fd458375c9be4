//! `treelearn`: sample from, learn, evaluate, and layer tree-structured
//! binary models, and run the sample-complexity experiment.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use treelearn::io;
use treelearn::{
    biased_nodes, classify_general, classify_symmetric, diagnose_general, diagnose_symmetric,
    hellinger_exact, tv_exact, tv_mc, LearnMode, TreeModel,
};
use treelearn_cli::{
    diagnostic_text, hierarchy_csv, hierarchy_text, learned_view_of_symmetric_model,
    learned_view_of_tree_model, CliError, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "treelearn", version, about = "Learn tree-structured binary models from samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    General,
    Symmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMethod {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a model file into a sample file.
    Sample {
        /// Model file (general or symmetric format).
        model: PathBuf,
        /// Number of samples to draw.
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output sample file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a tree model from a sample file.
    Learn {
        /// Sample file.
        samples: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::General)]
        mode: Mode,
        /// Output model file; the all-pairs weight table goes to
        /// `<out>.weights.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the distance between a true and a learned model.
    Eval {
        true_model: PathBuf,
        learned_model: PathBuf,
        #[arg(long, value_enum, default_value_t = EvalMethod::Exact)]
        method: EvalMethod,
        #[arg(long, default_value_t = 40000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Classify the edges of a model into strength bands.
    Layering {
        /// Learned model file; the mode is taken from the file format.
        model: PathBuf,
        #[arg(long)]
        eps: f64,
        /// True model file enabling the diagnostic report.
        #[arg(long)]
        true_model: Option<PathBuf>,
        /// Output prefix; writes `<out>.txt` and `<out>.csv`. Without it the
        /// text report goes to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the sample-complexity experiment from a config file.
    Experiment {
        /// Flat key=value config: n, m_list, instances, runs, mc_samples,
        /// seed.
        config: PathBuf,
        /// Worker thread bound (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory for results.csv, instances.csv, plot.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

/// A model file in either format, normalized to the general representation
/// plus a flag for which format it was.
fn read_model(path: &Path) -> Result<(TreeModel, LearnMode), CliError> {
    let text = std::fs::read_to_string(path)?;
    if text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim().starts_with('#'))
        .is_some_and(|l| l.trim_start().starts_with("tree-ising-sym"))
    {
        let sym = io::parse_symmetric_model(&text)?;
        Ok((TreeModel::from_symmetric(&sym)?, LearnMode::Symmetric))
    } else {
        Ok((io::parse_tree_model(&text)?, LearnMode::General))
    }
}

fn cmd_sample(model: &Path, count: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    let (m, _) = read_model(model)?;
    let samples = m.sample(seed, count);
    std::fs::write(out, io::write_samples(m.n, &samples))?;
    eprintln!("wrote {count} samples over {} nodes to {}", m.n, out.display());
    Ok(())
}

fn cmd_learn(samples_path: &Path, mode: Mode, out: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(samples_path)?;
    let (n, samples) = io::parse_samples(&text)?;
    let table = treelearn::count_pairs(n, &samples)?;
    if let Mode::Symmetric = mode {
        for i in 0..n {
            let f = table.node_plus_freq(i);
            if !(0.45..=0.55).contains(&f) {
                eprintln!(
                    "warning: node {i} has empirical P(+1) = {f:.4}; the symmetric \
                     parametrization assumes uniform node marginals"
                );
            }
        }
    }
    let learned = match mode {
        Mode::General => treelearn::chow_liu(n, &samples)?,
        Mode::Symmetric => treelearn::chow_liu_symmetric(n, &samples)?,
    };
    let model_text = match mode {
        Mode::General => io::write_tree_model(&learned.to_tree_model()?),
        Mode::Symmetric => io::write_symmetric_model(&learned.to_symmetric_model()?),
    };
    std::fs::write(out, model_text)?;
    // All-pairs weight table next to the model.
    let mut csv = String::from("i,j,weight\n");
    for i in 0..n {
        for j in i + 1..n {
            let w = match mode {
                Mode::General => treelearn::plugin_mi(&table, i, j),
                Mode::Symmetric => treelearn::alpha_hat(&table, i, j).abs(),
            };
            csv.push_str(&format!("{i},{j},{w}\n"));
        }
    }
    let weights_path = weights_path_for(out);
    std::fs::write(&weights_path, csv)?;
    eprintln!(
        "learned {}-node model from {} samples; model: {}, weights: {}",
        n,
        samples.len(),
        out.display(),
        weights_path.display()
    );
    Ok(())
}

fn weights_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".weights.csv");
    out.with_file_name(name)
}

fn cmd_eval(
    true_path: &Path,
    learned_path: &Path,
    method: EvalMethod,
    mc_samples: usize,
    seed: u64,
) -> Result<(), CliError> {
    let (p, _) = read_model(true_path)?;
    let (q, _) = read_model(learned_path)?;
    match method {
        EvalMethod::Exact => {
            let tv = tv_exact(&p, &q)?;
            let h = hellinger_exact(&p, &q)?;
            println!("tv {tv}");
            println!("hellinger {h}");
            println!("hellinger_sq {}", h * h);
        }
        EvalMethod::Mc => {
            let est = tv_mc(&p, &q, seed, mc_samples)?;
            println!("tv {}", est.value);
            println!("stderr {}", est.stderr);
            println!("samples {}", est.samples_used);
        }
    }
    Ok(())
}

fn cmd_layering(
    model_path: &Path,
    eps: f64,
    true_model: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(model_path)?;
    let symmetric = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim().starts_with('#'))
        .is_some_and(|l| l.trim_start().starts_with("tree-ising-sym"));

    let (report_text, report_csv) = if symmetric {
        let sym = io::parse_symmetric_model(&text)?;
        let learned = learned_view_of_symmetric_model(&sym);
        match true_model {
            None => {
                let rep = classify_symmetric(&learned, eps)?;
                (hierarchy_text(&rep), hierarchy_csv(&rep))
            }
            Some(tp) => {
                let true_text = std::fs::read_to_string(tp)?;
                let true_sym = io::parse_symmetric_model(&true_text)?;
                let diag = diagnose_symmetric(&learned, &true_sym, eps)?;
                (diagnostic_text(&diag), hierarchy_csv(&diag.hierarchy))
            }
        }
    } else {
        let model = io::parse_tree_model(&text)?;
        let learned = learned_view_of_tree_model(&model)?;
        match true_model {
            None => {
                let rep = classify_general(&learned, eps)?;
                (hierarchy_text(&rep), hierarchy_csv(&rep))
            }
            Some(tp) => {
                let (true_general, _) = read_model(tp)?;
                let mut diag = diagnose_general(&learned, &true_general, eps)?;
                diag.biased = biased_nodes(&true_general, eps);
                (diagnostic_text(&diag), hierarchy_csv(&diag.hierarchy))
            }
        }
    };
    match out {
        None => print!("{report_text}"),
        Some(prefix) => {
            std::fs::write(prefix.with_extension("txt"), &report_text)?;
            std::fs::write(prefix.with_extension("csv"), &report_csv)?;
            eprintln!(
                "wrote {} and {}",
                prefix.with_extension("txt").display(),
                prefix.with_extension("csv").display()
            );
        }
    }
    Ok(())
}

fn cmd_experiment(config_path: &Path, jobs: Option<usize>, out_dir: &Path) -> Result<(), CliError> {
    let cfg = ExperimentConfig::parse(&std::fs::read_to_string(config_path)?)?;
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| treelearn_cli::CliError::Config(format!("--jobs: {e}")))?;
    }
    std::fs::create_dir_all(out_dir)?;
    let outcome = treelearn_cli::run_experiment(&cfg, true)?;
    std::fs::write(out_dir.join("results.csv"), outcome.results_csv())?;
    std::fs::write(out_dir.join("instances.csv"), outcome.records_csv())?;
    std::fs::write(out_dir.join("plot.csv"), outcome.plot_csv())?;
    print!("{}", outcome.summary_text());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sample { model, count, seed, out } => cmd_sample(&model, count, seed, &out),
        Command::Learn { samples, mode, out } => cmd_learn(&samples, mode, &out),
        Command::Eval { true_model, learned_model, method, mc_samples, seed } => {
            cmd_eval(&true_model, &learned_model, method, mc_samples, seed)
        }
        Command::Layering { model, eps, true_model, out } => {
            cmd_layering(&model, eps, true_model.as_deref(), out.as_deref())
        }
        Command::Experiment { config, jobs, out } => cmd_experiment(&config, jobs, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // exits with code 2 on usage errors
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

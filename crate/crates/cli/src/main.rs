use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use seqhide::baselines::{robustness_experiment, MismatchPair, WindowMode};
use seqhide::bounds::{lp_optimal_rate, upper_bound_rate, LpStatus};
use seqhide::distributions::{write_panel, AnyModel, ModelConfig};
use seqhide::experiments::{run_experiment, window_rows, write_csv, ExperimentConfig};
use seqhide::hmm_mechanism::{hmm_rate_mc, hmm_upper_bound_rate, mask_hmm, RateEstimator};
use seqhide::mechanism::{achievable_rate_exact, mask_sequence, Transcript};
use seqhide::ordering::{hardness_report, HittingSetInstance};
use seqhide::seeding::run_rng;
use seqhide::sequence::parse_symbols;
use seqhide::{Alphabet, Error, HmmModel, MaskedSequence, ProcessingOrder, SensitiveSet, SequenceModel};

const EXPERIMENT_HELP: &str = "\
Runs the experiment described by a JSON config and writes long-format CSV.

Columns: experiment, grid_index, epsilon, theta, omega, n, m, sensitive,
metric, estimate, stderr, status, seed. `sensitive` is 1-based and
';'-separated. `status` is ok, or the reason a row has no estimate
(capacity, numerical, infeasible, not_reached, ...).

Config fields: experiment (fig3|fig4|fig5|robustness|hardness), panel_path or
panel or m+n, alphabet, sensitive, epsilon, theta, omega, runs, seed,
instances, truncate, k, estimator (count|release_probability), output.";

const WINDOW_HELP: &str = "\
Normalized leakage I(X_K; X_released) / H(X_K) of the window-erasure baseline.

Columns: experiment, omega, erasure_rate, leakage, stderr, seed. HMMs are
estimated from --runs samples, other models are enumerated (stderr 0).";

/// Sequence release with perfect privacy for a set of sensitive positions.
#[derive(Parser)]
#[command(name = "seqhide", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Writes a random reference panel, one haplotype per line.
    GenPanel {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Masks one sequence; prints the masked sequence, then the transcript with --json.
    Mask {
        #[command(flatten)]
        model: ModelArgs,
        /// Input sequence, e.g. 0110.
        #[arg(long, conflicts_with = "sample", required_unless_present = "sample")]
        input: Option<String>,
        /// Draw the input from the model instead.
        #[arg(long)]
        sample: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Achievable rate: exact for enumerable models, Monte Carlo for HMMs.
    Rate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Estimator::Count)]
        estimator: Estimator,
        /// Enumerate even when the model is an HMM.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Upper bound on the rate of any perfectly private erasure mechanism.
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Optimal rate by linear programming (small n only); always prints JSON.
    Lp {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(long_about = WINDOW_HELP)]
    /// Leakage of the window-erasure baseline.
    Window {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        omega: Vec<usize>,
        /// Erase within distance omega of K instead of the first omega positions.
        #[arg(long)]
        radius: bool,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Leakage when the mechanism is built from a wrong model, against D(p || q).
    Robustness {
        /// True model (JSON config).
        #[arg(long)]
        truth: PathBuf,
        /// Model the mechanism believes in (JSON config).
        #[arg(long)]
        belief: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal ordering versus minimum hitting set for a set system.
    Hardness {
        /// JSON `{"m": int, "sets": [[int]]}`, 1-based.
        #[arg(long, required_unless_present = "m")]
        instance: Option<PathBuf>,
        /// Universe size of a random instance.
        #[arg(long, conflicts_with = "instance", requires = "sets")]
        m: Option<usize>,
        /// Number of sets of a random instance.
        #[arg(long)]
        sets: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(long_about = EXPERIMENT_HELP)]
    /// Runs a parameter sweep from a JSON config and writes CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config run count.
        #[arg(long)]
        runs: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Reference panel file; builds the haplotype-copying HMM.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    panel: Option<PathBuf>,
    #[arg(long, requires = "panel")]
    epsilon: Option<f64>,
    #[arg(long, requires = "panel")]
    theta: Option<f64>,
    /// JSON model config (HMM, Markov chain or explicit joint table).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Sensitive positions, 1-based.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<usize>,
    /// Processing order, 1-based; linear if omitted.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
}

#[derive(Args)]
struct OutputArgs {
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of text or CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Count,
    ReleaseProbability,
}

struct Loaded {
    model: AnyModel,
    k: SensitiveSet,
    order: ProcessingOrder,
    linear: bool,
}

impl ModelArgs {
    fn load(&self) -> seqhide::Result<Loaded> {
        let model = match (&self.panel, &self.model) {
            (Some(panel), _) => {
                let (Some(epsilon), Some(theta)) = (self.epsilon, self.theta) else {
                    return Err(Error::Input("--panel needs --epsilon and --theta".into()));
                };
                let cfg = ModelConfig::Hmm {
                    epsilon,
                    theta,
                    panel_path: Some(panel.clone()),
                    panel: None,
                    alphabet: None,
                };
                cfg.build(Path::new(""))?
            }
            (None, Some(path)) => load_model(path)?,
            (None, None) => return Err(Error::Input("give --panel or --model".into())),
        };
        let n = model.len();
        let k = SensitiveSet::from_one_based(&self.k, n)?;
        let order = match &self.order {
            Some(o) => ProcessingOrder::from_one_based(o)?,
            None => ProcessingOrder::linear(n),
        };
        let linear = order == ProcessingOrder::linear(n);
        Ok(Loaded { model, k, order, linear })
    }
}

fn load_model(path: &Path) -> seqhide::Result<AnyModel> {
    let (cfg, base) = ModelConfig::load(path)?;
    cfg.build(&base)
}

fn sink(out: &Option<PathBuf>) -> seqhide::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> seqhide::Result<()> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } => 3,
        Error::Numerical(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("seqhide: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(command: Command) -> seqhide::Result<u8> {
    match command {
        Command::GenPanel { m, n, alphabet, seed, out } => {
            if m == 0 || n == 0 {
                return Err(Error::Input("m and n must be positive".into()));
            }
            let panel = HmmModel::<f64>::random_panel(m, n, Alphabet::new(alphabet)?, &mut run_rng(seed, 0));
            match out {
                Some(p) => write_panel(p, &panel)?,
                None => {
                    let text: String = panel
                        .iter()
                        .map(|row| format!("{}\n", MaskedSequence::released(row)))
                        .collect();
                    emit(&None, &text)?;
                }
            }
        }
        Command::Mask { model, input, sample, seed, output } => {
            let l = model.load()?;
            let mut rng = run_rng(seed, 0);
            let x = match input {
                Some(s) => parse_symbols(&s)?,
                None if sample => l.model.sample(&mut rng),
                None => return Err(Error::Input("give --input or --sample".into())),
            };
            l.model.check_sequence(&x)?;
            let (y, transcript): (MaskedSequence, Transcript) = match l.model.as_hmm() {
                Some(hmm) if l.linear => mask_hmm(hmm, &x, &l.k, &mut rng)?,
                _ => mask_sequence(&l.model, &x, &l.k, &l.order, &mut rng)?,
            };
            for w in &transcript.warnings {
                eprintln!("seqhide: warning: {w}");
            }
            let mut text = format!("{y}\n");
            if output.json {
                text.push_str(&transcript.to_json_lines());
            }
            emit(&output.out, &text)?;
        }
        Command::Rate { model, runs, seed, estimator, exact, output } => {
            let l = model.load()?;
            let (rate, stderr, method) = match l.model.as_hmm() {
                Some(hmm) if !exact && l.linear => {
                    let est = match estimator {
                        Estimator::Count => RateEstimator::Count,
                        Estimator::ReleaseProbability => RateEstimator::ReleaseProbability,
                    };
                    let e = hmm_rate_mc(hmm, &l.k, runs, seed, est)?;
                    (e.mean, e.stderr, "monte_carlo")
                }
                _ => (achievable_rate_exact(&l.model, &l.k, &l.order)?, 0.0, "exact"),
            };
            let text = if output.json {
                let runs = (method == "monte_carlo").then_some(runs);
                format!("{}\n", json!({"rate": rate, "stderr": stderr, "method": method, "runs": runs, "seed": seed}))
            } else if method == "exact" {
                format!("{rate}\n")
            } else {
                format!("{rate} +- {stderr}\n")
            };
            emit(&output.out, &text)?;
        }
        Command::Bound { model, output } => {
            let l = model.load()?;
            let bound = match l.model.as_hmm() {
                Some(hmm) => hmm_upper_bound_rate(hmm, &l.k)?,
                None => upper_bound_rate(&l.model, &l.k)?,
            };
            let text = if output.json {
                format!("{}\n", json!({"bound": bound}))
            } else {
                format!("{bound}\n")
            };
            emit(&output.out, &text)?;
        }
        Command::Lp { model, out } => {
            let l = model.load()?;
            let sol = lp_optimal_rate(&l.model, &l.k)?;
            emit(&out, &format!("{}\n", sol.to_json()))?;
            return Ok(match sol.status {
                LpStatus::Optimal => 0,
                LpStatus::Capacity => 3,
                LpStatus::Infeasible | LpStatus::Numerical => 4,
            });
        }
        Command::Window { model, omega, radius, runs, seed, output } => {
            let l = model.load()?;
            let mode = if radius { WindowMode::Radius } else { WindowMode::Prefix };
            let rows = window_rows(&l.model, &l.k, mode, &omega, runs, seed)?;
            if output.json {
                emit(&output.out, &format!("{}\n", serde_json::to_string(&rows)?))?;
            } else {
                write_csv(&rows, sink(&output.out)?)?;
            }
        }
        Command::Robustness { truth, belief, k, order, out } => {
            let p = load_model(&truth)?;
            let q = load_model(&belief)?;
            let n = p.len();
            let k = SensitiveSet::from_one_based(&k, n)?;
            let order = match order {
                Some(o) => ProcessingOrder::from_one_based(&o)?,
                None => ProcessingOrder::linear(n),
            };
            let report = robustness_experiment(&MismatchPair::new(&p, &q)?, &k, &order)?;
            emit(&out, &format!("{}\n", serde_json::to_string(&report)?))?;
        }
        Command::Hardness { instance, m, sets, seed, out } => {
            let inst = match (instance, m, sets) {
                (Some(path), _, _) => HittingSetInstance::load(path)?,
                (None, Some(m), Some(k)) => HittingSetInstance::random(m, k, &mut run_rng(seed, 0))?,
                _ => return Err(Error::Input("give --instance or --m with --sets".into())),
            };
            let report = hardness_report(&inst)?;
            emit(&out, &format!("{}\n", serde_json::to_string(&report)?))?;
        }
        Command::Experiment { config, seed, runs, output } => {
            let (mut cfg, base) = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            let rows = run_experiment(&cfg, &base)?;
            let out = output.out.or_else(|| cfg.output.as_ref().map(|p| base.join(p)));
            if output.json {
                emit(&out, &format!("{}\n", serde_json::to_string(&rows)?))?;
            } else {
                write_csv(&rows, sink(&out)?)?;
            }
        }
    }
    Ok(0)
}

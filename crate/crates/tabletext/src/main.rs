use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tabletext::config::{BeamConfig, TrainConfig};
use tabletext::corpus::{generate_synthetic, load_corpus, save_corpus, Corpus, CorpusFormat};
use tabletext::error::Result;
use tabletext::eval::evaluate_corpus;
use tabletext::inference::generate;
use tabletext::plans::{extract_dynamic_plan, extract_static_plan};
use tabletext::template::template_generate;
use tabletext::training::{
    grad_check_example, gradient_check, init_train, load_checkpoint, run_epochs,
};

#[derive(Parser)]
#[command(
    name = "tabletext",
    version,
    about = "Table-to-text generation with dynamic content planning"
)]
struct Cli {
    /// Log filter: off, error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Canonical,
    Rotowire,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Canonical => CorpusFormat::Canonical,
            FormatArg::Rotowire => CorpusFormat::Rotowire,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(clap::Args, Debug)]
struct TrainOverrides {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lambda3: Option<f64>,
    #[arg(long)]
    lambda4: Option<f64>,
    #[arg(long)]
    gamma_l: Option<f64>,
    #[arg(long)]
    gamma_r: Option<f64>,
    #[arg(long)]
    use_reconstruction: Option<bool>,
    #[arg(long)]
    grad_clip: Option<f64>,
    #[arg(long)]
    min_count: Option<usize>,
    #[arg(long)]
    bptt_truncation: Option<usize>,
}

impl TrainOverrides {
    fn apply(&self, cfg: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(
            d => d, lr => lr, lr_decay => lr_decay, dropout => dropout,
            batch_size => batch_size, epochs => max_epochs, seed => seed,
            lambda1 => lambda1, lambda2 => lambda2, lambda3 => lambda3,
            lambda4 => lambda4, gamma_l => gamma_l, gamma_r => gamma_r,
            grad_clip => grad_clip, min_count => min_count,
            bptt_truncation => bptt_truncation
        );
        if let Some(v) = self.use_reconstruction {
            cfg.use_reconstruction = v;
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a deterministic synthetic box-score corpus with gold plans.
    MakeSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of examples.
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Players per side.
        #[arg(long, default_value_t = 2)]
        players: usize,
        /// Stat records per player.
        #[arg(long, default_value_t = 2)]
        stats: usize,
    },
    /// Extract gold static and dynamic plans and write them back.
    ExtractPlans {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "canonical")]
        format: FormatArg,
    },
    /// Train on a corpus with extracted plans; writes a checkpoint per epoch.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// key = value config file (flags take precedence).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Continue from an existing checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Beam-search generation from a checkpoint; one line per example.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        max_length: Option<usize>,
        #[arg(long)]
        max_plan_length: Option<usize>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Rule-based template baseline; one line per example.
    Template {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extractive metrics (RG/CS/CO) and BLEU for generated texts.
    Evaluate {
        /// Generated texts, one token-joined line per example.
        #[arg(long)]
        gen: PathBuf,
        /// Gold corpus in canonical format.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Central-difference check of every named parameter tensor.
    GradCheck {
        #[arg(long, default_value_t = 8)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        /// Entries sampled per tensor.
        #[arg(long, default_value_t = 4)]
        samples: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn read_texts(path: &Path) -> Result<Vec<Vec<String>>> {
    let content = fs::read_to_string(path)?;
    Ok(content
        .lines()
        .map(|l| l.split_whitespace().map(|t| t.to_string()).collect())
        .collect())
}

fn write_texts(path: &Path, texts: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    for t in texts {
        out.push_str(&t.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::MakeSynthetic { out, seed, n, players, stats } => {
            let corpus = generate_synthetic(seed, n, players, stats);
            save_corpus(&corpus, &out)?;
            log::info!("wrote {} synthetic examples to {}", corpus.len(), out.display());
        }
        Command::ExtractPlans { input, out, format } => {
            let mut corpus = load_corpus(&input, format.into())?;
            for ex in &mut corpus.examples {
                let sp = extract_static_plan(&ex.records, &ex.text);
                let dp = extract_dynamic_plan(&sp, &ex.records, &ex.text);
                ex.static_plan = Some(sp);
                ex.dynamic_plan = Some(dp);
            }
            save_corpus(&corpus, &out)?;
            log::info!("extracted plans for {} examples", corpus.len());
        }
        Command::Train { input, out, config, preset, resume, overrides } => {
            let corpus = load_corpus(&input, CorpusFormat::Canonical)?;
            if let Some(ck) = resume {
                let mut state = load_checkpoint(&ck)?;
                let d_before = state.model.config.d;
                overrides.apply(&mut state.model.config);
                if state.model.config.d != d_before {
                    return Err(tabletext::Error::Config(
                        "cannot change d when resuming from a checkpoint".into(),
                    ));
                }
                state.model.config.validate()?;
                log::info!("resumed config: {:?}", state.model.config);
                run_epochs(&mut state, &corpus, Some(&out))?;
            } else {
                let mut cfg = match preset {
                    Some(Preset::Paper) => TrainConfig::paper(),
                    _ => TrainConfig::default(),
                };
                if let Some(path) = config {
                    cfg.apply_file(&fs::read_to_string(path)?)?;
                }
                overrides.apply(&mut cfg);
                cfg.validate()?;
                log::info!("resolved config: {cfg:?}");
                let mut state = init_train(&corpus, &cfg)?;
                run_epochs(&mut state, &corpus, Some(&out))?;
            }
            log::info!("checkpoint written to {}", out.display());
        }
        Command::Generate { checkpoint, input, out, beam, max_length, max_plan_length, preset } => {
            let state = load_checkpoint(&checkpoint)?;
            let corpus = load_corpus(&input, CorpusFormat::Canonical)?;
            let mut cfg = match preset {
                Some(Preset::Paper) => BeamConfig::paper(),
                _ => BeamConfig::default(),
            };
            if let Some(b) = beam {
                cfg.beam_size = b;
            }
            if let Some(l) = max_length {
                cfg.max_length = l;
            }
            if let Some(l) = max_plan_length {
                cfg.max_plan_length = l;
            }
            cfg.validate()?;
            log::info!("resolved beam config: {cfg:?}");
            let mut texts = Vec::with_capacity(corpus.len());
            for ex in &corpus.examples {
                texts.push(generate(&state.model, &ex.records, &cfg)?);
            }
            write_texts(&out, &texts)?;
            log::info!("wrote {} generations to {}", texts.len(), out.display());
        }
        Command::Template { input, out } => {
            let corpus = load_corpus(&input, CorpusFormat::Canonical)?;
            let mut texts = Vec::with_capacity(corpus.len());
            for ex in &corpus.examples {
                texts.push(template_generate(&ex.records)?);
            }
            write_texts(&out, &texts)?;
            log::info!("wrote {} template texts to {}", texts.len(), out.display());
        }
        Command::Evaluate { gen, gold, report } => {
            let gen_texts = read_texts(&gen)?;
            let gold_corpus: Corpus = load_corpus(&gold, CorpusFormat::Canonical)?;
            let rep = evaluate_corpus(&gen_texts, &gold_corpus)?;
            fs::write(&report, serde_json::to_string_pretty(&rep).expect("report json"))?;
            println!(
                "RG count {:.2} P {:.2}% | CS P {:.2}% R {:.2}% | CO {:.2}% | BLEU {:.2}%",
                rep.rg_count, rep.rg_precision, rep.cs_precision, rep.cs_recall, rep.co, rep.bleu
            );
            log::info!("report written to {}", report.display());
        }
        Command::GradCheck { d, seed, epsilon, samples, tolerance } => {
            let (example, corpus) = grad_check_example();
            let cfg = TrainConfig {
                d,
                seed,
                dropout: 0.0,
                use_reconstruction: true,
                ..TrainConfig::default()
            };
            let mut state = init_train(&corpus, &cfg)?;
            let report = gradient_check(&mut state.model, &example, epsilon, samples, seed)?;
            for (name, err) in &report.per_tensor {
                println!("{name:<20} max rel err {err:.3e}");
            }
            println!("overall max rel err {:.3e}", report.max_rel_error);
            if !report.passes(tolerance) {
                eprintln!("FAIL: exceeds tolerance {tolerance:.1e}");
                return Ok(false);
            }
            println!("PASS (tolerance {tolerance:.1e})");
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

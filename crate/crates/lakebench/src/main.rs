use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lakebench::core::eval::ScoreConfig;
use lakebench::core::formats::{FormatKind, RenderConfig};
use lakebench::core::gen::SplitSpec;
use lakebench::core::trace::TraceFormat;
use lakebench::corpus::{self, Corpus};
use lakebench::dataset::PromptTemplate;
use lakebench::files::{read_json, to_json, write_bytes};
use lakebench::gateway::{GatewayConfig, HttpBackend};
use lakebench::{pipeline, presets, Error, Result};
use serde_json::json;

/// FrozenLake planning benchmark: maps, solutions, traces, datasets and scoring.
#[derive(Parser)]
#[command(name = "lakebench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a map corpus from a split spec.
    Gen(GenArgs),
    /// Write the bundled preset specs as JSON files.
    Presets {
        /// Seed written into every spec.
        #[arg(long, default_value_t = presets::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Annotate every map with its canonical shortest path, length and distance.
    Solve {
        /// Corpus directory or single map JSON file.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize reasoning traces along the canonical path.
    Trace {
        /// Corpus directory or single map JSON file.
        #[arg(long, alias = "map")]
        corpus: PathBuf,
        #[arg(long, value_parser = parse_trace_format)]
        format: TraceFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render maps as PNG (or PPM) images.
    Render {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Side of one cell in pixels.
        #[arg(long, default_value_t = 32)]
        cell_px: usize,
        /// Draw one-pixel cell borders.
        #[arg(long)]
        gridlines: bool,
        /// Write binary PPM instead of PNG.
        #[arg(long)]
        ppm: bool,
    },
    /// Export supervised fine-tuning records (prompt plus target trace).
    ExportSft {
        #[arg(long)]
        corpus: PathBuf,
        /// Map representation in the prompt: image, description, table or grid.
        #[arg(long, value_parser = parse_input_format)]
        input: FormatKind,
        /// Trace format of the target.
        #[arg(long, value_parser = parse_trace_format)]
        cot: TraceFormat,
        /// Prompt template JSON; defaults to the bundled one.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export evaluation records (prompt and metadata).
    ExportEval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_parser = parse_input_format)]
        input: FormatKind,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query a chat-completions endpoint for every evaluation record.
    Infer(InferArgs),
    /// Score responses against corpora and write verdicts and reports.
    Score {
        /// One corpus per split; repeatable.
        #[arg(long, required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        /// JSONL with `id` and `response` per line.
        #[arg(long)]
        responses: PathBuf,
        /// Count any off-grid move as a failure.
        #[arg(long)]
        strict_off_grid: bool,
        /// Replay budget in moves; defaults to four per cell.
        #[arg(long)]
        step_cap: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the accuracy report from a verdicts file.
    Report {
        #[arg(long)]
        verdicts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SpecSource {
    /// Split spec JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Bundled preset: train, ood_random, ood_d6, train_embedded10, fixed10_dist.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: SpecSource,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    /// eval.jsonl written by export-eval.
    #[arg(long)]
    eval: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Gateway config JSON; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    max_concurrency: Option<usize>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Response cache directory; defaults to `<out>/cache`.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Environment variable holding the API key.
    #[arg(long)]
    api_key_env: Option<String>,
}

fn parse_trace_format(s: &str) -> std::result::Result<TraceFormat, String> {
    TraceFormat::ALL
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| {
            format!(
                "expected one of {}",
                TraceFormat::ALL.map(|f| f.name()).join(", ")
            )
        })
}

fn parse_input_format(s: &str) -> std::result::Result<FormatKind, String> {
    FormatKind::ALL
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| {
            format!(
                "expected one of {}",
                FormatKind::ALL.map(|f| f.name()).join(", ")
            )
        })
}

fn template(path: Option<&Path>) -> Result<PromptTemplate> {
    path.map_or_else(|| Ok(PromptTemplate::default()), PromptTemplate::load)
}

fn resolve_spec(args: &GenArgs) -> Result<SplitSpec> {
    let mut spec = match (&args.source.spec, &args.source.preset) {
        (Some(path), _) => corpus::load_spec(path)?,
        (None, Some(name)) => presets::by_name(name, presets::DEFAULT_SEED).ok_or_else(|| {
            Error::Config(vec![format!(
                "preset: unknown {name:?}; expected one of {}",
                presets::NAMES.join(", ")
            )])
        })?,
        (None, None) => unreachable!("clap requires one source"),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn gateway_config(a: &InferArgs) -> Result<GatewayConfig> {
    let mut cfg = match &a.config {
        Some(p) => read_json::<GatewayConfig>(p)?,
        None => {
            let (Some(url), Some(model)) = (&a.base_url, &a.model) else {
                return Err(Error::Config(vec![
                    "infer: pass --config or both --base-url and --model".into(),
                ]));
            };
            GatewayConfig::new(url.clone(), model.clone(), a.out.join("cache"))
        }
    };
    if let Some(v) = &a.base_url {
        cfg.base_url = v.clone();
    }
    if let Some(v) = &a.model {
        cfg.model_name = v.clone();
    }
    if let Some(v) = a.max_concurrency {
        cfg.max_concurrency = v;
    }
    if let Some(v) = a.timeout_secs {
        cfg.timeout_secs = v;
    }
    if let Some(v) = a.max_retries {
        cfg.max_retries = v;
    }
    if let Some(v) = a.temperature {
        cfg.temperature = v;
    }
    if let Some(v) = &a.cache_dir {
        cfg.cache_dir = v.clone();
    }
    if let Some(v) = &a.api_key_env {
        cfg.api_key_env = v.clone();
    }
    let problems = cfg.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    Ok(cfg)
}

fn open(path: &Path) -> Result<Corpus> {
    corpus::open(path)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    Ok(match cli.command {
        Command::Gen(args) => {
            let spec = resolve_spec(&args)?;
            let m = pipeline::gen(&spec, &args.out)?;
            json!({ "split": m.split, "count": m.count, "corpus_sha256": m.corpus_sha256 })
        }
        Command::Presets { seed, out } => {
            for name in presets::NAMES {
                let spec = presets::by_name(name, seed).expect("listed presets exist");
                let mut text = serde_json::to_string_pretty(&spec).expect("specs serialize");
                text.push('\n');
                write_bytes(&out.join(format!("{name}.json")), text.as_bytes())?;
            }
            json!({ "written": presets::NAMES })
        }
        Command::Solve { corpus, out } => {
            json!({ "outputs": pipeline::solve(&open(&corpus)?, &out)?.outputs.len() })
        }
        Command::Trace {
            corpus,
            format,
            out,
        } => {
            json!(pipeline::trace(&open(&corpus)?, format, &out)?
                .outputs
                .len())
        }
        Command::Render {
            corpus,
            out,
            cell_px,
            gridlines,
            ppm,
        } => {
            let cfg = RenderConfig {
                cell_px,
                include_gridlines: gridlines,
                ..RenderConfig::default()
            };
            json!(pipeline::render(&open(&corpus)?, &cfg, ppm, &out)?
                .outputs
                .len())
        }
        Command::ExportSft {
            corpus,
            input,
            cot,
            template: t,
            out,
        } => {
            let t = template(t.as_deref())?;
            json!(pipeline::export_sft(&open(&corpus)?, input, cot, &t, &out)?.params)
        }
        Command::ExportEval {
            corpus,
            input,
            template: t,
            out,
        } => {
            let t = template(t.as_deref())?;
            json!(pipeline::export_eval(&open(&corpus)?, input, &t, &out)?.params)
        }
        Command::Infer(a) => {
            let cfg = gateway_config(&a)?;
            let backend = HttpBackend::new(&cfg);
            let (_, summary) = pipeline::infer(&a.eval, &cfg, &backend, &a.out)?;
            serde_json::to_value(summary).expect("summary serializes")
        }
        Command::Score {
            corpus,
            responses,
            strict_off_grid,
            step_cap,
            out,
        } => {
            let corpora = corpus.iter().map(|p| open(p)).collect::<Result<Vec<_>>>()?;
            let cfg = ScoreConfig {
                strict_off_grid,
                step_cap,
            };
            let (_, report) = pipeline::score(&corpora, &responses, &cfg, &out)?;
            json!(report.overall)
        }
        Command::Report { verdicts, out } => {
            let (_, report) = pipeline::report(&verdicts, &out)?;
            json!(report.overall)
        }
    })
}

fn fail(kind: &str, message: String, details: Vec<String>) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message, "details": details } })
    );
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return fail(
                "usage",
                e.render().to_string().trim_end().to_string(),
                Vec::new(),
            )
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", to_json(&summary));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string(), e.details()),
    }
}

//! The CLI subcommands as library functions.
//!
//! Every command writes into an output directory and finishes with
//! `run.json`: the command name, its parameters, hashes of its inputs and
//! hashes of every file it wrote. Nothing time- or path-dependent goes into
//! it, so identical runs produce identical directories.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lakebench_core::eval::ScoreConfig;
use lakebench_core::formats::{render_image, FormatKind, RenderConfig};
use lakebench_core::gen::SplitSpec;
use lakebench_core::path::astar_shortest;
use lakebench_core::trace::{synthesize_trace, TraceFormat, TraceLayout};
use lakebench_core::{Move, Report};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{self, Corpus, CorpusManifest};
use crate::dataset::{eval_records, sft_records, write_records, PromptTemplate, SampleRecord};
use crate::error::{Error, Result};
use crate::files::{
    jsonl_bytes, read_jsonl, sha256_file, sha256_hex, write_bytes, write_json_pretty,
};
use crate::gateway::{run_batch, BatchSummary, ChatBackend, GatewayConfig};
use crate::image::encode_png;
use crate::scoring::{
    report_from_verdicts, score_all, write_report, ResponseRecord, VerdictRecord,
};

pub const RUN_MANIFEST: &str = "run.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn new(dir: &Path, command: &str, params: Value) -> Self {
        Run {
            dir: dir.into(),
            manifest: RunManifest {
                command: command.into(),
                params,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
        }
    }

    fn input(&mut self, role: &str, sha256: String) {
        self.manifest.inputs.insert(role.into(), sha256);
    }

    fn output(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_bytes(&self.dir.join(rel), bytes)?;
        self.manifest.outputs.insert(rel.into(), sha256_hex(bytes));
        Ok(())
    }

    /// Records a file some helper already wrote.
    fn written(&mut self, rel: &str) -> Result<()> {
        let sha = sha256_file(&self.dir.join(rel))?;
        self.manifest.outputs.insert(rel.into(), sha);
        Ok(())
    }

    fn finish(self) -> Result<RunManifest> {
        write_json_pretty(&self.dir.join(RUN_MANIFEST), &self.manifest)?;
        Ok(self.manifest)
    }
}

pub fn gen(spec: &SplitSpec, out: &Path) -> Result<CorpusManifest> {
    let maps = corpus::generate(spec)?;
    corpus::write_corpus(out, spec, &maps)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub id: String,
    pub size: usize,
    pub d_inf: usize,
    pub optimal_length: usize,
    pub moves: Vec<Move>,
}

pub fn solve(corpus: &Corpus, out: &Path) -> Result<RunManifest> {
    let mut run = Run::new(out, "solve", json!({}));
    run.input("corpus", corpus.manifest.corpus_sha256.clone());
    let solutions = corpus
        .maps
        .iter()
        .map(|m| {
            let p = astar_shortest(m).map_err(|_| Error::Unsolvable(m.id().into()))?;
            Ok(Solution {
                id: m.id().into(),
                size: m.rows(),
                d_inf: m.d_inf(),
                optimal_length: p.length,
                moves: p.moves,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run.output("solutions.jsonl", &jsonl_bytes(&solutions))?;
    run.finish()
}

/// Sidecar of a rendered trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub id: String,
    pub format: TraceFormat,
    #[serde(flatten)]
    pub layout: TraceLayout,
}

/// A trace line; `response` makes the file a valid responses file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    pub format: TraceFormat,
    pub response: String,
}

pub fn trace(corpus: &Corpus, format: TraceFormat, out: &Path) -> Result<RunManifest> {
    let mut run = Run::new(out, "trace", json!({ "format": format }));
    run.input("corpus", corpus.manifest.corpus_sha256.clone());
    let mut lines = Vec::new();
    for m in &corpus.maps {
        let path = astar_shortest(m).map_err(|_| Error::Unsolvable(m.id().into()))?;
        let (text, layout) = synthesize_trace(m, &path.moves, format)?.render_with_layout();
        run.output(&format!("traces/{}.txt", m.id()), text.as_bytes())?;
        let sidecar = TraceSidecar {
            id: m.id().into(),
            format,
            layout,
        };
        let mut sidecar_json =
            serde_json::to_vec_pretty(&sidecar).expect("in-memory values serialize");
        sidecar_json.push(b'\n');
        run.output(&format!("traces/{}.json", m.id()), &sidecar_json)?;
        lines.push(TraceRecord {
            id: m.id().into(),
            format,
            response: text,
        });
    }
    run.output("traces.jsonl", &jsonl_bytes(&lines))?;
    run.finish()
}

pub fn render(corpus: &Corpus, cfg: &RenderConfig, ppm: bool, out: &Path) -> Result<RunManifest> {
    let mut run = Run::new(out, "render", json!({ "config": cfg, "ppm": ppm }));
    run.input("corpus", corpus.manifest.corpus_sha256.clone());
    for m in &corpus.maps {
        let raster = render_image(m, cfg)?;
        if ppm {
            run.output(&format!("images/{}.ppm", m.id()), &raster.to_ppm())?;
        } else {
            run.output(&format!("images/{}.png", m.id()), &encode_png(&raster)?)?;
        }
    }
    run.finish()
}

fn export(
    command: &str,
    file: &str,
    corpus: &Corpus,
    records: &[SampleRecord],
    params: Value,
    template: &PromptTemplate,
    out: &Path,
) -> Result<RunManifest> {
    let mut run = Run::new(out, command, params);
    run.input("corpus", corpus.manifest.corpus_sha256.clone());
    run.input("template", template.sha256());
    let render = RenderConfig::default();
    write_records(out, file, corpus, records, &render)?;
    run.written(file)?;
    for r in records {
        if let Some(rel) = &r.image {
            run.written(rel)?;
        }
    }
    run.finish()
}

pub fn export_sft(
    corpus: &Corpus,
    input: FormatKind,
    cot: TraceFormat,
    template: &PromptTemplate,
    out: &Path,
) -> Result<RunManifest> {
    let records = sft_records(corpus, input, cot, template)?;
    let params = json!({ "input": input, "cot": cot, "count": records.len() });
    export(
        "export-sft",
        "sft.jsonl",
        corpus,
        &records,
        params,
        template,
        out,
    )
}

pub fn export_eval(
    corpus: &Corpus,
    input: FormatKind,
    template: &PromptTemplate,
    out: &Path,
) -> Result<RunManifest> {
    let records = eval_records(corpus, input, template)?;
    let params = json!({ "input": input, "count": records.len() });
    export(
        "export-eval",
        "eval.jsonl",
        corpus,
        &records,
        params,
        template,
        out,
    )
}

pub fn infer(
    eval_path: &Path,
    cfg: &GatewayConfig,
    backend: &dyn ChatBackend,
    out: &Path,
) -> Result<(RunManifest, BatchSummary)> {
    let samples: Vec<SampleRecord> = read_jsonl(eval_path)?;
    let base = eval_path.parent().unwrap_or(Path::new("."));
    let params = json!({
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_retries": cfg.max_retries,
    });
    let mut run = Run::new(out, "infer", params);
    run.input("eval", sha256_file(eval_path)?);
    let summary = run_batch(&samples, base, cfg, backend, &out.join("responses.jsonl"))?;
    run.written("responses.jsonl")?;
    Ok((run.finish()?, summary))
}

/// Scores responses against one or more corpora; each corpus is a split of
/// the report.
pub fn score(
    corpora: &[Corpus],
    responses_path: &Path,
    cfg: &ScoreConfig,
    out: &Path,
) -> Result<(RunManifest, Report)> {
    let responses: Vec<ResponseRecord> = read_jsonl(responses_path)?;
    let mut run = Run::new(out, "score", json!({ "config": cfg }));
    run.input("responses", sha256_file(responses_path)?);
    let mut maps = Vec::new();
    let mut meta = BTreeMap::new();
    for c in corpora {
        run.input(
            &format!("corpus:{}", c.manifest.split),
            c.manifest.corpus_sha256.clone(),
        );
        meta.extend(corpus::metadata(c)?);
        maps.extend(c.maps.iter().cloned());
    }
    if meta.len() != maps.len() {
        return Err(Error::Config(vec![
            "corpus: map ids collide across corpora".into(),
        ]));
    }
    let verdicts = score_all(&maps, &meta, &responses, cfg)?;
    run.output("verdicts.jsonl", &jsonl_bytes(&verdicts))?;
    let report = report_from_verdicts(&verdicts)?;
    write_report(out, &report)?;
    run.written("report.json")?;
    run.written("report.csv")?;
    Ok((run.finish()?, report))
}

pub fn report(verdicts_path: &Path, out: &Path) -> Result<(RunManifest, Report)> {
    let verdicts: Vec<VerdictRecord> = read_jsonl(verdicts_path)?;
    let mut run = Run::new(out, "report", json!({}));
    run.input("verdicts", sha256_file(verdicts_path)?);
    let report = report_from_verdicts(&verdicts)?;
    write_report(out, &report)?;
    run.written("report.json")?;
    run.written("report.csv")?;
    Ok((run.finish()?, report))
}

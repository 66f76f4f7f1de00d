//! Prompt assembly and SFT / evaluation JSONL export.

use std::path::Path;

use lakebench_core::formats::{emit_description, emit_grid, emit_table, FormatKind, RenderConfig};
use lakebench_core::model::Map;
use lakebench_core::path::astar_shortest;
use lakebench_core::trace::{synthesize_trace, TraceFormat};
use lakebench_core::SampleMeta;
use serde::{Deserialize, Serialize};

use crate::corpus::{sample_meta, Corpus};
use crate::error::{Error, Result};
use crate::files::{jsonl_bytes, read_json, sha256_hex, to_json, write_bytes};
use crate::image::map_png;

/// Placeholder replaced by the serialized map.
pub const INPUT_SLOT: &str = "{map}";

/// Text standing in for the map when it is attached as an image.
pub const IMAGE_STANDIN: &str = "(The map is shown in the attached image.)";

pub const DEFAULT_TEMPLATE: &str = include_str!("../assets/prompt_template.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub rules_text: String,
    pub answer_instruction: String,
}

impl PromptTemplate {
    pub fn load(path: &Path) -> Result<Self> {
        let t: PromptTemplate = read_json(path)?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let slots = self.rules_text.matches(INPUT_SLOT).count()
            + self.answer_instruction.matches(INPUT_SLOT).count();
        if slots != 1 || !self.rules_text.contains(INPUT_SLOT) {
            return Err(Error::Config(vec![format!(
                "rules_text: must contain {INPUT_SLOT} exactly once (found {slots} in the template)"
            )]));
        }
        Ok(())
    }

    pub fn sha256(&self) -> String {
        sha256_hex(to_json(self).as_bytes())
    }

    pub fn render(&self, map_text: &str) -> String {
        format!(
            "{}\n\n{}",
            self.rules_text.replace(INPUT_SLOT, map_text),
            self.answer_instruction
        )
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_TEMPLATE).expect("bundled template is valid JSON")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub input_format: FormatKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cot_format: Option<TraceFormat>,
    pub prompt: String,
    /// Relative path of the rendered map for image inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub meta: SampleMeta,
}

/// Trace formats that can be paired with each input format for training.
pub fn allowed_cot(input: FormatKind) -> &'static [TraceFormat] {
    use TraceFormat::*;
    match input {
        FormatKind::Image => &[None, Description],
        FormatKind::Description => &[
            None,
            Description,
            Grid,
            Table,
            GridDescription,
            TableDescription,
        ],
        FormatKind::Table => &[None, Description, Table, TableDescription],
        FormatKind::Grid => &[None, Description, Grid, GridDescription],
    }
}

pub fn check_pair(input: FormatKind, cot: TraceFormat) -> Result<()> {
    if allowed_cot(input).contains(&cot) {
        Ok(())
    } else {
        Err(Error::Config(vec![format!(
            "cot: {} is not paired with {} input; allowed: {}",
            cot.name(),
            input.name(),
            allowed_cot(input)
                .iter()
                .map(|f| f.name())
                .collect::<Vec<_>>()
                .join(", ")
        )]))
    }
}

pub fn image_path(id: &str) -> String {
    format!("images/{id}.png")
}

pub fn map_text(map: &Map, input: FormatKind) -> String {
    match input {
        FormatKind::Grid => emit_grid(map),
        FormatKind::Table => emit_table(map),
        FormatKind::Description => emit_description(map),
        FormatKind::Image => IMAGE_STANDIN.to_string(),
    }
}

fn record(
    map: &Map,
    split: &str,
    input: FormatKind,
    template: &PromptTemplate,
) -> Result<SampleRecord> {
    Ok(SampleRecord {
        id: map.id().to_string(),
        input_format: input,
        cot_format: None,
        prompt: template.render(&map_text(map, input)),
        image: (input == FormatKind::Image).then(|| image_path(map.id())),
        target: None,
        meta: sample_meta(map, split)?,
    })
}

fn sorted_maps(corpus: &Corpus) -> Vec<&Map> {
    let mut maps: Vec<&Map> = corpus.maps.iter().collect();
    maps.sort_by(|a, b| a.id().cmp(b.id()));
    maps
}

/// Training records: prompt plus the synthesized trace of the canonical path.
pub fn sft_records(
    corpus: &Corpus,
    input: FormatKind,
    cot: TraceFormat,
    template: &PromptTemplate,
) -> Result<Vec<SampleRecord>> {
    check_pair(input, cot)?;
    template.validate()?;
    sorted_maps(corpus)
        .into_iter()
        .map(|m| {
            let path = astar_shortest(m).map_err(|_| Error::Unsolvable(m.id().into()))?;
            let mut r = record(m, &corpus.manifest.split, input, template)?;
            r.cot_format = Some(cot);
            r.target = Some(synthesize_trace(m, &path.moves, cot)?.render());
            Ok(r)
        })
        .collect()
}

/// Evaluation records: prompt and metadata, no target.
pub fn eval_records(
    corpus: &Corpus,
    input: FormatKind,
    template: &PromptTemplate,
) -> Result<Vec<SampleRecord>> {
    template.validate()?;
    sorted_maps(corpus)
        .into_iter()
        .map(|m| record(m, &corpus.manifest.split, input, template))
        .collect()
}

/// Writes `file_name` (JSONL) into `dir`, plus `images/` for image inputs.
/// Returns the JSONL bytes.
pub fn write_records(
    dir: &Path,
    file_name: &str,
    corpus: &Corpus,
    records: &[SampleRecord],
    render: &RenderConfig,
) -> Result<Vec<u8>> {
    for r in records {
        if let Some(rel) = &r.image {
            let map = corpus
                .maps
                .iter()
                .find(|m| m.id() == r.id)
                .expect("records come from the corpus");
            write_bytes(&dir.join(rel), &map_png(map, render)?)?;
        }
    }
    let bytes = jsonl_bytes(records);
    write_bytes(&dir.join(file_name), &bytes)?;
    Ok(bytes)
}

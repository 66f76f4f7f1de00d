//! Map corpora on disk.
//!
//! A corpus directory holds `maps/<id>.json`, one canonical map JSON object
//! per file, and `manifest.json` with the split spec, its hash, the per-entry
//! counts and the ordered id list.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lakebench_core::gen::{SplitEntry, SplitSpec};
use lakebench_core::model::Map;
use lakebench_core::path::astar_shortest;
use lakebench_core::SampleMeta;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files::{create_dir, read_json, sha256_hex, to_json, write_bytes, write_json_pretty};

pub const MANIFEST: &str = "manifest.json";
pub const MAPS_DIR: &str = "maps";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryCount {
    pub size: usize,
    pub d_inf_min: Option<usize>,
    pub d_inf_max: Option<usize>,
    pub embed_into: Option<usize>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub split: String,
    pub seed: u64,
    pub spec_sha256: String,
    /// Hash over the map files' bytes in corpus order.
    pub corpus_sha256: String,
    pub count: usize,
    pub entries: Vec<EntryCount>,
    pub spec: SplitSpec,
    pub ids: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub maps: Vec<Map>,
}

/// Canonical single-line JSON of a map, newline-terminated.
pub fn map_file_bytes(map: &Map) -> Vec<u8> {
    let mut s = to_json(map);
    s.push('\n');
    s.into_bytes()
}

pub fn spec_hash(spec: &SplitSpec) -> String {
    sha256_hex(to_json(spec).as_bytes())
}

/// Validates a split spec read from a file, listing every problem.
pub fn load_spec(path: &Path) -> Result<SplitSpec> {
    let spec: SplitSpec = read_json(path)?;
    let problems = spec.violations();
    if problems.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Config(problems))
    }
}

/// Generates a split with one task per map. Each map has its own RNG stream,
/// so the result equals [`lakebench_core::build_split`].
pub fn generate(spec: &SplitSpec) -> Result<Vec<Map>> {
    let problems = spec.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let plan: Vec<(usize, usize)> = spec.plan().collect();
    let maps = plan
        .par_iter()
        .map(|&(e, i)| spec.generate_one(e, i))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(maps)
}

fn entry_count(e: &SplitEntry) -> EntryCount {
    EntryCount {
        size: e.constraints.size,
        d_inf_min: e.constraints.d_inf_min,
        d_inf_max: e.constraints.d_inf_max,
        embed_into: e.embed_into,
        count: e.count,
    }
}

pub fn write_corpus(dir: &Path, spec: &SplitSpec, maps: &[Map]) -> Result<CorpusManifest> {
    let maps_dir = dir.join(MAPS_DIR);
    create_dir(&maps_dir)?;
    let mut all = Vec::new();
    for m in maps {
        let bytes = map_file_bytes(m);
        write_bytes(&maps_dir.join(format!("{}.json", m.id())), &bytes)?;
        all.extend_from_slice(&bytes);
    }
    let manifest = CorpusManifest {
        split: spec.name.clone(),
        seed: spec.seed,
        spec_sha256: spec_hash(spec),
        corpus_sha256: sha256_hex(&all),
        count: maps.len(),
        entries: spec.entries.iter().map(entry_count).collect(),
        spec: spec.clone(),
        ids: maps.iter().map(|m| m.id().to_string()).collect(),
    };
    write_json_pretty(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let manifest: CorpusManifest = read_json(&dir.join(MANIFEST))?;
    let maps = manifest
        .ids
        .iter()
        .map(|id| read_json::<Map>(&map_path(dir, id)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { manifest, maps })
}

pub fn map_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(MAPS_DIR).join(format!("{id}.json"))
}

/// Wraps a single map file as a one-map corpus named after the map.
pub fn single_map_corpus(path: &Path) -> Result<Corpus> {
    let map: Map = read_json(path)?;
    let spec = SplitSpec {
        name: map.id().to_string(),
        seed: map.seed().unwrap_or(0),
        entries: Vec::new(),
    };
    let bytes = map_file_bytes(&map);
    Ok(Corpus {
        manifest: CorpusManifest {
            split: spec.name.clone(),
            seed: spec.seed,
            spec_sha256: spec_hash(&spec),
            corpus_sha256: sha256_hex(&bytes),
            count: 1,
            entries: Vec::new(),
            ids: vec![map.id().to_string()],
            spec,
        },
        maps: vec![map],
    })
}

/// Loads either a corpus directory or a single map JSON file.
pub fn open(path: &Path) -> Result<Corpus> {
    if path.is_dir() {
        read_corpus(path)
    } else {
        single_map_corpus(path)
    }
}

/// Size, distance and optimal length of every map, recomputed from the maps.
pub fn metadata(corpus: &Corpus) -> Result<BTreeMap<String, SampleMeta>> {
    corpus
        .maps
        .iter()
        .map(|m| Ok((m.id().to_string(), sample_meta(m, &corpus.manifest.split)?)))
        .collect()
}

pub fn sample_meta(map: &Map, split: &str) -> Result<SampleMeta> {
    let path = astar_shortest(map).map_err(|_| Error::Unsolvable(map.id().into()))?;
    Ok(SampleMeta {
        split: split.to_string(),
        size: map.rows(),
        d_inf: map.d_inf(),
        optimal_length: path.length,
    })
}

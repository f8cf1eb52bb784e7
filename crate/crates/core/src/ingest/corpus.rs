use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use super::{parse_metadata, HomeMeta, IngestError, MetaColumnMap};

/// Per-home telemetry files live in `<corpus>/homes/<home_id>.csv`.
pub const HOMES_DIR: &str = "homes";
/// Metadata lives in `<corpus>/meta.csv`.
pub const META_FILE: &str = "meta.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomeFile {
    pub home_id: String,
    pub path: PathBuf,
}

/// Every `*.csv` under `<corpus>/homes`, sorted by home id.
pub fn list_homes(corpus: &Path) -> Result<Vec<HomeFile>, IngestError> {
    let dir = corpus.join(HOMES_DIR);
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.push(HomeFile {
                home_id: stem.to_string(),
                path,
            });
        }
    }
    out.sort_by(|a, b| a.home_id.cmp(&b.home_id));
    Ok(out)
}

/// Metadata for every listed home. Homes absent from `meta.csv` (or all of them, if the
/// file is missing) get an empty record.
pub fn read_corpus_metadata(
    corpus: &Path,
    homes: &[HomeFile],
    map: &MetaColumnMap,
) -> Result<Vec<HomeMeta>, IngestError> {
    let path = corpus.join(META_FILE);
    let mut by_id: BTreeMap<String, HomeMeta> = if path.exists() {
        parse_metadata(BufReader::new(File::open(path)?), map)?
            .into_iter()
            .map(|m| (m.home_id.clone(), m))
            .collect()
    } else {
        BTreeMap::new()
    };
    Ok(homes
        .iter()
        .map(|h| {
            by_id
                .remove(&h.home_id)
                .unwrap_or_else(|| HomeMeta::bare(&h.home_id))
        })
        .collect())
}

//! Corpus construction: directory ingest, the edit filter and the synthetic
//! planted-idiom generator.

mod edits;
mod synthetic;

use std::path::Path;

use rayon::prelude::*;

pub use edits::{
    api_count, build_manifest, cyclomatic_complexity, filter_edit, load_edits, split_methods, token_digest,
    CorpusManifest, Edit, FilterOptions, FilterOutcome, ManifestEntry, MethodTokens, Rejection, RejectionNote,
};
pub use synthetic::{generate_synthetic, MethodLabel, SyntheticCorpus, SyntheticParams};

use crate::dataflow::DataflowError;
use crate::dftree::{ast_trees, DfTree, TreeMode};
use crate::frontend::{parse, SyntaxError};
use crate::typeinfer::InferOptions;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("invalid glob {0:?}")]
    Glob(String),
    #[error("{side} side: {error}")]
    Parse { side: &'static str, error: SyntaxError },
    #[error("{file}: {error}")]
    Syntax { file: String, error: SyntaxError },
    #[error("{file}: {error}")]
    Dataflow { file: String, error: DataflowError },
}

/// Files under `root` matching `pattern`, as `/`-separated relative paths in
/// lexicographic order.
pub fn list_files(root: &Path, pattern: &str) -> Result<Vec<String>, CorpusError> {
    let pat = glob::Pattern::new(pattern).map_err(|_| CorpusError::Glob(pattern.to_string()))?;
    let opts = glob::MatchOptions {
        require_literal_separator: false,
        ..Default::default()
    };
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root) {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: root.display().to_string(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let rel = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if pat.matches_with(&rel, opts) {
            out.push(rel);
        }
    }
    out.sort();
    Ok(out)
}

/// Trees from a directory plus the files that were skipped.
#[derive(Debug, Default)]
pub struct Ingested {
    pub trees: Vec<DfTree>,
    pub skipped: Vec<CorpusError>,
}

#[derive(Clone, Copy, Debug)]
pub struct IngestOptions {
    pub mode: TreeMode,
    pub infer: InferOptions,
    /// Fail on the first bad file instead of skipping it.
    pub strict: bool,
}

/// Trees for one source text. `file` becomes the tree's file name.
pub fn source_trees(src: &str, file: &str, mode: TreeMode, infer: InferOptions) -> Result<Vec<DfTree>, CorpusError> {
    let ast = parse(src, file).map_err(|error| CorpusError::Syntax {
        file: file.to_string(),
        error,
    })?;
    ast_trees(&ast, mode, infer).map_err(|error| CorpusError::Dataflow {
        file: file.to_string(),
        error,
    })
}

/// Parses every matching file under `root` (in parallel, results in path
/// order). Tree file names are relative to `root`.
pub fn ingest_dir(root: &Path, pattern: &str, opts: IngestOptions) -> Result<Ingested, CorpusError> {
    let files = list_files(root, pattern)?;
    let results: Vec<Result<Vec<DfTree>, CorpusError>> = files
        .par_iter()
        .map(|rel| {
            let path = root.join(rel);
            let src = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
            source_trees(&src, rel, opts.mode, opts.infer)
        })
        .collect();
    let mut out = Ingested::default();
    for r in results {
        match r {
            Ok(ts) => out.trees.extend(ts),
            Err(e) if opts.strict => return Err(e),
            Err(e) => {
                log::warn!("skipping {e}");
                out.skipped.push(e);
            }
        }
    }
    Ok(out)
}

/// Parses the before files a manifest points at and keeps only its methods.
/// Tree file names are the manifest's `<edit>/before/<path>` strings.
pub fn manifest_trees(
    edits_root: &Path,
    manifest: &CorpusManifest,
    mode: TreeMode,
    infer: InferOptions,
) -> Result<Vec<DfTree>, CorpusError> {
    let mut files: Vec<&str> = manifest.entries.iter().map(|e| e.file.as_str()).collect();
    files.sort();
    files.dedup();
    let mut out = Vec::new();
    for f in files {
        let path = edits_root.join(f);
        let src = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        out.extend(
            source_trees(&src, f, mode, infer)?
                .into_iter()
                .filter(|t| manifest.contains(&t.file, &t.method)),
        );
    }
    Ok(out)
}

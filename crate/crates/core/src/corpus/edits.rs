//! Three-stage filter over before/after edit pairs.
//!
//! The after side uses lambdas and functional APIs that MiniHack does not
//! parse, so methods are cut out of the token stream on both sides and
//! compared lexically. Only the before side has to parse.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::frontend::{parse, tokenize, Tok, Token};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edit {
    pub id: String,
    pub before_path: String,
    pub before: String,
    pub after_path: String,
    pub after: String,
    pub api: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FilterOptions {
    /// Count API tokens per method instead of per file in stage 2.
    pub method_level_count: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    /// Method missing on the after side.
    Removed,
    /// Stage 1: same tokens on both sides.
    Unchanged,
    /// Stage 1: the after method does not mention the API.
    NoApi,
    /// Stage 2: API occurrences did not increase.
    ApiCount,
    /// Stage 3: complexity did not drop.
    Complexity,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rejection::Removed => "removed",
            Rejection::Unchanged => "unchanged",
            Rejection::NoApi => "no-api",
            Rejection::ApiCount => "api-count",
            Rejection::Complexity => "complexity",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterOutcome {
    /// Before-side methods that passed every stage, in file order.
    pub kept: Vec<String>,
    pub rejected: Vec<(String, Rejection)>,
}

/// A method cut out of a token stream.
#[derive(Clone, Debug)]
pub struct MethodTokens {
    pub name: String,
    pub tokens: Vec<Token>,
}

/// Methods of a file as `function name(..) { .. }` token runs.
pub fn split_methods(tokens: &[Token]) -> Vec<MethodTokens> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let is_fn = matches!(&tokens[i].tok, Tok::Ident(s) if s == "function");
        let name = match tokens.get(i + 1).map(|t| &t.tok) {
            Some(Tok::Ident(n)) if is_fn => n.clone(),
            _ => {
                i += 1;
                continue;
            }
        };
        let Some(open) = (i..tokens.len()).find(|&j| tokens[j].tok == Tok::Punct("{")) else {
            break;
        };
        let mut depth = 0usize;
        let mut end = tokens.len();
        for (j, t) in tokens.iter().enumerate().skip(open) {
            match t.tok {
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    depth -= 1;
                    if depth == 0 {
                        end = j + 1;
                        break;
                    }
                }
                _ => {}
            }
        }
        out.push(MethodTokens {
            name,
            tokens: tokens[i..end].to_vec(),
        });
        i = end;
    }
    out
}

/// Order-sensitive digest of a token run; layout and comments do not count.
pub fn token_digest(tokens: &[Token]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for t in tokens {
        for b in t.tok.to_string().bytes().chain([0u8]) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// 1 + decision points (`if`, `elseif`, `foreach`, `&&`, `||`).
pub fn cyclomatic_complexity(tokens: &[Token]) -> usize {
    1 + tokens
        .iter()
        .filter(|t| match &t.tok {
            Tok::Ident(s) => s == "if" || s == "elseif" || s == "foreach",
            Tok::Punct(p) => *p == "&&" || *p == "||",
            _ => false,
        })
        .count()
}

fn normalize_api(api: &str) -> &str {
    api.trim_start_matches('\\')
}

/// Occurrences of `api` as a name token (a leading `\` is ignored).
pub fn api_count(tokens: &[Token], api: &str) -> usize {
    let api = normalize_api(api);
    tokens
        .iter()
        .filter(|t| matches!(&t.tok, Tok::Ident(s) if normalize_api(s) == api))
        .count()
}

fn lex(src: &str, path: &str, side: &'static str) -> Result<Vec<Token>, CorpusError> {
    tokenize(src).map_err(|e| CorpusError::Parse {
        side,
        error: e.in_file(path),
    })
}

pub fn filter_edit(edit: &Edit, opts: FilterOptions) -> Result<FilterOutcome, CorpusError> {
    parse(&edit.before, &edit.before_path).map_err(|error| CorpusError::Parse {
        side: "before",
        error,
    })?;
    let before = lex(&edit.before, &edit.before_path, "before")?;
    let after = lex(&edit.after, &edit.after_path, "after")?;
    let after_methods: BTreeMap<String, MethodTokens> =
        split_methods(&after).into_iter().map(|m| (m.name.clone(), m)).collect();
    let file_grew = api_count(&after, &edit.api) > api_count(&before, &edit.api);

    let mut out = FilterOutcome::default();
    for m in split_methods(&before) {
        let verdict = match after_methods.get(&m.name) {
            None => Err(Rejection::Removed),
            Some(a) => stages(&m, a, &edit.api, file_grew, opts),
        };
        match verdict {
            Ok(()) => out.kept.push(m.name),
            Err(r) => out.rejected.push((m.name, r)),
        }
    }
    Ok(out)
}

fn stages(
    before: &MethodTokens,
    after: &MethodTokens,
    api: &str,
    file_grew: bool,
    opts: FilterOptions,
) -> Result<(), Rejection> {
    if token_digest(&before.tokens) == token_digest(&after.tokens) {
        return Err(Rejection::Unchanged);
    }
    let after_api = api_count(&after.tokens, api);
    if after_api == 0 {
        return Err(Rejection::NoApi);
    }
    let grew = if opts.method_level_count {
        after_api > api_count(&before.tokens, api)
    } else {
        file_grew
    };
    if !grew {
        return Err(Rejection::ApiCount);
    }
    if cyclomatic_complexity(&before.tokens) <= cyclomatic_complexity(&after.tokens) {
        return Err(Rejection::Complexity);
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub edit: String,
    pub file: String,
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionNote {
    pub edit: String,
    pub file: String,
    pub method: String,
    pub stage: Rejection,
}

/// Methods retained for mining plus why the others were dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    pub rejected: Vec<RejectionNote>,
}

impl CorpusManifest {
    pub fn contains(&self, file: &str, method: &str) -> bool {
        self.entries.iter().any(|e| e.file == file && e.method == method)
    }
}

#[derive(Deserialize)]
struct Meta {
    api: String,
}

/// Loads `edits/<id>/{before,after}/..` pairs. Files are paired by relative
/// path; `api` overrides each edit's `meta.json`.
pub fn load_edits(dir: &Path, api: Option<&str>) -> Result<Vec<Edit>, CorpusError> {
    let io = |p: &Path, e: std::io::Error| CorpusError::Io {
        path: p.display().to_string(),
        source: e,
    };
    let mut ids: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    ids.sort();
    let mut edits = Vec::new();
    for edit_dir in ids {
        let id = edit_dir.file_name().unwrap_or_default().to_string_lossy().to_string();
        let api = match api {
            Some(a) => a.to_string(),
            None => {
                let meta_path = edit_dir.join("meta.json");
                let text = std::fs::read_to_string(&meta_path).map_err(|e| io(&meta_path, e))?;
                let meta: Meta = serde_json::from_str(&text).map_err(|e| CorpusError::Json {
                    path: meta_path.display().to_string(),
                    message: e.to_string(),
                })?;
                meta.api
            }
        };
        let before_root = edit_dir.join("before");
        for rel in super::list_files(&before_root, "**/*.mh")? {
            let bp = before_root.join(&rel);
            let ap = edit_dir.join("after").join(&rel);
            if !ap.exists() {
                continue;
            }
            edits.push(Edit {
                id: id.clone(),
                before_path: format!("{id}/before/{rel}"),
                before: std::fs::read_to_string(&bp).map_err(|e| io(&bp, e))?,
                after_path: format!("{id}/after/{rel}"),
                after: std::fs::read_to_string(&ap).map_err(|e| io(&ap, e))?,
                api: api.clone(),
            });
        }
    }
    Ok(edits)
}

/// Runs [`filter_edit`] over every pair and collects the manifest.
pub fn build_manifest(edits: &[Edit], opts: FilterOptions) -> Result<CorpusManifest, CorpusError> {
    let mut manifest = CorpusManifest::default();
    for e in edits {
        let out = filter_edit(e, opts)?;
        manifest.entries.extend(out.kept.into_iter().map(|method| ManifestEntry {
            edit: e.id.clone(),
            file: e.before_path.clone(),
            method,
        }));
        manifest
            .rejected
            .extend(out.rejected.into_iter().map(|(method, stage)| RejectionNote {
                edit: e.id.clone(),
                file: e.before_path.clone(),
                method,
                stage,
            }));
    }
    Ok(manifest)
}

//! Prompt templates and structured-response parsing.
//!
//! The four templates ship as versioned data files under `templates/` (with a
//! digest manifest) rather than string constants, so the exact prompts are
//! auditable and can be iterated without a rebuild. Rendering is a strict
//! single-pass substitution: placeholder syntax is `{name}`, names are fixed,
//! and substituted values are never re-expanded.

mod parse;

pub use parse::{
    format_assessment, parse_assessment, render_parse_roundtrip_check, Answer,
    AssessmentParseError, ParseWarning, RelevanceAssessment,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{BillRecord, CompanyRecord};

/// Placeholder names templates may use. `chunk` belongs to the chunk-summary
/// template only; the other five carry bill and company data.
pub const KNOWN_PLACEHOLDERS: [&str; 6] = [
    "official_title",
    "summary_text",
    "subjects",
    "company_name",
    "business_description",
    "chunk",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Relevance,
    LetterBase,
    LetterAggressive,
    ChunkSummary,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::Relevance,
        TemplateId::LetterBase,
        TemplateId::LetterAggressive,
        TemplateId::ChunkSummary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TemplateId::Relevance => "relevance",
            TemplateId::LetterBase => "letter_base",
            TemplateId::LetterAggressive => "letter_aggressive",
            TemplateId::ChunkSummary => "chunk_summary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("unknown template id `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` uses unknown placeholder `{{{placeholder}}}`")]
    UnknownPlaceholder {
        template: String,
        placeholder: String,
    },
    #[error("placeholder `{{{0}}}` has no binding")]
    UnboundPlaceholder(String),
    #[error("placeholder `{{{0}}}` binding is empty")]
    EmptyBinding(String),
    #[error("cannot read template store at {path}: {message}")]
    Store { path: String, message: String },
    #[error("template `{template}` digest mismatch: manifest {expected}, actual {actual}")]
    DigestMismatch {
        template: String,
        expected: String,
        actual: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub template_id: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateManifest {
    pub version: u32,
    pub templates: Vec<ManifestEntry>,
}

/// The template set in use: bodies plus the digest manifest describing them.
#[derive(Debug, Clone)]
pub struct TemplateStore {
    bodies: BTreeMap<TemplateId, String>,
    manifest: TemplateManifest,
}

const BUILTIN_MANIFEST: &str = include_str!("../../templates/manifest.json");
const BUILTIN_RELEVANCE: &str = include_str!("../../templates/relevance.txt");
const BUILTIN_LETTER_BASE: &str = include_str!("../../templates/letter_base.txt");
const BUILTIN_LETTER_AGGRESSIVE: &str = include_str!("../../templates/letter_aggressive.txt");
const BUILTIN_CHUNK_SUMMARY: &str = include_str!("../../templates/chunk_summary.txt");

impl TemplateStore {
    /// The shipped templates, embedded at build time from `templates/`.
    pub fn builtin() -> Self {
        let manifest: TemplateManifest =
            serde_json::from_str(BUILTIN_MANIFEST).expect("shipped manifest is valid JSON");
        let mut bodies = BTreeMap::new();
        bodies.insert(TemplateId::Relevance, BUILTIN_RELEVANCE.to_string());
        bodies.insert(TemplateId::LetterBase, BUILTIN_LETTER_BASE.to_string());
        bodies.insert(
            TemplateId::LetterAggressive,
            BUILTIN_LETTER_AGGRESSIVE.to_string(),
        );
        bodies.insert(TemplateId::ChunkSummary, BUILTIN_CHUNK_SUMMARY.to_string());
        let store = Self { bodies, manifest };
        store
            .verify()
            .expect("shipped templates match their manifest");
        store
    }

    /// Load a template set from a directory containing `manifest.json` and
    /// the files it lists.
    pub fn from_dir(dir: &std::path::Path) -> Result<Self, TemplateError> {
        let manifest_path = dir.join("manifest.json");
        let raw = std::fs::read_to_string(&manifest_path).map_err(|e| TemplateError::Store {
            path: manifest_path.display().to_string(),
            message: e.to_string(),
        })?;
        let manifest: TemplateManifest =
            serde_json::from_str(&raw).map_err(|e| TemplateError::Store {
                path: manifest_path.display().to_string(),
                message: e.to_string(),
            })?;

        let mut bodies = BTreeMap::new();
        for entry in &manifest.templates {
            let id = TemplateId::parse(&entry.template_id)
                .ok_or_else(|| TemplateError::UnknownTemplate(entry.template_id.clone()))?;
            let path = dir.join(&entry.file);
            let body = std::fs::read_to_string(&path).map_err(|e| TemplateError::Store {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            validate_template(id, &body)?;
            bodies.insert(id, body);
        }
        let store = Self { bodies, manifest };
        store.verify()?;
        Ok(store)
    }

    pub fn body(&self, id: TemplateId) -> Result<&str, TemplateError> {
        self.bodies
            .get(&id)
            .map(String::as_str)
            .ok_or_else(|| TemplateError::UnknownTemplate(id.to_string()))
    }

    pub fn manifest(&self) -> &TemplateManifest {
        &self.manifest
    }

    /// Digest of one template body as the manifest records it.
    pub fn digest(&self, id: TemplateId) -> Result<String, TemplateError> {
        Ok(sha256_hex(self.body(id)?))
    }

    /// All template digests keyed by id, for run-config snapshots.
    pub fn digests(&self) -> BTreeMap<String, String> {
        self.bodies
            .iter()
            .map(|(id, body)| (id.to_string(), sha256_hex(body)))
            .collect()
    }

    /// Check every manifest entry against the actual body bytes.
    pub fn verify(&self) -> Result<(), TemplateError> {
        for entry in &self.manifest.templates {
            let id = TemplateId::parse(&entry.template_id)
                .ok_or_else(|| TemplateError::UnknownTemplate(entry.template_id.clone()))?;
            let actual = self.digest(id)?;
            if actual != entry.sha256 {
                return Err(TemplateError::DigestMismatch {
                    template: entry.template_id.clone(),
                    expected: entry.sha256.clone(),
                    actual,
                });
            }
        }
        Ok(())
    }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Scan `body` for `{name}` placeholders, rejecting names outside the known
/// set. Braces that do not wrap a well-formed name are literal text.
pub fn validate_template(id: TemplateId, body: &str) -> Result<(), TemplateError> {
    for (_, name) in placeholder_occurrences(body) {
        if !KNOWN_PLACEHOLDERS.contains(&name) {
            return Err(TemplateError::UnknownPlaceholder {
                template: id.to_string(),
                placeholder: name.to_string(),
            });
        }
    }
    Ok(())
}

/// `(byte_offset, name)` for every `{name}` whose name is lowercase
/// alphanumeric/underscore.
fn placeholder_occurrences(body: &str) -> Vec<(usize, &str)> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(rel_end) = body[i + 1..].find(['}', '{']) {
                let end = i + 1 + rel_end;
                if bytes[end] == b'}' {
                    let name = &body[i + 1..end];
                    if !name.is_empty()
                        && name
                            .bytes()
                            .all(|b| b.is_ascii_lowercase() || b == b'_' || b.is_ascii_digit())
                    {
                        out.push((i, name));
                        i = end + 1;
                        continue;
                    }
                }
            }
        }
        i += 1;
    }
    out
}

/// Single-pass substitution: every placeholder is replaced from `bindings`
/// exactly once, and substituted text is never rescanned, so a binding that
/// itself contains `{official_title}` passes through unmodified.
pub fn render_with_bindings(
    body: &str,
    bindings: &BTreeMap<&str, &str>,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(body.len());
    let mut pos = 0;
    for (start, name) in placeholder_occurrences(body) {
        out.push_str(&body[pos..start]);
        let value = bindings
            .get(name)
            .ok_or_else(|| TemplateError::UnboundPlaceholder(name.to_string()))?;
        out.push_str(value);
        pos = start + name.len() + 2;
    }
    out.push_str(&body[pos..]);
    Ok(out)
}

/// Render a pair-level template (relevance or either letter variant) from a
/// bill, its fitted summary, and a company.
///
/// Subjects are joined with `", "`; an empty subject list renders as an empty
/// string. Every other binding must be non-empty.
pub fn render(
    store: &TemplateStore,
    template_id: TemplateId,
    bill: &BillRecord,
    fitted_summary: &str,
    company: &CompanyRecord,
) -> Result<String, TemplateError> {
    if template_id == TemplateId::ChunkSummary {
        return Err(TemplateError::UnknownTemplate(format!(
            "{template_id} is not a pair template"
        )));
    }
    let subjects = bill.subjects.join(", ");
    let bindings: [(&str, &str); 5] = [
        ("official_title", bill.official_title.as_str()),
        ("summary_text", fitted_summary),
        ("subjects", subjects.as_str()),
        ("company_name", company.company_name.as_str()),
        ("business_description", company.business_description.as_str()),
    ];
    let mut map = BTreeMap::new();
    for (name, value) in bindings {
        if name != "subjects" && value.trim().is_empty() {
            return Err(TemplateError::EmptyBinding(name.to_string()));
        }
        map.insert(name, value);
    }
    render_with_bindings(store.body(template_id)?, &map)
}

/// Render the chunk-summary prompt for one chunk of an over-long summary.
pub fn render_chunk_summary(chunk: &str) -> Result<String, TemplateError> {
    if chunk.trim().is_empty() {
        return Err(TemplateError::EmptyBinding("chunk".into()));
    }
    let mut map = BTreeMap::new();
    map.insert("chunk", chunk);
    render_with_bindings(BUILTIN_CHUNK_SUMMARY, &map)
}

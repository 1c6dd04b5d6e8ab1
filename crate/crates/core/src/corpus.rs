//! Canonical records for bills, companies, and ground-truth labels, plus the
//! loaders and writers for the tabular dataset files.
//!
//! File formats (UTF-8, standard CSV quoting):
//!
//! - bills: `bill_id,official_title,summary_text,subjects,sponsor_name`
//!   with subjects sub-delimited by `";"` inside the one field
//! - companies: `company_id,company_name,business_description,cik`
//! - labels: `bill_id,company_id,relevant` where `relevant` is one of
//!   `0`/`1`/`false`/`true` (case-insensitive); anything else is an error
//!
//! Loading is pure and total: the same file bytes always produce the same
//! records, and any malformed row yields a structured error instead of a
//! partial load.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const BILLS_HEADER: [&str; 5] = [
    "bill_id",
    "official_title",
    "summary_text",
    "subjects",
    "sponsor_name",
];
pub const COMPANIES_HEADER: [&str; 4] = ["company_id", "company_name", "business_description", "cik"];
pub const LABELS_HEADER: [&str; 3] = ["bill_id", "company_id", "relevant"];

/// Delimiter between subject phrases inside the bills file's `subjects` field.
/// There is no escaping: a subject containing it is rejected outright.
pub const SUBJECT_DELIMITER: char = ';';

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path} line {line}: {source}")]
    Csv {
        path: String,
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("{path} line {line}: field `{field}`: {reason}")]
    Field {
        path: String,
        line: u64,
        field: &'static str,
        reason: String,
    },
    #[error("{path} line {line}: duplicate bill_id `{id}`")]
    DuplicateBill { path: String, line: u64, id: String },
    #[error("{path} line {line}: duplicate company_id `{id}`")]
    DuplicateCompany { path: String, line: u64, id: String },
    #[error("{path} line {line}: duplicate pair ({bill_id}, {company_id})")]
    DuplicatePair {
        path: String,
        line: u64,
        bill_id: String,
        company_id: String,
    },
    #[error("{path} line {line}: unknown {kind} id `{id}`")]
    DanglingReference {
        path: String,
        line: u64,
        kind: &'static str,
        id: String,
    },
    #[error("{path} line {line}: `{literal}` is not a boolean label (accepted: 0, 1, false, true)")]
    BadLabelLiteral {
        path: String,
        line: u64,
        literal: String,
    },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// One proposed bill as taken from the official metadata: identifier, title,
/// official summary, subject phrases, and sponsor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BillRecord {
    pub bill_id: String,
    pub official_title: String,
    /// Official summary text. May exceed any token budget; length is not
    /// capped at this layer.
    pub summary_text: String,
    pub subjects: Vec<String>,
    pub sponsor_name: Option<String>,
}

impl BillRecord {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.bill_id.trim().is_empty() {
            return Err(CorpusError::InvalidRecord("bill_id is empty".into()));
        }
        if self.official_title.trim().is_empty() {
            return Err(CorpusError::InvalidRecord(format!(
                "bill `{}`: official_title is empty",
                self.bill_id
            )));
        }
        for s in &self.subjects {
            if s.is_empty() {
                return Err(CorpusError::InvalidRecord(format!(
                    "bill `{}`: empty subject",
                    self.bill_id
                )));
            }
            if s.contains(SUBJECT_DELIMITER) {
                return Err(CorpusError::InvalidRecord(format!(
                    "bill `{}`: subject `{}` contains `{}`",
                    self.bill_id, s, SUBJECT_DELIMITER
                )));
            }
        }
        Ok(())
    }
}

/// One company: name plus the business description from its SEC Form 10-K
/// filing, which stands in for the company in every prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyRecord {
    pub company_id: String,
    pub company_name: String,
    pub business_description: String,
    pub cik: Option<String>,
}

impl CompanyRecord {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.company_id.trim().is_empty() {
            return Err(CorpusError::InvalidRecord("company_id is empty".into()));
        }
        if self.company_name.trim().is_empty() {
            return Err(CorpusError::InvalidRecord(format!(
                "company `{}`: company_name is empty",
                self.company_id
            )));
        }
        if self.business_description.trim().is_empty() {
            return Err(CorpusError::InvalidRecord(format!(
                "company `{}`: business_description is empty",
                self.company_id
            )));
        }
        Ok(())
    }
}

/// Ground-truth relevance label for one (bill, company) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub bill_id: String,
    pub company_id: String,
    pub relevant: bool,
}

impl LabeledPair {
    pub fn key(&self) -> PairKey {
        PairKey::new(&self.bill_id, &self.company_id)
    }
}

/// Lexicographic (bill_id, company_id) key used to order and deduplicate
/// pairs everywhere in the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub bill_id: String,
    pub company_id: String,
}

impl PairKey {
    pub fn new(bill_id: impl Into<String>, company_id: impl Into<String>) -> Self {
        Self {
            bill_id: bill_id.into(),
            company_id: company_id.into(),
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.bill_id, self.company_id)
    }
}

/// A fully loaded and cross-validated dataset.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub bills: Vec<BillRecord>,
    pub companies: Vec<CompanyRecord>,
    pub labels: Vec<LabeledPair>,
}

impl Corpus {
    pub fn load(
        bills_path: &Path,
        companies_path: &Path,
        labels_path: &Path,
    ) -> Result<Self, CorpusError> {
        let bills = load_bills(bills_path)?;
        let companies = load_companies(companies_path)?;
        let labels = load_labels(labels_path, &bills, &companies)?;
        Ok(Self {
            bills,
            companies,
            labels,
        })
    }

    pub fn bill(&self, id: &str) -> Option<&BillRecord> {
        self.bills.iter().find(|b| b.bill_id == id)
    }

    pub fn company(&self, id: &str) -> Option<&CompanyRecord> {
        self.companies.iter().find(|c| c.company_id == id)
    }

    /// Keys of the labeled pairs, sorted and deduplicated.
    pub fn labeled_pair_keys(&self) -> Vec<PairKey> {
        self.labels
            .iter()
            .map(LabeledPair::key)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Every bill crossed with every company, sorted by pair key.
    pub fn cross_product_keys(&self) -> Vec<PairKey> {
        let mut keys: Vec<PairKey> = self
            .bills
            .iter()
            .flat_map(|b| {
                self.companies
                    .iter()
                    .map(|c| PairKey::new(&b.bill_id, &c.company_id))
            })
            .collect();
        keys.sort();
        keys
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        let pos = self.labels.iter().filter(|l| l.relevant).count();
        pos as f64 / self.labels.len() as f64
    }
}

/// Stable digest of a label set: order-independent, sensitive to every id and
/// boolean. Used to verify two evaluation reports scored the same labels.
pub fn label_digest(labels: &[LabeledPair]) -> String {
    let mut lines: Vec<String> = labels
        .iter()
        .map(|l| {
            format!(
                "{}\u{1f}{}\u{1f}{}",
                l.bill_id,
                l.company_id,
                if l.relevant { 1 } else { 0 }
            )
        })
        .collect();
    lines.sort();
    let mut hasher = Sha256::new();
    for line in lines {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file))
}

fn check_header(
    reader: &mut csv::Reader<std::fs::File>,
    path: &Path,
    expected: &[&str],
) -> Result<(), CorpusError> {
    let found = reader.headers().map_err(|source| CorpusError::Csv {
        path: path.display().to_string(),
        line: 1,
        source,
    })?;
    let found: Vec<&str> = found.iter().collect();
    if found != expected {
        return Err(CorpusError::Header {
            path: path.display().to_string(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn line_of(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(fallback)
}

/// Load all bill records from `path`, preserving file order.
pub fn load_bills(path: &Path) -> Result<Vec<BillRecord>, CorpusError> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &BILLS_HEADER)?;
    let path_s = path.display().to_string();

    let mut bills = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let fallback = i as u64 + 2;
        let row = row.map_err(|source| CorpusError::Csv {
            path: path_s.clone(),
            line: fallback,
            source,
        })?;
        let line = line_of(&row, fallback);
        let field = |idx: usize, name: &'static str| -> Result<&str, CorpusError> {
            row.get(idx).ok_or_else(|| CorpusError::Field {
                path: path_s.clone(),
                line,
                field: name,
                reason: "missing".into(),
            })
        };

        let bill_id = field(0, "bill_id")?.to_string();
        if bill_id.trim().is_empty() {
            return Err(CorpusError::Field {
                path: path_s.clone(),
                line,
                field: "bill_id",
                reason: "empty".into(),
            });
        }
        if seen.insert(bill_id.clone(), line).is_some() {
            return Err(CorpusError::DuplicateBill {
                path: path_s.clone(),
                line,
                id: bill_id,
            });
        }

        let official_title = field(1, "official_title")?.to_string();
        if official_title.trim().is_empty() {
            return Err(CorpusError::Field {
                path: path_s.clone(),
                line,
                field: "official_title",
                reason: "empty after trimming".into(),
            });
        }

        let summary_text = field(2, "summary_text")?.to_string();
        let subjects = parse_subjects(field(3, "subjects")?).map_err(|reason| CorpusError::Field {
            path: path_s.clone(),
            line,
            field: "subjects",
            reason,
        })?;
        let sponsor = field(4, "sponsor_name")?;
        let sponsor_name = if sponsor.is_empty() {
            None
        } else {
            Some(sponsor.to_string())
        };

        bills.push(BillRecord {
            bill_id,
            official_title,
            summary_text,
            subjects,
            sponsor_name,
        });
    }
    Ok(bills)
}

fn parse_subjects(raw: &str) -> Result<Vec<String>, String> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<String> = raw.split(SUBJECT_DELIMITER).map(str::to_string).collect();
    for p in &parts {
        if p.is_empty() {
            return Err(format!("empty subject in `{raw}`"));
        }
    }
    Ok(parts)
}

/// Load all company records from `path`, preserving file order.
pub fn load_companies(path: &Path) -> Result<Vec<CompanyRecord>, CorpusError> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &COMPANIES_HEADER)?;
    let path_s = path.display().to_string();

    let mut companies = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let fallback = i as u64 + 2;
        let row = row.map_err(|source| CorpusError::Csv {
            path: path_s.clone(),
            line: fallback,
            source,
        })?;
        let line = line_of(&row, fallback);
        let field = |idx: usize, name: &'static str| -> Result<&str, CorpusError> {
            row.get(idx).ok_or_else(|| CorpusError::Field {
                path: path_s.clone(),
                line,
                field: name,
                reason: "missing".into(),
            })
        };

        let company_id = field(0, "company_id")?.to_string();
        if company_id.trim().is_empty() {
            return Err(CorpusError::Field {
                path: path_s.clone(),
                line,
                field: "company_id",
                reason: "empty".into(),
            });
        }
        if !seen.insert(company_id.clone()) {
            return Err(CorpusError::DuplicateCompany {
                path: path_s.clone(),
                line,
                id: company_id,
            });
        }

        let company_name = field(1, "company_name")?.to_string();
        if company_name.trim().is_empty() {
            return Err(CorpusError::Field {
                path: path_s.clone(),
                line,
                field: "company_name",
                reason: "empty after trimming".into(),
            });
        }
        let business_description = field(2, "business_description")?.to_string();
        if business_description.trim().is_empty() {
            return Err(CorpusError::Field {
                path: path_s.clone(),
                line,
                field: "business_description",
                reason: "empty after trimming".into(),
            });
        }
        let cik = field(3, "cik")?;
        let cik = if cik.is_empty() {
            None
        } else {
            Some(cik.to_string())
        };

        companies.push(CompanyRecord {
            company_id,
            company_name,
            business_description,
            cik,
        });
    }
    Ok(companies)
}

/// Parse a label literal. Exactly `0`/`1`/`false`/`true` (case-insensitive)
/// are accepted; silent coercion of anything else would corrupt benchmarks.
pub fn parse_label_literal(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "0" | "false" => Some(false),
        "1" | "true" => Some(true),
        _ => None,
    }
}

/// Load ground-truth labels, checking every pair resolves against the already
/// loaded bills and companies.
pub fn load_labels(
    path: &Path,
    bills: &[BillRecord],
    companies: &[CompanyRecord],
) -> Result<Vec<LabeledPair>, CorpusError> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &LABELS_HEADER)?;
    let path_s = path.display().to_string();

    let bill_ids: HashSet<&str> = bills.iter().map(|b| b.bill_id.as_str()).collect();
    let company_ids: HashSet<&str> = companies.iter().map(|c| c.company_id.as_str()).collect();

    let mut labels = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let fallback = i as u64 + 2;
        let row = row.map_err(|source| CorpusError::Csv {
            path: path_s.clone(),
            line: fallback,
            source,
        })?;
        let line = line_of(&row, fallback);
        let field = |idx: usize, name: &'static str| -> Result<&str, CorpusError> {
            row.get(idx).ok_or_else(|| CorpusError::Field {
                path: path_s.clone(),
                line,
                field: name,
                reason: "missing".into(),
            })
        };

        let bill_id = field(0, "bill_id")?.to_string();
        let company_id = field(1, "company_id")?.to_string();
        if !bill_ids.contains(bill_id.as_str()) {
            return Err(CorpusError::DanglingReference {
                path: path_s.clone(),
                line,
                kind: "bill",
                id: bill_id,
            });
        }
        if !company_ids.contains(company_id.as_str()) {
            return Err(CorpusError::DanglingReference {
                path: path_s.clone(),
                line,
                kind: "company",
                id: company_id,
            });
        }
        if !seen.insert((bill_id.clone(), company_id.clone())) {
            return Err(CorpusError::DuplicatePair {
                path: path_s.clone(),
                line,
                bill_id,
                company_id,
            });
        }
        let literal = field(2, "relevant")?;
        let relevant = parse_label_literal(literal).ok_or_else(|| CorpusError::BadLabelLiteral {
            path: path_s.clone(),
            line,
            literal: literal.to_string(),
        })?;
        labels.push(LabeledPair {
            bill_id,
            company_id,
            relevant,
        });
    }
    Ok(labels)
}

fn writer_for(path: &Path) -> Result<csv::Writer<std::fs::File>, CorpusError> {
    let file = std::fs::File::create(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

/// Write bill records in the canonical format. Validates every record first
/// so a written file always loads back.
pub fn write_bills(path: &Path, bills: &[BillRecord]) -> Result<(), CorpusError> {
    for b in bills {
        b.validate()?;
    }
    let mut w = writer_for(path)?;
    let wrap = |source| CorpusError::Write {
        path: path.display().to_string(),
        source,
    };
    w.write_record(BILLS_HEADER).map_err(wrap)?;
    for b in bills {
        w.write_record([
            b.bill_id.as_str(),
            b.official_title.as_str(),
            b.summary_text.as_str(),
            &b.subjects.join(&SUBJECT_DELIMITER.to_string()),
            b.sponsor_name.as_deref().unwrap_or(""),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

pub fn write_companies(path: &Path, companies: &[CompanyRecord]) -> Result<(), CorpusError> {
    for c in companies {
        c.validate()?;
    }
    let mut w = writer_for(path)?;
    let wrap = |source| CorpusError::Write {
        path: path.display().to_string(),
        source,
    };
    w.write_record(COMPANIES_HEADER).map_err(wrap)?;
    for c in companies {
        w.write_record([
            c.company_id.as_str(),
            c.company_name.as_str(),
            c.business_description.as_str(),
            c.cik.as_deref().unwrap_or(""),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

pub fn write_labels(path: &Path, labels: &[LabeledPair]) -> Result<(), CorpusError> {
    let mut w = writer_for(path)?;
    let wrap = |source| CorpusError::Write {
        path: path.display().to_string(),
        source,
    };
    w.write_record(LABELS_HEADER).map_err(wrap)?;
    for l in labels {
        w.write_record([
            l.bill_id.as_str(),
            l.company_id.as_str(),
            if l.relevant { "1" } else { "0" },
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

/// Import adapter for external pair-level datasets.
///
/// Accepts a combined CSV where each row is one (bill, company) pair carrying
/// the prompt fields and a ground-truth label, and splits it into the three
/// canonical files. Required columns (matched case-insensitively, any order):
/// `official_title`, `summary_text`, `subjects`, `company_name`,
/// `business_description`, plus a label column named `relevant`, `label`,
/// `ground_truth` or `gold`. Optional columns `bill_id`, `company_id`, `cik`
/// and `sponsor_name` are used when present; ids are otherwise derived from a
/// content digest so repeated rows map to the same record.
pub fn import_combined(path: &Path) -> Result<Corpus, CorpusError> {
    let mut reader = open_reader(path)?;
    let path_s = path.display().to_string();
    let headers = reader
        .headers()
        .map_err(|source| CorpusError::Csv {
            path: path_s.clone(),
            line: 1,
            source,
        })?
        .clone();

    let col = |name: &str| -> Option<usize> {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let required = |name: &'static str| -> Result<usize, CorpusError> {
        col(name).ok_or_else(|| CorpusError::Header {
            path: path_s.clone(),
            expected: format!("a column named `{name}`"),
            found: headers.iter().collect::<Vec<_>>().join(","),
        })
    };

    let title_col = required("official_title")?;
    let summary_col = required("summary_text")?;
    let subjects_col = required("subjects")?;
    let name_col = required("company_name")?;
    let desc_col = required("business_description")?;
    let label_col = ["relevant", "label", "ground_truth", "gold"]
        .iter()
        .find_map(|n| col(n))
        .ok_or_else(|| CorpusError::Header {
            path: path_s.clone(),
            expected: "a label column (relevant/label/ground_truth/gold)".into(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        })?;
    let bill_id_col = col("bill_id");
    let company_id_col = col("company_id");
    let cik_col = col("cik");
    let sponsor_col = col("sponsor_name");

    let derive_id = |prefix: &str, parts: &[&str]| -> String {
        let mut hasher = Sha256::new();
        for p in parts {
            hasher.update(p.as_bytes());
            hasher.update([0x1f]);
        }
        format!("{prefix}-{}", &hex::encode(hasher.finalize())[..12])
    };

    let mut bills: Vec<BillRecord> = Vec::new();
    let mut companies: Vec<CompanyRecord> = Vec::new();
    let mut labels: Vec<LabeledPair> = Vec::new();
    let mut bill_index: HashMap<String, usize> = HashMap::new();
    let mut company_index: HashMap<String, usize> = HashMap::new();
    let mut pair_labels: HashMap<(String, String), bool> = HashMap::new();

    for (i, row) in reader.records().enumerate() {
        let fallback = i as u64 + 2;
        let row = row.map_err(|source| CorpusError::Csv {
            path: path_s.clone(),
            line: fallback,
            source,
        })?;
        let line = line_of(&row, fallback);
        let get = |idx: usize| row.get(idx).unwrap_or("");

        let title = get(title_col).to_string();
        let summary = get(summary_col).to_string();
        let bill_id = match bill_id_col {
            Some(c) if !get(c).is_empty() => get(c).to_string(),
            _ => derive_id("bill", &[&title, &summary]),
        };
        if !bill_index.contains_key(&bill_id) {
            let bill = BillRecord {
                bill_id: bill_id.clone(),
                official_title: title,
                summary_text: summary,
                subjects: parse_subjects(get(subjects_col)).map_err(|reason| {
                    CorpusError::Field {
                        path: path_s.clone(),
                        line,
                        field: "subjects",
                        reason,
                    }
                })?,
                sponsor_name: sponsor_col
                    .map(get)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string),
            };
            bill.validate()?;
            bill_index.insert(bill_id.clone(), bills.len());
            bills.push(bill);
        }

        let name = get(name_col).to_string();
        let desc = get(desc_col).to_string();
        let company_id = match company_id_col {
            Some(c) if !get(c).is_empty() => get(c).to_string(),
            _ => derive_id("comp", &[&name, &desc]),
        };
        if !company_index.contains_key(&company_id) {
            let company = CompanyRecord {
                company_id: company_id.clone(),
                company_name: name,
                business_description: desc,
                cik: cik_col.map(get).filter(|s| !s.is_empty()).map(str::to_string),
            };
            company.validate()?;
            company_index.insert(company_id.clone(), companies.len());
            companies.push(company);
        }

        let literal = get(label_col);
        let relevant = parse_label_literal(literal).ok_or_else(|| CorpusError::BadLabelLiteral {
            path: path_s.clone(),
            line,
            literal: literal.to_string(),
        })?;
        match pair_labels.entry((bill_id.clone(), company_id.clone())) {
            std::collections::hash_map::Entry::Occupied(e) => {
                // Identical repeats collapse; conflicting labels are a data error.
                if *e.get() != relevant {
                    return Err(CorpusError::DuplicatePair {
                        path: path_s.clone(),
                        line,
                        bill_id,
                        company_id,
                    });
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(relevant);
                labels.push(LabeledPair {
                    bill_id,
                    company_id,
                    relevant,
                });
            }
        }
    }

    Ok(Corpus {
        bills,
        companies,
        labels,
    })
}

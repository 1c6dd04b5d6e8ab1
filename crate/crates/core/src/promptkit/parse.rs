//! Parser for the structured relevance response.
//!
//! The expected completion shape is `ANSWER: ... EXPLANATION: ... CONFIDENCE:
//! ...`. Models take liberties, so the parser tolerates leading/trailing
//! whitespace, trailing punctuation after the answer token, quotes around it,
//! markdown emphasis around the field labels, and case variation in both the
//! labels and the token. Anything it cannot extract becomes one of a fixed
//! set of error classes, counted separately by the screener; it never panics
//! on arbitrary input.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Answer {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

impl Answer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
        }
    }

    pub fn as_bool(&self) -> bool {
        matches!(self, Answer::Yes)
    }
}

impl std::fmt::Display for Answer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseWarning {
    /// More than one ANSWER label appeared; the first was used.
    MultipleAnswerLabels,
}

/// A parsed model verdict for one (bill, company) pair. `raw_text` preserves
/// the completion untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceAssessment {
    pub answer: Answer,
    pub explanation: String,
    pub confidence: u8,
    pub raw_text: String,
    pub bill_id: String,
    pub company_id: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssessmentParseError {
    #[error("no ANSWER label found")]
    MissingAnswer,
    #[error("answer token `{token}` is not YES or NO")]
    InvalidAnswer { token: String },
    #[error("no explanation found between EXPLANATION and CONFIDENCE labels")]
    MissingExplanation,
    #[error("no integer found after the CONFIDENCE label")]
    MissingConfidence,
    #[error("confidence `{raw}` outside [0, 100]")]
    ConfidenceOutOfRange { raw: String },
}

impl AssessmentParseError {
    /// Stable class name used in run records and failure tallies.
    pub fn class(&self) -> &'static str {
        match self {
            AssessmentParseError::MissingAnswer => "missing_answer",
            AssessmentParseError::InvalidAnswer { .. } => "invalid_answer",
            AssessmentParseError::MissingExplanation => "missing_explanation",
            AssessmentParseError::MissingConfidence => "missing_confidence",
            AssessmentParseError::ConfidenceOutOfRange { .. } => "confidence_out_of_range",
        }
    }
}

struct LabelPatterns {
    answer: Regex,
    explanation: Regex,
    confidence: Regex,
    token: Regex,
    integer: Regex,
}

fn label_regex(label: &str) -> Regex {
    // Optional markdown emphasis on either side of the label word, optional
    // space before the colon: matches `ANSWER:`, `**ANSWER:**`, `*Answer*:`.
    Regex::new(&format!(
        r"(?i)(\*{{1,2}}|_{{1,2}})?{label}(\*{{1,2}}|_{{1,2}})?\s*:"
    ))
    .expect("static label pattern compiles")
}

fn patterns() -> &'static LabelPatterns {
    static PATTERNS: OnceLock<LabelPatterns> = OnceLock::new();
    PATTERNS.get_or_init(|| LabelPatterns {
        answer: label_regex("ANSWER"),
        explanation: label_regex("EXPLANATION"),
        confidence: label_regex("CONFIDENCE"),
        token: Regex::new(r#"^\s*['"*_]*(\w+)"#).expect("static pattern compiles"),
        integer: Regex::new(r#"^\s*['"*_]*(-?\d+(?:\.\d+)?)"#).expect("static pattern compiles"),
    })
}

struct LabelHit {
    /// Where the label match begins.
    start: usize,
    /// First byte of the field content, past any emphasis that closes the
    /// label's own opening emphasis (`**CONFIDENCE:**` consumes both stars).
    content_start: usize,
}

/// Find occurrences of a label, skipping matches glued to a preceding word
/// character (`MY_ANSWER:` is not a label).
fn find_labels(pattern: &Regex, text: &str, from: usize) -> Vec<LabelHit> {
    let mut hits = Vec::new();
    for caps in pattern.captures_iter(&text[from..]) {
        let m = caps.get(0).expect("group 0 always present");
        let start = from + m.start();
        if text[..start]
            .chars()
            .next_back()
            .is_some_and(|c| c.is_alphanumeric())
        {
            continue;
        }
        let mut content_start = from + m.end();
        if let (Some(open), None) = (caps.get(1), caps.get(2)) {
            // Opening emphasis with the colon inside it: consume the close.
            if text[content_start..].starts_with(open.as_str()) {
                content_start += open.as_str().len();
            }
        }
        hits.push(LabelHit {
            start,
            content_start,
        });
    }
    hits
}

/// Parse a raw completion into a [`RelevanceAssessment`], attaching pair and
/// model provenance.
pub fn parse_assessment(
    raw: &str,
    bill_id: &str,
    company_id: &str,
    model_id: &str,
) -> Result<RelevanceAssessment, AssessmentParseError> {
    let p = patterns();

    let answer_hits = find_labels(&p.answer, raw, 0);
    let answer_hit = answer_hits.first().ok_or(AssessmentParseError::MissingAnswer)?;
    let mut warnings = Vec::new();
    if answer_hits.len() > 1 {
        warnings.push(ParseWarning::MultipleAnswerLabels);
    }

    let after_answer = &raw[answer_hit.content_start..];
    let token_caps = p
        .token
        .captures(after_answer)
        .ok_or(AssessmentParseError::InvalidAnswer {
            token: String::new(),
        })?;
    let token = token_caps.get(1).expect("capture 1 exists").as_str();
    let answer = match token.to_ascii_uppercase().as_str() {
        "YES" => Answer::Yes,
        "NO" => Answer::No,
        _ => {
            return Err(AssessmentParseError::InvalidAnswer {
                token: token.to_string(),
            })
        }
    };

    let explanation_hit = find_labels(&p.explanation, raw, answer_hit.content_start)
        .into_iter()
        .next()
        .ok_or(AssessmentParseError::MissingExplanation)?;
    let confidence_hit = find_labels(&p.confidence, raw, explanation_hit.content_start)
        .into_iter()
        .next()
        .ok_or(AssessmentParseError::MissingConfidence)?;

    let explanation = raw[explanation_hit.content_start..confidence_hit.start]
        .trim()
        .to_string();
    if explanation.is_empty() {
        return Err(AssessmentParseError::MissingExplanation);
    }

    let after_confidence = &raw[confidence_hit.content_start..];
    let int_caps = p
        .integer
        .captures(after_confidence)
        .ok_or(AssessmentParseError::MissingConfidence)?;
    let raw_value = int_caps.get(1).expect("capture 1 exists").as_str();
    if raw_value.contains('.') {
        return Err(AssessmentParseError::MissingConfidence);
    }
    let value: i64 = raw_value
        .parse()
        .map_err(|_| AssessmentParseError::ConfidenceOutOfRange {
            raw: raw_value.to_string(),
        })?;
    if !(0..=100).contains(&value) {
        return Err(AssessmentParseError::ConfidenceOutOfRange {
            raw: raw_value.to_string(),
        });
    }

    Ok(RelevanceAssessment {
        answer,
        explanation,
        confidence: value as u8,
        raw_text: raw.to_string(),
        bill_id: bill_id.to_string(),
        company_id: company_id.to_string(),
        model_id: model_id.to_string(),
        warnings,
    })
}

/// Format (answer, explanation, confidence) in the canonical response shape.
pub fn format_assessment(answer: Answer, explanation: &str, confidence: u8) -> String {
    format!("ANSWER: {answer}.\nEXPLANATION: {explanation}\nCONFIDENCE: {confidence}")
}

/// Format an assessment canonically and re-parse it; true when (answer,
/// explanation, confidence) survive the round trip. Explanations containing
/// the field labels are a known grammar ambiguity and return false.
pub fn render_parse_roundtrip_check(assessment: &RelevanceAssessment) -> bool {
    let formatted = format_assessment(
        assessment.answer,
        &assessment.explanation,
        assessment.confidence,
    );
    match parse_assessment(
        &formatted,
        &assessment.bill_id,
        &assessment.company_id,
        &assessment.model_id,
    ) {
        Ok(reparsed) => {
            reparsed.answer == assessment.answer
                && reparsed.explanation == assessment.explanation
                && reparsed.confidence == assessment.confidence
        }
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_RESPONSE: &str = "ANSWER: YES.\n\nEXPLANATION: Alkermes Plc is a biopharmaceutical company that develops and commercializes products designed to address unmet medical needs of patients in major therapeutic areas, including addiction and schizophrenia. This bill requires the Centers for Medicare & Medicaid Services (CMS) to negotiate with pharmaceutical companies regarding prices for drugs covered under the Medicare prescription drug benefit, which could potentially impact Alkermes Plc's products.\n\nCONFIDENCE: 95";

    fn parse(raw: &str) -> Result<RelevanceAssessment, AssessmentParseError> {
        parse_assessment(raw, "hr1", "c1", "m1")
    }

    #[test]
    fn sample_response_parses() {
        let a = parse(SAMPLE_RESPONSE).unwrap();
        assert_eq!(a.answer, Answer::Yes);
        assert_eq!(a.confidence, 95);
        assert!(a
            .explanation
            .starts_with("Alkermes Plc is a biopharmaceutical company"));
        assert!(a.explanation.ends_with("Alkermes Plc's products."));
        assert_eq!(a.raw_text, SAMPLE_RESPONSE);
        assert_eq!(a.bill_id, "hr1");
        assert!(a.warnings.is_empty());
    }

    #[test]
    fn minimal_well_formed_case() {
        let a = parse("ANSWER: NO. EXPLANATION: x CONFIDENCE: 0").unwrap();
        assert_eq!(a.answer, Answer::No);
        assert_eq!(a.explanation, "x");
        assert_eq!(a.confidence, 0);
    }

    #[test]
    fn free_prose_is_missing_answer() {
        assert_eq!(
            parse("I think it's relevant.").unwrap_err(),
            AssessmentParseError::MissingAnswer
        );
    }

    #[test]
    fn quoted_and_lowercase_tokens_normalize() {
        let a = parse("answer: 'yes'. explanation: e confidence: 50").unwrap();
        assert_eq!(a.answer, Answer::Yes);
        let a = parse("ANSWER: \"No\" EXPLANATION: e CONFIDENCE: 50").unwrap();
        assert_eq!(a.answer, Answer::No);
    }

    #[test]
    fn markdown_emphasis_around_labels() {
        let a = parse("**ANSWER:** YES. **EXPLANATION:** because reasons. **CONFIDENCE:** 80").unwrap();
        assert_eq!(a.answer, Answer::Yes);
        assert_eq!(a.explanation, "because reasons.");
        assert_eq!(a.confidence, 80);

        let a = parse("__ANSWER__: NO __EXPLANATION__: e __CONFIDENCE__: 10").unwrap();
        assert_eq!(a.confidence, 10);
    }

    #[test]
    fn emphasis_inside_explanation_is_preserved() {
        let a = parse("ANSWER: NO. EXPLANATION: **bold** start and *end* CONFIDENCE: 10").unwrap();
        assert_eq!(a.explanation, "**bold** start and *end*");
    }

    #[test]
    fn leading_and_trailing_whitespace_tolerated() {
        let a = parse("\n\n  ANSWER: YES. EXPLANATION: e CONFIDENCE: 99  \n").unwrap();
        assert_eq!(a.confidence, 99);
    }

    #[test]
    fn non_binary_token_is_invalid_answer() {
        match parse("ANSWER: MAYBE. EXPLANATION: e CONFIDENCE: 50").unwrap_err() {
            AssessmentParseError::InvalidAnswer { token } => assert_eq!(token, "MAYBE"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn missing_explanation_label() {
        assert_eq!(
            parse("ANSWER: YES. CONFIDENCE: 50").unwrap_err(),
            AssessmentParseError::MissingExplanation
        );
    }

    #[test]
    fn empty_explanation_between_labels() {
        assert_eq!(
            parse("ANSWER: YES. EXPLANATION: CONFIDENCE: 50").unwrap_err(),
            AssessmentParseError::MissingExplanation
        );
    }

    #[test]
    fn missing_confidence_label() {
        assert_eq!(
            parse("ANSWER: YES. EXPLANATION: e").unwrap_err(),
            AssessmentParseError::MissingConfidence
        );
    }

    #[test]
    fn non_integer_confidence() {
        assert_eq!(
            parse("ANSWER: YES. EXPLANATION: e CONFIDENCE: high").unwrap_err(),
            AssessmentParseError::MissingConfidence
        );
        assert_eq!(
            parse("ANSWER: YES. EXPLANATION: e CONFIDENCE: 95.5").unwrap_err(),
            AssessmentParseError::MissingConfidence
        );
    }

    #[test]
    fn out_of_range_confidence() {
        assert!(matches!(
            parse("ANSWER: YES. EXPLANATION: e CONFIDENCE: 101").unwrap_err(),
            AssessmentParseError::ConfidenceOutOfRange { .. }
        ));
        assert!(matches!(
            parse("ANSWER: YES. EXPLANATION: e CONFIDENCE: -5").unwrap_err(),
            AssessmentParseError::ConfidenceOutOfRange { .. }
        ));
        // Full [0, 100] range is legal, both endpoints included.
        assert_eq!(parse("ANSWER: NO. EXPLANATION: e CONFIDENCE: 100").unwrap().confidence, 100);
        assert_eq!(parse("ANSWER: NO. EXPLANATION: e CONFIDENCE: 0").unwrap().confidence, 0);
    }

    #[test]
    fn trailing_punctuation_after_confidence() {
        let a = parse("ANSWER: YES. EXPLANATION: e CONFIDENCE: 95.").unwrap();
        assert_eq!(a.confidence, 95);
    }

    #[test]
    fn duplicate_answer_labels_use_first_and_warn() {
        let a = parse("ANSWER: YES. EXPLANATION: restating ANSWER: NO here CONFIDENCE: 60").unwrap();
        assert_eq!(a.answer, Answer::Yes);
        assert_eq!(a.warnings, vec![ParseWarning::MultipleAnswerLabels]);
    }

    #[test]
    fn glued_label_is_not_a_label() {
        assert_eq!(
            parse("MYANSWER: YES. EXPLANATION: e CONFIDENCE: 50").unwrap_err(),
            AssessmentParseError::MissingAnswer
        );
    }

    #[test]
    fn roundtrip_check_holds_for_clean_explanations() {
        let a = parse("ANSWER: NO. EXPLANATION: multi\nline reasoning CONFIDENCE: 99").unwrap();
        assert!(render_parse_roundtrip_check(&a));
    }

    #[test]
    fn roundtrip_check_false_when_explanation_contains_a_label() {
        let a = RelevanceAssessment {
            answer: Answer::Yes,
            explanation: "contains CONFIDENCE: 12 inside".into(),
            confidence: 50,
            raw_text: String::new(),
            bill_id: "b".into(),
            company_id: "c".into(),
            model_id: "m".into(),
            warnings: vec![],
        };
        assert!(!render_parse_roundtrip_check(&a));
    }
}

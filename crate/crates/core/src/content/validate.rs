use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ContentPack, LocalizedText};
use crate::engine::RESULT_KEY_SEPARATOR;

/// Which of the four documents an entry refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Document {
    #[serde(rename = "LocationList.xml")]
    LocationList,
    #[serde(rename = "Geolocation.xml")]
    Geolocation,
    #[serde(rename = "GameSettings.xml")]
    GameSettings,
    #[serde(rename = "MessagesList.xml")]
    MessagesList,
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Document::LocationList => super::LOCATION_LIST_FILE,
            Document::Geolocation => super::GEOLOCATION_FILE,
            Document::GameSettings => super::GAME_SETTINGS_FILE,
            Document::MessagesList => super::MESSAGES_FILE,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    UnexpectedElement,
    MissingAttribute,
    InvalidValue,
    InvalidCoordinate,
    NonPositiveRadius,
    DuplicateId,
    ReservedSeparator,
    MissingLocation,
    UnknownPoiReference,
    DanglingMessage,
    UnknownTopic,
    UnknownLanguage,
    MissingDefaultLanguage,
    EmptyText,
    EmptyDeclaration,
    OptionCount,
    CorrectIndexOutOfRange,
    EmptyQuiz,
    BandCoverage,
    ThresholdOutOfRange,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::UnexpectedElement => "unexpected-element",
            Rule::MissingAttribute => "missing-attribute",
            Rule::InvalidValue => "invalid-value",
            Rule::InvalidCoordinate => "invalid-coordinate",
            Rule::NonPositiveRadius => "non-positive-radius",
            Rule::DuplicateId => "duplicate-id",
            Rule::ReservedSeparator => "reserved-separator",
            Rule::MissingLocation => "missing-location",
            Rule::UnknownPoiReference => "unknown-poi-reference",
            Rule::DanglingMessage => "dangling-message",
            Rule::UnknownTopic => "unknown-topic",
            Rule::UnknownLanguage => "unknown-language",
            Rule::MissingDefaultLanguage => "missing-default-language",
            Rule::EmptyText => "empty-text",
            Rule::EmptyDeclaration => "empty-declaration",
            Rule::OptionCount => "option-count",
            Rule::CorrectIndexOutOfRange => "correct-index-out-of-range",
            Rule::EmptyQuiz => "empty-quiz",
            Rule::BandCoverage => "band-coverage",
            Rule::ThresholdOutOfRange => "threshold-out-of-range",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub document: Document,
    /// Element path such as `geolocations/poi[@id='castello']`.
    pub path: String,
    pub rule: Rule,
    pub message: String,
    /// Source line, when the entry came from parsing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

impl fmt::Display for ValidationEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.document)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        write!(f, " {} [{}] {}", self.path, self.rule.id(), self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidationReport {
    entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        document: Document,
        path: impl Into<String>,
        rule: Rule,
        message: impl Into<String>,
    ) {
        self.entries.push(ValidationEntry {
            document,
            path: path.into(),
            rule,
            message: message.into(),
            line: None,
        });
    }

    pub fn push_entry(&mut self, entry: ValidationEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.entries.extend(other.entries);
    }

    pub fn entries(&self) -> &[ValidationEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.entries.iter().filter(|e| e.rule == rule).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for entry in &self.entries {
            writeln!(f, "  {entry}")?;
        }
        Ok(())
    }
}

/// Check every cross-document invariant of a structurally parsed pack.
pub fn validate_cross_references(pack: &ContentPack) -> ValidationReport {
    let mut report = ValidationReport::new();
    let settings = &pack.settings;
    let topics: HashSet<&str> = settings.topics.iter().map(String::as_str).collect();
    let languages: HashSet<&str> = settings.languages.iter().map(String::as_str).collect();

    check_settings(pack, &mut report);

    let mut text_checker = TextChecker {
        languages: &languages,
        default_language: settings.languages.first().map(String::as_str),
        report: &mut report,
    };

    // POIs
    let mut poi_ids = HashSet::new();
    for poi in &pack.pois {
        let path = format!("geolocations/poi[@id='{}']", poi.id);
        if !poi_ids.insert(poi.id.as_str()) {
            text_checker.report.push(
                Document::Geolocation,
                &path,
                Rule::DuplicateId,
                format!("POI id {:?} is declared more than once", poi.id),
            );
        }
        if poi.trigger_radius_m.is_nan() || poi.trigger_radius_m <= 0.0 {
            text_checker.report.push(
                Document::Geolocation,
                &path,
                Rule::NonPositiveRadius,
                format!(
                    "trigger radius must be positive, got {}",
                    poi.trigger_radius_m
                ),
            );
        }
        if !pack.messages.quizzes.contains_key(&poi.message_id) {
            text_checker.report.push(
                Document::Geolocation,
                &path,
                Rule::DanglingMessage,
                format!(
                    "message id {:?} has no quiz in MessagesList.xml",
                    poi.message_id
                ),
            );
        }
        if !topics.contains(poi.topic.as_str()) {
            text_checker.report.push(
                Document::LocationList,
                format!("locations/loc[@ref='{}']", poi.id),
                Rule::UnknownTopic,
                format!("topic {:?} is not declared in GameSettings.xml", poi.topic),
            );
        }
    }

    let mut parking_ids = HashSet::new();
    for spot in &pack.parking {
        if !parking_ids.insert(spot.id.as_str()) {
            text_checker.report.push(
                Document::Geolocation,
                format!("geolocations/parking[@id='{}']", spot.id),
                Rule::DuplicateId,
                format!("parking id {:?} is declared more than once", spot.id),
            );
        }
    }

    // Achievements
    let mut achievement_ids = HashSet::new();
    for ach in &settings.achievements {
        let path = format!("settings/achievements/ach[@id='{}']", ach.id);
        if !achievement_ids.insert(ach.id.as_str()) {
            text_checker.report.push(
                Document::GameSettings,
                &path,
                Rule::DuplicateId,
                format!("achievement id {:?} is declared more than once", ach.id),
            );
        }
        if ach.condition.threshold() < 1 {
            text_checker.report.push(
                Document::GameSettings,
                &path,
                Rule::ThresholdOutOfRange,
                format!(
                    "threshold must be at least 1, got {}",
                    ach.condition.threshold()
                ),
            );
        }
        if let super::AchievementCondition::TopicPoints { topic, .. } = &ach.condition {
            if !topics.contains(topic.as_str()) {
                text_checker.report.push(
                    Document::GameSettings,
                    &path,
                    Rule::UnknownTopic,
                    format!("topic {topic:?} is not declared"),
                );
            }
        }
        text_checker.check(Document::GameSettings, &path, &ach.description);
    }

    // Quizzes
    let mut question_ids = HashSet::new();
    for (quiz_id, questions) in &pack.messages.quizzes {
        let quiz_path = format!("messages/quiz[@id='{quiz_id}']");
        if quiz_id.contains(RESULT_KEY_SEPARATOR) {
            text_checker.report.push(
                Document::MessagesList,
                &quiz_path,
                Rule::ReservedSeparator,
                format!("quiz id must not contain {RESULT_KEY_SEPARATOR:?}"),
            );
        }
        if questions.is_empty() {
            text_checker.report.push(
                Document::MessagesList,
                &quiz_path,
                Rule::EmptyQuiz,
                "quiz has no questions",
            );
        }
        for q in questions {
            let path = format!("{quiz_path}/q[@id='{}']", q.id);
            if !question_ids.insert(q.id.as_str()) {
                text_checker.report.push(
                    Document::MessagesList,
                    &path,
                    Rule::DuplicateId,
                    format!("question id {:?} is declared more than once", q.id),
                );
            }
            if !(2..=3).contains(&q.options.len()) {
                text_checker.report.push(
                    Document::MessagesList,
                    &path,
                    Rule::OptionCount,
                    format!("a question needs 2 or 3 options, found {}", q.options.len()),
                );
            }
            if q.correct_index >= q.options.len() {
                text_checker.report.push(
                    Document::MessagesList,
                    &path,
                    Rule::CorrectIndexOutOfRange,
                    format!(
                        "correct index {} is out of range for {} option(s)",
                        q.correct_index,
                        q.options.len()
                    ),
                );
            }
            if !topics.contains(q.topic.as_str()) {
                text_checker.report.push(
                    Document::MessagesList,
                    &path,
                    Rule::UnknownTopic,
                    format!("topic {:?} is not declared", q.topic),
                );
            }
            text_checker.check(Document::MessagesList, &path, &q.text);
            for (i, opt) in q.options.iter().enumerate() {
                text_checker.check(
                    Document::MessagesList,
                    &format!("{path}/opt[{}]", i + 1),
                    opt,
                );
            }
        }
    }

    for (end_id, bands) in &pack.messages.end_messages {
        let path = format!("messages/end[@id='{end_id}']");
        if let Some(problem) = band_coverage_problem(bands.iter().map(|b| b.min_fraction)) {
            text_checker
                .report
                .push(Document::MessagesList, &path, Rule::BandCoverage, problem);
        }
        for (i, band) in bands.iter().enumerate() {
            text_checker.check(
                Document::MessagesList,
                &format!("{path}/band[{}]", i + 1),
                &band.text,
            );
        }
    }

    report
}

fn check_settings(pack: &ContentPack, report: &mut ValidationReport) {
    let settings = &pack.settings;
    if settings.languages.is_empty() {
        report.push(
            Document::GameSettings,
            "settings/languages",
            Rule::EmptyDeclaration,
            "at least one language must be declared",
        );
    }
    if settings.topics.is_empty() {
        report.push(
            Document::GameSettings,
            "settings/topics",
            Rule::EmptyDeclaration,
            "at least one topic must be declared",
        );
    }
    for (list, what, items) in [
        ("settings/languages/lang", "language", &settings.languages),
        ("settings/topics/topic", "topic", &settings.topics),
    ] {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for item in items {
            *counts.entry(item).or_default() += 1;
        }
        for (item, n) in counts.into_iter().filter(|(_, n)| *n > 1) {
            report.push(
                Document::GameSettings,
                format!("{list}[@id='{item}']"),
                Rule::DuplicateId,
                format!("{what} {item:?} is declared {n} times"),
            );
        }
    }
}

/// Thresholds must start at 0, ascend strictly and stay within [0, 1].
fn band_coverage_problem(mins: impl Iterator<Item = f64>) -> Option<String> {
    let mins: Vec<f64> = mins.collect();
    let Some(&first) = mins.first() else {
        return Some("no bands declared".into());
    };
    if first != 0.0 {
        return Some(format!("first band must start at 0, starts at {first}"));
    }
    if let Some(bad) = mins.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Some(format!("band minimum {bad} is outside [0, 1]"));
    }
    if let Some(w) = mins.windows(2).find(|w| w[0] >= w[1]) {
        return Some(format!(
            "band minimums must ascend strictly ({} then {})",
            w[0], w[1]
        ));
    }
    None
}

struct TextChecker<'a> {
    languages: &'a HashSet<&'a str>,
    default_language: Option<&'a str>,
    report: &'a mut ValidationReport,
}

impl TextChecker<'_> {
    fn check(&mut self, document: Document, path: &str, text: &LocalizedText) {
        if text.is_empty() {
            self.report.push(
                document,
                path,
                Rule::EmptyText,
                "localized text has no variants",
            );
            return;
        }
        for lang in text.languages() {
            if !self.languages.contains(lang) {
                self.report.push(
                    document,
                    path,
                    Rule::UnknownLanguage,
                    format!("language {lang:?} is not declared"),
                );
            }
        }
        if let Some(default) = self.default_language {
            if !text.contains(default) {
                self.report.push(
                    document,
                    path,
                    Rule::MissingDefaultLanguage,
                    format!("no variant for the default language {default:?}"),
                );
            }
        }
    }
}

//! Content packs: the four XML documents that describe a city's game.
//!
//! `Geolocation.xml` owns geometry (POI positions, trigger radii, linked
//! message ids, parking spots), `LocationList.xml` owns game semantics (topic
//! and points per difficulty) joined on the POI id, `GameSettings.xml`
//! declares languages, topics and achievements, and `MessagesList.xml` holds
//! the quizzes and end-of-quiz messages.

mod demo;
mod parse;
mod validate;
mod write;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoPoint, Located};

pub use demo::{bari_demo_documents, bari_demo_pack, BARI_DEMO_ROUTE};
pub use parse::{parse_content_pack, parse_content_pack_with};
pub use validate::{validate_cross_references, Document, Rule, ValidationEntry, ValidationReport};
pub use write::serialize_content_pack;

pub const LOCATION_LIST_FILE: &str = "LocationList.xml";
pub const GEOLOCATION_FILE: &str = "Geolocation.xml";
pub const GAME_SETTINGS_FILE: &str = "GameSettings.xml";
pub const MESSAGES_FILE: &str = "MessagesList.xml";

/// Id under which a pack may override the built-in end-message bands.
pub const DEFAULT_END_ID: &str = "default";

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("{document}: malformed XML at {line}:{column}: {message}")]
    Xml {
        document: Document,
        line: u32,
        column: u32,
        message: String,
    },
    #[error("reading {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("content pack is invalid ({n} problem(s))\n{report}", n = .0.len(), report = .0)]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalizeError {
    #[error("language {0:?} is not declared by the content pack")]
    UndeclaredLanguage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Hard,
}

impl Difficulty {
    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "hard" => Ok(Difficulty::Hard),
            other => Err(format!(
                "unknown difficulty {other:?} (expected easy or hard)"
            )),
        }
    }
}

/// Text with one variant per language code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocalizedText(BTreeMap<String, String>);

impl LocalizedText {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, lang: &str, text: &str) -> Self {
        self.insert(lang, text);
        self
    }

    pub fn insert(&mut self, lang: &str, text: &str) {
        self.0.insert(lang.to_string(), text.to_string());
    }

    pub fn get(&self, lang: &str) -> Option<&str> {
        self.0.get(lang).map(String::as_str)
    }

    pub fn contains(&self, lang: &str) -> bool {
        self.0.contains_key(lang)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Resolve `text` for `lang`, falling back to the pack's first language.
pub fn localize(
    text: &LocalizedText,
    lang: &str,
    settings: &GameSettings,
) -> Result<String, LocalizeError> {
    if !settings.languages.iter().any(|l| l == lang) {
        return Err(LocalizeError::UndeclaredLanguage(lang.to_string()));
    }
    let resolved = text
        .get(lang)
        .or_else(|| settings.languages.first().and_then(|first| text.get(first)))
        .or_else(|| text.iter().next().map(|(_, v)| v))
        .unwrap_or_default();
    Ok(resolved.to_string())
}

/// Points per correct answer, by difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointsTable {
    pub easy: u32,
    pub hard: u32,
}

impl PointsTable {
    pub fn for_difficulty(&self, difficulty: Difficulty) -> u32 {
        match difficulty {
            Difficulty::Easy => self.easy,
            Difficulty::Hard => self.hard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOfInterest {
    pub id: String,
    pub name: String,
    pub position: GeoPoint,
    pub trigger_radius_m: f64,
    pub message_id: String,
    pub topic: String,
    pub points: PointsTable,
}

impl Located for PointOfInterest {
    fn id(&self) -> &str {
        &self.id
    }

    fn position(&self) -> GeoPoint {
        self.position
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkingSpot {
    pub id: String,
    pub name: String,
    pub position: GeoPoint,
}

impl Located for ParkingSpot {
    fn id(&self) -> &str {
        &self.id
    }

    fn position(&self) -> GeoPoint {
        self.position
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AchievementCondition {
    TotalPoints { threshold: u64 },
    QuizzesCompleted { threshold: u64 },
    TopicPoints { topic: String, threshold: u64 },
}

impl AchievementCondition {
    pub fn threshold(&self) -> u64 {
        match self {
            AchievementCondition::TotalPoints { threshold }
            | AchievementCondition::QuizzesCompleted { threshold }
            | AchievementCondition::TopicPoints { threshold, .. } => *threshold,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AchievementCondition::TotalPoints { .. } => "total_points",
            AchievementCondition::QuizzesCompleted { .. } => "quizzes_completed",
            AchievementCondition::TopicPoints { .. } => "topic_points",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Achievement {
    pub id: String,
    pub description: LocalizedText,
    pub condition: AchievementCondition,
    pub incentive_points: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSettings {
    pub languages: Vec<String>,
    pub topics: Vec<String>,
    pub achievements: Vec<Achievement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizQuestion {
    pub id: String,
    pub text: LocalizedText,
    pub options: Vec<LocalizedText>,
    pub correct_index: usize,
    pub difficulty: Difficulty,
    pub topic: String,
}

/// One end-of-quiz message, shown when the fraction of correct answers is at
/// least `min_fraction` and below the next band's minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndBand {
    pub min_fraction: f64,
    pub text: LocalizedText,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MessageCatalog {
    /// Questionnaires keyed by message id, in document order.
    pub quizzes: IndexMap<String, Vec<QuizQuestion>>,
    pub end_messages: IndexMap<String, Vec<EndBand>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentPack {
    pub pois: Vec<PointOfInterest>,
    pub settings: GameSettings,
    pub messages: MessageCatalog,
    pub parking: Vec<ParkingSpot>,
}

impl ContentPack {
    /// Load the four documents from a pack directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, ContentError> {
        Self::load_dir_with(dir, &ContentDefaults::default())
    }

    pub fn load_dir_with(
        dir: impl AsRef<Path>,
        defaults: &ContentDefaults,
    ) -> Result<Self, ContentError> {
        let docs = PackDocuments::read_dir(dir)?;
        parse_content_pack_with(&docs, defaults)
    }

    pub fn poi(&self, id: &str) -> Option<&PointOfInterest> {
        self.pois.iter().find(|p| p.id == id)
    }

    pub fn questionnaire(&self, message_id: &str) -> Option<&[QuizQuestion]> {
        self.messages.quizzes.get(message_id).map(Vec::as_slice)
    }

    /// Questionnaire names in pack order.
    pub fn questionnaire_names(&self) -> impl Iterator<Item = &str> {
        self.messages.quizzes.keys().map(String::as_str)
    }

    /// The bands for a questionnaire: its own `<end>`, else the pack's
    /// `default` entry, else the built-in three bands.
    pub fn end_bands(&self, message_id: &str) -> &[EndBand] {
        self.messages
            .end_messages
            .get(message_id)
            .or_else(|| self.messages.end_messages.get(DEFAULT_END_ID))
            .map(Vec::as_slice)
            .unwrap_or_else(|| builtin_end_bands())
    }
}

/// Band containing `fraction`; bands are ascending and start at zero.
pub fn band_for(bands: &[EndBand], fraction: f64) -> Option<&EndBand> {
    bands.iter().rev().find(|b| fraction >= b.min_fraction)
}

fn builtin_end_bands() -> &'static [EndBand] {
    use std::sync::OnceLock;
    static BANDS: OnceLock<Vec<EndBand>> = OnceLock::new();
    BANDS.get_or_init(|| {
        vec![
            EndBand {
                min_fraction: 0.0,
                text: LocalizedText::new()
                    .with("en", "Keep exploring: the city still has secrets for you.")
                    .with(
                        "it",
                        "Continua a esplorare: la città ha ancora segreti per te.",
                    ),
            },
            EndBand {
                min_fraction: 0.5,
                text: LocalizedText::new()
                    .with("en", "Well done! You know this place quite well.")
                    .with("it", "Ben fatto! Conosci bene questo luogo."),
            },
            EndBand {
                min_fraction: 1.0,
                text: LocalizedText::new()
                    .with("en", "Perfect score! Every answer was right.")
                    .with("it", "Punteggio perfetto! Tutte le risposte sono corrette."),
            },
        ]
    })
}

/// Values used when a document leaves an optional attribute out.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentDefaults {
    pub trigger_radius_m: f64,
    pub points: PointsTable,
}

impl Default for ContentDefaults {
    fn default() -> Self {
        ContentDefaults {
            trigger_radius_m: 200.0,
            points: PointsTable { easy: 10, hard: 20 },
        }
    }
}

/// Raw text of the four content documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackDocuments {
    pub location_list: String,
    pub geolocation: String,
    pub game_settings: String,
    pub messages: String,
}

impl PackDocuments {
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self, ContentError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| ContentError::Io { path, source })
        };
        Ok(PackDocuments {
            location_list: read(LOCATION_LIST_FILE)?,
            geolocation: read(GEOLOCATION_FILE)?,
            game_settings: read(GAME_SETTINGS_FILE)?,
            messages: read(MESSAGES_FILE)?,
        })
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(LOCATION_LIST_FILE), &self.location_list)?;
        std::fs::write(dir.join(GEOLOCATION_FILE), &self.geolocation)?;
        std::fs::write(dir.join(GAME_SETTINGS_FILE), &self.game_settings)?;
        std::fs::write(dir.join(MESSAGES_FILE), &self.messages)
    }
}

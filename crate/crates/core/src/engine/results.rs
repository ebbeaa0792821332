use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::QuizResult;
use crate::content::{ContentPack, Difficulty};
use crate::persistence::StoreError;

/// Separates questionnaire name and user id in a result key.
pub const RESULT_KEY_SEPARATOR: &str = "::";

/// Storage key of a saved result: `questionnaire::user`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ResultKey {
    questionnaire: String,
    user_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResultKeyError {
    #[error("result key {0:?} has no {RESULT_KEY_SEPARATOR:?} separator")]
    MissingSeparator(String),
    #[error("questionnaire name {0:?} contains the key separator")]
    SeparatorInQuestionnaire(String),
    #[error("result key part is empty")]
    Empty,
}

impl ResultKey {
    pub fn new(questionnaire: &str, user_id: &str) -> Result<Self, ResultKeyError> {
        if questionnaire.is_empty() || user_id.is_empty() {
            return Err(ResultKeyError::Empty);
        }
        if questionnaire.contains(RESULT_KEY_SEPARATOR) {
            return Err(ResultKeyError::SeparatorInQuestionnaire(
                questionnaire.to_string(),
            ));
        }
        Ok(ResultKey {
            questionnaire: questionnaire.to_string(),
            user_id: user_id.to_string(),
        })
    }

    pub fn questionnaire(&self) -> &str {
        &self.questionnaire
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }
}

impl fmt::Display for ResultKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{RESULT_KEY_SEPARATOR}{}",
            self.questionnaire, self.user_id
        )
    }
}

impl FromStr for ResultKey {
    type Err = ResultKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (questionnaire, user_id) = s
            .split_once(RESULT_KEY_SEPARATOR)
            .ok_or_else(|| ResultKeyError::MissingSeparator(s.to_string()))?;
        ResultKey::new(questionnaire, user_id)
    }
}

impl TryFrom<String> for ResultKey {
    type Error = ResultKeyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ResultKey> for String {
    fn from(key: ResultKey) -> Self {
        key.to_string()
    }
}

/// A saved quiz outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub questionnaire_name: String,
    pub user_id: String,
    pub difficulty: Difficulty,
    pub score: u64,
    pub correct_count: usize,
    pub total_count: usize,
    pub topic_points: BTreeMap<String, u64>,
}

impl ResultRecord {
    pub fn from_result(user_id: &str, result: &QuizResult) -> Self {
        ResultRecord {
            questionnaire_name: result.questionnaire_name.clone(),
            user_id: user_id.to_string(),
            difficulty: result.difficulty,
            score: result.score,
            correct_count: result.correct_count,
            total_count: result.total_count,
            topic_points: result.topic_points.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaveOutcome {
    Stored,
    Replaced,
    RejectedExists,
}

impl SaveOutcome {
    pub fn is_stored(self) -> bool {
        !matches!(self, SaveOutcome::RejectedExists)
    }
}

/// Backing store for saved results. The check-and-write in [`put_result`]
/// must be atomic per key.
///
/// [`put_result`]: ResultStore::put_result
pub trait ResultStore {
    fn put_result(
        &self,
        key: &ResultKey,
        record: &ResultRecord,
        overwrite: bool,
    ) -> Result<SaveOutcome, StoreError>;

    fn fetch_results(&self, user_id: &str)
        -> Result<BTreeMap<ResultKey, ResultRecord>, StoreError>;
}

/// Persist a completed quiz for `user_id`. An existing record is kept unless
/// `overwrite` is set.
pub fn save_result<S: ResultStore + ?Sized>(
    user_id: &str,
    result: &QuizResult,
    overwrite: bool,
    store: &S,
) -> Result<SaveOutcome, super::EngineError> {
    let key = ResultKey::new(&result.questionnaire_name, user_id)
        .map_err(|e| StoreError::Corrupt(e.to_string()))?;
    let record = ResultRecord::from_result(user_id, result);
    Ok(store.put_result(&key, &record, overwrite)?)
}

/// One "Your results" row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub questionnaire: String,
    pub score: Option<u64>,
}

/// One row per questionnaire in pack order; `score` is empty until saved.
pub fn get_results<S: ResultStore + ?Sized>(
    user_id: &str,
    pack: &ContentPack,
    store: &S,
) -> Result<Vec<ResultRow>, StoreError> {
    let saved = store.fetch_results(user_id)?;
    let by_name: BTreeMap<&str, u64> = saved
        .values()
        .map(|r| (r.questionnaire_name.as_str(), r.score))
        .collect();
    Ok(pack
        .questionnaire_names()
        .map(|name| ResultRow {
            questionnaire: name.to_string(),
            score: by_name.get(name).copied(),
        })
        .collect())
}

/// In-memory store for tests and direct engine replays.
#[derive(Debug, Default)]
pub struct MemoryResultStore {
    records: Mutex<BTreeMap<ResultKey, ResultRecord>>,
}

impl MemoryResultStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &ResultKey) -> Option<ResultRecord> {
        self.records.lock().unwrap().get(key).cloned()
    }
}

impl ResultStore for MemoryResultStore {
    fn put_result(
        &self,
        key: &ResultKey,
        record: &ResultRecord,
        overwrite: bool,
    ) -> Result<SaveOutcome, StoreError> {
        let mut records = self.records.lock().unwrap();
        let outcome = match records.get(key) {
            None => SaveOutcome::Stored,
            Some(_) if overwrite => SaveOutcome::Replaced,
            Some(_) => return Ok(SaveOutcome::RejectedExists),
        };
        records.insert(key.clone(), record.clone());
        Ok(outcome)
    }

    fn fetch_results(
        &self,
        user_id: &str,
    ) -> Result<BTreeMap<ResultKey, ResultRecord>, StoreError> {
        Ok(self
            .records
            .lock()
            .unwrap()
            .iter()
            .filter(|(k, _)| k.user_id() == user_id)
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect())
    }
}

//! Per-player session state machine.
//!
//! A [`Session`] consumes position updates, fires geofence triggers, runs one
//! quiz at a time and scores it. Results are persisted separately through a
//! [`ResultStore`], and only when the player asks for it.

mod achievements;
mod quiz;
mod results;
mod vehicle;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{band_for, localize, ContentPack, Difficulty, LocalizeError};
use crate::geo::{haversine_distance, GeoPoint};
use crate::persistence::StoreError;

pub use achievements::{evaluate_achievements, AchievementAward, UserTotals};
pub use quiz::{AnswerOutcome, QuizInstance};
pub use results::{
    get_results, save_result, MemoryResultStore, ResultKey, ResultKeyError, ResultRecord,
    ResultRow, ResultStore, SaveOutcome, RESULT_KEY_SEPARATOR,
};
pub use vehicle::{VehicleCategory, VehicleProfile};

/// Seconds on whatever clock the caller uses; only ordering matters.
pub type Timestamp = f64;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Language(#[from] LocalizeError),
    #[error("position time {at} is earlier than the previous update at {last}")]
    TimeRegression { last: Timestamp, at: Timestamp },
    #[error("quiz {questionnaire:?} is still in progress")]
    QuizActive { questionnaire: String },
    #[error("no quiz is in progress")]
    NoActiveQuiz,
    #[error("POI {0:?} has not been triggered in this session")]
    NotFired(String),
    #[error("POI {0:?} is not part of the content pack")]
    UnknownPoi(String),
    #[error("questionnaire {questionnaire:?} has no {difficulty} questions")]
    NoQuestions {
        questionnaire: String,
        difficulty: Difficulty,
    },
    #[error("expected an answer to question {expected}, got question {got}")]
    OutOfOrder { expected: usize, got: usize },
    #[error("choice {choice} is not valid for question {question_index} ({options} options)")]
    InvalidChoice {
        question_index: usize,
        choice: usize,
        options: usize,
    },
    #[error("quiz has {answered} of {total} answers")]
    QuizIncomplete { answered: usize, total: usize },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub poi_id: String,
    pub distance_at_fire: f64,
    pub fired_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizResult {
    pub questionnaire_name: String,
    pub poi_id: String,
    pub difficulty: Difficulty,
    pub correct_count: usize,
    pub total_count: usize,
    pub score: u64,
    pub end_message: String,
    pub topic_points: BTreeMap<String, u64>,
}

#[derive(Debug, Clone)]
pub struct Session {
    user_id: String,
    difficulty: Difficulty,
    vehicle: VehicleProfile,
    language: String,
    pack: Arc<ContentPack>,
    fired: BTreeSet<String>,
    inside: BTreeSet<String>,
    active_quiz: Option<QuizInstance>,
    deferred: VecDeque<TriggerEvent>,
    wallet_delta: u64,
    last_update: Option<Timestamp>,
}

impl Session {
    pub fn start(
        user_id: impl Into<String>,
        difficulty: Difficulty,
        vehicle: VehicleProfile,
        language: impl Into<String>,
        pack: Arc<ContentPack>,
    ) -> Result<Self, EngineError> {
        let language = language.into();
        if !pack.settings.languages.contains(&language) {
            return Err(LocalizeError::UndeclaredLanguage(language).into());
        }
        Ok(Session {
            user_id: user_id.into(),
            difficulty,
            vehicle,
            language,
            pack,
            fired: BTreeSet::new(),
            inside: BTreeSet::new(),
            active_quiz: None,
            deferred: VecDeque::new(),
            wallet_delta: 0,
            last_update: None,
        })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn difficulty(&self) -> Difficulty {
        self.difficulty
    }

    pub fn vehicle(&self) -> &VehicleProfile {
        &self.vehicle
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn pack(&self) -> &Arc<ContentPack> {
        &self.pack
    }

    pub fn fired(&self) -> &BTreeSet<String> {
        &self.fired
    }

    pub fn inside(&self) -> &BTreeSet<String> {
        &self.inside
    }

    pub fn active_quiz(&self) -> Option<&QuizInstance> {
        self.active_quiz.as_ref()
    }

    pub fn wallet_delta(&self) -> u64 {
        self.wallet_delta
    }

    /// Triggers held back because a quiz was in progress when they fired.
    pub fn deferred(&self) -> impl Iterator<Item = &TriggerEvent> {
        self.deferred.iter()
    }

    /// Feed one position fix.
    ///
    /// Returns a trigger for every POI entered for the first time this
    /// session, in pack order. While a quiz is open the triggers are queued
    /// instead and handed out by [`Session::take_deferred`].
    pub fn update_position(
        &mut self,
        point: GeoPoint,
        at: Timestamp,
    ) -> Result<Vec<TriggerEvent>, EngineError> {
        if let Some(last) = self.last_update {
            if at.is_nan() || at < last {
                return Err(EngineError::TimeRegression { last, at });
            }
        }
        self.last_update = Some(at);

        let mut now_inside = BTreeSet::new();
        let mut events = Vec::new();
        for poi in &self.pack.pois {
            let distance = haversine_distance(point, poi.position);
            if distance >= poi.trigger_radius_m {
                continue;
            }
            now_inside.insert(poi.id.clone());
            if !self.fired.contains(&poi.id) && !self.inside.contains(&poi.id) {
                self.fired.insert(poi.id.clone());
                events.push(TriggerEvent {
                    poi_id: poi.id.clone(),
                    distance_at_fire: distance,
                    fired_at: at,
                });
            }
        }
        self.inside = now_inside;

        if self.active_quiz.is_some() {
            self.deferred.extend(events);
            return Ok(Vec::new());
        }
        Ok(events)
    }

    /// Hand out triggers deferred during a quiz. Empty while a quiz is open.
    pub fn take_deferred(&mut self) -> Vec<TriggerEvent> {
        if self.active_quiz.is_some() {
            return Vec::new();
        }
        self.deferred.drain(..).collect()
    }

    /// Open the questionnaire linked to a fired POI, keeping only questions
    /// of the session's difficulty in pack order.
    pub fn begin_quiz(&mut self, event: &TriggerEvent) -> Result<&QuizInstance, EngineError> {
        if let Some(active) = &self.active_quiz {
            return Err(EngineError::QuizActive {
                questionnaire: active.questionnaire_name().to_string(),
            });
        }
        if !self.fired.contains(&event.poi_id) {
            return Err(EngineError::NotFired(event.poi_id.clone()));
        }
        let poi = self
            .pack
            .poi(&event.poi_id)
            .ok_or_else(|| EngineError::UnknownPoi(event.poi_id.clone()))?;
        let questions: Vec<_> = self
            .pack
            .questionnaire(&poi.message_id)
            .unwrap_or_default()
            .iter()
            .filter(|q| q.difficulty == self.difficulty)
            .cloned()
            .collect();
        if questions.is_empty() {
            return Err(EngineError::NoQuestions {
                questionnaire: poi.message_id.clone(),
                difficulty: self.difficulty,
            });
        }
        let quiz = QuizInstance::new(
            poi.message_id.clone(),
            poi.id.clone(),
            questions,
            event.fired_at,
        );
        Ok(self.active_quiz.insert(quiz))
    }

    pub fn answer_question(
        &mut self,
        question_index: usize,
        choice_index: usize,
    ) -> Result<AnswerOutcome, EngineError> {
        self.active_quiz
            .as_mut()
            .ok_or(EngineError::NoActiveQuiz)?
            .answer(question_index, choice_index)
    }

    /// Score the open quiz, credit the session wallet and close the quiz.
    pub fn complete_quiz(&mut self) -> Result<QuizResult, EngineError> {
        let quiz = self.active_quiz.as_ref().ok_or(EngineError::NoActiveQuiz)?;
        if !quiz.is_complete() {
            return Err(EngineError::QuizIncomplete {
                answered: quiz.answers().len(),
                total: quiz.questions().len(),
            });
        }
        let poi = self
            .pack
            .poi(quiz.poi_id())
            .ok_or_else(|| EngineError::UnknownPoi(quiz.poi_id().to_string()))?;

        let correct_count = quiz.correct_count();
        let total_count = quiz.questions().len();
        let score = correct_count as u64 * u64::from(poi.points.for_difficulty(self.difficulty));
        let fraction = correct_count as f64 / total_count as f64;
        let bands = self.pack.end_bands(quiz.questionnaire_name());
        let end_message = match band_for(bands, fraction) {
            Some(band) => localize(&band.text, &self.language, &self.pack.settings)?,
            None => String::new(),
        };
        let result = QuizResult {
            questionnaire_name: quiz.questionnaire_name().to_string(),
            poi_id: poi.id.clone(),
            difficulty: self.difficulty,
            correct_count,
            total_count,
            score,
            end_message,
            topic_points: BTreeMap::from([(poi.topic.clone(), score)]),
        };
        self.wallet_delta += score;
        self.active_quiz = None;
        Ok(result)
    }

    /// Drop the open quiz without scoring it.
    pub fn abandon_quiz(&mut self) -> Option<QuizInstance> {
        self.active_quiz.take()
    }
}

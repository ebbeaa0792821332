//! Request and response bodies. Nothing here carries a correct answer.

use citytrail_core::content::{localize, ContentPack, Difficulty, LocalizeError};
use citytrail_core::engine::{QuizInstance, QuizResult, VehicleProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub email: String,
    pub username: String,
    pub password: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterResponse {
    pub user_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginRequest {
    /// E-mail address or username.
    pub identifier: String,
    pub password: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub user_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeResponse {
    pub user_id: String,
    pub email: String,
    pub username: String,
    pub vehicle: VehicleProfile,
    pub wallet: u64,
    pub awarded: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoiView {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub radius_m: f64,
    pub topic: String,
    pub questionnaire: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParkingView {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuestionnaireSummary {
    pub name: String,
    pub easy_questions: usize,
    pub hard_questions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AchievementView {
    pub id: String,
    pub description: String,
    pub kind: String,
    pub threshold: u64,
    pub incentive_points: u32,
}

/// The public view of the content pack: map data and catalog, no answers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackView {
    pub languages: Vec<String>,
    pub default_language: String,
    pub topics: Vec<String>,
    pub pois: Vec<PoiView>,
    pub parking: Vec<ParkingView>,
    pub questionnaires: Vec<QuestionnaireSummary>,
    pub achievements: Vec<AchievementView>,
    pub vehicles: Vec<VehicleProfile>,
}

impl PackView {
    pub fn build(pack: &ContentPack, lang: &str) -> Result<Self, LocalizeError> {
        let count = |name: &str, d: Difficulty| {
            pack.questionnaire(name)
                .unwrap_or_default()
                .iter()
                .filter(|q| q.difficulty == d)
                .count()
        };
        Ok(PackView {
            languages: pack.settings.languages.clone(),
            default_language: lang.to_string(),
            topics: pack.settings.topics.clone(),
            pois: pack
                .pois
                .iter()
                .map(|p| PoiView {
                    id: p.id.clone(),
                    name: p.name.clone(),
                    lat: p.position.lat(),
                    lon: p.position.lon(),
                    radius_m: p.trigger_radius_m,
                    topic: p.topic.clone(),
                    questionnaire: p.message_id.clone(),
                })
                .collect(),
            parking: pack
                .parking
                .iter()
                .map(|p| ParkingView {
                    id: p.id.clone(),
                    name: p.name.clone(),
                    lat: p.position.lat(),
                    lon: p.position.lon(),
                })
                .collect(),
            questionnaires: pack
                .questionnaire_names()
                .map(|name| QuestionnaireSummary {
                    name: name.to_string(),
                    easy_questions: count(name, Difficulty::Easy),
                    hard_questions: count(name, Difficulty::Hard),
                })
                .collect(),
            achievements: pack
                .settings
                .achievements
                .iter()
                .map(|a| {
                    Ok(AchievementView {
                        id: a.id.clone(),
                        description: localize(&a.description, lang, &pack.settings)?,
                        kind: a.condition.kind().to_string(),
                        threshold: a.condition.threshold(),
                        incentive_points: a.incentive_points,
                    })
                })
                .collect::<Result<_, LocalizeError>>()?,
            vehicles: VehicleProfile::catalog(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartSessionRequest {
    pub difficulty: Difficulty,
    #[serde(default)]
    pub vehicle_id: Option<String>,
    #[serde(default)]
    pub language: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartSessionResponse {
    pub session_id: String,
    pub difficulty: Difficulty,
    pub language: String,
    pub vehicle: VehicleProfile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuestionView {
    pub index: usize,
    pub text: String,
    pub options: Vec<String>,
}

/// An open quiz as the player sees it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuizView {
    pub questionnaire: String,
    pub poi_id: String,
    pub poi_name: String,
    pub topic: String,
    pub difficulty: Difficulty,
    /// Index of the next question to answer.
    pub cursor: usize,
    pub questions: Vec<QuestionView>,
}

impl QuizView {
    pub fn build(
        quiz: &QuizInstance,
        difficulty: Difficulty,
        lang: &str,
        pack: &ContentPack,
    ) -> Result<Self, LocalizeError> {
        let poi = pack.poi(quiz.poi_id());
        let questions = quiz
            .questions()
            .iter()
            .enumerate()
            .map(|(index, q)| {
                Ok(QuestionView {
                    index,
                    text: localize(&q.text, lang, &pack.settings)?,
                    options: q
                        .options
                        .iter()
                        .map(|o| localize(o, lang, &pack.settings))
                        .collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<_, LocalizeError>>()?;
        Ok(QuizView {
            questionnaire: quiz.questionnaire_name().to_string(),
            poi_id: quiz.poi_id().to_string(),
            poi_name: poi.map(|p| p.name.clone()).unwrap_or_default(),
            topic: poi.map(|p| p.topic.clone()).unwrap_or_default(),
            difficulty,
            cursor: quiz.cursor(),
            questions,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub difficulty: Difficulty,
    pub language: String,
    pub vehicle: VehicleProfile,
    pub fired: Vec<String>,
    pub active_quiz: Option<QuizView>,
    pub queued: Vec<String>,
    pub points_this_session: u64,
    /// Completed questionnaires whose result can be saved.
    pub completed: Vec<QuizResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositionRequest {
    pub lat: f64,
    pub lon: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerView {
    pub poi_id: String,
    pub distance: f64,
    /// The quiz waits until the open one is finished.
    #[serde(default)]
    pub queued: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositionResponse {
    pub triggers: Vec<TriggerView>,
    pub active_quiz: Option<QuizView>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub question_index: usize,
    pub choice_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub correct: bool,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<QuizResult>,
    /// The next quiz, when another POI was waiting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_quiz: Option<QuizView>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SaveRequest {
    #[serde(default)]
    pub overwrite: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AwardView {
    pub achievement_id: String,
    pub incentive_points: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaveResponse {
    pub stored: bool,
    pub replaced: bool,
    pub score: u64,
    pub awards: Vec<AwardView>,
    pub wallet: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogoutResponse {
    pub logged_out: bool,
}

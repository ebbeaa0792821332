//! Synthetic trips through a content pack, replayed against the game engine
//! or a running server, and checked against a brute-force trigger oracle.

pub mod api;
mod policy;
mod trace;

use std::collections::BTreeSet;
use std::sync::Arc;

use citytrail_core::content::{ContentPack, Difficulty};
use citytrail_core::engine::{EngineError, VehicleProfile};
use citytrail_core::Session;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use api::{replay_api, ApiClient, ApiTarget};
pub use policy::{AnswerPolicy, Answerer};
pub use trace::{generate_trace, oracle_triggers, parse_route, TimedPoint};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("a route needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("{0}")]
    InvalidParameter(String),
    #[error("route line {line}: {message}")]
    Route { line: usize, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot reach the API: {0}")]
    Io(String),
    #[error("API answered {status}: {message}")]
    Api { status: u16, message: String },
}

/// How the simulated player plays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub difficulty: Difficulty,
    pub policy: AnswerPolicy,
    /// Seed for the random answer policy.
    pub seed: u64,
    pub language: Option<String>,
}

impl Scenario {
    pub fn new(difficulty: Difficulty, policy: AnswerPolicy) -> Self {
        Scenario {
            difficulty,
            policy,
            seed: 0,
            language: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// POIs in the order their triggers fired.
    pub triggers_fired: Vec<String>,
    pub quizzes_completed: u64,
    pub total_score: u64,
    pub oracle_triggers: BTreeSet<String>,
    #[serde(rename = "match")]
    pub matches: bool,
}

impl SimulationReport {
    pub fn new(
        triggers_fired: Vec<String>,
        quizzes_completed: u64,
        total_score: u64,
        oracle: BTreeSet<String>,
    ) -> Self {
        let fired: BTreeSet<String> = triggers_fired.iter().cloned().collect();
        SimulationReport {
            matches: fired == oracle,
            triggers_fired,
            quizzes_completed,
            total_score,
            oracle_triggers: oracle,
        }
    }
}

/// Replay `trace` directly against an in-process [`Session`]. Each
/// triggered quiz is played to the end before the next fix is fed.
pub fn replay_engine(
    trace: &[TimedPoint],
    scenario: &Scenario,
    pack: Arc<ContentPack>,
) -> Result<SimulationReport, SimError> {
    let language = scenario
        .language
        .clone()
        .or_else(|| pack.settings.languages.first().cloned())
        .unwrap_or_default();
    let mut session = Session::start(
        "simulator",
        scenario.difficulty,
        VehicleProfile::default(),
        language,
        pack.clone(),
    )?;
    let mut answerer = Answerer::new(scenario.policy, scenario.seed);
    let mut fired = Vec::new();
    let (mut completed, mut score) = (0, 0);

    for tp in trace {
        let mut events = session.update_position(tp.point, tp.t)?;
        events.extend(session.take_deferred());
        for event in events {
            fired.push(event.poi_id.clone());
            let questions = match session.begin_quiz(&event) {
                Ok(quiz) => quiz.questions().to_vec(),
                // a questionnaire without questions at this level is skipped, as the server does
                Err(EngineError::NoQuestions { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            for (i, q) in questions.iter().enumerate() {
                session.answer_question(i, answerer.choose(q))?;
            }
            let result = session.complete_quiz()?;
            completed += 1;
            score += result.score;
        }
    }
    Ok(SimulationReport::new(
        fired,
        completed,
        score,
        oracle_triggers(trace, &pack.pois),
    ))
}

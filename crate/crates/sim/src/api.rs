//! Blocking client for the game API and the replay that drives it.

use citytrail_core::content::{ContentPack, QuizQuestion};
use citytrail_core::engine::ResultRow;
use citytrail_core::persistence::LeaderboardEntry;
use citytrail_server::views::*;
use citytrail_server::ApiError;
use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{oracle_triggers, Answerer, Scenario, SimError, SimulationReport, TimedPoint};

pub struct ApiClient {
    base: String,
    http: Client,
    token: Option<String>,
}

impl ApiClient {
    pub fn new(base_url: &str) -> Result<Self, SimError> {
        let http = Client::builder()
            .build()
            .map_err(|e| SimError::Io(e.to_string()))?;
        Ok(ApiClient {
            base: base_url.trim_end_matches('/').to_string(),
            http,
            token: None,
        })
    }

    pub fn token(&self) -> Option<&str> {
        self.token.as_deref()
    }

    fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T, SimError> {
        let req = match &self.token {
            Some(t) => req.bearer_auth(t),
            None => req,
        };
        let resp = req.send().map_err(|e| SimError::Io(e.to_string()))?;
        let status = resp.status();
        if status.is_success() {
            return resp.json().map_err(|e| SimError::Io(e.to_string()));
        }
        let message = match resp.json::<ApiError>() {
            Ok(e) => format!("{:?}: {}", e.code, e.message),
            Err(_) => status.to_string(),
        };
        Err(SimError::Api {
            status: status.as_u16(),
            message,
        })
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, SimError> {
        self.send(self.http.get(format!("{}{path}", self.base)))
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: &impl Serialize) -> Result<T, SimError> {
        self.send(self.http.post(format!("{}{path}", self.base)).json(body))
    }

    pub fn register(
        &self,
        email: &str,
        username: &str,
        password: &str,
    ) -> Result<String, SimError> {
        let req = RegisterRequest {
            email: email.into(),
            username: username.into(),
            password: password.into(),
        };
        Ok(self
            .post::<RegisterResponse>("/api/register", &req)?
            .user_id)
    }

    /// Log in and keep the token for later calls. Returns the user id.
    pub fn login(&mut self, identifier: &str, password: &str) -> Result<String, SimError> {
        let req = LoginRequest {
            identifier: identifier.into(),
            password: password.into(),
        };
        let resp: LoginResponse = self.post("/api/login", &req)?;
        self.token = Some(resp.token);
        Ok(resp.user_id)
    }

    pub fn pack(&self) -> Result<PackView, SimError> {
        self.get("/api/pack")
    }

    pub fn start_session(
        &self,
        req: &StartSessionRequest,
    ) -> Result<StartSessionResponse, SimError> {
        self.post("/api/session", req)
    }

    pub fn position(
        &self,
        session_id: &str,
        req: &PositionRequest,
    ) -> Result<PositionResponse, SimError> {
        self.post(&format!("/api/session/{session_id}/position"), req)
    }

    pub fn answer(
        &self,
        session_id: &str,
        questionnaire: &str,
        req: &AnswerRequest,
    ) -> Result<AnswerResponse, SimError> {
        self.post(
            &format!("/api/session/{session_id}/quiz/{questionnaire}/answer"),
            req,
        )
    }

    /// Save the latest result for `questionnaire`. `Ok(None)` means a result
    /// already exists and `overwrite` was not set.
    pub fn save_result(
        &self,
        questionnaire: &str,
        overwrite: bool,
    ) -> Result<Option<SaveResponse>, SimError> {
        match self.post(
            &format!("/api/results/{questionnaire}"),
            &SaveRequest { overwrite },
        ) {
            Ok(r) => Ok(Some(r)),
            Err(SimError::Api { status, .. }) if status == StatusCode::CONFLICT.as_u16() => {
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    pub fn results(&self) -> Result<Vec<ResultRow>, SimError> {
        self.get("/api/results")
    }

    pub fn leaderboard(&self, n: usize) -> Result<Vec<LeaderboardEntry>, SimError> {
        self.get(&format!("/api/leaderboard?n={n}"))
    }
}

/// Where and as whom an API replay plays.
#[derive(Debug, Clone)]
pub struct ApiTarget {
    pub base_url: String,
    /// Existing account; a throwaway account is registered when absent.
    pub credentials: Option<(String, String)>,
}

impl ApiTarget {
    pub fn new(base_url: &str) -> Self {
        ApiTarget {
            base_url: base_url.to_string(),
            credentials: None,
        }
    }
}

/// Replay `trace` through the HTTP API. Answers are looked up in the local
/// copy of the pack, which must match the server's. Every completed quiz is
/// saved (without overwriting).
pub fn replay_api(
    trace: &[TimedPoint],
    scenario: &Scenario,
    pack: &ContentPack,
    target: &ApiTarget,
) -> Result<SimulationReport, SimError> {
    let mut client = ApiClient::new(&target.base_url)?;
    match &target.credentials {
        Some((user, password)) => {
            client.login(user, password)?;
        }
        None => {
            let tag = uuid::Uuid::new_v4().simple().to_string();
            let (name, password) = (format!("sim_{}", &tag[..12]), tag.clone());
            client.register(&format!("{name}@sim.invalid"), &name, &password)?;
            client.login(&name, &password)?;
        }
    }
    let session = client.start_session(&StartSessionRequest {
        difficulty: scenario.difficulty,
        vehicle_id: Some("el_scooter".into()),
        language: scenario.language.clone(),
    })?;
    let sid = session.session_id;

    let mut answerer = Answerer::new(scenario.policy, scenario.seed);
    let mut fired = Vec::new();
    let (mut completed, mut score) = (0, 0);
    for tp in trace {
        let resp = client.position(
            &sid,
            &PositionRequest {
                lat: tp.point.lat(),
                lon: tp.point.lon(),
                t: tp.t,
            },
        )?;
        fired.extend(resp.triggers.into_iter().map(|t| t.poi_id));
        let mut open = resp.active_quiz;
        while let Some(quiz) = open.take() {
            let questions = local_questions(pack, &quiz)?;
            for (i, q) in questions.iter().enumerate().skip(quiz.cursor) {
                let answer = client.answer(
                    &sid,
                    &quiz.questionnaire,
                    &AnswerRequest {
                        question_index: i,
                        choice_index: answerer.choose(q),
                    },
                )?;
                if let Some(result) = answer.result {
                    completed += 1;
                    score += result.score;
                    client.save_result(&quiz.questionnaire, false)?;
                    open = answer.active_quiz;
                }
            }
        }
    }
    Ok(SimulationReport::new(
        fired,
        completed,
        score,
        oracle_triggers(trace, &pack.pois),
    ))
}

fn local_questions<'p>(
    pack: &'p ContentPack,
    quiz: &QuizView,
) -> Result<Vec<&'p QuizQuestion>, SimError> {
    let questions: Vec<_> = pack
        .questionnaire(&quiz.questionnaire)
        .unwrap_or_default()
        .iter()
        .filter(|q| q.difficulty == quiz.difficulty)
        .collect();
    if questions.len() != quiz.questions.len() {
        return Err(SimError::InvalidParameter(format!(
            "local pack does not match the server for questionnaire {:?}",
            quiz.questionnaire
        )));
    }
    Ok(questions)
}

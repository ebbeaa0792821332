use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use citytrail_core::engine::{
    evaluate_achievements, get_results, save_result, ResultRow, SaveOutcome, VehicleProfile,
};
use citytrail_core::geo::GeoError;
use citytrail_core::persistence::LeaderboardEntry;
use citytrail_core::{GeoPoint, Session};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{ApiError, ErrorCode};
use crate::state::{AppState, PlaySession};
use crate::views::*;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/register", post(register))
        .route("/api/login", post(login))
        .route("/api/logout", post(logout))
        .route("/api/me", get(me))
        .route("/api/pack", get(pack))
        .route("/api/session", post(start_session))
        .route("/api/session/{id}", get(get_session))
        .route("/api/session/{id}/position", post(position))
        .route("/api/session/{id}/quiz/{qname}/answer", post(answer))
        .route("/api/results", get(results))
        .route("/api/results/{qname}", post(save))
        .route("/api/leaderboard", get(leaderboard))
        .fallback(|| async { ApiError::not_found("no such route") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(
                StatusCode::METHOD_NOT_ALLOWED,
                ErrorCode::NotFound,
                "method not allowed on this route",
            )
        })
        .with_state(state)
}

/// A JSON body whose rejections are reported as [`ApiError`]s.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let Json(value) = Json::<T>::from_request(req, state).await?;
        Ok(ApiJson(value))
    }
}

/// The caller behind a valid `Authorization: Bearer` token.
pub struct AuthUser {
    pub user_id: String,
    pub token: String,
}

impl FromRequestParts<AppState> for AuthUser {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(ApiError::auth)?;
        let user_id = state
            .store
            .authenticate(token)
            .map_err(|_| ApiError::auth())?;
        Ok(AuthUser {
            user_id,
            token: token.to_string(),
        })
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        tracing::error!("worker task failed: {e}");
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorCode::Io,
            "internal failure",
        )
    })?
}

async fn register(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<RegisterRequest>,
) -> Result<(StatusCode, Json<RegisterResponse>), ApiError> {
    let store = state.store.clone();
    let user_id =
        blocking(move || Ok(store.register(&req.email, &req.username, &req.password)?)).await?;
    Ok((StatusCode::CREATED, Json(RegisterResponse { user_id })))
}

async fn login(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<LoginRequest>,
) -> Result<Json<LoginResponse>, ApiError> {
    let store = state.store.clone();
    let token = blocking(move || Ok(store.login(&req.identifier, &req.password)?)).await?;
    Ok(Json(LoginResponse {
        token: token.token,
        user_id: token.user_id,
    }))
}

async fn logout(
    State(state): State<AppState>,
    auth: AuthUser,
) -> Result<Json<LogoutResponse>, ApiError> {
    state.store.logout(&auth.token)?;
    Ok(Json(LogoutResponse { logged_out: true }))
}

async fn me(State(state): State<AppState>, auth: AuthUser) -> Result<Json<MeResponse>, ApiError> {
    let acc = state
        .store
        .account(&auth.user_id)
        .ok_or_else(|| ApiError::not_found("unknown user"))?;
    Ok(Json(MeResponse {
        user_id: acc.user_id,
        email: acc.email,
        username: acc.username,
        vehicle: acc.vehicle,
        wallet: acc.wallet,
        awarded: acc.awarded.into_keys().collect(),
    }))
}

#[derive(Deserialize)]
struct LangQuery {
    lang: Option<String>,
}

async fn pack(
    State(state): State<AppState>,
    Query(q): Query<LangQuery>,
) -> Result<Json<PackView>, ApiError> {
    let lang = q.lang.unwrap_or_else(|| state.default_language.clone());
    let view = PackView::build(&state.pack, &lang)
        .map_err(|e| ApiError::validation("lang", e.to_string()))?;
    Ok(Json(view))
}

async fn start_session(
    State(state): State<AppState>,
    auth: AuthUser,
    ApiJson(req): ApiJson<StartSessionRequest>,
) -> Result<(StatusCode, Json<StartSessionResponse>), ApiError> {
    let vehicle = match &req.vehicle_id {
        Some(id) => VehicleProfile::find(id)
            .ok_or_else(|| ApiError::validation("vehicle_id", format!("unknown vehicle {id:?}")))?,
        None => state
            .store
            .account(&auth.user_id)
            .map(|a| a.vehicle)
            .unwrap_or_default(),
    };
    let language = req
        .language
        .unwrap_or_else(|| state.default_language.clone());
    let session = Session::start(
        &auth.user_id,
        req.difficulty,
        vehicle.clone(),
        &language,
        state.pack.clone(),
    )?;
    if req.vehicle_id.is_some() {
        state.store.set_vehicle(&auth.user_id, vehicle.clone())?;
    }
    let session_id = state.insert_session(PlaySession::new(session));
    Ok((
        StatusCode::CREATED,
        Json(StartSessionResponse {
            session_id,
            difficulty: req.difficulty,
            language,
            vehicle,
        }),
    ))
}

fn find_session(
    state: &AppState,
    id: &str,
    user_id: &str,
) -> Result<std::sync::Arc<std::sync::Mutex<PlaySession>>, ApiError> {
    state
        .session(id, user_id)
        .ok_or_else(|| ApiError::not_found(format!("no active session {id:?}")))
}

fn quiz_view(play: &PlaySession) -> Result<Option<QuizView>, ApiError> {
    play.quiz_view().transpose().map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Content,
            e.to_string(),
        )
    })
}

async fn get_session(
    State(state): State<AppState>,
    auth: AuthUser,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let play = find_session(&state, &id, &auth.user_id)?;
    let play = play.lock().unwrap_or_else(|p| p.into_inner());
    let s = &play.session;
    Ok(Json(SessionView {
        session_id: play.session_id.clone(),
        difficulty: s.difficulty(),
        language: s.language().to_string(),
        vehicle: s.vehicle().clone(),
        fired: s.fired().iter().cloned().collect(),
        active_quiz: quiz_view(&play)?,
        queued: play.waiting().map(|e| e.poi_id.clone()).collect(),
        points_this_session: s.wallet_delta(),
        completed: play.completed().cloned().collect(),
    }))
}

async fn position(
    State(state): State<AppState>,
    auth: AuthUser,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<PositionRequest>,
) -> Result<Json<PositionResponse>, ApiError> {
    let point = GeoPoint::new(req.lat, req.lon).map_err(|e| match e {
        GeoError::LongitudeNotFinite(_) => ApiError::validation("lon", e.to_string()),
        _ => ApiError::validation("lat", e.to_string()),
    })?;
    if !req.t.is_finite() {
        return Err(ApiError::validation(
            "t",
            "t must be a finite number of seconds",
        ));
    }
    let play = find_session(&state, &id, &auth.user_id)?;
    let mut play = play.lock().unwrap_or_else(|p| p.into_inner());
    let triggers = play.position(point, req.t)?;
    Ok(Json(PositionResponse {
        triggers,
        active_quiz: quiz_view(&play)?,
    }))
}

async fn answer(
    State(state): State<AppState>,
    auth: AuthUser,
    Path((id, qname)): Path<(String, String)>,
    ApiJson(req): ApiJson<AnswerRequest>,
) -> Result<Json<AnswerResponse>, ApiError> {
    let play = find_session(&state, &id, &auth.user_id)?;
    let mut play = play.lock().unwrap_or_else(|p| p.into_inner());
    let open = play
        .session
        .active_quiz()
        .map(|q| q.questionnaire_name().to_string());
    if open.as_deref() != Some(qname.as_str()) {
        let message = match open {
            Some(other) => format!("quiz {qname:?} is not open; the open quiz is {other:?}"),
            None => format!("quiz {qname:?} is not open"),
        };
        return Err(ApiError::sequence(message));
    }
    let (correct, result) = play.answer(&qname, req.question_index, req.choice_index)?;
    let done = result.is_some();
    Ok(Json(AnswerResponse {
        correct,
        done,
        result,
        active_quiz: if done { quiz_view(&play)? } else { None },
    }))
}

async fn save(
    State(state): State<AppState>,
    auth: AuthUser,
    Path(qname): Path<String>,
    ApiJson(req): ApiJson<SaveRequest>,
) -> Result<Json<SaveResponse>, ApiError> {
    let result = state
        .user_session(&auth.user_id)
        .and_then(|play| {
            play.lock()
                .unwrap_or_else(|p| p.into_inner())
                .completed_result(&qname)
                .cloned()
        })
        .ok_or_else(|| {
            ApiError::not_found(format!(
                "no completed quiz {qname:?} in the current session"
            ))
        })?;
    let store = state.store.clone();
    let pack = state.pack.clone();
    let user_id = auth.user_id;
    blocking(move || {
        let outcome = save_result(&user_id, &result, req.overwrite, &*store)?;
        if outcome == SaveOutcome::RejectedExists {
            return Err(ApiError::result_exists(&qname));
        }
        let totals = store.user_totals(&user_id)?;
        let due = evaluate_achievements(&totals, &pack.settings, &store.awarded_ids(&user_id));
        let granted = store.record_awards(&user_id, &due)?;
        let wallet = store.account(&user_id).map(|a| a.wallet).unwrap_or(0);
        Ok(Json(SaveResponse {
            stored: true,
            replaced: outcome == SaveOutcome::Replaced,
            score: result.score,
            awards: granted
                .into_iter()
                .map(|a| AwardView {
                    achievement_id: a.achievement_id,
                    incentive_points: a.incentive_points,
                })
                .collect(),
            wallet,
        }))
    })
    .await
}

async fn results(
    State(state): State<AppState>,
    auth: AuthUser,
) -> Result<Json<Vec<ResultRow>>, ApiError> {
    Ok(Json(get_results(
        &auth.user_id,
        &state.pack,
        &*state.store,
    )?))
}

#[derive(Deserialize)]
struct LeaderboardQuery {
    n: Option<String>,
}

pub const DEFAULT_LEADERBOARD_SIZE: usize = 10;

async fn leaderboard(
    State(state): State<AppState>,
    _auth: AuthUser,
    Query(q): Query<LeaderboardQuery>,
) -> Result<Json<Vec<LeaderboardEntry>>, ApiError> {
    let n = match q.n {
        None => DEFAULT_LEADERBOARD_SIZE,
        Some(raw) => raw
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| ApiError::validation("n", "n must be a positive integer"))?,
    };
    Ok(Json(state.store.leaderboard(n)?))
}

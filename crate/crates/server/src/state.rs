use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::{Arc, Mutex, MutexGuard};

use citytrail_core::content::ContentPack;
use citytrail_core::engine::{EngineError, QuizResult, TriggerEvent};
use citytrail_core::persistence::Store;
use citytrail_core::{GeoPoint, Session};

use crate::views::{QuizView, TriggerView};

/// Shared by all handlers.
#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub pack: Arc<ContentPack>,
    pub default_language: String,
    sessions: Arc<Mutex<Sessions>>,
}

#[derive(Default)]
struct Sessions {
    by_id: HashMap<String, Arc<Mutex<PlaySession>>>,
    by_user: HashMap<String, String>,
}

impl AppState {
    pub fn new(store: Store, pack: ContentPack, default_language: String) -> Self {
        AppState {
            store: Arc::new(store),
            pack: Arc::new(pack),
            default_language,
            sessions: Arc::default(),
        }
    }

    fn sessions(&self) -> MutexGuard<'_, Sessions> {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Install a new session for its user, closing any previous one.
    pub fn insert_session(&self, play: PlaySession) -> String {
        let id = play.session_id.clone();
        let user = play.session.user_id().to_string();
        let mut sessions = self.sessions();
        if let Some(old) = sessions.by_user.insert(user, id.clone()) {
            sessions.by_id.remove(&old);
        }
        sessions
            .by_id
            .insert(id.clone(), Arc::new(Mutex::new(play)));
        id
    }

    /// The session `id` if it belongs to `user_id`.
    pub fn session(&self, id: &str, user_id: &str) -> Option<Arc<Mutex<PlaySession>>> {
        let sessions = self.sessions();
        let play = sessions.by_id.get(id)?;
        let owned = sessions.by_user.get(user_id).is_some_and(|s| s == id);
        owned.then(|| Arc::clone(play))
    }

    pub fn user_session(&self, user_id: &str) -> Option<Arc<Mutex<PlaySession>>> {
        let sessions = self.sessions();
        let id = sessions.by_user.get(user_id)?;
        sessions.by_id.get(id).cloned()
    }

    pub fn end_user_session(&self, user_id: &str) {
        let mut sessions = self.sessions();
        if let Some(id) = sessions.by_user.remove(user_id) {
            sessions.by_id.remove(&id);
        }
    }
}

/// A [`Session`] plus the server-side bookkeeping around it: triggers
/// waiting for their quiz and finished quizzes waiting to be saved.
pub struct PlaySession {
    pub session_id: String,
    pub session: Session,
    waiting: VecDeque<TriggerEvent>,
    completed: BTreeMap<String, QuizResult>,
}

impl PlaySession {
    pub fn new(session: Session) -> Self {
        PlaySession {
            session_id: uuid::Uuid::new_v4().to_string(),
            session,
            waiting: VecDeque::new(),
            completed: BTreeMap::new(),
        }
    }

    pub fn waiting(&self) -> impl Iterator<Item = &TriggerEvent> {
        self.waiting.iter().chain(self.session.deferred())
    }

    pub fn completed(&self) -> impl Iterator<Item = &QuizResult> {
        self.completed.values()
    }

    pub fn completed_result(&self, questionnaire: &str) -> Option<&QuizResult> {
        self.completed.get(questionnaire)
    }

    /// Feed a position and open the next quiz if none is running.
    pub fn position(&mut self, point: GeoPoint, t: f64) -> Result<Vec<TriggerView>, EngineError> {
        let held_before = self.session.deferred().count();
        let fired = self.session.update_position(point, t)?;
        let mut triggers: Vec<TriggerView> = self
            .session
            .deferred()
            .skip(held_before)
            .map(|e| trigger_view(e, true))
            .collect();
        triggers.extend(fired.iter().map(|e| trigger_view(e, false)));
        self.waiting.extend(fired);
        self.advance();
        Ok(triggers)
    }

    /// Open the first waiting quiz that has questions at this difficulty.
    pub fn advance(&mut self) {
        if self.session.active_quiz().is_some() {
            return;
        }
        self.waiting.extend(self.session.take_deferred());
        while let Some(event) = self.waiting.pop_front() {
            match self.session.begin_quiz(&event) {
                Ok(_) => return,
                Err(e) => tracing::warn!(poi = %event.poi_id, "skipping quiz: {e}"),
            }
        }
    }

    /// Record an answer; finishing the quiz scores it and opens the next one.
    pub fn answer(
        &mut self,
        questionnaire: &str,
        question: usize,
        choice: usize,
    ) -> Result<(bool, Option<QuizResult>), EngineError> {
        match self.session.active_quiz() {
            Some(q) if q.questionnaire_name() == questionnaire => {}
            _ => return Err(EngineError::NoActiveQuiz),
        }
        let outcome = self.session.answer_question(question, choice)?;
        let done = self.session.active_quiz().is_some_and(|q| q.is_complete());
        if !done {
            return Ok((outcome.is_correct(), None));
        }
        let result = self.session.complete_quiz()?;
        self.completed
            .insert(result.questionnaire_name.clone(), result.clone());
        self.advance();
        Ok((outcome.is_correct(), Some(result)))
    }

    pub fn quiz_view(&self) -> Option<Result<QuizView, citytrail_core::content::LocalizeError>> {
        let quiz = self.session.active_quiz()?;
        Some(QuizView::build(
            quiz,
            self.session.difficulty(),
            self.session.language(),
            self.session.pack(),
        ))
    }
}

fn trigger_view(e: &TriggerEvent, queued: bool) -> TriggerView {
    TriggerView {
        poi_id: e.poi_id.clone(),
        distance: e.distance_at_fire,
        queued,
    }
}

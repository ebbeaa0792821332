use serde::{Deserialize, Serialize};

use super::{EngineError, Timestamp};
use crate::content::QuizQuestion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerOutcome {
    Correct,
    Incorrect,
}

impl AnswerOutcome {
    pub fn is_correct(self) -> bool {
        self == AnswerOutcome::Correct
    }
}

/// A questionnaire in progress. Answers are appended strictly in order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuizInstance {
    questionnaire_name: String,
    poi_id: String,
    questions: Vec<QuizQuestion>,
    answers: Vec<usize>,
    started_at: Timestamp,
}

impl QuizInstance {
    pub fn new(
        questionnaire_name: String,
        poi_id: String,
        questions: Vec<QuizQuestion>,
        started_at: Timestamp,
    ) -> Self {
        QuizInstance {
            questionnaire_name,
            poi_id,
            questions,
            answers: Vec::new(),
            started_at,
        }
    }

    pub fn questionnaire_name(&self) -> &str {
        &self.questionnaire_name
    }

    pub fn poi_id(&self) -> &str {
        &self.poi_id
    }

    pub fn questions(&self) -> &[QuizQuestion] {
        &self.questions
    }

    pub fn answers(&self) -> &[usize] {
        &self.answers
    }

    pub fn started_at(&self) -> Timestamp {
        self.started_at
    }

    /// Index of the next question to answer.
    pub fn cursor(&self) -> usize {
        self.answers.len()
    }

    pub fn is_complete(&self) -> bool {
        self.answers.len() == self.questions.len()
    }

    pub fn correct_count(&self) -> usize {
        self.answers
            .iter()
            .zip(&self.questions)
            .filter(|(a, q)| **a == q.correct_index)
            .count()
    }

    pub fn answer(
        &mut self,
        question_index: usize,
        choice_index: usize,
    ) -> Result<AnswerOutcome, EngineError> {
        let expected = self.answers.len();
        if question_index != expected || expected >= self.questions.len() {
            return Err(EngineError::OutOfOrder {
                expected,
                got: question_index,
            });
        }
        let question = &self.questions[question_index];
        if choice_index >= question.options.len() {
            return Err(EngineError::InvalidChoice {
                question_index,
                choice: choice_index,
                options: question.options.len(),
            });
        }
        self.answers.push(choice_index);
        Ok(if choice_index == question.correct_index {
            AnswerOutcome::Correct
        } else {
            AnswerOutcome::Incorrect
        })
    }
}

use citytrail_core::content::QuizQuestion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerPolicy {
    AlwaysCorrect,
    AlwaysFirst,
    SeededRandom,
}

/// Picks answers according to a policy. The random policy draws from its
/// own seeded generator so replays repeat exactly.
#[derive(Debug, Clone)]
pub struct Answerer {
    policy: AnswerPolicy,
    rng: ChaCha8Rng,
}

impl Answerer {
    pub fn new(policy: AnswerPolicy, seed: u64) -> Self {
        Answerer {
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn choose(&mut self, question: &QuizQuestion) -> usize {
        match self.policy {
            AnswerPolicy::AlwaysCorrect => question.correct_index,
            AnswerPolicy::AlwaysFirst => 0,
            AnswerPolicy::SeededRandom => self.rng.random_range(0..question.options.len()),
        }
    }
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ResultRecord;
use crate::content::{AchievementCondition, GameSettings};

/// Aggregates over a user's saved results.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserTotals {
    pub total_points: u64,
    pub quizzes_completed: u64,
    pub topic_points: BTreeMap<String, u64>,
}

impl UserTotals {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a ResultRecord>) -> Self {
        let mut totals = UserTotals::default();
        for r in records {
            totals.total_points += r.score;
            totals.quizzes_completed += 1;
            for (topic, pts) in &r.topic_points {
                *totals.topic_points.entry(topic.clone()).or_default() += pts;
            }
        }
        totals
    }

    fn satisfies(&self, condition: &AchievementCondition) -> bool {
        match condition {
            AchievementCondition::TotalPoints { threshold } => self.total_points >= *threshold,
            AchievementCondition::QuizzesCompleted { threshold } => {
                self.quizzes_completed >= *threshold
            }
            AchievementCondition::TopicPoints { topic, threshold } => {
                self.topic_points.get(topic).copied().unwrap_or(0) >= *threshold
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AchievementAward {
    pub achievement_id: String,
    pub incentive_points: u32,
}

/// Achievements met by `totals` that were not awarded before, in settings order.
pub fn evaluate_achievements(
    totals: &UserTotals,
    settings: &GameSettings,
    already_awarded: &BTreeSet<String>,
) -> Vec<AchievementAward> {
    settings
        .achievements
        .iter()
        .filter(|a| !already_awarded.contains(&a.id) && totals.satisfies(&a.condition))
        .map(|a| AchievementAward {
            achievement_id: a.id.clone(),
            incentive_points: a.incentive_points,
        })
        .collect()
}

use std::fmt::Write as _;

use super::{AchievementCondition, ContentPack, LocalizedText, PackDocuments};

/// Emit the four documents in canonical form. Parsing the output yields a
/// pack equal to `pack`.
pub fn serialize_content_pack(pack: &ContentPack) -> PackDocuments {
    PackDocuments {
        location_list: location_list(pack),
        geolocation: geolocation(pack),
        game_settings: game_settings(pack),
        messages: messages(pack),
    }
}

const HEADER: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn localized(out: &mut String, indent: &str, tag: &str, text: &LocalizedText) {
    for (lang, value) in text.iter() {
        let _ = writeln!(
            out,
            "{indent}<{tag} lang=\"{}\">{}</{tag}>",
            escape(lang),
            escape(value)
        );
    }
}

fn geolocation(pack: &ContentPack) -> String {
    let mut out = String::from(HEADER);
    out.push_str("<geolocations>\n");
    for poi in &pack.pois {
        let _ = writeln!(
            out,
            "  <poi id=\"{}\" name=\"{}\" lat=\"{}\" lon=\"{}\" trigger_m=\"{}\" msg=\"{}\"/>",
            escape(&poi.id),
            escape(&poi.name),
            poi.position.lat(),
            poi.position.lon(),
            poi.trigger_radius_m,
            escape(&poi.message_id)
        );
    }
    for spot in &pack.parking {
        let _ = writeln!(
            out,
            "  <parking id=\"{}\" name=\"{}\" lat=\"{}\" lon=\"{}\"/>",
            escape(&spot.id),
            escape(&spot.name),
            spot.position.lat(),
            spot.position.lon()
        );
    }
    out.push_str("</geolocations>\n");
    out
}

fn location_list(pack: &ContentPack) -> String {
    let mut out = String::from(HEADER);
    out.push_str("<locations>\n");
    let mut written = std::collections::HashSet::new();
    for poi in &pack.pois {
        // duplicate POI ids share one location entry
        if !written.insert(poi.id.as_str()) {
            continue;
        }
        let _ = writeln!(
            out,
            "  <loc ref=\"{}\" topic=\"{}\" easy_pts=\"{}\" hard_pts=\"{}\"/>",
            escape(&poi.id),
            escape(&poi.topic),
            poi.points.easy,
            poi.points.hard
        );
    }
    out.push_str("</locations>\n");
    out
}

fn game_settings(pack: &ContentPack) -> String {
    let s = &pack.settings;
    let mut out = String::from(HEADER);
    out.push_str("<settings>\n  <languages>\n");
    for lang in &s.languages {
        let _ = writeln!(out, "    <lang code=\"{}\"/>", escape(lang));
    }
    out.push_str("  </languages>\n  <topics>\n");
    for topic in &s.topics {
        let _ = writeln!(out, "    <topic id=\"{}\"/>", escape(topic));
    }
    out.push_str("  </topics>\n  <achievements>\n");
    for ach in &s.achievements {
        let topic = match &ach.condition {
            AchievementCondition::TopicPoints { topic, .. } => {
                format!(" topic=\"{}\"", escape(topic))
            }
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "    <ach id=\"{}\" kind=\"{}\" threshold=\"{}\" bonus=\"{}\"{topic}>",
            escape(&ach.id),
            ach.condition.kind(),
            ach.condition.threshold(),
            ach.incentive_points
        );
        localized(&mut out, "      ", "t", &ach.description);
        out.push_str("    </ach>\n");
    }
    out.push_str("  </achievements>\n</settings>\n");
    out
}

fn messages(pack: &ContentPack) -> String {
    let mut out = String::from(HEADER);
    out.push_str("<messages>\n");
    for (quiz_id, questions) in &pack.messages.quizzes {
        if questions.is_empty() {
            let _ = writeln!(out, "  <quiz id=\"{}\"/>", escape(quiz_id));
        }
        // one <quiz> element per run of questions sharing difficulty and topic
        let mut i = 0;
        while i < questions.len() {
            let head = &questions[i];
            let run = questions[i..]
                .iter()
                .take_while(|q| q.difficulty == head.difficulty && q.topic == head.topic)
                .count();
            let _ = writeln!(
                out,
                "  <quiz id=\"{}\" difficulty=\"{}\" topic=\"{}\">",
                escape(quiz_id),
                head.difficulty,
                escape(&head.topic)
            );
            for q in &questions[i..i + run] {
                let _ = writeln!(
                    out,
                    "    <q id=\"{}\" correct=\"{}\">",
                    escape(&q.id),
                    q.correct_index
                );
                localized(&mut out, "      ", "t", &q.text);
                for opt in &q.options {
                    localized(&mut out, "      ", "opt", opt);
                }
                out.push_str("    </q>\n");
            }
            out.push_str("  </quiz>\n");
            i += run;
        }
    }
    for (end_id, bands) in &pack.messages.end_messages {
        let _ = writeln!(out, "  <end id=\"{}\">", escape(end_id));
        for band in bands {
            let _ = writeln!(out, "    <band min=\"{}\">", band.min_fraction);
            localized(&mut out, "      ", "t", &band.text);
            out.push_str("    </band>\n");
        }
        out.push_str("  </end>\n");
    }
    out.push_str("</messages>\n");
    out
}

use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use indexmap::IndexMap;
use roxmltree::Node;

use super::validate::{
    validate_cross_references, Document, Rule, ValidationEntry, ValidationReport,
};
use super::{
    Achievement, AchievementCondition, ContentDefaults, ContentError, ContentPack, Difficulty,
    EndBand, GameSettings, LocalizedText, MessageCatalog, PackDocuments, ParkingSpot,
    PointOfInterest, PointsTable, QuizQuestion,
};
use crate::geo::GeoPoint;

/// Parse and validate a pack with the default radius and point values.
pub fn parse_content_pack(docs: &PackDocuments) -> Result<ContentPack, ContentError> {
    parse_content_pack_with(docs, &ContentDefaults::default())
}

/// Parse the four documents and cross-link them. Every violation found is
/// reported together in [`ContentError::Invalid`].
pub fn parse_content_pack_with(
    docs: &PackDocuments,
    defaults: &ContentDefaults,
) -> Result<ContentPack, ContentError> {
    let settings_xml = parse_xml(Document::GameSettings, &docs.game_settings)?;
    let geo_xml = parse_xml(Document::Geolocation, &docs.geolocation)?;
    let loc_xml = parse_xml(Document::LocationList, &docs.location_list)?;
    let msg_xml = parse_xml(Document::MessagesList, &docs.messages)?;

    let mut report = ValidationReport::new();

    let settings = parse_settings(&mut Reader::new(
        Document::GameSettings,
        &settings_xml,
        &mut report,
    ));
    let default_lang = settings
        .languages
        .first()
        .cloned()
        .unwrap_or_else(|| "en".into());

    let geometry = parse_geolocation(
        &mut Reader::new(Document::Geolocation, &geo_xml, &mut report),
        defaults,
    );
    let semantics = parse_locations(
        &mut Reader::new(Document::LocationList, &loc_xml, &mut report),
        defaults,
    );
    let pois = join_pois(geometry.pois, &geometry.seen_ids, semantics, &mut report);

    let messages = parse_messages(
        &mut Reader::new(Document::MessagesList, &msg_xml, &mut report),
        &default_lang,
    );

    let pack = ContentPack {
        pois,
        settings,
        messages,
        parking: geometry.parking,
    };
    report.extend(validate_cross_references(&pack));
    if report.is_empty() {
        Ok(pack)
    } else {
        Err(ContentError::Invalid(report))
    }
}

fn parse_xml(document: Document, text: &str) -> Result<roxmltree::Document<'_>, ContentError> {
    roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        ContentError::Xml {
            document,
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })
}

/// Attribute access that records problems instead of failing fast.
struct Reader<'r, 'i> {
    document: Document,
    xml: &'r roxmltree::Document<'i>,
    report: &'r mut ValidationReport,
}

impl<'r, 'i> Reader<'r, 'i> {
    fn new(
        document: Document,
        xml: &'r roxmltree::Document<'i>,
        report: &'r mut ValidationReport,
    ) -> Self {
        Reader {
            document,
            xml,
            report,
        }
    }

    fn root(&self) -> Node<'r, 'i> {
        self.xml.root_element()
    }

    fn push(&mut self, node: Node<'_, '_>, rule: Rule, message: impl Into<String>) {
        let line = self.xml.text_pos_at(node.range().start).row;
        self.report.push_entry(ValidationEntry {
            document: self.document,
            path: node_path(node),
            rule,
            message: message.into(),
            line: Some(line),
        });
    }

    fn expect_root(&mut self, name: &str) -> bool {
        let root = self.root();
        if root.tag_name().name() == name {
            true
        } else {
            self.push(
                root,
                Rule::UnexpectedElement,
                format!(
                    "expected root element <{name}>, found <{}>",
                    root.tag_name().name()
                ),
            );
            false
        }
    }

    fn unexpected(&mut self, node: Node<'_, '_>) {
        self.push(
            node,
            Rule::UnexpectedElement,
            format!("unexpected element <{}>", node.tag_name().name()),
        );
    }

    fn required<'n>(&mut self, node: Node<'n, '_>, name: &str) -> Option<&'n str> {
        let value = node.attribute(name);
        if value.is_none() {
            self.push(
                node,
                Rule::MissingAttribute,
                format!("missing required attribute {name:?}"),
            );
        }
        value
    }

    fn required_num<T: FromStr>(&mut self, node: Node<'_, '_>, name: &str) -> Option<T> {
        let raw = self.required(node, name)?;
        self.convert(node, name, raw)
    }

    /// `Ok(None)` when the attribute is absent, `Err(())` when it is malformed.
    fn optional_num<T: FromStr>(
        &mut self,
        node: Node<'_, '_>,
        name: &str,
    ) -> Result<Option<T>, ()> {
        match node.attribute(name) {
            None => Ok(None),
            Some(raw) => self.convert(node, name, raw).map(Some).ok_or(()),
        }
    }

    fn convert<T: FromStr>(&mut self, node: Node<'_, '_>, name: &str, raw: &str) -> Option<T> {
        match raw.trim().parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.push(
                    node,
                    Rule::InvalidValue,
                    format!("attribute {name:?} has invalid value {raw:?}"),
                );
                None
            }
        }
    }

    fn difficulty(&mut self, node: Node<'_, '_>, raw: &str) -> Option<Difficulty> {
        match raw.parse() {
            Ok(d) => Some(d),
            Err(msg) => {
                self.push(node, Rule::InvalidValue, msg);
                None
            }
        }
    }

    /// Collect `<t lang>` children into one localized text.
    fn localized(&mut self, node: Node<'_, '_>, child: &str) -> Option<LocalizedText> {
        let mut text = LocalizedText::new();
        let mut ok = true;
        for t in node.children().filter(|c| c.has_tag_name(child)) {
            let Some(lang) = self.required(t, "lang") else {
                ok = false;
                continue;
            };
            if text.contains(lang) {
                self.push(
                    t,
                    Rule::DuplicateId,
                    format!("language {lang:?} appears twice in the same text"),
                );
                ok = false;
                continue;
            }
            text.insert(lang, t.text().unwrap_or_default().trim());
        }
        ok.then_some(text)
    }
}

fn node_path(node: Node<'_, '_>) -> String {
    let mut parts: Vec<String> = node
        .ancestors()
        .filter(Node::is_element)
        .map(|n| {
            let name = n.tag_name().name();
            if let Some(id) = n.attribute("id") {
                format!("{name}[@id='{id}']")
            } else if let Some(r) = n.attribute("ref") {
                format!("{name}[@ref='{r}']")
            } else if let Some(parent) = n.parent().filter(Node::is_element) {
                let siblings: Vec<_> = parent.children().filter(|s| s.has_tag_name(name)).collect();
                match siblings.iter().position(|s| *s == n) {
                    Some(i) if siblings.len() > 1 => format!("{name}[{}]", i + 1),
                    _ => name.to_string(),
                }
            } else {
                name.to_string()
            }
        })
        .collect();
    parts.reverse();
    parts.join("/")
}

fn parse_settings(r: &mut Reader<'_, '_>) -> GameSettings {
    let mut settings = GameSettings {
        languages: Vec::new(),
        topics: Vec::new(),
        achievements: Vec::new(),
    };
    if !r.expect_root("settings") {
        return settings;
    }
    for section in r.root().children().filter(Node::is_element) {
        match section.tag_name().name() {
            "languages" => {
                for lang in section.children().filter(Node::is_element) {
                    if !lang.has_tag_name("lang") {
                        r.unexpected(lang);
                    } else if let Some(code) = r.required(lang, "code") {
                        settings.languages.push(code.to_string());
                    }
                }
            }
            "topics" => {
                for topic in section.children().filter(Node::is_element) {
                    if !topic.has_tag_name("topic") {
                        r.unexpected(topic);
                    } else if let Some(id) = r.required(topic, "id") {
                        settings.topics.push(id.to_string());
                    }
                }
            }
            "achievements" => {
                for ach in section.children().filter(Node::is_element) {
                    if !ach.has_tag_name("ach") {
                        r.unexpected(ach);
                    } else if let Some(a) = parse_achievement(r, ach) {
                        settings.achievements.push(a);
                    }
                }
            }
            _ => r.unexpected(section),
        }
    }
    settings
}

fn parse_achievement(r: &mut Reader<'_, '_>, node: Node<'_, '_>) -> Option<Achievement> {
    let id = r.required(node, "id");
    let kind = r.required(node, "kind");
    let threshold: Option<u64> = r.required_num(node, "threshold");
    let bonus: Option<u32> = r.optional_num(node, "bonus").ok()?;
    let description = r.localized(node, "t")?;
    let (id, kind, threshold) = (id?, kind?, threshold?);
    let condition = match kind {
        "total_points" => AchievementCondition::TotalPoints { threshold },
        "quizzes_completed" => AchievementCondition::QuizzesCompleted { threshold },
        "topic_points" => AchievementCondition::TopicPoints {
            topic: r.required(node, "topic")?.to_string(),
            threshold,
        },
        other => {
            r.push(
                node,
                Rule::InvalidValue,
                format!("unknown achievement kind {other:?}"),
            );
            return None;
        }
    };
    Some(Achievement {
        id: id.to_string(),
        description,
        condition,
        incentive_points: bonus.unwrap_or(0),
    })
}

struct Geometry {
    pois: Vec<GeometryEntry>,
    /// Every POI id mentioned, including entries dropped for bad attributes.
    seen_ids: HashSet<String>,
    parking: Vec<ParkingSpot>,
}

struct GeometryEntry {
    id: String,
    name: String,
    position: GeoPoint,
    trigger_radius_m: f64,
    message_id: String,
    line: u32,
}

fn read_position(r: &mut Reader<'_, '_>, node: Node<'_, '_>) -> Option<GeoPoint> {
    let lat: Option<f64> = r.required_num(node, "lat");
    let lon: Option<f64> = r.required_num(node, "lon");
    match GeoPoint::new(lat?, lon?) {
        Ok(p) => Some(p),
        Err(e) => {
            r.push(node, Rule::InvalidCoordinate, e.to_string());
            None
        }
    }
}

fn parse_geolocation(r: &mut Reader<'_, '_>, defaults: &ContentDefaults) -> Geometry {
    let mut geometry = Geometry {
        pois: Vec::new(),
        seen_ids: HashSet::new(),
        parking: Vec::new(),
    };
    if !r.expect_root("geolocations") {
        return geometry;
    }
    for node in r.root().children().filter(Node::is_element) {
        match node.tag_name().name() {
            "poi" => {
                let id = r.required(node, "id");
                if let Some(id) = id {
                    geometry.seen_ids.insert(id.to_string());
                }
                let name = r.required(node, "name");
                let position = read_position(r, node);
                let radius = r.optional_num(node, "trigger_m");
                let msg = r.required(node, "msg");
                if let (Some(id), Some(name), Some(position), Ok(radius), Some(msg)) =
                    (id, name, position, radius, msg)
                {
                    geometry.pois.push(GeometryEntry {
                        id: id.to_string(),
                        name: name.to_string(),
                        position,
                        trigger_radius_m: radius.unwrap_or(defaults.trigger_radius_m),
                        message_id: msg.to_string(),
                        line: r.xml.text_pos_at(node.range().start).row,
                    });
                }
            }
            "parking" => {
                let id = r.required(node, "id");
                let position = read_position(r, node);
                if let (Some(id), Some(position)) = (id, position) {
                    geometry.parking.push(ParkingSpot {
                        id: id.to_string(),
                        name: node.attribute("name").unwrap_or(id).to_string(),
                        position,
                    });
                }
            }
            _ => r.unexpected(node),
        }
    }
    geometry
}

struct Semantics {
    topic: String,
    points: PointsTable,
}

fn parse_locations(
    r: &mut Reader<'_, '_>,
    defaults: &ContentDefaults,
) -> HashMap<String, Semantics> {
    let mut out = HashMap::new();
    if !r.expect_root("locations") {
        return out;
    }
    for node in r.root().children().filter(Node::is_element) {
        if !node.has_tag_name("loc") {
            r.unexpected(node);
            continue;
        }
        let poi_ref = r.required(node, "ref");
        let topic = r.required(node, "topic");
        let easy = r.optional_num(node, "easy_pts");
        let hard = r.optional_num(node, "hard_pts");
        let (Some(poi_ref), Some(topic), Ok(easy), Ok(hard)) = (poi_ref, topic, easy, hard) else {
            continue;
        };
        if out.contains_key(poi_ref) {
            r.push(
                node,
                Rule::DuplicateId,
                format!("location {poi_ref:?} is listed more than once"),
            );
            continue;
        }
        out.insert(
            poi_ref.to_string(),
            Semantics {
                topic: topic.to_string(),
                points: PointsTable {
                    easy: easy.unwrap_or(defaults.points.easy),
                    hard: hard.unwrap_or(defaults.points.hard),
                },
            },
        );
    }
    out
}

fn join_pois(
    geometry: Vec<GeometryEntry>,
    seen_ids: &HashSet<String>,
    mut semantics: HashMap<String, Semantics>,
    report: &mut ValidationReport,
) -> Vec<PointOfInterest> {
    let mut pois = Vec::with_capacity(geometry.len());
    for g in geometry {
        let Some(sem) = semantics.get(&g.id) else {
            report.push_entry(ValidationEntry {
                document: Document::LocationList,
                path: format!("locations/loc[@ref='{}']", g.id),
                rule: Rule::MissingLocation,
                message: format!("POI {:?} has no entry in LocationList.xml", g.id),
                line: Some(g.line),
            });
            continue;
        };
        pois.push(PointOfInterest {
            id: g.id,
            name: g.name,
            position: g.position,
            trigger_radius_m: g.trigger_radius_m,
            message_id: g.message_id,
            topic: sem.topic.clone(),
            points: sem.points,
        });
    }
    let mut dangling: Vec<_> = semantics
        .drain()
        .map(|(k, _)| k)
        .filter(|id| !seen_ids.contains(id))
        .collect();
    dangling.sort();
    for id in dangling {
        report.push(
            Document::LocationList,
            format!("locations/loc[@ref='{id}']"),
            Rule::UnknownPoiReference,
            format!("location refers to POI {id:?} which is not in Geolocation.xml"),
        );
    }
    pois
}

fn parse_messages(r: &mut Reader<'_, '_>, default_lang: &str) -> MessageCatalog {
    let mut catalog = MessageCatalog {
        quizzes: IndexMap::new(),
        end_messages: IndexMap::new(),
    };
    if !r.expect_root("messages") {
        return catalog;
    }
    for node in r.root().children().filter(Node::is_element) {
        match node.tag_name().name() {
            "quiz" => parse_quiz(r, node, &mut catalog.quizzes),
            "end" => {
                let Some(id) = r.required(node, "id") else {
                    continue;
                };
                if catalog.end_messages.contains_key(id) {
                    r.push(
                        node,
                        Rule::DuplicateId,
                        format!("end message {id:?} is declared more than once"),
                    );
                    continue;
                }
                let mut bands = Vec::new();
                for band in node.children().filter(Node::is_element) {
                    if !band.has_tag_name("band") {
                        r.unexpected(band);
                        continue;
                    }
                    let Some(min) = r.required_num::<f64>(band, "min") else {
                        continue;
                    };
                    let text = if band.children().any(|c| c.has_tag_name("t")) {
                        match r.localized(band, "t") {
                            Some(t) => t,
                            None => continue,
                        }
                    } else {
                        LocalizedText::new()
                            .with(default_lang, band.text().unwrap_or_default().trim())
                    };
                    bands.push(EndBand {
                        min_fraction: min,
                        text,
                    });
                }
                catalog.end_messages.insert(id.to_string(), bands);
            }
            _ => r.unexpected(node),
        }
    }
    catalog
}

fn parse_quiz(
    r: &mut Reader<'_, '_>,
    node: Node<'_, '_>,
    quizzes: &mut IndexMap<String, Vec<QuizQuestion>>,
) {
    let Some(quiz_id) = r.required(node, "id") else {
        return;
    };
    let quiz_difficulty = node
        .attribute("difficulty")
        .and_then(|d| r.difficulty(node, d));
    let quiz_topic = node.attribute("topic");
    let questions = quizzes.entry(quiz_id.to_string()).or_default();

    for q in node.children().filter(Node::is_element) {
        if !q.has_tag_name("q") {
            r.unexpected(q);
            continue;
        }
        let ordinal = questions.len() + 1;
        let id = q
            .attribute("id")
            .map(str::to_string)
            .unwrap_or_else(|| format!("{quiz_id}.{ordinal}"));
        let difficulty = match q.attribute("difficulty") {
            Some(d) => r.difficulty(q, d),
            None if quiz_difficulty.is_some() => quiz_difficulty,
            None => {
                r.push(
                    q,
                    Rule::MissingAttribute,
                    "no difficulty on the question or its quiz",
                );
                None
            }
        };
        let topic = match q.attribute("topic").or(quiz_topic) {
            Some(t) => Some(t),
            None => {
                r.push(
                    q,
                    Rule::MissingAttribute,
                    "no topic on the question or its quiz",
                );
                None
            }
        };
        let correct: Option<usize> = r.required_num(q, "correct");
        let text = r.localized(q, "t");
        let options = parse_options(r, q);
        if let (Some(difficulty), Some(topic), Some(correct_index), Some(text), Some(options)) =
            (difficulty, topic, correct, text, options)
        {
            questions.push(QuizQuestion {
                id,
                text,
                options,
                correct_index,
                difficulty,
                topic: topic.to_string(),
            });
        }
    }
    for child in node.children().filter(|c| c.is_element()) {
        for grandchild in child.children().filter(Node::is_element) {
            if !matches!(grandchild.tag_name().name(), "t" | "opt") {
                r.unexpected(grandchild);
            }
        }
    }
}

/// Consecutive `<opt>` elements with distinct languages form one option; a
/// repeated language starts the next option.
fn parse_options(r: &mut Reader<'_, '_>, q: Node<'_, '_>) -> Option<Vec<LocalizedText>> {
    let mut options = Vec::new();
    let mut current = LocalizedText::new();
    let mut ok = true;
    for opt in q.children().filter(|c| c.has_tag_name("opt")) {
        let Some(lang) = r.required(opt, "lang") else {
            ok = false;
            continue;
        };
        if current.contains(lang) {
            options.push(std::mem::take(&mut current));
        }
        current.insert(lang, opt.text().unwrap_or_default().trim());
    }
    if !current.is_empty() {
        options.push(current);
    }
    ok.then_some(options)
}

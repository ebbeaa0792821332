use citytrail_core::content::{
    bari_demo_documents, bari_demo_pack, parse_content_pack, serialize_content_pack,
    validate_cross_references, Achievement, AchievementCondition, ContentError, ContentPack,
    Difficulty, Document, EndBand, GameSettings, LocalizedText, MessageCatalog, PackDocuments,
    ParkingSpot, PointOfInterest, PointsTable, QuizQuestion, Rule,
};
use citytrail_core::GeoPoint;
use indexmap::IndexMap;
use proptest::prelude::*;

/// One violation, expressed as a textual edit of the demo documents.
struct Injection {
    rule: Rule,
    document: Document,
    find: &'static str,
    replace: &'static str,
}

const INJECTIONS: &[Injection] = &[
    Injection {
        rule: Rule::DanglingMessage,
        document: Document::Geolocation,
        find: r#"msg="basilica""#,
        replace: r#"msg="m99""#,
    },
    Injection {
        rule: Rule::CorrectIndexOutOfRange,
        document: Document::MessagesList,
        find: r#"<q id="castello.e3" correct="2">"#,
        replace: r#"<q id="castello.e3" correct="3">"#,
    },
    Injection {
        rule: Rule::UnknownTopic,
        document: Document::LocationList,
        find: r#"<loc ref="margherita" topic="arts_show_trivia"/>"#,
        replace: r#"<loc ref="margherita" topic="food"/>"#,
    },
    Injection {
        rule: Rule::BandCoverage,
        document: Document::MessagesList,
        find: r#"<band min="0">"#,
        replace: r#"<band min="0.1">"#,
    },
    Injection {
        rule: Rule::DuplicateId,
        document: Document::Geolocation,
        find: "</geolocations>",
        replace: "  <poi id=\"castello\" name=\"Castle copy\" lat=\"41.2\" lon=\"16.9\" msg=\"castello\"/>\n</geolocations>",
    },
    Injection {
        rule: Rule::ThresholdOutOfRange,
        document: Document::GameSettings,
        find: r#"threshold="1" bonus="5""#,
        replace: r#"threshold="0" bonus="5""#,
    },
    Injection {
        rule: Rule::OptionCount,
        document: Document::MessagesList,
        find: r#"<opt lang="it">San Francesco</opt>"#,
        replace: r#"<opt lang="it">San Francesco</opt><opt lang="en">Saint Peter</opt><opt lang="it">San Pietro</opt>"#,
    },
    Injection {
        rule: Rule::UnknownLanguage,
        document: Document::MessagesList,
        find: r#"<t lang="it">Cosa significa EL-V?</t>"#,
        replace: r#"<t lang="it">Cosa significa EL-V?</t><t lang="fr">Que signifie EL-V ?</t>"#,
    },
    Injection {
        rule: Rule::NonPositiveRadius,
        document: Document::Geolocation,
        find: r#"trigger_m="200" msg="hub_moro""#,
        replace: r#"trigger_m="0" msg="hub_moro""#,
    },
    Injection {
        rule: Rule::MissingLocation,
        document: Document::LocationList,
        find: r#"<loc ref="poliba" topic="elv"/>"#,
        replace: "",
    },
    Injection {
        rule: Rule::DuplicateId,
        document: Document::MessagesList,
        find: r#"<q id="petruzzelli.e2""#,
        replace: r#"<q id="petruzzelli.e1""#,
    },
    Injection {
        rule: Rule::UnknownPoiReference,
        document: Document::LocationList,
        find: "</locations>",
        replace: "  <loc ref=\"ghost\" topic=\"elv\"/>\n</locations>",
    },
];

fn inject(docs: &mut PackDocuments, inj: &Injection) {
    let text = match inj.document {
        Document::Geolocation => &mut docs.geolocation,
        Document::LocationList => &mut docs.location_list,
        Document::GameSettings => &mut docs.game_settings,
        Document::MessagesList => &mut docs.messages,
    };
    assert_eq!(
        text.matches(inj.find).count(),
        1,
        "anchor {:?} must be unique",
        inj.find
    );
    *text = text.replacen(inj.find, inj.replace, 1);
}

fn report_of(docs: &PackDocuments) -> citytrail_core::content::ValidationReport {
    match parse_content_pack(docs) {
        Err(ContentError::Invalid(report)) => report,
        Ok(_) => panic!("expected a validation failure"),
        Err(other) => panic!("unexpected error: {other}"),
    }
}

#[test]
fn demo_pack_is_valid() {
    let pack = bari_demo_pack();
    assert!(pack.pois.len() >= 5);
    assert_eq!(pack.settings.topics, ["history", "arts_show_trivia", "elv"]);
    assert!(validate_cross_references(&pack).is_empty());
    assert_eq!(pack.parking.len(), 4);
    for q in pack.messages.quizzes.values().flatten() {
        assert!((2..=3).contains(&q.options.len()));
    }
}

#[test]
fn optional_attributes_take_defaults() {
    let pack = bari_demo_pack();
    let poliba = pack.poi("poliba").unwrap();
    assert_eq!(poliba.trigger_radius_m, 200.0);
    assert_eq!(poliba.points, PointsTable { easy: 10, hard: 20 });
}

#[test]
fn quiz_elements_with_same_id_are_merged_in_order() {
    let pack = bari_demo_pack();
    let ids: Vec<_> = pack
        .questionnaire("basilica")
        .unwrap()
        .iter()
        .map(|q| q.id.as_str())
        .collect();
    assert_eq!(
        ids,
        [
            "basilica.e1",
            "basilica.e2",
            "basilica.e3",
            "basilica.h1",
            "basilica.h2"
        ]
    );
    let q = &pack.questionnaire("basilica").unwrap()[0];
    assert_eq!(q.options[1].get("it"), Some("San Nicola"));
    assert_eq!(q.difficulty, Difficulty::Easy);
}

#[test]
fn dangling_message_yields_exactly_one_entry() {
    let mut docs = bari_demo_documents();
    inject(&mut docs, &INJECTIONS[0]);
    let report = report_of(&docs);
    assert_eq!(report.len(), 1, "{report}");
    let entry = &report.entries()[0];
    assert_eq!(entry.rule, Rule::DanglingMessage);
    assert_eq!(entry.document, Document::Geolocation);
    assert_eq!(entry.path, "geolocations/poi[@id='san_nicola']");
    assert!(entry.message.contains("m99"));
}

#[test]
fn correct_index_out_of_range() {
    let mut docs = bari_demo_documents();
    inject(&mut docs, &INJECTIONS[1]);
    let report = report_of(&docs);
    assert_eq!(report.len(), 1, "{report}");
    assert_eq!(report.entries()[0].rule, Rule::CorrectIndexOutOfRange);
}

#[test]
fn each_single_injection_yields_one_entry_of_its_rule() {
    for inj in INJECTIONS {
        let mut docs = bari_demo_documents();
        inject(&mut docs, inj);
        let report = report_of(&docs);
        assert_eq!(report.len(), 1, "{:?}:\n{report}", inj.rule);
        assert_eq!(report.entries()[0].rule, inj.rule);
    }
}

#[test]
fn every_violation_is_reported_not_just_the_first() {
    let mut docs = bari_demo_documents();
    for inj in INJECTIONS {
        inject(&mut docs, inj);
    }
    let report = report_of(&docs);
    assert_eq!(report.len(), INJECTIONS.len(), "{report}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k_injections_give_k_entries(mask in prop::collection::vec(any::<bool>(), INJECTIONS.len())) {
        let mut docs = bari_demo_documents();
        let mut k = 0;
        for (inj, on) in INJECTIONS.iter().zip(&mask) {
            if *on {
                inject(&mut docs, inj);
                k += 1;
            }
        }
        match parse_content_pack(&docs) {
            Ok(_) => prop_assert_eq!(k, 0),
            Err(ContentError::Invalid(report)) => prop_assert_eq!(report.len(), k, "{}", report),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}

#[test]
fn malformed_xml_reports_position() {
    let mut docs = bari_demo_documents();
    docs.geolocation = "<geolocations>\n  <poi id=\"x\"\n</geolocations>".into();
    match parse_content_pack(&docs) {
        Err(ContentError::Xml {
            document,
            line,
            column,
            ..
        }) => {
            assert_eq!(document, Document::Geolocation);
            assert_eq!(line, 3);
            assert!(column >= 1);
        }
        other => panic!("expected XML error, got {other:?}"),
    }
}

#[test]
fn structural_problems_carry_lines() {
    let mut docs = bari_demo_documents();
    docs.geolocation = docs
        .geolocation
        .replace(r#"lat="41.12584""#, r#"lat="north""#);
    docs.location_list = docs.location_list.replace(
        r#"<loc ref="castello" topic="history"/>"#,
        r#"<loc ref="castello" topic="history" easy_pts="-3"/>"#,
    );
    let report = report_of(&docs);
    assert_eq!(report.count(Rule::InvalidValue), 2, "{report}");
    assert!(report.entries().iter().all(|e| e.line.is_some()));
    let lat = report
        .entries()
        .iter()
        .find(|e| e.document == Document::Geolocation)
        .unwrap();
    assert_eq!(lat.line, Some(5));
}

#[test]
fn out_of_range_coordinates_are_reported_once() {
    let mut docs = bari_demo_documents();
    docs.geolocation = docs
        .geolocation
        .replace(r#"lat="41.12584""#, r#"lat="141.12584""#);
    let report = report_of(&docs);
    assert_eq!(report.len(), 1, "{report}");
    assert_eq!(report.entries()[0].rule, Rule::InvalidCoordinate);
}

#[test]
fn wrong_root_element() {
    let mut docs = bari_demo_documents();
    docs.game_settings = "<config/>".into();
    let report = report_of(&docs);
    assert!(report.count(Rule::UnexpectedElement) == 1, "{report}");
}

#[test]
fn band_text_without_t_children_uses_default_language() {
    let mut docs = bari_demo_documents();
    docs.messages = docs.messages.replace(
        "</messages>",
        "  <end id=\"castello\"><band min=\"0\">Try again</band><band min=\"1\">Bravo</band></end>\n</messages>",
    );
    let pack = parse_content_pack(&docs).unwrap();
    let bands = pack.end_bands("castello");
    assert_eq!(bands.len(), 2);
    assert_eq!(bands[1].text.get("en"), Some("Bravo"));
    // other questionnaires still use the pack default
    assert_eq!(pack.end_bands("basilica").len(), 3);
}

#[test]
fn load_dir_reads_the_bundled_files() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/content/bari");
    assert_eq!(ContentPack::load_dir(dir).unwrap(), bari_demo_pack());
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        ContentPack::load_dir(dir.path()),
        Err(ContentError::Io { .. })
    ));
}

#[test]
fn demo_round_trips() {
    let pack = bari_demo_pack();
    let docs = serialize_content_pack(&pack);
    assert_eq!(parse_content_pack(&docs).unwrap(), pack);
    // canonical output is a fixed point
    assert_eq!(
        serialize_content_pack(&parse_content_pack(&docs).unwrap()),
        docs
    );

    let dir = tempfile::tempdir().unwrap();
    docs.write_dir(dir.path()).unwrap();
    assert_eq!(ContentPack::load_dir(dir.path()).unwrap(), pack);
}

// ---- generated packs for the round-trip property ----

const LANGS: [&str; 2] = ["en", "it"];
const TOPICS: [&str; 3] = ["history", "arts_show_trivia", "elv"];

fn text_strategy() -> impl Strategy<Value = LocalizedText> {
    // includes characters that need escaping
    let s = "[a-zA-Z0-9 àè&<>\"'.,?!-]{1,20}"
        .prop_map(|s| s.trim().to_string())
        .prop_filter("non-empty", |s| !s.is_empty());
    (s.clone(), prop::option::of(s)).prop_map(|(en, it)| {
        let mut t = LocalizedText::new().with("en", &en);
        if let Some(it) = it {
            t.insert("it", &it);
        }
        t
    })
}

fn question_strategy(
) -> impl Strategy<Value = (Difficulty, usize, Vec<LocalizedText>, LocalizedText, usize)> {
    (
        prop::bool::ANY.prop_map(|h| {
            if h {
                Difficulty::Hard
            } else {
                Difficulty::Easy
            }
        }),
        0usize..3,
        prop::collection::vec(text_strategy(), 2..=3),
        text_strategy(),
        0usize..3,
    )
}

fn pack_strategy() -> impl Strategy<Value = ContentPack> {
    let poi = (
        -80.0f64..80.0,
        -179.0f64..179.0,
        1.0f64..500.0,
        0usize..3,
        0u32..50,
        0u32..50,
        "[A-Za-z &<]{1,12}",
    );
    (
        prop::collection::vec(poi, 1..5),
        prop::collection::vec(prop::collection::vec(question_strategy(), 1..5), 1..4),
        prop::collection::vec((-80.0f64..80.0, -179.0f64..179.0), 0..3),
        prop::collection::vec(0.01f64..0.99, 0..3),
        1u64..100,
    )
        .prop_map(|(pois, quizzes, parking, mut band_mins, threshold)| {
            let quiz_ids: Vec<String> = (0..quizzes.len()).map(|i| format!("quiz{i}")).collect();
            let mut quiz_map = IndexMap::new();
            for (qi, questions) in quizzes.into_iter().enumerate() {
                let list = questions
                    .into_iter()
                    .enumerate()
                    .map(
                        |(i, (difficulty, topic, options, text, correct))| QuizQuestion {
                            id: format!("{}.{}", quiz_ids[qi], i + 1),
                            text,
                            correct_index: correct % options.len(),
                            options,
                            difficulty,
                            topic: TOPICS[topic].into(),
                        },
                    )
                    .collect();
                quiz_map.insert(quiz_ids[qi].clone(), list);
            }
            band_mins.sort_by(f64::total_cmp);
            band_mins.dedup();
            let mut bands = vec![EndBand {
                min_fraction: 0.0,
                text: LocalizedText::new().with("en", "zero"),
            }];
            bands.extend(band_mins.into_iter().map(|m| EndBand {
                min_fraction: m,
                text: LocalizedText::new().with("en", "band"),
            }));
            let mut end_messages = IndexMap::new();
            end_messages.insert("default".to_string(), bands);
            ContentPack {
                pois: pois
                    .into_iter()
                    .enumerate()
                    .map(
                        |(i, (lat, lon, r, topic, easy, hard, name))| PointOfInterest {
                            id: format!("poi{i}"),
                            name,
                            position: GeoPoint::new(lat, lon).unwrap(),
                            trigger_radius_m: r,
                            message_id: quiz_ids[i % quiz_ids.len()].clone(),
                            topic: TOPICS[topic].into(),
                            points: PointsTable { easy, hard },
                        },
                    )
                    .collect(),
                settings: GameSettings {
                    languages: LANGS.map(String::from).to_vec(),
                    topics: TOPICS.map(String::from).to_vec(),
                    achievements: vec![Achievement {
                        id: "a1".into(),
                        description: LocalizedText::new().with("en", "Keep going & win"),
                        condition: AchievementCondition::TopicPoints {
                            topic: "elv".into(),
                            threshold,
                        },
                        incentive_points: 3,
                    }],
                },
                messages: MessageCatalog {
                    quizzes: quiz_map,
                    end_messages,
                },
                parking: parking
                    .into_iter()
                    .enumerate()
                    .map(|(i, (lat, lon))| ParkingSpot {
                        id: format!("park{i}"),
                        name: format!("Parking {i}"),
                        position: GeoPoint::new(lat, lon).unwrap(),
                    })
                    .collect(),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_then_parse_is_identity(pack in pack_strategy()) {
        prop_assert!(validate_cross_references(&pack).is_empty(), "{}", validate_cross_references(&pack));
        let docs = serialize_content_pack(&pack);
        let reparsed = parse_content_pack(&docs).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(reparsed, pack);
    }
}

//! Acceptance checks for the primary components. Prints one PASS/FAIL line
//! per criterion and exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use citytrail_core::content::{
    bari_demo_documents, bari_demo_pack, parse_content_pack, ContentError, ContentPack, Difficulty,
    PackDocuments, BARI_DEMO_ROUTE,
};
use citytrail_core::engine::{
    evaluate_achievements, get_results, save_result, MemoryResultStore, QuizResult, ResultKey,
    ResultStore, SaveOutcome, UserTotals, VehicleProfile,
};
use citytrail_core::geo::{haversine_distance, EARTH_RADIUS_M};
use citytrail_core::persistence::Store;
use citytrail_core::{GeoPoint, Session};
use citytrail_sim::{
    generate_trace, parse_route, replay_engine, AnswerPolicy, ApiClient, Scenario, SimulationReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

fn p(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("trigger rule fidelity", trigger_rule_fidelity),
        ("engine/oracle equivalence", engine_oracle_equivalence),
        ("geodesy accuracy", geodesy_accuracy),
        ("result semantics", result_semantics),
        ("your results contract", your_results_contract),
        (
            "content validation completeness",
            content_validation_completeness,
        ),
        ("security floor", security_floor),
        ("end-to-end scenario", end_to_end_scenario),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", 8 - failed, 8);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// A point due east of (0, 0) at exactly `target` metres by haversine.
/// Near the origin longitude has far finer steps than the distance itself.
fn exactly_east(target: f64) -> GeoPoint {
    let origin = p(0.0, 0.0);
    let mut lon = (target / EARTH_RADIUS_M).to_degrees();
    for _ in 0..256 {
        let d = haversine_distance(origin, p(0.0, lon));
        if d == target {
            return p(0.0, lon);
        }
        lon = if d < target {
            f64::from_bits(lon.to_bits() + 1)
        } else {
            f64::from_bits(lon.to_bits() - 1)
        };
    }
    panic!("no longitude at exactly {target} m");
}

fn trigger_rule_fidelity() -> Check {
    // the demo pack with one POI moved to the origin
    let mut docs = bari_demo_documents();
    docs.geolocation = docs
        .geolocation
        .replace(r#"lat="41.13053" lon="16.87021""#, r#"lat="0" lon="0""#);
    let pack = Arc::new(parse_content_pack(&docs).map_err(|e| e.to_string())?);
    let poi = pack.poi("san_nicola").unwrap();
    ensure!(
        poi.position == p(0.0, 0.0) && poi.trigger_radius_m == 200.0,
        "synthetic POI not in place"
    );
    let fires = |d: f64| -> Result<bool, String> {
        let point = exactly_east(d);
        ensure!(
            haversine_distance(point, poi.position) == d,
            "probe is not at {d} m"
        );
        let mut s = Session::start(
            "u",
            Difficulty::Easy,
            VehicleProfile::default(),
            "en",
            pack.clone(),
        )
        .map_err(|e| e.to_string())?;
        let events = s.update_position(point, 0.0).map_err(|e| e.to_string())?;
        Ok(events.iter().any(|e| e.poi_id == poi.id))
    };
    ensure!(fires(199.9)?, "199.9 m did not trigger");
    ensure!(!fires(200.0)?, "exactly 200.0 m triggered");
    ensure!(!fires(200.1)?, "200.1 m triggered");
    Ok("199.9 m fires; exactly 200.0 m and 200.1 m do not".into())
}

fn engine_oracle_equivalence() -> Check {
    let pack = Arc::new(bari_demo_pack());
    ensure!(
        pack.pois.len() >= 5 && pack.settings.topics.len() == 3,
        "demo pack too small"
    );
    let started = Instant::now();
    let mut points = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6);
        let waypoints: Vec<_> = (0..n)
            .map(|_| {
                p(
                    rng.random_range(41.100..41.140),
                    rng.random_range(16.855..16.890),
                )
            })
            .collect();
        let speed = rng.random_range(1.0..15.0);
        let period = rng.random_range(0.5..3.0);
        let noise = rng.random_range(0.0..10.0);
        let trace =
            generate_trace(&waypoints, speed, period, noise, seed).map_err(|e| e.to_string())?;
        points += trace.len();
        let policy = [
            AnswerPolicy::AlwaysCorrect,
            AnswerPolicy::AlwaysFirst,
            AnswerPolicy::SeededRandom,
        ][seed as usize % 3];
        let difficulty = if seed % 2 == 0 {
            Difficulty::Easy
        } else {
            Difficulty::Hard
        };
        let mut scenario = Scenario::new(difficulty, policy);
        scenario.seed = seed;
        let report = replay_engine(&trace, &scenario, pack.clone()).map_err(|e| e.to_string())?;
        ensure!(report.matches, "seed {seed}: {report:?}");
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "500/500 traces match ({points} fixes, {:.2} s)",
        elapsed.as_secs_f64()
    ))
}

fn cosine_law(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat().to_radians(), b.lat().to_radians());
    let dl = (b.lon() - a.lon()).to_radians();
    let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
    EARTH_RADIUS_M * c.acos()
}

fn geodesy_accuracy() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = p(
            rng.random_range(-70.0..70.0),
            rng.random_range(-180.0..180.0),
        );
        // a second point within 50 km: offset by at most 0.3 degrees of arc per axis
        let dlat = rng.random_range(-0.3..0.3);
        let dlon = rng.random_range(-0.3..0.3) / a.lat().to_radians().cos();
        let b = p((a.lat() + dlat).clamp(-90.0, 90.0), a.lon() + dlon);
        let d = haversine_distance(a, b);
        ensure!(d <= 50_000.0, "pair {a:?} {b:?} is {d} m apart");
        worst = worst.max((d - cosine_law(a, b)).abs());
    }
    ensure!(worst <= 0.5, "worst disagreement {worst} m");
    let one_degree = haversine_distance(p(0.0, 0.0), p(0.0, 1.0));
    let expected = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    ensure!(
        (one_degree - expected).abs() <= 1e-3,
        "1 degree = {one_degree}, expected {expected}"
    );
    Ok(format!(
        "1000 pairs, worst |haversine - cosine law| = {worst:.2e} m; 1 degree = {one_degree:.6} m"
    ))
}

fn play_one(pack: &Arc<ContentPack>, poi_id: &str, correct: usize) -> Result<QuizResult, String> {
    let mut s = Session::start(
        "u",
        Difficulty::Easy,
        VehicleProfile::default(),
        "en",
        pack.clone(),
    )
    .map_err(|e| e.to_string())?;
    let event = s
        .update_position(pack.poi(poi_id).unwrap().position, 0.0)
        .map_err(|e| e.to_string())?
        .remove(0);
    let questions = s
        .begin_quiz(&event)
        .map_err(|e| e.to_string())?
        .questions()
        .to_vec();
    for (i, q) in questions.iter().enumerate() {
        let choice = if i < correct {
            q.correct_index
        } else {
            (q.correct_index + 1) % q.options.len()
        };
        s.answer_question(i, choice).map_err(|e| e.to_string())?;
    }
    s.complete_quiz().map_err(|e| e.to_string())
}

fn result_semantics() -> Check {
    let pack = Arc::new(bari_demo_pack());
    let first = play_one(&pack, "san_nicola", 1)?;
    let second = play_one(&pack, "san_nicola", 3)?;
    let memory = MemoryResultStore::new();
    let store = Store::in_memory();
    let user = store
        .register("e2e@example.org", "triple", "s3cretpw!")
        .map_err(|e| e.to_string())?;
    for backend in [&memory as &dyn ResultStore, &store as &dyn ResultStore] {
        let key = ResultKey::new("basilica", &user).unwrap();
        let read = || {
            backend
                .fetch_results(&user)
                .unwrap()
                .get(&key)
                .map(|r| r.score)
        };
        let out = save_result(&user, &first, false, backend).map_err(|e| e.to_string())?;
        ensure!(
            out == SaveOutcome::Stored && read() == Some(first.score),
            "first save: {out:?}"
        );
        let out = save_result(&user, &second, false, backend).map_err(|e| e.to_string())?;
        ensure!(
            out == SaveOutcome::RejectedExists,
            "second save without overwrite: {out:?}"
        );
        ensure!(
            read() == Some(first.score),
            "rejected save changed the stored value"
        );
        let out = save_result(&user, &second, true, backend).map_err(|e| e.to_string())?;
        ensure!(
            out == SaveOutcome::Replaced && read() == Some(second.score),
            "overwrite: {out:?}"
        );
    }
    let key = ResultKey::new("basilica", &user).unwrap();
    let text = key.to_string();
    ensure!(text == format!("basilica::{user}"), "key renders as {text}");
    ensure!(
        text.parse::<ResultKey>().unwrap() == key,
        "key does not round-trip"
    );
    Ok(format!(
        "stored {} / rejected / replaced with {}; key {text}",
        first.score, second.score
    ))
}

fn your_results_contract() -> Check {
    let pack = bari_demo_pack();
    let store = Store::in_memory();
    let user = store
        .register("fresh@example.org", "fresh", "s3cretpw!")
        .map_err(|e| e.to_string())?;
    let rows = get_results(&user, &pack, &store).map_err(|e| e.to_string())?;
    let names: Vec<_> = pack.questionnaire_names().collect();
    let got: Vec<_> = rows.iter().map(|r| r.questionnaire.as_str()).collect();
    ensure!(got == names, "rows {got:?}, expected {names:?}");
    ensure!(
        rows.iter().all(|r| r.score.is_none()),
        "fresh user has a score"
    );
    Ok(format!("{} rows in pack order, all empty", rows.len()))
}

struct Injection {
    name: &'static str,
    doc: fn(&mut PackDocuments) -> &mut String,
    find: &'static str,
    replace: &'static str,
}

const INJECTIONS: [Injection; 10] = [
    Injection { name: "dangling message id", doc: |d| &mut d.geolocation, find: r#"msg="basilica""#, replace: r#"msg="m99""# },
    Injection {
        name: "bad correct_index",
        doc: |d| &mut d.messages,
        find: r#"<q id="castello.e3" correct="2">"#,
        replace: r#"<q id="castello.e3" correct="3">"#,
    },
    Injection {
        name: "unknown topic",
        doc: |d| &mut d.location_list,
        find: r#"<loc ref="margherita" topic="arts_show_trivia"/>"#,
        replace: r#"<loc ref="margherita" topic="food"/>"#,
    },
    Injection { name: "non-covering bands", doc: |d| &mut d.messages, find: r#"<band min="0">"#, replace: r#"<band min="0.1">"# },
    Injection {
        name: "duplicate POI id",
        doc: |d| &mut d.geolocation,
        find: "</geolocations>",
        replace: "  <poi id=\"castello\" name=\"Copy\" lat=\"41.2\" lon=\"16.9\" msg=\"castello\"/>\n</geolocations>",
    },
    Injection {
        name: "achievement threshold 0",
        doc: |d| &mut d.game_settings,
        find: r#"threshold="1" bonus="5""#,
        replace: r#"threshold="0" bonus="5""#,
    },
    Injection {
        name: "four options",
        doc: |d| &mut d.messages,
        find: r#"<opt lang="it">San Francesco</opt>"#,
        replace: r#"<opt lang="it">San Francesco</opt><opt lang="en">Saint Peter</opt><opt lang="it">San Pietro</opt>"#,
    },
    Injection {
        name: "undeclared language",
        doc: |d| &mut d.messages,
        find: r#"<t lang="it">Cosa significa EL-V?</t>"#,
        replace: r#"<t lang="it">Cosa significa EL-V?</t><t lang="fr">Que signifie EL-V ?</t>"#,
    },
    Injection {
        name: "zero trigger radius",
        doc: |d| &mut d.geolocation,
        find: r#"trigger_m="200" msg="hub_moro""#,
        replace: r#"trigger_m="0" msg="hub_moro""#,
    },
    Injection { name: "POI without location entry", doc: |d| &mut d.location_list, find: r#"<loc ref="poliba" topic="elv"/>"#, replace: "" },
];

fn content_validation_completeness() -> Check {
    ensure!(
        parse_content_pack(&bari_demo_documents()).is_ok(),
        "demo pack does not validate"
    );
    for inj in &INJECTIONS {
        let mut docs = bari_demo_documents();
        let text = (inj.doc)(&mut docs);
        ensure!(
            text.matches(inj.find).count() == 1,
            "{}: anchor not unique",
            inj.name
        );
        *text = text.replacen(inj.find, inj.replace, 1);
        match parse_content_pack(&docs) {
            Err(ContentError::Invalid(report)) => ensure!(
                report.len() == 1,
                "{}: {} entries\n{report}",
                inj.name,
                report.len()
            ),
            Ok(_) => return Err(format!("{}: accepted", inj.name)),
            Err(e) => return Err(format!("{}: {e}", inj.name)),
        }
    }
    Ok("demo pack 0 entries; 10 injected packs 1 entry each".into())
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

fn security_floor() -> Check {
    let server = common::TestServer::start();
    let base = &server.base_url;
    let password = "Plain-Text-Pw-91";
    let mut client = ApiClient::new(base).map_err(|e| e.to_string())?;
    client
        .register("sec@example.org", "secure", password)
        .map_err(|e| e.to_string())?;
    client
        .login("secure", password)
        .map_err(|e| e.to_string())?;
    let token = client.token().unwrap().to_string();

    let http = reqwest::blocking::Client::new();
    let mut bodies = Vec::new();
    let mut fetch = |req: reqwest::blocking::RequestBuilder| -> Result<serde_json::Value, String> {
        let resp = req.send().map_err(|e| e.to_string())?;
        let bytes = resp.bytes().map_err(|e| e.to_string())?.to_vec();
        let value = serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null);
        bodies.push(bytes);
        Ok(value)
    };
    fetch(http.get(format!("{base}/api/pack")))?;
    fetch(http.get(format!("{base}/api/pack?lang=it")))?;
    let session = fetch(
        http.post(format!("{base}/api/session"))
            .bearer_auth(&token)
            .json(&serde_json::json!({"difficulty": "easy"})),
    )?;
    let sid = session["session_id"]
        .as_str()
        .ok_or("no session id")?
        .to_string();
    let poi = bari_demo_pack().poi("castello").unwrap().position;
    fetch(
        http.post(format!("{base}/api/session/{sid}/position"))
            .bearer_auth(&token)
            .json(&serde_json::json!({"lat": poi.lat(), "lon": poi.lon(), "t": 0.0})),
    )?;
    for i in 0..3 {
        fetch(
            http.post(format!("{base}/api/session/{sid}/quiz/castello/answer"))
                .bearer_auth(&token)
                .json(&serde_json::json!({"question_index": i, "choice_index": 0})),
        )?;
    }
    fetch(
        http.post(format!("{base}/api/results/castello"))
            .bearer_auth(&token)
            .json(&serde_json::json!({})),
    )?;
    for path in [
        "/api/me",
        "/api/results",
        "/api/leaderboard",
        &format!("/api/session/{sid}"),
    ] {
        fetch(http.get(format!("{base}{path}")).bearer_auth(&token))?;
    }
    ensure!(
        bodies.iter().all(|b| !contains(b, b"correct_index")),
        "a response carries correct_index"
    );

    let authed = [
        ("POST", "/api/logout".to_string()),
        ("GET", "/api/me".to_string()),
        ("POST", "/api/session".to_string()),
        ("GET", format!("/api/session/{sid}")),
        ("POST", format!("/api/session/{sid}/position")),
        ("POST", format!("/api/session/{sid}/quiz/castello/answer")),
        ("GET", "/api/results".to_string()),
        ("POST", "/api/results/castello".to_string()),
        ("GET", "/api/leaderboard".to_string()),
    ];
    for (method, path) in &authed {
        let url = format!("{base}{path}");
        let req = if *method == "GET" {
            http.get(&url)
        } else {
            http.post(&url).json(&serde_json::json!({}))
        };
        let status = req.send().map_err(|e| e.to_string())?.status();
        ensure!(
            status == reqwest::StatusCode::UNAUTHORIZED,
            "{method} {path} gave {status} without a token"
        );
    }

    let store_bytes = std::fs::read(&server.store_path).map_err(|e| e.to_string())?;
    ensure!(
        !contains(&store_bytes, password.as_bytes()),
        "store file holds the plaintext password"
    );
    ensure!(
        !contains(&store_bytes, token.as_bytes()),
        "store file holds a raw token"
    );
    Ok(format!(
        "{} responses scanned, {} authed routes refuse anonymous calls, store file clean",
        bodies.len(),
        authed.len()
    ))
}

fn end_to_end_scenario() -> Check {
    let server = common::TestServer::start();
    let pack = bari_demo_pack();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let route = dir.path().join("route.txt");
    let report_path = dir.path().join("report.json");
    std::fs::write(&route, BARI_DEMO_ROUTE).map_err(|e| e.to_string())?;

    let mut client = ApiClient::new(&server.base_url).map_err(|e| e.to_string())?;
    client
        .register("rider@example.org", "rider", "s3cretpw!")
        .map_err(|e| e.to_string())?;

    let status = Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(["--route", route.to_str().unwrap()])
        .args([
            "--speed", "5", "--period", "1", "--noise", "0", "--seed", "42",
        ])
        .args(["--difficulty", "easy", "--policy", "always-correct"])
        .args([
            "--api",
            &server.base_url,
            "--user",
            "rider",
            "--password",
            "s3cretpw!",
        ])
        .args(["--report", report_path.to_str().unwrap()])
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.code() == Some(0), "simulate exited with {status}");
    let report: SimulationReport =
        serde_json::from_slice(&std::fs::read(&report_path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;

    let fired = &report.triggers_fired;
    ensure!(
        fired.len() == 3 && report.quizzes_completed == 3,
        "report {report:?}"
    );
    let per_quiz: BTreeMap<&str, u64> = fired
        .iter()
        .map(|id| {
            let poi = pack.poi(id).unwrap();
            let n = pack
                .questionnaire(&poi.message_id)
                .unwrap()
                .iter()
                .filter(|q| q.difficulty == Difficulty::Easy)
                .count() as u64;
            (id.as_str(), n * 10)
        })
        .collect();
    let quiz_points: u64 = per_quiz.values().sum();
    ensure!(
        report.total_score == quiz_points,
        "score {} != {quiz_points}",
        report.total_score
    );

    let direct = replay_engine(
        &generate_trace(&parse_route(BARI_DEMO_ROUTE).unwrap(), 5.0, 1.0, 0.0, 42).unwrap(),
        &Scenario::new(Difficulty::Easy, AnswerPolicy::AlwaysCorrect),
        Arc::new(pack.clone()),
    )
    .map_err(|e| e.to_string())?;
    ensure!(direct == report, "direct replay differs: {direct:?}");

    client
        .login("rider", "s3cretpw!")
        .map_err(|e| e.to_string())?;
    let saved = client
        .results()
        .map_err(|e| e.to_string())?
        .iter()
        .filter(|r| r.score.is_some())
        .count();
    ensure!(saved == 3, "{saved} saved results");

    // incentives earned on the way count towards the leaderboard total
    let mut totals = UserTotals {
        total_points: quiz_points,
        quizzes_completed: 3,
        ..UserTotals::default()
    };
    for (id, pts) in &per_quiz {
        *totals
            .topic_points
            .entry(pack.poi(id).unwrap().topic.clone())
            .or_default() += pts;
    }
    let incentives: u64 = evaluate_achievements(&totals, &pack.settings, &Default::default())
        .iter()
        .map(|a| u64::from(a.incentive_points))
        .sum();
    let board = client.leaderboard(10).map_err(|e| e.to_string())?;
    let me = board
        .iter()
        .find(|e| e.username == "rider")
        .ok_or("rider missing from leaderboard")?;
    ensure!(
        me.total_points == quiz_points + incentives,
        "leaderboard {} != {quiz_points} + {incentives}",
        me.total_points
    );
    Ok(format!(
        "exit 0, 3 quizzes, 3 saved, quiz points {quiz_points} (3 x 3 x 10), leaderboard {} with {incentives} incentive points",
        me.total_points
    ))
}

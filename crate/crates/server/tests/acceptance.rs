//! Acceptance gate for the primary components.
//!
//! Runs as a plain binary (no libtest harness) so every criterion prints one
//! `[PASS]`/`[FAIL]` line regardless of output capture. Exits non-zero when
//! any criterion fails or exceeds its time budget.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use chrono::{TimeZone, Utc};
use cuento_core::clock::{FixedClock, SequentialIds};
use cuento_core::gateway::{Gateway, GatewayError, Origin, ResourceKey, ScriptedPort};
use cuento_core::metrics::{
    completion_rates, parse_records, parse_sus_scores, report, sus_mean, time_efficiency, CaseTarget,
};
use cuento_core::pdf::{render_pdf, PdfLayout};
use cuento_core::session::{CardView, SessionError};
use cuento_core::{
    load_catalog, new_session, open_store, validate_sequence, Catalog, FunctionCard, Phase, SequenceCheck,
    SessionConfig, Story, StoryFragment,
};
use http_body_util::BodyExt;
use lopdf::content::Content;
use lopdf::{Document, Object};
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use tower::ServiceExt;

type Check = fn() -> String;

const CRITERIA: &[(&str, Duration, Check)] = &[
    ("ordering rule", Duration::from_secs(5), ordering_rule),
    ("session soundness", Duration::from_secs(10), session_soundness),
    ("offline replay", Duration::from_secs(60), offline_replay),
    ("metrics regression", Duration::from_secs(1), metrics_regression),
    ("pdf validity", Duration::from_secs(30), pdf_validity),
    ("api conformance", Duration::from_secs(60), api_conformance),
];

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let default_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));

    let mut failed = 0;
    let mut ran = 0;
    for (name, budget, check) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(_) if elapsed > *budget => (false, format!("over budget of {budget:?}")),
            Ok(detail) => (true, detail),
            Err(payload) => (false, panic_message(&payload)),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] {name} ({:.2}s, budget {}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    panic::set_hook(default_hook);
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_message(payload: &Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".into())
        .replace('\n', " ")
}

// ---------------------------------------------------------------------------
// ordering rule
// ---------------------------------------------------------------------------

/// Expected outcome computed without the library: the first out-of-range id
/// wins, otherwise the first prefix that differs from its own sorted,
/// deduplicated copy marks the violation.
fn ordering_oracle(deck: u32, ids: &[u32]) -> Result<Option<usize>, usize> {
    if let Some(pos) = ids.iter().position(|&id| !(1..=deck).contains(&id)) {
        return Err(pos);
    }
    for end in 1..=ids.len() {
        let prefix = &ids[..end];
        let mut canon = prefix.to_vec();
        canon.sort_unstable();
        canon.dedup();
        if canon != prefix {
            return Ok(Some(end - 1));
        }
    }
    Ok(None)
}

fn agrees(catalog: &Catalog, ids: &[u32]) -> bool {
    let got = validate_sequence(catalog, ids);
    let want = ordering_oracle(catalog.function_count(), ids);
    match (got, want) {
        (Ok(SequenceCheck::Valid), Ok(None)) => true,
        (Ok(SequenceCheck::Violation { position }), Ok(Some(p))) => position == p,
        (Err(e), Err(p)) => e.position == p && e.id == ids[p],
        _ => false,
    }
}

fn ordering_rule() -> String {
    let catalog = Catalog::builtin();
    let mut rng = StdRng::seed_from_u64(0x0dd5);
    let mut valid = 0;
    for i in 0..10_000 {
        let len = rng.random_range(0..=14);
        let ids: Vec<u32> = match i % 3 {
            // sorted draws: mostly valid, with duplicates now and then
            0 => {
                let mut v: Vec<u32> = (0..len).map(|_| rng.random_range(1..=31)).collect();
                v.sort_unstable();
                v
            }
            1 => (0..len).map(|_| rng.random_range(1..=31)).collect(),
            _ => (0..len).map(|_| rng.random_range(0..=34)).collect(),
        };
        assert!(agrees(&catalog, &ids), "disagreement on {ids:?}");
        valid += usize::from(ordering_oracle(31, &ids) == Ok(None));
    }

    let mut exhaustive = 0;
    let mut frontier: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..=3 {
        let mut next = Vec::new();
        for ids in &frontier {
            assert!(agrees(&catalog, ids), "disagreement on {ids:?}");
            exhaustive += 1;
            for id in 1..=6 {
                let mut longer = ids.clone();
                longer.push(id);
                next.push(longer);
            }
        }
        frontier = next;
    }
    assert_eq!(exhaustive, 1 + 6 + 36 + 216);
    format!("10000 random lists ({valid} valid) and {exhaustive} exhaustive lists agree with the oracle")
}

// ---------------------------------------------------------------------------
// session soundness
// ---------------------------------------------------------------------------

fn small_deck(n: u32) -> Arc<Catalog> {
    let base = Catalog::builtin();
    let functions = (1..=n)
        .map(|id| FunctionCard { id, title: format!("Function {id}"), description: format!("What happens at step {id}.") })
        .collect();
    Arc::new(Catalog::with_deck("deck", functions, base.characters.clone(), base.situations.clone()).unwrap())
}

fn session_soundness() -> String {
    let clock = FixedClock(Utc.with_ymd_and_hms(2024, 3, 1, 12, 0, 0).unwrap());
    let ids = SequentialIds::starting_at(1);

    let deck = small_deck(5);
    let mut seen = std::collections::BTreeSet::new();
    for mask in 0u32..32 {
        let mut s = new_session(deck.clone(), SessionConfig::default())
            .choose_situation(1)
            .unwrap()
            .choose_characters(&[1, 3])
            .unwrap();
        for card in 1..=5 {
            assert!(matches!(s.current_card().unwrap(), CardView::Function(f) if f.id == card));
            s = if mask & (1 << (card - 1)) != 0 {
                s.write_fragment(&format!("text {card}")).unwrap()
            } else {
                s.reject_card().unwrap()
            };
        }
        assert_eq!(s.phase(), Phase::TitleEntry);
        let story = s.set_title("Path").unwrap().finalize(&clock, &ids).unwrap();
        let expected: Vec<u32> = (1..=5).filter(|c| mask & (1 << (c - 1)) != 0).collect();
        assert_eq!(story.function_ids(), expected);
        assert_eq!(validate_sequence(&deck, &story.function_ids()), Ok(SequenceCheck::Valid));
        story.validate(Some(&deck)).unwrap();
        seen.insert(expected);
    }
    assert_eq!(seen.len(), 32);

    let catalog = Arc::new(Catalog::builtin());
    let n = catalog.function_count();
    let mut rng = StdRng::seed_from_u64(0x5e55);
    let mut written_total = 0;
    for _ in 0..1000 {
        let config = SessionConfig { require_ending: rng.random_bool(0.5) };
        let situation = catalog.situations.choose(&mut rng).unwrap().id;
        let mut chars: Vec<u32> = catalog.characters.iter().map(|c| c.id).collect();
        chars.shuffle(&mut rng);
        chars.truncate(rng.random_range(1..=chars.len()));

        let mut s = new_session(catalog.clone(), config);
        assert!(matches!(s.write_fragment("early"), Err(SessionError::WrongPhase { .. })));
        s = s.choose_situation(situation).unwrap().choose_characters(&chars).unwrap();
        let p_write = rng.random_range(0.0..=1.0);
        while s.phase() == Phase::FunctionCards {
            // failed operations leave the session where it was
            if rng.random_bool(0.05) {
                assert_eq!(s.write_fragment("   ").unwrap_err(), SessionError::EmptyText);
                assert!(s.set_title("too soon").is_err());
            }
            let last = s.cursor() == n;
            s = if rng.random_bool(p_write) {
                s.write_fragment(&format!("card {} text", s.cursor())).unwrap()
            } else if last && config.require_ending {
                assert_eq!(s.reject_card().unwrap_err(), SessionError::EndingRequired);
                s.write_fragment("the end").unwrap()
            } else {
                s.reject_card().unwrap()
            };
        }
        let story = s.set_title("Random path").unwrap().finalize(&clock, &ids).unwrap();
        assert_eq!(validate_sequence(&catalog, &story.function_ids()), Ok(SequenceCheck::Valid));
        story.validate(Some(&catalog)).unwrap();
        if config.require_ending {
            assert_eq!(story.function_ids().last(), Some(&n));
        }
        written_total += story.fragments.len();
    }
    format!("32/32 paths on a 5-card deck and 1000 random paths ({written_total} fragments) produce valid stories")
}

// ---------------------------------------------------------------------------
// offline replay
// ---------------------------------------------------------------------------

const SHELL: &[(&str, &[u8])] = &[
    ("index.html", include_bytes!("../assets/index.html")),
    ("manifest.webmanifest", include_bytes!("../assets/manifest.webmanifest")),
    ("sw.js", include_bytes!("../assets/sw.js")),
    ("icons/icon-192.png", include_bytes!("../assets/icons/icon-192.png")),
    ("icons/icon-512.png", include_bytes!("../assets/icons/icon-512.png")),
];

fn offline_replay() -> String {
    let cache_dir = tempfile::tempdir().unwrap();
    let library_dir = tempfile::tempdir().unwrap();
    let builtin = Catalog::builtin();

    let mut port = ScriptedPort::new().with_resource("catalog", Catalog::builtin_source().as_bytes().to_vec());
    let mut keys = vec![ResourceKey::new("catalog").unwrap()];
    for (name, bytes) in SHELL {
        port = port.with_resource(name, bytes.to_vec());
        keys.push(ResourceKey::new(*name).unwrap());
    }
    for s in &builtin.situations {
        port = port.with_resource(&s.image_ref, format!("image for {}", s.id).into_bytes());
        keys.push(ResourceKey::new(&s.image_ref).unwrap());
    }
    let port = Arc::new(port);
    let gateway = Gateway::persistent(port.clone(), cache_dir.path()).unwrap();

    let warm = gateway.warm(&keys);
    assert!(warm.failed.is_empty(), "warm-up failed: {:?}", warm.failed);
    let fetched_online = port.total_fetches();

    let mut offline_misses = 0;
    let mut local_hits = 0;
    let mut get = |key: &str| -> Vec<u8> {
        match gateway.get(&ResourceKey::new(key).unwrap()) {
            Ok(hit) => {
                assert_eq!(hit.origin, Origin::Local, "{key} left the cache");
                local_hits += 1;
                hit.data
            }
            Err(GatewayError::OfflineMiss(k)) => {
                offline_misses += 1;
                panic!("offline miss for {k}")
            }
            Err(e) => panic!("{key}: {e}"),
        }
    };

    // the device opens the installed app and starts on the situation screen
    for (name, _) in SHELL {
        get(name);
    }
    let catalog = Arc::new(load_catalog(&get("catalog")).unwrap());
    let prince = catalog.characters.iter().find(|c| c.name == "prince").unwrap().id;
    let donkey = catalog.characters.iter().find(|c| c.name == "donkey").unwrap().id;

    let situation = &catalog.situations[1];
    get(&situation.image_ref);
    let mut s = new_session(catalog.clone(), SessionConfig::default())
        .choose_situation(situation.id)
        .unwrap()
        .choose_characters(&[prince, donkey])
        .unwrap()
        .reject_card()
        .unwrap();
    // the connection drops while the second card is being written
    port.set_online(false);
    s = s.write_fragment("The prince was told never to cross the river.").unwrap();
    while s.cursor() < 5 {
        s = s.reject_card().unwrap();
    }
    s = s.write_fragment("A stranger asked the donkey where the castle was.").unwrap();
    while s.cursor() < 12 {
        s = s.reject_card().unwrap();
    }
    s = s.write_fragment("An old woman put them to the test.").unwrap();
    while s.phase() == Phase::FunctionCards {
        s = s.reject_card().unwrap();
    }
    let clock = FixedClock(Utc.with_ymd_and_hms(2024, 4, 10, 17, 5, 0).unwrap());
    let story = s.set_title("Wonderful Tale 2").unwrap().finalize(&clock, &SequentialIds::starting_at(7)).unwrap();
    assert_eq!(story.function_ids(), vec![2, 5, 12]);

    let store = open_store(library_dir.path()).unwrap();
    store.save_story(&story).unwrap();
    let reopened = open_store(library_dir.path()).unwrap();
    assert_eq!(reopened.get_story(&story.id).unwrap(), story);
    render_pdf(&story, &catalog, &PdfLayout::default()).unwrap();

    // every remaining shell request while offline is still served locally
    for (name, _) in SHELL {
        get(name);
    }
    assert_eq!(offline_misses, 0);
    assert!(!port.is_online());
    let offline_attempts = port.total_fetches() - fetched_online;
    assert_eq!(offline_attempts, 0, "gateway contacted the network after warm-up");

    // control: the network really is gone for anything not cached
    let control = gateway.get(&ResourceKey::new("not-cached.js").unwrap());
    assert!(matches!(control, Err(GatewayError::OfflineMiss(_))), "{control:?}");

    // a restarted client reads the same cache from disk
    let cold = Gateway::persistent(ScriptedPort::new(), cache_dir.path()).unwrap();
    cold.get(&ResourceKey::new("catalog").unwrap()).unwrap();
    drop(cold);

    format!(
        "warmed {} keys, cut the network, completed 7 tasks with {local_hits} local hits and 0 offline misses",
        keys.len()
    )
}

// ---------------------------------------------------------------------------
// metrics regression
// ---------------------------------------------------------------------------

const RECORDS: &str = include_str!("../../../data/usability_records.csv");
const SUS_SCORES: &str = include_str!("../../../data/sus_scores.txt");

/// Published completion columns (without, with) for the first session.
const COMPLETION_1: [(f64, f64); 8] = [
    (75.0, 25.0),
    (91.66, 8.34),
    (90.0, 10.0),
    (90.0, 10.0),
    (90.0, 10.0),
    (58.33, 41.67),
    (90.0, 10.0),
    (90.0, 10.0),
];
const EFFICIENCY_1: [f64; 8] = [0.41, 0.80, 0.47, 0.89, 0.58, 0.29, 0.70, 0.85];
const EFFICIENCY_2: [f64; 8] = [0.72, 0.79, 0.77, 0.93, 0.63, 0.52, 0.85, 0.86];
const TOLERANCE: f64 = 0.01 + 1e-9;

fn metrics_regression() -> String {
    let scores = parse_sus_scores(SUS_SCORES).unwrap();
    assert_eq!(scores.len(), 8);
    assert_eq!(sus_mean(&scores).unwrap(), 80.31);

    let records = parse_records(RECORDS).unwrap();
    let (case1, case2): (Vec<_>, Vec<_>) = records.iter().partition(|r| r.case_id == 1);
    assert_eq!((case1.len(), case2.len()), (8, 8));

    for (rec, (without, with)) in case1.iter().zip(COMPLETION_1) {
        let (w, a) = completion_rates(rec).unwrap();
        assert!((w - without).abs() <= TOLERANCE, "participant {}: {w} vs {without}", rec.participant_id);
        assert!((a - with).abs() <= TOLERANCE, "participant {}: {a} vs {with}", rec.participant_id);
    }
    for rec in &case2 {
        assert_eq!(completion_rates(rec).unwrap(), (100.0, 0.0));
    }

    let target2 = CaseTarget { case_id: 2, target_seconds: 605 };
    let mut matched = 0;
    for (rec, published) in case2.iter().zip(EFFICIENCY_2) {
        let got = time_efficiency(target2, rec.time_seconds).unwrap();
        if rec.participant_id == "6" {
            // 605 / 1341 s; the recorded 0.52 does not follow from the time
            assert_eq!(got, 0.45);
            continue;
        }
        assert!((got - published).abs() <= TOLERANCE, "participant {}: {got} vs {published}", rec.participant_id);
        matched += 1;
    }
    // the recorded session average only holds with 0.45 in place of 0.52
    let with_corrected: f64 =
        EFFICIENCY_2.iter().map(|&e| if e == 0.52 { 0.45 } else { e }).sum::<f64>() / 8.0;
    assert!((with_corrected - 0.75).abs() < 1e-9);

    let target1 = CaseTarget { case_id: 1, target_seconds: 765 };
    let rows_matching = |t: CaseTarget| {
        case1
            .iter()
            .zip(EFFICIENCY_1)
            .filter(|(r, e)| (time_efficiency(t, r.time_seconds).unwrap() - e).abs() <= TOLERANCE)
            .count()
    };
    let at_stated = rows_matching(target1);
    let at_705 = rows_matching(CaseTarget { case_id: 1, target_seconds: 705 });
    assert!(at_stated < 8, "first-session efficiency unexpectedly reproducible");

    let r = report(&records, &[target1, target2], &scores).unwrap();
    assert_eq!(r.cases[0].average.time_seconds, 21 * 60 + 39);
    assert_eq!(r.cases[1].average.time_seconds, 14 * 60 + 3);
    assert_eq!(r.cases[1].average.efficiency, 0.75);
    assert_eq!(r.sus.as_ref().unwrap().mean, 80.31);

    format!(
        "SUS mean 80.31; completion columns match; efficiency matches {matched}/7 rows at 605 s \
         (participant 6 records 0.52, formula gives 0.45); first-session efficiency matches {at_stated}/8 rows \
         at the stated 765 s target ({at_705}/8 at 705 s), not regressed"
    )
}

// ---------------------------------------------------------------------------
// pdf validity
// ---------------------------------------------------------------------------

const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'n', 'o', 'r', 's', 't', 'A', 'M', 'Z', '0', '7', 'á', 'é', 'í', 'ó', 'ú', 'ü', 'ñ',
    'Á', 'É', 'Ñ', '¿', '¡', '(', ')', '\\', '.', ',', ';', ':', '!', '?', '\'', '"', '-', '«', '»',
];

fn fuzz_text(rng: &mut StdRng, max_words: usize) -> String {
    let words = rng.random_range(1..=max_words);
    let mut out = String::new();
    for i in 0..words {
        if i > 0 {
            out.push(if rng.random_bool(0.05) { '\n' } else { ' ' });
        }
        for _ in 0..rng.random_range(1..=14) {
            out.push(*ALPHABET.choose(rng).unwrap());
        }
    }
    out
}

fn fuzz_story(rng: &mut StdRng, i: usize) -> Story {
    let mut ids: Vec<u32> = (1..=31).filter(|_| rng.random_bool(0.3)).collect();
    ids.truncate(12);
    Story {
        id: format!("00000000-0000-4000-8000-{i:012}"),
        title: fuzz_text(rng, 8).replace('\n', " "),
        situation_id: rng.random_range(1..=3),
        character_ids: vec![1, rng.random_range(2..=8)],
        fragments: ids.into_iter().map(|function_id| StoryFragment { function_id, text: fuzz_text(rng, 90) }).collect(),
        created_at: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        finalized: true,
    }
}

fn shown_text(pdf: &[u8]) -> (usize, String) {
    let doc = Document::load_mem(pdf).expect("independent reader parses the file");
    let pages = doc.get_pages();
    let mut shown = Vec::new();
    for page in pages.values() {
        let content = Content::decode(&doc.get_page_content(*page).unwrap()).unwrap();
        for op in content.operations.iter().filter(|op| op.operator == "Tj") {
            match &op.operands[0] {
                // WinAnsi agrees with Latin-1 for every character the fuzzer emits
                Object::String(bytes, _) => shown.push(bytes.iter().map(|&b| char::from(b)).collect::<String>()),
                other => panic!("unexpected Tj operand {other:?}"),
            }
        }
    }
    (pages.len(), shown.join(" "))
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn pdf_validity() -> String {
    let catalog = Catalog::builtin();
    let layout = PdfLayout::default();
    let mut rng = StdRng::seed_from_u64(0x9df);
    let mut pages = 0;
    let mut fragments = 0;
    for i in 0..200 {
        let story = fuzz_story(&mut rng, i);
        let pdf = render_pdf(&story, &catalog, &layout).unwrap();
        assert_eq!(pdf, render_pdf(&story, &catalog, &layout).unwrap(), "story {i} is not deterministic");
        assert!(pdf.starts_with(b"%PDF-1.4") && pdf.ends_with(b"%%EOF"));

        let (n, all) = shown_text(&pdf);
        let all = squash(&all);
        pages += n;
        let mut from = 0;
        for text in std::iter::once(&story.title).chain(story.fragments.iter().map(|f| &f.text)) {
            let needle = squash(text);
            let at = all[from..].find(&needle).unwrap_or_else(|| panic!("story {i}: {needle:?} missing or out of order"));
            from += at + needle.len();
        }
        fragments += story.fragments.len();
    }
    format!("200 fuzzed stories ({fragments} fragments, {pages} pages) parse and round-trip in order; renders are byte-identical")
}

// ---------------------------------------------------------------------------
// api conformance
// ---------------------------------------------------------------------------

async fn call(app: &axum::Router, method: Method, uri: &str, etag: Option<&str>, body: Option<Value>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(tag) = etag {
        req = req.header(header::IF_NONE_MATCH, tag);
    }
    let body = body.map_or_else(Body::empty, |v| Body::from(serde_json::to_vec(&v).unwrap()));
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let (parts, body) = resp.into_parts();
    (parts.status, parts.headers, body.collect().await.unwrap().to_bytes().to_vec())
}

fn error_code(body: &[u8]) -> String {
    let v: Value = serde_json::from_slice(body).expect("error body is JSON");
    assert!(v["status"].is_u64() && v["message"].is_string(), "{v}");
    v["code"].as_str().unwrap().to_owned()
}

fn api_conformance() -> String {
    let dir = tempfile::tempdir().unwrap();
    // no static directory: only the embedded shell is available
    let config = cuento_server::ServiceConfig::new(dir.path());
    let app = cuento_server::router(cuento_server::AppState::from_config(&config).unwrap());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let mut checked = 0;
        let mut expect = |ok: bool, what: &str| {
            assert!(ok, "{what}");
            checked += 1;
        };

        let (st, _, body) = call(&app, Method::GET, "/healthz", None, None).await;
        expect(st == StatusCode::OK && serde_json::from_slice::<Value>(&body).unwrap() == json!({"status":"ok"}), "healthz");

        let (st, h, body) = call(&app, Method::GET, "/api/v1/catalog", None, None).await;
        let etag = h.get(header::ETAG).expect("catalog ETag").to_str().unwrap().to_owned();
        expect(st == StatusCode::OK && load_catalog(&body).is_ok(), "catalog GET");
        let (st, _, body) = call(&app, Method::GET, "/api/v1/catalog", Some(&etag), None).await;
        expect(st == StatusCode::NOT_MODIFIED && body.is_empty(), "conditional catalog GET");
        let (st, _, body) = call(&app, Method::GET, "/api/v1/catalog/functions", None, None).await;
        expect(st == StatusCode::OK && serde_json::from_slice::<Vec<Value>>(&body).unwrap().len() == 31, "functions");
        for part in ["characters", "situations"] {
            let (st, _, _) = call(&app, Method::GET, &format!("/api/v1/catalog/{part}"), None, None).await;
            expect(st == StatusCode::OK, part);
        }
        let (st, _, body) = call(&app, Method::DELETE, "/api/v1/catalog", None, None).await;
        expect(st == StatusCode::METHOD_NOT_ALLOWED && error_code(&body) == "bad_request", "405 on catalog");

        let draft = |ids: &[u32]| {
            json!({
                "title": "Wonderful Story",
                "situation_id": 1,
                "character_ids": [1, 3],
                "fragments": ids.iter().map(|i| json!({"function_id": i, "text": format!("card {i}")})).collect::<Vec<_>>(),
            })
        };
        let (st, _, body) = call(&app, Method::POST, "/api/v1/stories", None, Some(draft(&[5, 2]))).await;
        expect(st == StatusCode::BAD_REQUEST && error_code(&body) == "invalid_story", "[5,2] rejected");

        let (st, h, body) = call(&app, Method::POST, "/api/v1/stories", None, Some(draft(&[1, 3, 10, 19]))).await;
        expect(st == StatusCode::CREATED && h.contains_key(header::LOCATION), "create");
        let created: Value = serde_json::from_slice(&body).unwrap();
        let id = created["id"].as_str().unwrap().to_owned();

        let (st, _, body) = call(&app, Method::GET, "/api/v1/stories", None, None).await;
        let list: Vec<Value> = serde_json::from_slice(&body).unwrap();
        expect(st == StatusCode::OK && list.len() == 1 && list[0] == created, "list");
        let (st, _, body) = call(&app, Method::GET, &format!("/api/v1/stories/{id}"), None, None).await;
        expect(st == StatusCode::OK && serde_json::from_slice::<Value>(&body).unwrap() == created, "get");
        let (st, _, body) = call(&app, Method::POST, "/api/v1/stories", None, Some(created.clone())).await;
        expect(st == StatusCode::CONFLICT && error_code(&body) == "duplicate_id", "duplicate");

        let pdf_uri = format!("/api/v1/stories/{id}/pdf");
        let (st, h, pdf) = call(&app, Method::GET, &pdf_uri, None, None).await;
        expect(st == StatusCode::OK && h[header::CONTENT_TYPE] == "application/pdf", "pdf type");
        expect(h[header::CONTENT_DISPOSITION].to_str().unwrap().starts_with("attachment"), "pdf disposition");
        let (_, _, again) = call(&app, Method::GET, &pdf_uri, None, None).await;
        expect(pdf.starts_with(b"%PDF-1.4") && pdf == again, "pdf deterministic");
        let (_, text) = shown_text(&pdf);
        expect(text.contains("Wonderful Story") && text.contains("card 19"), "pdf content");

        let (st, _, _) = call(&app, Method::DELETE, &format!("/api/v1/stories/{id}"), None, None).await;
        expect(st == StatusCode::NO_CONTENT, "delete");
        for (m, uri) in [(Method::GET, format!("/api/v1/stories/{id}")), (Method::DELETE, format!("/api/v1/stories/{id}")), (Method::GET, pdf_uri)] {
            let (st, _, body) = call(&app, m, &uri, None, None).await;
            expect(st == StatusCode::NOT_FOUND && error_code(&body) == "not_found", "404 after delete");
        }

        let (st, h, body) = call(&app, Method::GET, "/manifest.webmanifest", None, None).await;
        let m: Value = serde_json::from_slice(&body).unwrap();
        expect(st == StatusCode::OK && h[header::CONTENT_TYPE] == "application/manifest+json", "manifest");
        expect(m["display"] == "standalone" && m["start_url"] == "/", "manifest members");
        let (st, h, _) = call(&app, Method::GET, "/sw.js", None, None).await;
        expect(st == StatusCode::OK && h[header::CACHE_CONTROL] == "no-cache", "sw.js");
        let (_, _, index) = call(&app, Method::GET, "/", None, None).await;
        let (st, _, route) = call(&app, Method::GET, "/library", None, None).await;
        expect(st == StatusCode::OK && route == index, "client route fallback");
        let (st, _, body) = call(&app, Method::GET, "/missing.css", None, None).await;
        expect(st == StatusCode::NOT_FOUND && error_code(&body) == "not_found", "missing asset");

        format!("{checked} endpoint checks pass with no frontend build")
    })
}

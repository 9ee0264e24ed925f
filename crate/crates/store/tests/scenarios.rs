use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::thread;

use cascade_core::cascade::{evaluate_cascade, FactorValue};
use cascade_core::Probability;
use cascade_store::{ScenarioDraft, Store, StoreError};
use tempfile::TempDir;

fn one() -> FactorValue {
    FactorValue::Known(Probability::ONE)
}

fn joint(store: &Store, draft: &ScenarioDraft) -> f64 {
    evaluate_cascade(&store.resolve(draft).unwrap())
        .unwrap()
        .joint_odds
        .value()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["models", "scenarios"] {
        for e in fs::read_dir(dir.join(sub)).unwrap() {
            let p = e.unwrap().path();
            out.push((p.display().to_string(), fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn save_and_reload() {
    let tmp = TempDir::new().unwrap();
    let store = Store::open(tmp.path()).unwrap();
    let saved = store
        .save_scenario(ScenarioDraft::new("tagi-2043").with("robots", one()))
        .unwrap();

    // a fresh store over the same directory sees the same scenario
    let reopened = Store::open(tmp.path()).unwrap();
    let loaded = reopened.scenario(&saved.id).unwrap();
    assert_eq!(loaded, saved);
    let j = joint(&reopened, &loaded.draft());
    let base = 0.60 * 0.40 * 0.16 * 0.60 * 0.46 * 0.70 * 0.90 * 0.70 * 0.90 * 0.95;
    assert!((j - base / 0.60).abs() < 1e-15);
    assert!((j - 0.006_660).abs() < 5e-7);

    assert_eq!(reopened.list_scenarios().unwrap(), vec![saved.clone()]);

    let empty = store
        .save_scenario(ScenarioDraft::new("tagi-2043"))
        .unwrap();
    let base_joint = evaluate_cascade(&store.model("tagi-2043").unwrap().model)
        .unwrap()
        .joint_odds
        .value();
    assert_eq!(joint(&store, &empty.draft()), base_joint);
    assert_eq!(store.list_scenarios().unwrap().len(), 2);
}

#[test]
fn save_errors() {
    let tmp = TempDir::new().unwrap();
    let store = Store::open(tmp.path()).unwrap();
    assert!(matches!(
        store.save_scenario(ScenarioDraft::new("nope")),
        Err(StoreError::NotFound { kind: "model", .. })
    ));
    assert!(matches!(
        store.save_scenario(ScenarioDraft::new("tagi-2043").with("bogus", one())),
        Err(StoreError::Cascade(_))
    ));
    let draft = ScenarioDraft::new("tagi-2043").with("war", one());
    store.save_scenario(draft.clone()).unwrap();
    assert!(matches!(
        store.save_scenario(draft),
        Err(StoreError::Conflict(_))
    ));
    assert!(matches!(
        Store::bundled_only().save_scenario(ScenarioDraft::new("tagi-2043")),
        Err(StoreError::ReadOnly)
    ));
    assert!(store.scenario("../../etc").unwrap_err().is_not_found());
    assert!(store.scenario("abcdef012345").unwrap_err().is_not_found());
}

#[test]
fn concurrent_saves_of_one_scenario_do_not_interleave() {
    let tmp = TempDir::new().unwrap();
    let store = Arc::new(Store::open(tmp.path()).unwrap());
    let draft = ScenarioDraft::new("tagi-2043").with("pandemics", one());
    let handles: Vec<_> = (0..16)
        .map(|_| {
            let store = Arc::clone(&store);
            let draft = draft.clone();
            thread::spawn(move || store.save_scenario(draft))
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(results.iter().filter(|r| r.is_ok()).count(), 1);
    assert!(results
        .iter()
        .filter_map(|r| r.as_ref().err())
        .all(|e| matches!(e, StoreError::Conflict(_))));
    let files: Vec<_> = fs::read_dir(tmp.path().join("scenarios"))
        .unwrap()
        .collect();
    assert_eq!(files.len(), 1);
    assert_eq!(store.list_scenarios().unwrap().len(), 1);
}

#[test]
fn saves_never_touch_models_and_reads_touch_nothing() {
    let tmp = TempDir::new().unwrap();
    let store = Store::open(tmp.path()).unwrap();
    let before_model = store.model("tagi-2043").unwrap();
    store
        .save_scenario(ScenarioDraft::new("tagi-2043").with("algorithms", one()))
        .unwrap();
    assert_eq!(store.model("tagi-2043").unwrap(), before_model);

    let snap = snapshot(tmp.path());
    store.list_models().unwrap();
    store.list_scenarios().unwrap();
    store.resolve(&ScenarioDraft::new("tagi-2100")).unwrap();
    assert_eq!(snapshot(tmp.path()), snap);
}

#[test]
fn user_models_and_corruption() {
    let tmp = TempDir::new().unwrap();
    let store = Store::open(tmp.path()).unwrap();
    let mut doc = store.model("tagi-2100").unwrap();
    doc.id = "mine".into();
    fs::write(tmp.path().join("models/mine.model"), doc.to_json()).unwrap();
    let ids: Vec<_> = store
        .list_models()
        .unwrap()
        .into_iter()
        .map(|s| s.id)
        .collect();
    assert_eq!(ids, ["tagi-2043", "tagi-2100", "mine"]);
    assert_eq!(store.model("mine").unwrap(), doc);

    // a user file cannot shadow a bundled id
    let mut shadow = doc.clone();
    shadow.id = "tagi-2043".into();
    fs::write(tmp.path().join("models/shadow.model"), shadow.to_json()).unwrap();
    assert!(matches!(
        store.list_models(),
        Err(StoreError::DuplicateModel { .. })
    ));
    fs::remove_file(tmp.path().join("models/shadow.model")).unwrap();

    fs::write(tmp.path().join("models/broken.model"), "{ not json").unwrap();
    assert!(matches!(
        store.list_models(),
        Err(StoreError::Document { .. })
    ));
}

#[test]
fn reference_dir_replaces_bundled_models() {
    let tmp = TempDir::new().unwrap();
    for (name, text) in cascade_store::bundled::FILES {
        fs::write(tmp.path().join(name), text).unwrap();
    }
    let store = Store::bundled_only()
        .with_reference_dir(tmp.path())
        .unwrap();
    assert!(store.model("tagi-2043").is_ok());

    fs::write(
        tmp.path().join("tagi-2043.model"),
        "{\"schema_version\": 1,",
    )
    .unwrap();
    let err = Store::bundled_only()
        .with_reference_dir(tmp.path())
        .unwrap_err();
    assert!(matches!(err, StoreError::Document { .. }), "{err}");
}

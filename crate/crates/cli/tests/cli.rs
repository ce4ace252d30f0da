mod common;

use std::collections::{BTreeMap, HashSet};
use std::fs;

use common::*;
use semtype::annotation::load_annotations;
use semtype::filter::read_linked;
use semtype::lexicon::normalized_key;
use semtype::metrics::{evaluate, EvalReport};
use semtype::{Lexicon, TypeMap};

fn link(dir: &std::path::Path, candidates: &std::path::Path, mode: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(format!("linked-{mode}.jsonl"));
    let lexicon = data("toy_lexicon.tsv");
    let mut args = vec![
        "link",
        "--candidates",
        p(candidates),
        "--mode",
        mode,
        "--lexicon",
        p(&lexicon),
        "--out",
        p(&out),
    ];
    args.extend_from_slice(extra);
    ok(run(args));
    out
}

fn train_fixture(dir: &std::path::Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut args = vec![
        "train".to_string(),
        "--corpus".into(),
        p(&data("fixture_gold.jsonl")).into(),
        "--docs".into(),
        p(&data("fixture_docs.jsonl")).into(),
        "--lexicon".into(),
        p(&data("toy_lexicon.tsv")).into(),
        "--hash-dim".into(),
        "4096".into(),
        "--epochs".into(),
        "3".into(),
        "--model-out".into(),
        p(&out).into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    ok(run(args));
    out
}

#[test]
fn annotate_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = annotate_fixture(dir.path(), "2");
    let golden = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/annotate_fixture.jsonl");
    assert_eq!(read(&out), fs::read_to_string(golden).unwrap());
}

#[test]
fn annotate_empty_docs_gives_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("empty.jsonl");
    fs::write(&docs, "").unwrap();
    let out = dir.path().join("c.jsonl");
    ok(run([
        "annotate",
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--docs",
        p(&docs),
        "--out",
        p(&out),
    ]));
    assert_eq!(read(&out), "");
}

#[test]
fn input_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run([
        "annotate",
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--docs",
        "no/such/file.jsonl",
    ]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no/such/file.jsonl"));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"a\", \"text\": \"x\"}\n{\"id\": 3}\n").unwrap();
    let out = run(["annotate", "--lexicon", p(&data("toy_lexicon.tsv")), "--docs", p(&bad)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.jsonl") && err.contains("line 2"), "{err}");

    assert_eq!(code(&run(["annotate", "--no-such-flag"])), 2);
    assert_eq!(code(&run(["--threads", "0", "annotate"])), 2);
    assert_eq!(code(&run(["--help"])), 0);
}

#[test]
fn train_is_deterministic_and_has_every_group() {
    let dir = tempfile::tempdir().unwrap();
    let a = train_fixture(dir.path(), "a.json", &["--seed", "7"]);
    let b = train_fixture(dir.path(), "b.json", &["--seed", "7", "--threads", "3"]);
    let c = train_fixture(dir.path(), "c.json", &["--seed", "8"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let model: serde_json::Value = serde_json::from_str(&read(&a)).unwrap();
    let groups = model["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 24);
    assert_eq!(groups[0]["weights"].as_array().unwrap().len(), 4096);
}

#[test]
fn fine_tuning_keeps_model_shape() {
    let dir = tempfile::tempdir().unwrap();
    let base = train_fixture(dir.path(), "base.json", &[]);
    let tuned = train_fixture(dir.path(), "tuned.json", &["--model-in", p(&base)]);
    assert_ne!(fs::read(&base).unwrap(), fs::read(&tuned).unwrap());
    let out = run([
        "train",
        "--corpus",
        p(&data("fixture_gold.jsonl")),
        "--docs",
        p(&data("fixture_docs.jsonl")),
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--model-in",
        p(&base),
        "--hash-dim",
        "2048",
        "--model-out",
        p(&dir.path().join("x.json")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_violations_and_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let (gold, docs, lexicon, model) = (
        data("fixture_gold.jsonl"),
        data("fixture_docs.jsonl"),
        data("toy_lexicon.tsv"),
        dir.path().join("m.json"),
    );
    let base = [
        "train",
        "--corpus",
        p(&gold),
        "--docs",
        p(&docs),
        "--lexicon",
        p(&lexicon),
        "--model-out",
        p(&model),
    ];
    let with = |extra: &[&str]| run(base.iter().copied().chain(extra.iter().copied()));
    assert_eq!(code(&with(&["--hash-dim", "1000"])), 2);
    assert_eq!(code(&with(&["--epochs", "0"])), 2);
    assert_eq!(code(&with(&["--lr", "-1"])), 2);
    // an absurd step size overflows the loss: a runtime failure, not bad input
    assert_eq!(code(&with(&["--hash-dim", "1024", "--lr", "1e308", "--l2", "0"])), 1);
}

#[test]
fn tune_writes_a_threshold_per_group() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_fixture(dir.path(), "m.json", &[]);
    let out = dir.path().join("t.json");
    let stdout = ok(run([
        "tune",
        "--corpus",
        p(&data("fixture_gold.jsonl")),
        "--docs",
        p(&data("fixture_docs.jsonl")),
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--model",
        p(&model),
        "--out",
        p(&out),
    ]))
    .stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("PR-AUC"));
    let t: BTreeMap<String, f64> = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(t.len(), 24);
    assert!(t.values().all(|&v| v > 0.0 && v < 1.0));
    assert!(t
        .keys()
        .map(String::as_str)
        .eq(TypeMap::bundled().groups().iter().map(String::as_str)));

    let bad = run([
        "tune",
        "--corpus",
        p(&data("fixture_gold.jsonl")),
        "--docs",
        p(&data("fixture_docs.jsonl")),
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--model",
        p(&model),
        "--grid",
        "0.2,1.5",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn mode_none_is_rank_one_passthrough() {
    let dir = tempfile::tempdir().unwrap();
    let cands = annotate_fixture(dir.path(), "1");
    let linked = link(dir.path(), &cands, "none", &[]);
    let before = lines(&cands);
    let after = lines(&linked);
    assert_eq!(before.len(), after.len());
    for (b, a) in before.iter().zip(&after) {
        assert_eq!(a["chosen_cui"], b["candidates"][0]["cui"]);
        assert_eq!(a["candidates"], b["candidates"]);
        assert_eq!(a["pre_filter_size"], a["post_filter_size"]);
    }
}

#[test]
fn oracle_mode_needs_gold() {
    let dir = tempfile::tempdir().unwrap();
    let cands = annotate_fixture(dir.path(), "1");
    for mode in ["oracle-coarse", "oracle-fine"] {
        let out = run([
            "link",
            "--candidates",
            p(&cands),
            "--mode",
            mode,
            "--lexicon",
            p(&data("toy_lexicon.tsv")),
        ]);
        assert_eq!(code(&out), 2, "{mode}");
    }
    let out = run([
        "link",
        "--candidates",
        p(&cands),
        "--mode",
        "predicted",
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
    ]);
    assert_eq!(code(&out), 2);
    let out = run([
        "link",
        "--candidates",
        p(&cands),
        "--mode",
        "sideways",
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn oracle_coarse_does_not_lower_f1() {
    let dir = tempfile::tempdir().unwrap();
    let cands = annotate_fixture(dir.path(), "1");
    let gold = data("fixture_gold.jsonl");
    let none = link(dir.path(), &cands, "none", &[]);
    let coarse = link(dir.path(), &cands, "oracle-coarse", &["--gold", p(&gold)]);
    let gold = load_annotations(&gold).unwrap();
    let f1 = |path: &std::path::Path| {
        let linked = read_linked(fs::read(path).unwrap().as_slice()).unwrap();
        semtype::metrics::exact_f1(&linked, &gold).f1
    };
    assert!(f1(&coarse) >= f1(&none));
}

#[test]
fn imported_scores_link_like_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let cands = annotate_fixture(dir.path(), "1");
    let model = train_fixture(dir.path(), "m.json", &[]);
    let scores = dir.path().join("scores.jsonl");
    ok(run([
        "predict-types",
        "--model",
        p(&model),
        "--docs",
        p(&data("fixture_docs.jsonl")),
        "--candidates",
        p(&cands),
        "--out",
        p(&scores),
    ]));
    assert_eq!(lines(&scores).len(), lines(&cands).len());
    let docs = p(&data("fixture_docs.jsonl")).to_string();
    let via_model = link(
        dir.path(),
        &cands,
        "predicted",
        &["--model", p(&model), "--docs", &docs],
    );
    let via_model = read(&via_model);
    let via_scores = link(dir.path(), &cands, "predicted", &["--scores", p(&scores)]);
    assert_eq!(via_model, read(&via_scores));
    assert!(via_model.lines().any(|l| l.contains("\"predicted_groups\":[\"")));
}

#[test]
fn evaluate_perfect_and_self_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let gold = load_annotations(data("fixture_gold.jsonl")).unwrap();
    let perfect = dir.path().join("perfect.jsonl");
    let body: String = gold
        .iter()
        .map(|g| {
            let c = serde_json::json!({"cui": g.cui, "score": 1.0, "rank": 1});
            serde_json::json!({
                "doc_id": g.doc_id, "start": g.start, "end": g.end, "surface": "",
                "chosen_cui": g.cui, "predicted_groups": [], "pre_filter_size": 1,
                "post_filter_size": 1, "candidates": [c],
            })
            .to_string()
                + "\n"
        })
        .collect();
    fs::write(&perfect, body).unwrap();
    let json = dir.path().join("r.json");
    let out = ok(run([
        "evaluate",
        "--pred",
        p(&perfect),
        "--gold",
        p(&data("fixture_gold.jsonl")),
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--compare",
        p(&perfect),
        "--bootstrap",
        "200",
        "--json",
        p(&json),
    ]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("exact"));
    let r: EvalReport = serde_json::from_str(&read(&json)).unwrap();
    assert_eq!((r.exact_f1, r.partial_f1), (1.0, 1.0));
    assert!(r.per_group_f1.values().all(|&v| v == 1.0));
    assert_eq!(r.bootstrap_p, Some(1.0));
}

#[test]
fn evaluate_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let cands = annotate_fixture(dir.path(), "1");
    let gold_path = data("fixture_gold.jsonl");
    let coarse = link(dir.path(), &cands, "oracle-coarse", &["--gold", p(&gold_path)]);
    let json = dir.path().join("r.json");
    ok(run([
        "evaluate",
        "--pred",
        p(&coarse),
        "--gold",
        p(&gold_path),
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--candidates",
        p(&cands),
        "--json",
        p(&json),
    ]));
    let cli: EvalReport = serde_json::from_str(&read(&json)).unwrap();
    let lexicon = Lexicon::load(data("toy_lexicon.tsv")).unwrap();
    let linked = read_linked(fs::read(&coarse).unwrap().as_slice()).unwrap();
    let before = semtype::matcher::read_candidate_sets(fs::read(&cands).unwrap().as_slice()).unwrap();
    let gold = load_annotations(&gold_path).unwrap();
    let (lib, _) = evaluate(&linked, &gold, &lexicon, &TypeMap::bundled(), Some(&before)).unwrap();
    assert_eq!(cli, lib);
}

#[test]
fn distant_corpus_is_sound_and_audited() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("silver.jsonl");
    let res = ok(run([
        "build-corpus",
        "--mode",
        "distant",
        "--docs",
        p(&data("headed_docs.jsonl")),
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--out",
        p(&out),
        "--audit-gold",
        p(&data("headed_gold.jsonl")),
    ]));
    let docs: BTreeMap<String, serde_json::Value> = read(&data("headed_docs.jsonl"))
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .map(|d| (d["id"].as_str().unwrap().to_string(), d))
        .collect();
    let silver = lines(&out);
    assert!(!silver.is_empty());
    for a in &silver {
        let doc = &docs[a["doc_id"].as_str().unwrap()];
        let text: Vec<char> = doc["text"].as_str().unwrap().chars().collect();
        let (s, e) = (
            a["start"].as_u64().unwrap() as usize,
            a["end"].as_u64().unwrap() as usize,
        );
        let surface: String = text[s..e].iter().collect();
        let heading_match =
            doc["headings"].as_array().unwrap().iter().any(|h| {
                h["cui"] == a["cui"] && normalized_key(h["name"].as_str().unwrap()) == normalized_key(&surface)
            });
        assert!(heading_match, "{a}");
        assert_eq!(a["provenance"], "distant");
    }

    // audit against a hand-rolled recount
    let gold = load_annotations(data("headed_gold.jsonl")).unwrap();
    let silver_keys: HashSet<(String, u64, u64, String)> = silver
        .iter()
        .map(|a| {
            (
                a["doc_id"].as_str().unwrap().into(),
                a["start"].as_u64().unwrap(),
                a["end"].as_u64().unwrap(),
                a["cui"].as_str().unwrap().into(),
            )
        })
        .collect();
    let hits = gold
        .iter()
        .filter(|g| silver_keys.contains(&(g.doc_id.clone(), g.start as u64, g.end as u64, g.cui.clone())))
        .count();
    let audit: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(audit["precision"], 1.0);
    assert_eq!(audit["recall"].as_f64().unwrap(), hits as f64 / gold.len() as f64);
}

#[test]
fn crosswalk_maps_links() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("silver.jsonl");
    ok(run([
        "build-corpus",
        "--mode",
        "crosswalk",
        "--docs",
        p(&data("linked_docs.jsonl")),
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--crosswalk",
        p(&data("crosswalk.tsv")),
        "--out",
        p(&out),
    ]));
    let table: BTreeMap<String, String> = read(&data("crosswalk.tsv"))
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('\t').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect();
    let mut expected = HashSet::new();
    for doc in lines(&data("linked_docs.jsonl")) {
        for link in doc["links"].as_array().unwrap() {
            if let Some(cui) = table.get(link["page_key"].as_str().unwrap()) {
                expected.insert((
                    doc["id"].as_str().unwrap().to_string(),
                    link["start"].as_u64().unwrap(),
                    cui.clone(),
                ));
            }
        }
    }
    let got: HashSet<_> = lines(&out)
        .iter()
        .map(|a| {
            (
                a["doc_id"].as_str().unwrap().to_string(),
                a["start"].as_u64().unwrap(),
                a["cui"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    assert_eq!(got, expected);

    let missing = run([
        "build-corpus",
        "--mode",
        "crosswalk",
        "--docs",
        p(&data("linked_docs.jsonl")),
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
    ]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn config_file_and_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# annotate defaults\nlexicon=toy_lexicon.tsv\ndocs = fixture_docs.jsonl\nmax-candidates=1\n",
    )
    .unwrap();
    let out = dir.path().join("c.jsonl");
    ok(semtype()
        .env("LINKER_DATA_DIR", data(""))
        .current_dir(dir.path())
        .args([
            "--config",
            "run.cfg",
            "annotate",
            "--max-candidates",
            "5",
            "--out",
            p(&out),
        ])
        .output()
        .unwrap());
    let golden = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/annotate_fixture.jsonl");
    assert_eq!(read(&out), fs::read_to_string(golden).unwrap());

    ok(semtype()
        .env("LINKER_DATA_DIR", data(""))
        .current_dir(dir.path())
        .args(["--config", "run.cfg", "annotate", "--out", p(&out)])
        .output()
        .unwrap());
    assert!(lines(&out)
        .iter()
        .all(|l| l["candidates"].as_array().unwrap().len() == 1));

    fs::write(&cfg, "lexicon toy_lexicon.tsv\n").unwrap();
    let bad = semtype()
        .current_dir(dir.path())
        .args(["--config", "run.cfg", "annotate"])
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

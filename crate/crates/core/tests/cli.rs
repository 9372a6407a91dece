mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{planted_corpus, record, results_file, Det, Plant};
use tiam::prompt::PromptDataset;

fn tiam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiam"))
        .args(args)
        .env("TIAM_LOG", "warn")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn template_path(name: &str) -> PathBuf {
    common::data(&format!("templates/{name}.json"))
}

/// Every file under `dir`, by relative path.
fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
    }
    out
}

fn write_results(dir: &Path, records: Vec<tiam::ingest::ImageRecord>) -> PathBuf {
    let p = dir.join("results.json");
    fs::write(&p, results_file(records).to_json().unwrap()).unwrap();
    p
}

#[test]
fn generate_writes_count_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds.json");
    let o = tiam(&["generate", "--template", s(&template_path("two_objects_24")), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ds = PromptDataset::load(&out).unwrap();
    assert_eq!(ds.count, 552);
    assert_eq!(ds.prompts.len(), 552);

    let o = tiam(&["generate", "--template", s(&template_path("objects_1")), "--output-dir", s(dir.path())]);
    assert!(o.status.success());
    assert_eq!(PromptDataset::load(dir.path().join("dataset.json")).unwrap().count, 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::dataset("objects_1");
    let pid = ds.prompts[0].prompt_id.clone();
    let good = write_results(dir.path(), vec![record(&pid, 0, vec![Det::new("car")])]);
    let t = template_path("objects_1");
    let o = tiam(&["validate", "--template", s(&t), "--results", s(&good)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(&good).unwrap().replace("\"prompt_id\": \"", "\"prompt_id\": \"x");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, text).unwrap();
    let o = tiam(&["validate", "--template", s(&t), "--results", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("record 0"));

    let o = tiam(&["validate", "--results", s(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(tiam(&["score", "--bogus"]).status.code(), Some(1));
    assert_eq!(tiam(&["--help"]).status.code(), Some(0));
}

#[test]
fn under_sampled_prompt_is_warned_once() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::dataset("objects_1");
    let plant = Plant { presence: vec![0.7], ..Default::default() };
    let (mut records, _) = planted_corpus(&ds, &(0..32).collect::<Vec<_>>(), &plant, 1);
    let out = dir.path().join("out");
    let t = template_path("objects_1");

    let full = write_results(dir.path(), records.clone());
    let o = tiam(&["score", "--template", s(&t), "--results", s(&full), "--output-dir", s(&out)]);
    assert!(o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).contains("WARN"), "{}", String::from_utf8_lossy(&o.stderr));

    let short = &ds.prompts[2].prompt_id;
    records.retain(|r| &r.prompt_id != short || r.seed < 16);
    let partial = write_results(dir.path(), records);
    let o = tiam(&["score", "--template", s(&t), "--results", s(&partial), "--output-dir", s(&out)]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    let under: Vec<_> = err.lines().filter(|l| l.contains("fewer than 32")).collect();
    assert_eq!(under.len(), 1, "{err}");
    assert!(under[0].contains(short.as_str()));
}

#[test]
fn seeds_and_mds_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::dataset("objects_1");
    let plant = Plant { seed_rate: Some([(5, 0.9), (6, 0.1)].into_iter().collect()), ..Default::default() };
    let (records, _) = planted_corpus(&ds, &[5, 6], &plant, 9);
    // make the split exact
    let records: Vec<_> = records
        .into_iter()
        .map(|r| {
            let label = ds.prompts.iter().find(|p| p.prompt_id == r.prompt_id).unwrap().ground_truth[0].object.clone();
            let dets = if r.seed == 5 { vec![Det::new(&label)] } else { vec![] };
            record(&r.prompt_id, r.seed, dets)
        })
        .collect();
    let res = write_results(dir.path(), records);
    let out = dir.path().join("out");
    let t = template_path("objects_1");
    assert!(tiam(&["score", "--template", s(&t), "--results", s(&res), "--output-dir", s(&out)]).status.success());
    assert!(tiam(&["seeds", "-k", "1", "--output-dir", s(&out)]).status.success());
    assert_eq!(fs::read_to_string(out.join("best_seeds.txt")).unwrap(), "5\n");
    assert_eq!(fs::read_to_string(out.join("worst_seeds.txt")).unwrap(), "6\n");
    assert_eq!(tiam(&["seeds", "-k", "3", "--output-dir", s(&out)]).status.code(), Some(1));

    let m = dir.path().join("eq.csv");
    fs::write(&m, "label,a,b,c\na,0,1,1\nb,1,0,1\nc,1,1,0\n").unwrap();
    let mds = dir.path().join("mds");
    assert!(tiam(&["mds", "--matrix", s(&m), "--output-dir", s(&mds)]).status.success());
    let csv = fs::read_to_string(mds.join("embedding.csv")).unwrap();
    let pts: Vec<[f64; 2]> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
            [f[0], f[1]]
        })
        .collect();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
        assert!((d - 1.0).abs() < 1e-6);
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::dataset("objects_1");
    let pid = ds.prompts[0].prompt_id.clone();
    let label = ds.prompts[0].ground_truth[0].object.clone();
    write_results(dir.path(), vec![record(&pid, 0, vec![Det::new(&label).conf(0.5)])]);
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "template_path = \"{}\"\nresults_path = \"results.json\"\noutput_dir = \"out\"\nconfidence_threshold = 0.6\nmin_images_per_prompt = 1\n",
            s(&template_path("objects_1"))
        ),
    )
    .unwrap();
    let outcomes = || fs::read_to_string(dir.path().join("out/outcomes.jsonl")).unwrap();
    assert!(tiam(&["--config", s(&cfg), "score"]).status.success());
    assert!(outcomes().contains(&format!("\"prompt_id\":\"{pid}\",\"seed\":0,\"success\":0")));
    assert!(tiam(&["--config", s(&cfg), "score", "--confidence-threshold", "0.4"]).status.success());
    assert!(outcomes().contains(&format!("\"prompt_id\":\"{pid}\",\"seed\":0,\"success\":1")));
}

#[test]
fn pipeline_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let t = template_path("colored_2");
    let ds = common::dataset("colored_2");
    let plant = Plant {
        presence: vec![0.9, 0.7],
        binding: [("red".to_string(), 0.5)].into_iter().collect(),
        distractor: true,
        ..Default::default()
    };
    let (records, _) = planted_corpus(&ds, &[1, 2, 3, 4], &plant, 21);
    let res = write_results(dir.path(), records);
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = s(&out).to_string();
        let ds_path = out.join("dataset.json");
        for args in [
            vec!["generate", "--template", s(&t), "--output-dir", &o],
            vec!["score", "--dataset", s(&ds_path), "--results", s(&res), "--output-dir", &o, "--threads", threads],
            vec!["report", "--dataset", s(&ds_path), "--output-dir", &o],
            vec!["seeds", "-k", "2", "--output-dir", &o],
        ] {
            let r = tiam(&args);
            assert!(r.status.success(), "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
        }
        tree(&out)
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(a.contains_key("table_1.csv") && a.contains_key("best_seeds.txt"));
}

use std::fs;
use std::path::{Path, PathBuf};

use noiseflood::audio::{save_wav, AudioSignal};
use noiseflood::model::ModelFile;
use noiseflood_cli::{run_from, EXIT_CLASSIFIER, EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL};

fn run(args: &[&str]) -> u8 {
    run_from(std::iter::once("noiseflood").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small synthetic train/test split scored with a coarse step.
struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let f = Self { dir };
        let n = n.to_string();
        for (name, seed) in [("train", "1"), ("test", "2")] {
            let out = f.path(name);
            assert_eq!(run(&["synth", "--out", p(&out), "--fragile", &n, "--robust", &n, "--seed", seed]), EXIT_OK);
            let scores = f.path(&format!("{name}.csv"));
            let manifest = out.join("manifest.csv");
            let code = run(&[
                "score", "--manifest", p(&manifest), "--seed", "5", "--step", "250", "--out", p(&scores),
            ]);
            assert_eq!(code, EXIT_OK);
        }
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn train(&self, kind: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(&format!("{kind}{}.json", extra.join("")));
        let scores = self.path("train.csv");
        let mut args = vec!["train", "--scores", p(&scores), "--kind", kind, "--out", p(&out)];
        args.extend_from_slice(extra);
        assert_eq!(run(&args), EXIT_OK);
        out
    }
}

#[test]
fn full_pipeline_writes_reports() {
    let f = Fixture::new(10);
    let reports = f.path("reports");
    let test = f.path("test.csv");
    for kind in ["majority", "ltv", "tree", "forest", "adaboost", "gboost"] {
        let model = f.train(kind, &[]);
        assert_eq!(run(&["eval", "--model", p(&model), "--scores", p(&test), "--out", p(&reports)]), EXIT_OK);
    }
    let cmp = fs::read_to_string(reports.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = cmp.lines().collect();
    assert_eq!(lines[0], "method,precision,recall,f1");
    assert_eq!(lines.len(), 7, "{cmp}");
    // re-evaluating a method replaces its row
    let gb = f.path("gboost.json");
    assert_eq!(run(&["eval", "--model", p(&gb), "--scores", p(&test), "--out", p(&reports)]), EXIT_OK);
    assert_eq!(fs::read_to_string(reports.join("comparison.csv")).unwrap(), cmp);

    let report = fs::read_to_string(reports.join("gboost.report.txt")).unwrap();
    assert!(report.contains("seed: 5"), "{report}");
    let matrix = fs::read_to_string(reports.join("gboost.matrix.csv")).unwrap();
    let header: Vec<&str> = matrix.lines().next().unwrap().split(',').collect();
    for (i, row) in matrix.lines().skip(1).enumerate() {
        // no example has the same source and target
        assert_eq!(row.split(',').nth(i + 1), Some(""), "{matrix}");
    }
    assert_eq!(header.len(), 5);
}

#[test]
fn threshold_training_on_separable_scores() {
    let f = Fixture::new(10);
    let model = ModelFile::load(&f.train("threshold", &[])).unwrap();
    let noiseflood::model::DetectorModel::Threshold(t) = &model.detector else { panic!() };
    // unfiltered scores separate the synthetic kinds completely
    assert!((t.stats.info_gain - 1.0).abs() < 1e-12, "{:?}", t.stats);
    assert_eq!(model.provenance.step, 250);
    assert_eq!(model.provenance.seed, 5);
    assert_eq!(model.provenance.training_rows, 20);
    assert_eq!(model.provenance.dataset_sha256.len(), 64);
}

#[test]
fn scoring_is_reproducible_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    assert_eq!(run(&["synth", "--out", p(&data), "--fragile", "6", "--robust", "6", "--seed", "9"]), EXIT_OK);
    let m = data.join("manifest.csv");
    let outs: Vec<Vec<u8>> = ["1", "8", "8"]
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let out = dir.path().join(format!("s{i}.csv"));
            let code = run(&["score", "--manifest", p(&m), "--seed", "3", "--step", "250", "--workers", w, "--out", p(&out)]);
            assert_eq!(code, EXIT_OK);
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[1], outs[2]);

    let other = dir.path().join("other.csv");
    assert_eq!(run(&["score", "--manifest", p(&m), "--seed", "4", "--step", "250", "--out", p(&other)]), EXIT_OK);
    assert_ne!(fs::read(other).unwrap(), outs[0]);
}

#[test]
fn band_subset_and_bad_bands() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    assert_eq!(run(&["synth", "--out", p(&data), "--fragile", "2", "--robust", "2", "--seed", "9"]), EXIT_OK);
    let m = data.join("manifest.csv");
    let out = dir.path().join("s.csv");
    let args = ["score", "--manifest", p(&m), "--seed", "1", "--step", "500", "--out", p(&out), "--bands"];
    let with = |b: &str| {
        let mut a = args.to_vec();
        a.push(b);
        run(&a)
    };
    assert_eq!(with("2000-4000,unfiltered"), EXIT_OK);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# bands: unfiltered,2000-4000"), "{text}");
    let row = text.lines().find(|l| l.starts_with("fragile_0000")).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert!(!cols[5].is_empty() && cols[6].is_empty() && !cols[7].is_empty() && cols[8].is_empty());

    fs::remove_file(&out).unwrap();
    assert_eq!(with("0-2000,0-2000"), EXIT_CONFIG);
    assert_eq!(with("100-2000"), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn unreadable_row_gives_partial_exit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    assert_eq!(run(&["synth", "--out", p(&data), "--fragile", "2", "--robust", "1", "--seed", "9"]), EXIT_OK);
    fs::write(data.join("wav/fragile_0001.wav"), b"garbage").unwrap();
    let out = dir.path().join("s.csv");
    let m = data.join("manifest.csv");
    assert_eq!(run(&["score", "--manifest", p(&m), "--seed", "1", "--step", "500", "--out", p(&out)]), EXIT_PARTIAL);
    let text = fs::read_to_string(out).unwrap();
    assert!(text.contains("fragile_0000") && text.contains("robust_0002") && !text.contains("fragile_0001"));
}

#[test]
fn classifier_spawn_failure_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    assert_eq!(run(&["synth", "--out", p(&data), "--fragile", "1", "--robust", "1", "--seed", "9"]), EXIT_OK);
    let out = dir.path().join("s.csv");
    let m = data.join("manifest.csv");
    let code = run(&["score", "--manifest", p(&m), "--seed", "1", "--classifier", "exec:/no/such/classifier", "--out", p(&out)]);
    assert_eq!(code, EXIT_CLASSIFIER);
    assert!(!out.exists());
}

#[test]
fn configuration_errors() {
    let f = Fixture::new(4);
    let model = f.train("gboost", &[]);
    let wav = f.path("train/wav/fragile_0000.wav");
    let verdicts = f.path("v.csv");
    let detect = |extra: &[&str]| {
        let mut a = vec!["detect", "--model", p(&model), "--wav", p(&wav), "--seed", "1", "--out", p(&verdicts)];
        a.extend_from_slice(extra);
        run(&a)
    };
    assert_eq!(detect(&["--step", "50"]), EXIT_CONFIG);
    assert_eq!(detect(&["--eps-max", "3000"]), EXIT_CONFIG);
    assert!(!verdicts.exists());
    assert_eq!(detect(&["--step", "250"]), EXIT_OK);

    // step outside [1, eps_max]
    let m = f.path("train/manifest.csv");
    let out = f.path("x.csv");
    assert_eq!(run(&["score", "--manifest", p(&m), "--seed", "1", "--step", "0", "--out", p(&out)]), EXIT_CONFIG);
    assert_eq!(run(&["score", "--manifest", p(&m), "--seed", "1", "--step", "3000", "--out", p(&out)]), EXIT_CONFIG);
    // missing seed is a usage error
    assert_eq!(run(&["score", "--manifest", p(&m), "--out", p(&out)]), EXIT_CONFIG);

    // test scores computed with a different step
    let coarse = f.path("coarse.csv");
    let tm = f.path("test/manifest.csv");
    assert_eq!(run(&["score", "--manifest", p(&tm), "--seed", "1", "--step", "500", "--out", p(&coarse)]), EXIT_OK);
    let reports = f.path("r");
    assert_eq!(run(&["eval", "--model", p(&model), "--scores", p(&coarse), "--out", p(&reports)]), EXIT_CONFIG);

    // a corrupted model file
    let broken = f.path("broken.json");
    fs::write(&broken, "{\"format\":\"something-else\"}").unwrap();
    assert_eq!(run(&["detect", "--model", p(&broken), "--wav", p(&wav), "--seed", "1"]), EXIT_CONFIG);
}

#[test]
fn single_class_training_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    assert_eq!(run(&["synth", "--out", p(&data), "--fragile", "0", "--robust", "3", "--seed", "9"]), EXIT_OK);
    let scores = dir.path().join("s.csv");
    let m = data.join("manifest.csv");
    assert_eq!(run(&["score", "--manifest", p(&m), "--seed", "1", "--step", "500", "--out", p(&scores)]), EXIT_OK);
    for kind in ["threshold", "ltv", "tree", "gboost"] {
        let out = dir.path().join(format!("{kind}.json"));
        assert_eq!(run(&["train", "--scores", p(&scores), "--kind", kind, "--out", p(&out)]), EXIT_CONFIG, "{kind}");
        assert!(!out.exists());
    }
}

#[test]
fn silence_is_benign_for_low_band_threshold() {
    let f = Fixture::new(8);
    let model = f.train("threshold", &["--band", "0-2000"]);
    let silence = f.path("silence.wav");
    save_wav(&AudioSignal::new(vec![0; 16_000], 16_000).unwrap(), &silence).unwrap();
    let out = f.path("v.csv");
    for seed in 0..100 {
        let seed = seed.to_string();
        assert_eq!(run(&["detect", "--model", p(&model), "--wav", p(&silence), "--seed", &seed, "--out", p(&out)]), EXIT_OK);
        let text = fs::read_to_string(&out).unwrap();
        let row = text.lines().last().unwrap();
        assert!(row.starts_with("silence,benign,"), "seed {seed}: {row}");
    }
}

#[test]
fn fragile_input_detected() {
    let f = Fixture::new(10);
    let model = f.train("gboost", &[]);
    let manifest = f.path("test/manifest.csv");
    let out = f.path("v.csv");
    assert_eq!(run(&["detect", "--model", p(&model), "--manifest", p(&manifest), "--seed", "8", "--out", p(&out)]), EXIT_OK);
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 20);
    let correct = rows
        .iter()
        .filter(|r| r.starts_with("fragile") == r.contains(",adversarial,"))
        .count();
    assert!(correct >= 18, "{text}");
}

#[test]
fn ltv_and_majority_models_round_trip() {
    let f = Fixture::new(10);
    for kind in ["majority", "ltv", "forest", "adaboost", "tree"] {
        let path = f.train(kind, &[]);
        let text = fs::read_to_string(&path).unwrap();
        let back = ModelFile::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text, "{kind}");
    }
    let ltv = ModelFile::load(&f.path("ltv.json")).unwrap();
    let noiseflood::model::DetectorModel::Ltv(v) = &ltv.detector else { panic!() };
    assert_eq!(v.members.len(), 5);
    assert_eq!(v.training_f1.len(), 5);
}

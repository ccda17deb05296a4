use std::path::Path;
use std::process::{Command, Output};

use eegclf::harness::{DataSource, ExperimentConfig, SyntheticConfig, CSV_HEADER};
use eegclf::heads::HeadKind;
use eegclf::nn::NetworkKind;

fn eegclf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eegclf"))
        .args(args)
        .env("EEGCLF_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path) -> String {
    let mut cfg = ExperimentConfig {
        network: NetworkKind::Ann,
        heads: vec![HeadKind::Softmax],
        repetitions: 1,
        data: DataSource::Synthetic(SyntheticConfig {
            subjects_per_class: 2,
            channels: 4,
            seconds: 6,
            ..SyntheticConfig::default()
        }),
        ..ExperimentConfig::default()
    };
    cfg.train.epochs = 1;
    let path = dir.join("exp.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_writes_one_pair_per_subject() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let text = stdout(&eegclf(&["synth", "--seconds", "2", "--channels", "2", "--out", out.to_str().unwrap()]));
    assert!(text.contains("wrote 36 streams"));
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 72);
    assert_eq!(names.iter().filter(|n| n.ends_with(".meta.json")).count(), 36);
}

#[test]
fn train_predict_evaluate_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let model = dir.path().join("m.eegm");
    let model = model.to_str().unwrap();
    stdout(&eegclf(&["train", "--config", &config, "--out", model]));

    let data = dir.path().join("data");
    stdout(&eegclf(&[
        "synth", "--subjects", "1", "--channels", "4", "--seconds", "4", "--out", data.to_str().unwrap(),
    ]));
    let stream = std::fs::read_dir(&data)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "eeg"))
        .unwrap();
    let line = stdout(&eegclf(&["predict", "--model", model, "--stream", stream.to_str().unwrap()]));
    let line = line.trim();
    let fields: Vec<&str> = line.split(' ').collect();
    assert_eq!(fields.len(), 3, "{line}");
    let class: usize = fields[0].strip_prefix("class=").unwrap().parse().unwrap();
    assert!(class < 3);
    let probs: Vec<f64> = fields[1]
        .strip_prefix("probs=")
        .unwrap()
        .split(',')
        .map(|p| {
            assert_eq!(p.split('.').nth(1).map(str::len), Some(6), "{p}");
            p.parse().unwrap()
        })
        .collect();
    assert_eq!(probs.len(), 3);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-5);
    assert_eq!(fields[2], "fragments=10");

    let pre = stdout(&eegclf(&["preprocess", "--stream", stream.to_str().unwrap(), "--domain", "frequency"]));
    assert!(pre.contains("domain=frequency fragments=10 shape=4x51"), "{pre}");

    let runs = dir.path().join("runs");
    let csv = stdout(&eegclf(&["evaluate", "--config", &config, "--out", runs.to_str().unwrap()]));
    assert_eq!(csv.lines().next(), Some(CSV_HEADER.trim_end()));
    let report = stdout(&eegclf(&["report", "--in", runs.to_str().unwrap()]));
    assert_eq!(report, csv);
    let md = stdout(&eegclf(&["report", "--in", runs.to_str().unwrap(), "--format", "md"]));
    assert!(md.contains('|'));
}

#[test]
fn failures_exit_nonzero_with_stage() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.eegm");
    let o = eegclf(&["predict", "--model", missing.to_str().unwrap(), "--stream", "x.eeg"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("eegclf: load:"));

    let o = eegclf(&["synth", "--classes", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("eegclf: synth:"));

    let o = eegclf(&["report", "--in", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("eegclf: report:"));
}

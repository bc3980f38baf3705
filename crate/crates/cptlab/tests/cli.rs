use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "--scenes", "20", "--width", "32", "--height", "32", "--min-heads", "2", "--max-heads", "10", "--splits", "10,4,6",
];

fn cptlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cptlab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let o = cptlab(args, cwd);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn fails(args: &[&str], cwd: &Path) -> String {
    let o = cptlab(args, cwd);
    assert!(!o.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(o.stderr).unwrap()
}

fn with(extra: &[&'static str]) -> Vec<&'static str> {
    let mut v = extra.to_vec();
    v.extend_from_slice(SMALL);
    v
}

/// Every file under `dir` by relative path.
fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn help_documents_every_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = [
        "--scenes", "--width", "--height", "--min-heads", "--max-heads", "--min-radius", "--max-radius", "--texture-scale",
        "--splits", "--dataset-seed", "--sigma", "--qfs", "--standard-chroma-table", "--subsampling",
    ];
    let plan = [
        "--dataset-manifest", "--mode", "--curriculum", "--base-qf", "--target-qf", "--target-qfs", "--methods", "--seeds",
        "--learning-rate", "--lr-decay", "--weight-decay", "--epochs", "--batch-size", "--equal-budget",
    ];
    let common = ["--config", "--jobs", "--out"];
    for sub in ["gen", "train", "sweep", "ablate"] {
        let help = ok(&[sub, "--help"], tmp.path());
        let needs: Vec<&str> = if sub == "gen" {
            dataset.iter().chain(&common).copied().collect()
        } else {
            dataset.iter().chain(&plan).chain(&common).copied().collect()
        };
        for flag in needs {
            assert!(help.contains(flag), "`{sub} --help` lacks {flag}");
        }
    }
    for (sub, flags) in [
        ("encode", &["--qf", "--in", "--out"][..]),
        ("decode", &["--in", "--out"][..]),
        ("quant-table", &["--qf", "--standard-chroma-table", "--unclamped"][..]),
        ("report", &["--in", "--out"][..]),
    ] {
        let help = ok(&[sub, "--help"], tmp.path());
        for flag in flags {
            assert!(help.contains(flag), "`{sub} --help` lacks {flag}");
        }
    }
    ok(&["--help"], tmp.path());
}

#[test]
fn unknown_flags_and_keys_are_named() {
    let tmp = tempfile::tempdir().unwrap();
    let err = fails(&["gen", "--scenez", "3", "--out", "d"], tmp.path());
    assert!(err.contains("--scenez"), "{err}");
    fs::write(tmp.path().join("bad.cfg"), "epochs = 2\nlearning_rat = 0.1\n").unwrap();
    let err = fails(&["train", "--config", "bad.cfg", "--out", "t"], tmp.path());
    assert!(err.contains("learning_rat") && err.contains("bad.cfg:2"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    let err = fails(&["train", "--epochs", "zero", "--out", "t"], tmp.path());
    assert!(err.contains("epochs"), "{err}");
    assert!(!tmp.path().join("d").exists() && !tmp.path().join("t").exists());
}

#[test]
fn gen_writes_the_expected_files_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["gen", "--scenes", "10", "--qfs", "75,1", "--out", "d", "--quiet"], tmp.path());
    let manifest = fs::read_to_string(tmp.path().join("d/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 30);
    let files = tree(&tmp.path().join("d"));
    let count = |prefix: &str| files.keys().filter(|p| p.starts_with(prefix)).count();
    assert_eq!((count("originals"), count("jpeg"), count("annotations")), (10, 20, 10));
    assert_eq!(files.len(), 10 + 20 + 10 + 2);

    let mut sizes: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for line in manifest.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        sizes.entry(f[2]).or_default().push(f[4].parse().unwrap());
    }
    let avg = |k: &str| sizes[k].iter().sum::<f64>() / sizes[k].len() as f64;
    assert!(avg("1") < avg("75"));

    for (path, bytes) in &files {
        if path.extension().is_some_and(|e| e == "jpg") {
            jpeg_decoder::Decoder::new(bytes.as_slice()).decode().unwrap();
        }
    }

    ok(&["gen", "--scenes", "10", "--qfs", "75,1", "--out", "again", "--jobs", "3", "--quiet"], tmp.path());
    assert_eq!(tree(&tmp.path().join("again")), files);
}

#[test]
fn quant_table_prints_the_base_table_twice_at_50() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["quant-table", "--qf", "50"], tmp.path());
    let rows: Vec<Vec<u16>> = out
        .lines()
        .filter(|l| l.starts_with(' ') || l.starts_with(char::is_numeric))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0], vec![16, 11, 10, 16, 24, 40, 51, 61]);
    assert_eq!(rows[7], vec![72, 92, 95, 98, 112, 100, 103, 99]);
    assert_eq!(rows[..8], rows[8..]);

    let literal = ok(&["quant-table", "--qf", "1", "--unclamped"], tmp.path());
    assert!(literal.contains(" 800 "), "{literal}");
    let standard = ok(&["quant-table", "--qf", "50", "--standard-chroma-table"], tmp.path());
    assert!(standard.contains("\n  17   18   24   47   99"), "{standard}");
    fails(&["quant-table", "--qf", "0"], tmp.path());
}

#[test]
fn encode_matches_gen_and_decode_writes_ppm() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["gen", "--scenes", "2", "--qfs", "75", "--out", "d", "--quiet"], d);
    ok(&["encode", "--qf", "75", "--in", "d/originals/scene_0001.ppm", "--out", "e/x.jpg"], d);
    assert_eq!(fs::read(d.join("e/x.jpg")).unwrap(), fs::read(d.join("d/jpeg/q075/scene_0001.jpg")).unwrap());
    ok(&["decode", "--in", "e/x.jpg", "--out", "e/x.ppm"], d);
    let ppm = fs::read(d.join("e/x.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n256 256\n255\n"));
    assert_eq!(ppm.len(), fs::metadata(d.join("d/originals/scene_0001.ppm")).unwrap().len() as usize);

    let err = fails(&["decode", "--in", "d/manifest.csv", "--out", "e/bad.ppm"], d);
    assert!(err.contains("manifest.csv"), "{err}");
    assert!(!d.join("e/bad.ppm").exists());
}

#[test]
fn flags_beat_the_file_which_beats_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("plan.cfg"), "# plan\nmode = NPT\nepochs = 3\nlearning_rate = 0.002\ntarget_qf = 30\n").unwrap();
    let mut args = with(&["train", "--config", "plan.cfg", "--epochs", "1", "--out", "t", "--quiet"]);
    args.extend(["--qfs", "75,30"]);
    ok(&args, d);
    let echo = fs::read_to_string(d.join("t/config.txt")).unwrap();
    for line in ["epochs = 1", "learning_rate = 0.002", "mode = NPT", "batch_size = 5", "target_qf = 30"] {
        assert!(echo.lines().any(|l| l == line), "missing {line:?} in\n{echo}");
    }
    let eval = fs::read_to_string(d.join("t/eval.csv")).unwrap();
    assert!(eval.starts_with("method,qf,seed,avg_size_bytes,mae,mse\nNPT,30,0,"), "{eval}");
    let stages = fs::read_to_string(d.join("t/runs/NPT_q030_seed0/stages.csv")).unwrap();
    assert_eq!(stages.lines().count(), 3);
    assert!(d.join("t/runs/NPT_q030_seed0/stage_01_q030.cptm").exists());
}

#[test]
fn invalid_plans_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let err = fails(&with(&["train", "--curriculum", "75,40", "--target-qf", "30", "--out", "t"]), d);
    assert!(err.contains("curriculum"), "{err}");
    let err = fails(&with(&["train", "--curriculum", "40,75,30", "--target-qf", "30", "--out", "t"]), d);
    assert!(err.contains("curriculum"), "{err}");
    fails(&with(&["train", "--mode", "NPT", "--target-qf", "90", "--out", "t"]), d);
    fails(&with(&["sweep", "--seeds", "", "--out", "t"]), d);
    fails(&with(&["train", "--dataset-manifest", "missing/manifest.csv", "--out", "t"]), d);
    assert!(!d.join("t").exists());
}

#[test]
fn sweep_and_report_are_reproducible_and_self_audited() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let base = with(&["sweep", "--epochs", "1", "--seeds", "0,1", "--target-qfs", "40,5", "--quiet"]);
    let mut a = base.clone();
    a.extend(["--out", "s1"]);
    let mut b = base.clone();
    b.extend(["--out", "s2", "--jobs", "3"]);
    ok(&a, d);
    ok(&b, d);
    let s1 = tree(&d.join("s1"));
    assert_eq!(s1, tree(&d.join("s2")));

    let base_csv = String::from_utf8(s1[Path::new("base.csv")].clone()).unwrap();
    assert_eq!(base_csv.lines().count(), 1 + 2 * 2 * 2);
    let agg = String::from_utf8(s1[Path::new("aggregate.csv")].clone()).unwrap();
    assert_eq!(agg.lines().count(), 1 + 2 * 2);
    assert!(agg.starts_with("method,qf,mean_mae,std_mae,mean_mse,std_mse,improvement_pct\n"));
    for line in agg.lines().skip(1) {
        let last = line.rsplit(',').next().unwrap();
        assert_eq!(line.starts_with("CPT"), !last.is_empty(), "{line}");
    }
    let plot = String::from_utf8(s1[Path::new("tradeoff_CPT.dat")].clone()).unwrap();
    assert!(plot.starts_with("# method=CPT\n"));

    let summary = ok(&["report", "--in", "s1", "--out", "r"], d);
    assert!(summary.contains("8 runs audited"), "{summary}");
    assert_eq!(fs::read(d.join("r/aggregate.csv")).unwrap(), s1[Path::new("aggregate.csv")]);
    assert_eq!(fs::read(d.join("r/tradeoff_NPT.dat")).unwrap(), s1[Path::new("tradeoff_NPT.dat")]);

    // A doctored table fails the audit against the raw counts.
    let mut lines: Vec<String> = base_csv.lines().map(String::from).collect();
    let mut f: Vec<String> = lines[1].split(',').map(String::from).collect();
    f[4] = format!("{}", f[4].parse::<f64>().unwrap() + 0.5);
    lines[1] = f.join(",");
    let tampered = lines.join("\n") + "\n";
    assert_ne!(tampered, base_csv);
    fs::write(d.join("s1/base.csv"), tampered).unwrap();
    let err = fails(&["report", "--in", "s1", "--out", "r2"], d);
    assert!(err.contains("raw counts") || err.contains("aggregate"), "{err}");
}

#[test]
fn ablate_emits_seven_regimes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let mut args = with(&["ablate", "--epochs", "1", "--seeds", "0", "--quiet"]);
    args.extend(["--out", "a"]);
    ok(&args, d);
    let summary = fs::read_to_string(d.join("a/ablation_summary.csv")).unwrap();
    let regimes: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(
        regimes,
        [
            "NO_FINETUNE",
            "SCRATCH",
            "NPT",
            "FIXED_PRETRAIN(5)",
            "CPT(75-60-40-30-25-20-15-10-5-1)",
            "CPT(75-40-25-15-5-1)",
            "CPT(75-45-28-17-6-1)"
        ]
    );
    args.pop();
    args.push("b");
    ok(&args, d);
    assert_eq!(tree(&d.join("a")), tree(&d.join("b")));
}

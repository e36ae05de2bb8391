use std::path::Path;
use std::process::{Command, Output};

use modrec::experiment::{oracle_check, read_iq, read_sidecar, realize, OracleCheckOptions};

fn modrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modrec")).args(args).output().expect("run modrec")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: [&str; 10] = [
    "--preset",
    "ci",
    "--modulations",
    "BPSK,BFSK",
    "--n-per-modulation",
    "40",
    "--training-sizes",
    "20",
    "--n-symbols",
    "60",
];

#[test]
fn generate_train_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("f.csv");
    let model = dir.path().join("m.json");
    let mut args = vec!["generate", "--seed", "4", "--snr-db", "10", "-o", p(&features)];
    args.extend(SMALL);
    let o = modrec(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&features).unwrap();
    assert!(text.starts_with("label,modulation,snr_db,seed,f1,f2,f3\n"));
    assert_eq!(text.lines().count(), 81);

    let o = modrec(&["train", "--features", p(&features), "--classifier", "LR", "-o", p(&model)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = modrec(&["evaluate", "--model", p(&model), "--features", p(&features)]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    let acc: f64 = out.trim().rsplit('=').next().unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&acc), "{out}");
}

#[test]
fn config_file_keys_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "preset = \"ci\"\nmodulations = [\"4PSK\", \"4FSK\"]\nn_per_modulation = 30\nn_symbols = 50\n\
         training_sizes = [10]\nsnr_grid_db = [0.0, 20.0]\nclassifiers = [\"SVM\"]\nmaster_seed = 8\n",
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(code(&modrec(&["sweep", "--config", p(&cfg), "-o", p(&a)])), 0);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("classifier,training_size,snr_db,accuracy,n_test,seed\n"));

    // the flag wins over the file; snake_case spelling is accepted too
    let o = modrec(&["sweep", "--config", p(&cfg), "--snr_grid_db", "5", "--classifiers", "SVM,LR", "-o", p(&b)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&b).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("5.0000000000000000e0")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage errors
    assert_eq!(code(&modrec(&["no-such-command"])), 1);
    assert_eq!(code(&modrec(&["sweep", "--preset", "ci"])), 1, "missing seed");
    assert_eq!(code(&modrec(&["sweep", "--seed", "1", "--modulations", "64QAM"])), 1);
    assert_eq!(code(&modrec(&["--help"])), 0);
    // data errors
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&modrec(&["evaluate", "--model", p(&missing), "--features", p(&missing)])), 2);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "label,modulation,snr_db,seed,f1,f2,f3\n1,BPSK,0,1,1,1,1\n").unwrap();
    let o = modrec(&["train", "--features", p(&bad), "--classifier", "SVM", "-o", p(&dir.path().join("m.json"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn oracle_check_cli_reports_and_fails_on_fault() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    let o = modrec(&["oracle-check", "--draws", "4000", "-o", p(&good)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&good).unwrap();
    assert!(text.starts_with("formula,signal,delta_prime,k,analytic,monte_carlo,std_err,pass\n"));

    let bad = dir.path().join("bad.csv");
    let o = modrec(&["oracle-check", "--draws", "4000", "--inject-fault", "-o", p(&bad)]);
    assert_eq!(code(&o), 3);
    assert!(std::fs::read_to_string(&bad).unwrap().contains(",fail"));
}

#[test]
fn oracle_report_has_one_row_per_check() {
    let report = oracle_check(&OracleCheckOptions { draws: 2000, ..OracleCheckOptions::default() }).unwrap();
    // 5 signals x 3 offsets x (4 indices x 2 statistics + 2 time averages)
    assert_eq!(report.rows.len(), 150);
    let mut keys: Vec<_> = report
        .rows
        .iter()
        .map(|r| (r.formula.clone(), r.signal.clone(), r.delta_prime.to_bits(), r.k.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 150);
}

#[test]
fn export_iq_regenerates_from_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("burst.iq");
    let o = modrec(&[
        "export-iq",
        "--modulation",
        "16QAM",
        "--seed",
        "12",
        "--snr-db",
        "-3",
        "--n-symbols",
        "80",
        "-o",
        p(&path),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stored = read_iq(&path).unwrap();
    let params = read_sidecar(&path).unwrap();
    assert_eq!(params.snr_db, -3.0);
    assert_eq!(stored.len(), params.n_samples);
    let (again_params, again) = realize(&params.spec()).unwrap();
    assert_eq!(again_params, params);
    for (a, b) in stored.iter().zip(&again) {
        assert_eq!(a.re, (b.re as f32) as f64);
        assert_eq!(a.im, (b.im as f32) as f64);
    }
}

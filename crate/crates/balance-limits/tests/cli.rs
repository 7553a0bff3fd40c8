use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use balance_limits::cli::run;
use balance_limits::error::CliError;
use balance_limits::formats::{
    read_curve, read_freq_response, read_heatmap_long, read_spectrum, read_trajectory,
    HEATMAP_HEADER,
};
use balance_limits_core::Error as CoreError;
use serde_json::Value;
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("balance-limits").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).expect("utf-8 stdout"),
        stderr: String::from_utf8(err).expect("utf-8 stderr"),
    }
}

fn json(args: &[&str]) -> Value {
    let o = cli(args);
    assert_eq!(o.code, 0, "{args:?}: {}", o.stderr);
    serde_json::from_str(&o.stdout).expect("valid JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn poles_of_case_study() {
    let v = json(&[
        "poleszeros",
        "--preset",
        "case-study",
        "--orientation",
        "up",
    ]);
    let mut re: Vec<f64> = v["poles"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| z["re"].as_f64().unwrap())
        .collect();
    re.sort_by(f64::total_cmp);
    assert_eq!(re, [-3.17991291608, 0.0, 0.0, 3.17991291608]);
    assert!(v["poles"]
        .as_array()
        .unwrap()
        .iter()
        .all(|z| z["im"] == 0.0));
    assert_eq!(v["zeros"].as_array().unwrap().len(), 0);
}

#[test]
fn fragility_at_low_fixation() {
    let v = json(&[
        "fragility",
        "--l",
        "1",
        "--l0",
        "0.8",
        "--tau",
        "0.3",
        "--preset",
        "case-study-masses",
    ]);
    assert_eq!(v["fragility"], 1.93353355958);
    assert_eq!(v["regime"], "rhp_zero");
    let db = json(&["fragility", "--l0", "0.8", "--db"]);
    let want = 1.933533559581972 * 20.0 / std::f64::consts::LN_10;
    assert!((db["fragility_db"].as_f64().unwrap() - want).abs() < 1e-9);
}

#[test]
fn singular_fixation_exits_3() {
    let o = cli(&["fragility", "--l", "1", "--l0", "0.029850746268656716"]);
    assert_eq!(o.code, 3);
    assert!(
        o.stderr.contains("q =") && o.stderr.contains("p ="),
        "{}",
        o.stderr
    );
    assert!(o.stdout.is_empty());
}

#[test]
fn domain_errors_name_the_parameter() {
    for (flag, value, name) in [
        ("--l", "-1", "stick_length"),
        ("--M", "0", "cart_mass"),
        ("--g", "-9.81", "gravity"),
        ("--tau", "-0.1", "tau"),
    ] {
        let o = cli(&["fragility", flag, value]);
        assert_eq!(o.code, 3, "{flag}: {}", o.stderr);
        assert!(o.stderr.contains(name), "{flag}: {}", o.stderr);
    }
    let o = cli(&["sweep", "--vary", "length", "--lo", "2", "--hi", "1"]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("lo < hi"), "{}", o.stderr);
}

#[test]
fn usage_errors_exit_2() {
    let cases: [&[&str]; 5] = [
        &["frobnicate"],
        &["fragility", "--nope"],
        &["sweep", "--vary", "length", "--lo", "1"],
        &["simulate", "--sensor-noise", "0.01", "--duration", "1"],
        &["heatmap", "--l-range", "0.2,2"],
    ];
    for args in cases {
        let o = cli(args);
        assert_eq!(o.code, 2, "{args:?}: {}", o.stderr);
        assert!(!o.stderr.is_empty());
    }
    assert!(
        cli(&["simulate", "--actuation-noise", "1", "--duration", "1"])
            .stderr
            .contains("seed")
    );
}

#[test]
fn inconclusive_maps_to_exit_4() {
    let e = CliError::Core {
        context: "stability".into(),
        source: CoreError::Inconclusive {
            reason: "test".into(),
        },
    };
    assert_eq!(e.exit_code(), 4);
}

#[test]
fn help_and_version_exit_0() {
    for args in [&["--help"][..], &["--version"], &["sweep", "--help"]] {
        let o = cli(args);
        assert_eq!(o.code, 0);
        assert!(!o.stdout.is_empty() && o.stderr.is_empty());
    }
}

const SUBCOMMANDS: [&str; 10] = [
    "poleszeros",
    "fragility",
    "sweep",
    "heatmap",
    "freqresp",
    "bode-integral",
    "waterbed",
    "stability",
    "simulate",
    "psd",
];

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Set `BLESS=1` to rewrite the golden files from the current output.
#[test]
fn help_matches_golden_files() {
    let bless = std::env::var_os("BLESS").is_some();
    let mut pages = vec![("help.txt".to_string(), cli(&["--help"]).stdout)];
    for sub in SUBCOMMANDS {
        pages.push((format!("help-{sub}.txt"), cli(&[sub, "--help"]).stdout));
    }
    for (name, text) in pages {
        let path = golden_dir().join(&name);
        if bless {
            fs::create_dir_all(golden_dir()).unwrap();
            fs::write(&path, &text).unwrap();
            continue;
        }
        let want =
            fs::read_to_string(&path).unwrap_or_else(|e| panic!("{name}: {e}; run with BLESS=1"));
        assert_eq!(text, want, "{name} differs from golden file");
    }
}

#[test]
fn help_documents_every_flag() {
    let text = cli(&["simulate", "--help"]).stdout;
    for flag in [
        "--preset",
        "--config",
        "--M",
        "--m",
        "--l",
        "--l0",
        "--g",
        "--tau",
        "--gain",
        "--controller-num",
        "--controller-den",
        "--dt",
        "--duration",
        "--sensor-noise",
        "--actuation-noise",
        "--seed",
        "--initial-x",
        "--initial-velocity",
        "--initial-theta",
        "--initial-angular-velocity",
        "--save-config",
        "--out",
    ] {
        assert!(text.contains(&format!("{flag} ")), "{flag} missing");
    }
}

#[test]
fn out_writes_file_and_not_stdout() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("f.json");
    let o = cli(&["fragility", "--out", path_str(&path)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["fragility"], 0.953973874824);
    // Only the target remains; the temporary file was renamed into place.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn out_to_missing_directory_exits_1() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("missing/f.json");
    let o = cli(&["fragility", "--out", path_str(&path)]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("f.json"), "{}", o.stderr);
    assert!(!path.exists());
}

#[test]
fn config_file_then_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("p.kv");
    fs::write(
        &cfg,
        "# fixation below the tip\nfixation_point = 0.8\ndelay = 0.3\n",
    )
    .unwrap();
    let from_file = json(&["fragility", "--config", path_str(&cfg)]);
    assert_eq!(from_file["fragility"], 1.93353355958);
    let flag_wins = json(&["fragility", "--config", path_str(&cfg), "--l0", "1"]);
    assert_eq!(flag_wins["fragility"], 0.953973874824);
}

#[test]
fn config_rejects_unknown_and_repeated_keys() {
    let dir = TempDir::new().unwrap();
    for (name, text, needle) in [
        ("unknown.kv", "fixation_pt = 0.8\n", "fixation_pt"),
        ("repeat.kv", "delay = 0.3\ndelay = 0.2\n", "delay"),
        ("syntax.kv", "delay 0.3\n", "line 1"),
    ] {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        let o = cli(&["fragility", "--config", path_str(&p)]);
        assert_eq!(o.code, 2, "{name}: {}", o.stderr);
        assert!(o.stderr.contains(needle), "{name}: {}", o.stderr);
    }
    let o = cli(&[
        "fragility",
        "--config",
        path_str(&dir.path().join("absent.kv")),
    ]);
    assert_eq!(o.code, 1);
}

#[test]
fn saved_config_reproduces_run() {
    let dir = TempDir::new().unwrap();
    let kv = dir.path().join("run.kv");
    let args = [
        "simulate",
        "--l0",
        "0.9",
        "--duration",
        "1",
        "--sensor-noise",
        "0.001",
        "--seed",
        "3",
        "--initial-theta",
        "0.01",
        "--save-config",
        path_str(&kv),
    ];
    let first = cli(&args);
    assert_eq!(first.code, 0, "{}", first.stderr);
    let again = cli(&["simulate", "--config", path_str(&kv)]);
    assert_eq!(again.code, 0, "{}", again.stderr);
    assert_eq!(first.stdout, again.stdout);
}

#[test]
fn seeded_simulation_is_byte_identical() {
    let args = [
        "simulate",
        "--tau",
        "0.01",
        "--gain",
        "0",
        "--duration",
        "1",
        "--dt",
        "0.001",
        "--sensor-noise",
        "0.01",
        "--actuation-noise",
        "0.1",
        "--seed",
        "17",
    ];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let mut other = args;
    other[13] = "18";
    assert_ne!(cli(&other).stdout, a.stdout);
}

#[test]
fn csv_outputs_reparse() {
    let sweep = cli(&[
        "sweep", "--vary", "fixation", "--lo", "0.1", "--hi", "2", "--count", "50",
    ]);
    assert_eq!(sweep.code, 0, "{}", sweep.stderr);
    let curve = read_curve(sweep.stdout.as_bytes()).unwrap();
    assert_eq!(curve.len(), 50);
    assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));

    let heat = cli(&[
        "heatmap",
        "--l-range",
        "0.5,1.5,7",
        "--l0-range",
        "0.1,2,9",
        "--threads",
        "2",
    ]);
    assert_eq!(heat.code, 0, "{}", heat.stderr);
    assert!(heat.stdout.starts_with(HEATMAP_HEADER));
    let surface = read_heatmap_long(heat.stdout.as_bytes()).unwrap();
    assert_eq!((surface.l_axis.len(), surface.l0_axis.len()), (7, 9));
    let single = cli(&[
        "heatmap",
        "--l-range",
        "0.5,1.5,7",
        "--l0-range",
        "0.1,2,9",
        "--threads",
        "1",
    ]);
    assert_eq!(single.stdout, heat.stdout);

    let fr = cli(&["freqresp", "--points", "300"]);
    assert_eq!(fr.code, 0, "{}", fr.stderr);
    let resp = read_freq_response(fr.stdout.as_bytes()).unwrap();
    assert_eq!(resp.len(), 300);
    let (w, m) = resp.peak().unwrap();
    assert!(
        (w - 1.436).abs() < 0.05 && (m - 2.355).abs() < 0.01,
        "{w} {m}"
    );
}

#[test]
fn json_outputs_reparse() {
    for args in [
        &[
            "sweep", "--vary", "delay", "--lo", "0", "--hi", "1", "--count", "5", "--format",
            "json",
        ][..],
        &[
            "heatmap",
            "--l-range",
            "0.5,1,3",
            "--l0-range",
            "0.5,1,3",
            "--format",
            "json",
        ],
        &["freqresp", "--points", "20", "--format", "json"],
        &["bode-integral"],
        &["waterbed", "--band", "1,5"],
        &["stability", "--tau", "0.02"],
    ] {
        let v = json(args);
        assert!(v.is_object() || v.is_array(), "{args:?}");
    }
    let bode = json(&["bode-integral"]);
    let value = bode
        .as_object()
        .unwrap()
        .values()
        .filter_map(Value::as_f64)
        .collect::<Vec<_>>();
    assert!(!value.is_empty());
    let wb = json(&["waterbed", "--band", "1,5"]);
    assert_eq!(wb["holds"], true);
    assert_eq!(wb["status"], "holds");
}

#[test]
fn simulate_then_psd() {
    let dir = TempDir::new().unwrap();
    let traj = dir.path().join("traj.csv");
    let spec = dir.path().join("psd.csv");
    let o = cli(&[
        "simulate",
        "--tau",
        "0.01",
        "--gain",
        "0",
        "--duration",
        "5",
        "--initial-theta",
        "1e-6",
        "--out",
        path_str(&traj),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let tr = read_trajectory(fs::File::open(&traj).unwrap()).unwrap();
    assert_eq!(tr.len(), 5001);
    let o = cli(&[
        "psd",
        "--input",
        path_str(&traj),
        "--segment-len",
        "1024",
        "--out",
        path_str(&spec),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let s = read_spectrum(fs::File::open(&spec).unwrap()).unwrap();
    assert_eq!(s.freqs.len(), 513);

    let o = cli(&["psd", "--input", path_str(&traj), "--segment-len", "8192"]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("segment_len"), "{}", o.stderr);
    let o = cli(&["psd", "--input", path_str(&dir.path().join("none.csv"))]);
    assert_eq!(o.code, 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_balance-limits");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let ok = status(&["fragility"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("0.953973874824"));
    assert_eq!(
        status(&["fragility", "--l0", "0.029850746268656716"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(status(&["nope"]).status.code(), Some(2));
    assert_eq!(status(&["--help"]).status.code(), Some(0));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomech"))
        .args(args)
        .env_remove("OPTOMECH_DEVICE_FILE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn feasibility_passes_for_proposed_device() {
    let o = run(&["feasibility", "--device", "proposed-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let kappa_line = text.lines().find(|l| l.starts_with("kappa")).unwrap();
    let kappa: f64 = kappa_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((kappa - 1e-3).abs() < 1e-4, "{kappa}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn feasibility_flags_unresolved_sideband() {
    let o = run(&["feasibility", "--device", "trampoline-2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).lines().any(|l| l.starts_with("[FAIL] sideband")));
}

#[test]
fn feasibility_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = run(&["feasibility", "--device", "proposed-2", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["device"]["name"], "proposed-2");
    assert_eq!(v["sideband"]["passed"], true);
}

#[test]
fn unknown_device_and_bad_flags_exit_one() {
    assert_eq!(run(&["feasibility", "--device", "nonesuch"]).status.code(), Some(1));
    assert_eq!(run(&["feasibility", "--bogus", "3"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--n-photons", "0"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn device_file_flag_and_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("devices.json");
    fs::write(
        &path,
        r#"[{"name":"custom","mass_kg":1e-12,"f_m_hz":300000,"cavity_length_m":0.005,"finesse":300000,"q_m":20000}]"#,
    )
    .unwrap();
    let o = run(&["feasibility", "--device", "custom", "--device-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_optomech"))
        .args(["feasibility", "--device", "custom"])
        .env("OPTOMECH_DEVICE_FILE", &path)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["table", "--device-file", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn arrival_curve_has_zeros_and_unit_area() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("arrival.csv");
    let o = run(&["arrival", "--device", "proposed-1", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, "t_seconds,density_per_second");
    let area: f64 = rows.windows(2).map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[1][1] + w[0][1])).sum();
    assert!((area - 1.0).abs() < 1e-6, "{area}");
    let peak = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let omega = 2.0 * std::f64::consts::PI * 300_000.0;
    let period = 2.0 * std::f64::consts::PI / omega;
    for k in 1..=5 {
        let target = k as f64 * period;
        let nearest = rows
            .iter()
            .min_by(|a, b| (a[0] - target).abs().total_cmp(&(b[0] - target).abs()))
            .unwrap();
        assert!(nearest[1] < 1e-3 * peak);
    }
}

#[test]
fn arrival_with_slow_mechanics_has_one_dominant_peak() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("arrival.csv");
    let o = run(&["arrival", "--sideband-ratio", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv(&path);
    let density: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let maxima: Vec<f64> = density
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2])
        .map(|w| w[1])
        .collect();
    assert!(maxima[0] > 100.0 * maxima[1]);
}

#[test]
fn visibility_decays_exponentially() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vis.csv");
    let o = run(&[
        "visibility",
        "--tau-dec",
        "0.015",
        "--tau-d-grid",
        "0,0.015,0.03",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, "tau_d_s,visibility,survival,detection_probability");
    let expected = [1.0, (-1.0f64).exp(), (-2.0f64).exp()];
    for (r, e) in rows.iter().zip(expected) {
        assert!((r[1] - e).abs() < 1e-12);
    }
    assert_eq!(
        run(&["visibility", "--tau-d-grid", "0.02,0.01"]).status.code(),
        Some(1)
    );
}

#[test]
fn fiber_losses_keep_visibility_but_cut_rate() {
    let dir = tempfile::tempdir().unwrap();
    let lossless = dir.path().join("a.csv");
    let fiber = dir.path().join("b.csv");
    let args = ["visibility", "--tau-dec", "0.015", "--tau-d-grid", "0,0.0001"];
    let mut a = args.to_vec();
    a.extend(["--out", lossless.to_str().unwrap()]);
    let mut b = args.to_vec();
    b.extend(["--delay-line", "fiber", "--out", fiber.to_str().unwrap()]);
    assert_eq!(run(&a).status.code(), Some(0));
    assert_eq!(run(&b).status.code(), Some(0));
    let (_, ra) = read_csv(&lossless);
    let (_, rb) = read_csv(&fiber);
    assert!((ra[1][1] - rb[1][1]).abs() < 1e-15);
    assert!(rb[1][3] < 0.99 * ra[1][3]);
    assert_eq!(ra[1][2], 1.0);
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let rec = dir.path().join(format!("r{i}.csv"));
        let sum = dir.path().join(format!("s{i}.json"));
        let o = run(&[
            "simulate",
            "--kappa",
            "0.1",
            "--n-photons",
            "100000",
            "--dark-rate",
            "1000",
            "--seed",
            "42",
            "--threads",
            threads,
            "--out",
            rec.to_str().unwrap(),
            "--summary",
            sum.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push((fs::read(&rec).unwrap(), fs::read(&sum).unwrap()));
    }
    assert!(outputs[0].0.len() > 100);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let summary: serde_json::Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(summary["seed"], 42);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(text.starts_with("trial_index,arrival_time_s,detector,phase_rad,origin\n"));
}

#[test]
fn simulate_without_coupling_has_no_signal() {
    let o = run(&["simulate", "--kappa", "0", "--n-photons", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["success_count"], 0);
}

#[test]
fn table_matches_reference_values() {
    let o = run(&["table"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["trampoline-1", "trampoline-2", "proposed-1", "proposed-2"] {
        let row = text.lines().find(|l| l.starts_with(name)).unwrap();
        let cols: Vec<f64> = row.split_whitespace().skip(1).map(|x| x.parse().unwrap()).collect();
        assert!(cols[2].abs() < 10.0, "{row}");
        assert!(cols[5].abs() < 5.0, "{row}");
        assert!(cols[8].abs() < 15.0, "{row}");
    }
}

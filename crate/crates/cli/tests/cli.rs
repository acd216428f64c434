use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aperiodic-spectrum"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("APERIODIC_SPECTRUM_THREADS")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str], out: &Path) {
    let o = run(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Header comment, then column names, then rows of fields.
fn read_csv(path: &Path) -> (String, Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let hash = lines.next().unwrap().to_string();
    let columns = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (hash, columns, rows)
}

fn column(rows: &[Vec<String>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn free_bands_fill_the_window() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["bands", "--model", "free", "--levels", "0..4", "--window", "0,10"], dir.path());
    for n in 0..=4 {
        let (hash, columns, rows) = read_csv(&dir.path().join(format!("bands_n{n}.csv")));
        assert!(hash.starts_with("# config_hash=") && hash.len() == "# config_hash=".len() + 64);
        assert_eq!(columns, ["level", "E_lo", "E_hi", "length", "min_I_on_band"]);
        assert_eq!(rows.len(), 1);
        assert_eq!((column(&rows, 1)[0], column(&rows, 2)[0]), (0.0, 10.0));
    }
}

#[test]
fn kronig_penney_keeps_band_at_pi_squared() {
    let tol = 1e-9;
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["bands", "--model", "kp:1", "--level", "10", "--window", "8,12"], dir.path());
    let (_, _, rows) = read_csv(&dir.path().join("bands_n10.csv"));
    let (lo, hi) = (column(&rows, 1), column(&rows, 2));
    assert!(lo.iter().zip(&hi).any(|(&a, &b)| a - tol <= PI * PI && PI * PI <= b + tol));
}

#[test]
fn step_measure_decreases() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["bands", "--model", "step:1", "--levels", "4,8,12"], dir.path());
    let s = summary(dir.path());
    let levels = s["results"]["levels"].as_array().unwrap();
    let measures: Vec<f64> = levels.iter().map(|l| l["total_measure"].as_f64().unwrap()).collect();
    assert_eq!(measures.len(), 3);
    assert!(measures.windows(2).all(|w| w[1] < w[0]), "{measures:?}");
    let (_, _, rows) = read_csv(&dir.path().join("bands_n8.csv"));
    assert_eq!(levels[1]["band_count"].as_u64().unwrap() as usize, rows.len());
}

#[test]
fn invariant_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["invariant", "--model", "free", "--window=-5,50", "--grid", "500"], dir.path());
    let (_, columns, rows) = read_csv(&dir.path().join("invariant.csv"));
    assert_eq!(columns, ["E", "I_numeric", "I_closed_form", "abs_diff"]);
    assert!(column(&rows, 1).iter().all(|i| i.abs() <= 1e-12));

    run_ok(&["invariant", "--model", "step:1", "--window", "0.1,50", "--grid", "1000"], dir.path());
    let (_, _, rows) = read_csv(&dir.path().join("invariant.csv"));
    assert_eq!(rows.len(), 1000);
    assert!(column(&rows, 3).iter().all(|d| *d <= 1e-9));

    // a two-point grid puts E = 4 pi^2 on a row
    let e = 4.0 * PI * PI;
    let window = format!("{e},{}", e + 1.0);
    run_ok(&["invariant", "--model", "kp:3", "--window", &window, "--grid", "2"], dir.path());
    let (_, _, rows) = read_csv(&dir.path().join("invariant.csv"));
    assert_eq!(column(&rows, 0)[0], e);
    assert!(column(&rows, 1)[0].abs() <= 1e-12);
    assert!(column(&rows, 2)[0].abs() <= 1e-12);
}

#[test]
fn model_files_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("kp.toml");
    std::fs::write(
        &model,
        "name = \"kp\"\n[letter.a]\nkind = \"delta\"\nstrength = 3.0\nlength = 1.0\n\
         [letter.b]\nkind = \"sampled\"\nsamples-file = \"zeros.txt\"\nlength = 1.0\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("zeros.txt"), "0 0\n0 0\n").unwrap();
    run_ok(&["invariant", "--model", model.to_str().unwrap(), "--window", "1,30", "--grid", "50"], dir.path());
    let (_, _, rows) = read_csv(&dir.path().join("invariant.csv"));
    assert!(column(&rows, 3).iter().all(|d| *d <= 1e-9));
}

#[test]
fn free_energies_never_escape() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["escape", "--model", "free", "--window", "0,50", "--grid", "501"], dir.path());
    let (_, columns, rows) = read_csv(&dir.path().join("escape.csv"));
    assert_eq!(columns, ["E", "class", "escape_n", "I"]);
    assert_eq!(rows.len(), 501);
    assert!(rows.iter().all(|r| r[1] == "bounded"));
}

#[test]
fn high_barrier_lyapunov_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["lyapunov", "--model", "step:50", "--window", "0,40", "--grid", "41", "--level", "12"], dir.path());
    let (_, columns, rows) = read_csv(&dir.path().join("lyapunov.csv"));
    assert_eq!(columns, ["E", "L", "L_disc", "s", "n", "residual"]);
    assert_eq!(rows.len(), 41);
    assert!(column(&rows, 1).iter().all(|&l| l > 0.5));
}

#[test]
fn dimension_row() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["dimension", "--model", "kp:1", "--levels", "6,10"], dir.path());
    let (_, columns, rows) = read_csv(&dir.path().join("dimension.csv"));
    assert_eq!(columns, ["n1", "n2", "N1", "N2", "eps1", "eps2", "estimate"]);
    let d = column(&rows, 6)[0];
    assert!((0.0..=1.0).contains(&d));
}

#[test]
fn surface_is_a_valid_obj() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["surface", "--invariant", "-0.2", "--grid", "24"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("surface.obj")).unwrap();
    assert!(text.starts_with("# config_hash="));
    let mut vertices = 0usize;
    let mut faces = 0usize;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "v" => {
                assert_eq!(fields.len(), 4);
                assert!(fields[1..].iter().all(|f| f.parse::<f64>().unwrap().is_finite()));
                vertices += 1;
            }
            "f" => {
                assert_eq!(fields.len(), 4);
                for f in &fields[1..] {
                    let i: usize = f.parse().unwrap();
                    assert!(i >= 1 && i <= vertices);
                }
                faces += 1;
            }
            other => panic!("unexpected record {other}"),
        }
    }
    assert!(vertices > 0 && faces > 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["bands"]), 2);
    assert_eq!(code(&["bands", "--model", "step:1", "--window", "2,1"]), 2);
    assert_eq!(code(&["bands", "--model", "missing.toml"]), 2);
    assert_eq!(code(&["bands", "--model", "step:1", "--levels", "99"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["dimension", "--model", "step:1", "--levels", "0,1", "--window", "0,3"]), 3);
    assert_eq!(code(&["bands", "--model", "step:1", "--levels", "2", "--window", "0,5"]), 0);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["bands", "--model", "step:2", "--levels", "6,9"],
        &["escape", "--model", "step:2", "--grid", "301"],
        &["lyapunov", "--model", "kp:1", "--grid", "31", "--level", "10"],
    ];
    for args in cases {
        run_ok(&[args, &["--threads", "1"]].concat(), one.path());
        run_ok(&[args, &["--threads", "4"]].concat(), four.path());
    }
    let mut names: Vec<_> = std::fs::read_dir(one.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for name in names {
        let a = std::fs::read(one.path().join(&name)).unwrap();
        let b = std::fs::read(four.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
}

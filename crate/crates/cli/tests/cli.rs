use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ciod-mbm");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const BASE: &str = "\
nr = 2
seed = 5
ebn0_start_db = 0
ebn0_stop_db = 6
ebn0_step_db = 2
max_frames = 4000
[base]
scheme = ciod_mbm_1
nt = 4
nrf = 1
mod_order = 4
rotation_deg = auto
angle_step_deg = 0.5
";

#[test]
fn simulate_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("fig2.cfg"), BASE).unwrap();
    let o = run(dir.path(), &["simulate", "fig2.cfg"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("fig2_sim.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "scheme,nt,nrf,nr,m,rotation_deg,source,ebn0_db,ber,bit_errors,bits,frames,seed"
    );
    assert_eq!(lines.len(), 5);
    assert!(!csv.contains('\r'));
    let angle: Vec<&str> = lines[1].split(',').collect();
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[0], "ciod_mbm_1");
        assert_eq!(f[5], angle[5]);
        assert_eq!(f[6], "sim");
        assert_eq!(f[12], "5");
    }
    let opt = run(dir.path(), &["optimize-angle", "fig2.cfg"]);
    assert_eq!(code(&opt), 0);
    assert!(stdout(&opt).contains(&format!("theta* = {} deg", angle[5])), "{}", stdout(&opt));
    assert!(dir.path().join("fig2_angle.csv").exists());
    assert!(dir.path().join("fig2_sim.csv.meta").exists());
}

#[test]
fn overrides_and_merge() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), BASE).unwrap();
    let sim = run(dir.path(), &["simulate", "c.cfg", "--seed", "9", "--workers", "2", "-o", "s.csv"]);
    assert_eq!(code(&sim), 0, "{}", stderr(&sim));
    let th = run(dir.path(), &["abep", "c.cfg", "--output", "t.csv"]);
    assert_eq!(code(&th), 0);
    let t = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(t.lines().count(), 5);
    assert!(t.lines().skip(1).all(|l| l.contains(",theory,")));
    let s = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(s.lines().skip(1).all(|l| l.ends_with(",9")));
    let m = run(dir.path(), &["merge", "-o", "all.csv", "s.csv", "t.csv"]);
    assert_eq!(code(&m), 0);
    let all = std::fs::read_to_string(dir.path().join("all.csv")).unwrap();
    assert_eq!(all.lines().count(), 9);
    let missing = run(dir.path(), &["merge", "-o", "x.csv", "s.csv", "nope.csv"]);
    assert_eq!(code(&missing), 3);
}

#[test]
fn invalid_config_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.cfg"),
        "scheme = ciod_mbm_1\nnrf = 1\nnr = 2\nmod_order = 4\n",
    )
    .unwrap();
    let o = run(dir.path(), &["simulate", "bad.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`nt`"), "{}", stderr(&o));
    assert!(!dir.path().join("bad_sim.csv").exists());
    let o = run(dir.path(), &["simulate", "missing.cfg"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn compare_checks_rates_and_reports_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "\
nr = 2
ebn0_start_db = 0
ebn0_stop_db = 20
ebn0_step_db = 2
[a]
scheme = mbm
nrf = 2
mod_order = 4
[b]
scheme = mbm
nrf = 2
mod_order = 4
";
    std::fs::write(dir.path().join("same.cfg"), cfg).unwrap();
    let o = run(dir.path(), &["compare", "same.cfg", "--theory"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("[a] vs [b]: +0.00 dB"), "{}", stdout(&o));
    std::fs::write(
        dir.path().join("mismatch.cfg"),
        cfg.replace("[b]\nscheme = mbm\nnrf = 2", "[b]\nscheme = mbm\nnrf = 1"),
    )
    .unwrap();
    let o = run(dir.path(), &["compare", "mismatch.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("eta = 4") && stderr(&o).contains("eta = 3"), "{}", stderr(&o));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            ciod_mbm::config::ExperimentConfig::from_file(&path).unwrap();
            n += 1;
        }
    }
    assert!(n >= 3);
}

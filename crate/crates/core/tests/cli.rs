use std::fs;
use std::path::Path;
use std::process::Command;

use lindblad_mf::sweep::sha256_hex;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lindblad-mf"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const TIM: &str = r#"
schema_version = 1
model = "tim"
mode = "meanfield-analytic"
[grid]
kappa = [0.5, 3.0, 6.0]
[flowfield]
axes = ["m_x", "m_z"]
fixed = [0.0, 0.0, 0.0]
density = 5
"#;

#[test]
fn sweep_writes_hashed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", TIM);
    let out = tmp.path().join("out");
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let m = manifest(&out);
    assert_eq!(m["config_echo"]["model"], "tim");
    assert_eq!(m["status_per_point"].as_array().unwrap().len(), 3);
    assert!(m["status_per_point"].as_array().unwrap().iter().all(|s| s["ok"] == true));
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 1);
    for f in files {
        let bytes = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        assert!(std::str::from_utf8(&bytes).unwrap().starts_with("point,kappa,branch,m_x,m_y,m_z"));
    }
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", TIM);
    let c = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&["sweep", "--config", c, "--out", a.to_str().unwrap(), "--threads", "1"]), 0);
    assert_eq!(run(&["sweep", "--config", c, "--out", b.to_str().unwrap(), "--threads", "3"]), 0);
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
    assert_eq!(fs::read(a.join("fixed_points.csv")).unwrap(), fs::read(b.join("fixed_points.csv")).unwrap());
}

#[test]
fn flowfield_emits_field_and_markers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", TIM);
    let out = tmp.path().join("ff");
    assert_eq!(run(&["flowfield", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let field = fs::read_to_string(out.join("flowfield_point0.csv")).unwrap();
    let mut lines = field.lines();
    assert_eq!(lines.next().unwrap(), "m_x,m_z,F_m_x,F_m_y,F_m_z");
    // 5x5 grid clipped to the unit disc
    assert_eq!(lines.count(), 13);
    assert!(out.join("fixed_points_point2.csv").exists());
    assert_eq!(manifest(&out)["files"].as_array().unwrap().len(), 6);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = out.to_str().unwrap();
    let bad = write(tmp.path(), "bad.toml", &TIM.replace("schema_version = 1", "schema_version = 9"));
    assert_eq!(run(&["sweep", "--config", bad.to_str().unwrap(), "--out", o]), 2);
    assert_eq!(run(&["validate-config", "--config", bad.to_str().unwrap()]), 2);
    assert_eq!(run(&["sweep", "--config", tmp.path().join("missing.toml").to_str().unwrap(), "--out", o]), 2);
    let good = write(tmp.path(), "good.toml", TIM);
    assert_eq!(run(&["validate-config", "--config", good.to_str().unwrap()]), 0);
    // no --out and no `output`
    assert_eq!(run(&["sweep", "--config", good.to_str().unwrap()]), 2);
    assert_eq!(run(&["sweep", "--config", good.to_str().unwrap(), "--out", o, "--threads", "0"]), 2);
    assert_eq!(run(&["trajectory", "--config", good.to_str().unwrap(), "--out", o]), 2);
    let too_big = write(
        tmp.path(),
        "big.toml",
        "schema_version = 1\nmodel = \"tim\"\nmode = \"exact\"\nlattice = { dim = 2, extent = 3 }\n[grid]\nkappa = [1.0]\n",
    );
    assert_eq!(run(&["validate-config", "--config", too_big.to_str().unwrap()]), 2);
}

#[test]
fn failed_points_exit_with_three() {
    // at the critical coupling the only fixed point is marginal, so there is
    // no stable state to anchor the plane
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "schema_version = 1\nmodel = \"tim\"\nmode = \"meanfield-analytic\"\n[grid]\nkappa = [1.0, 3.0]\n\
         [flowfield]\naxes = [\"m_x\", \"m_z\"]\ndensity = 5\n",
    );
    let out = tmp.path().join("o");
    assert_eq!(run(&["flowfield", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 3);
    let m = manifest(&out);
    let status = m["status_per_point"].as_array().unwrap();
    assert_eq!(status[0]["ok"], true);
    assert_eq!(status[1]["ok"], false);
    assert!(status[1]["error"].as_str().unwrap().contains("stable"));
    assert!(out.join("flowfield_point0.csv").exists());
    assert!(!out.join("flowfield_point1.csv").exists());
}

#[test]
fn trajectories_are_seed_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "q.toml",
        r#"
schema_version = 1
model = "tim"
mode = "qtmc"
lattice = { dim = 1, extent = 4 }
[grid]
kappa = [1.0]
[qtmc]
trajectories = 2
t_max = 5.0
burn_in = 1.0
"#,
    );
    let c = cfg.to_str().unwrap();
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    assert_eq!(run(&["trajectory", "--config", c, "--out", dirs[0].to_str().unwrap(), "--seed", "5"]), 0);
    assert_eq!(run(&["trajectory", "--config", c, "--out", dirs[1].to_str().unwrap(), "--seed", "5"]), 0);
    assert_eq!(run(&["trajectory", "--config", c, "--out", dirs[2].to_str().unwrap(), "--seed", "6"]), 0);
    let events = |d: &Path| fs::read(d.join("point0_traj1_events.csv")).unwrap();
    let series = |d: &Path| fs::read(d.join("point0_traj1.csv")).unwrap();
    assert_eq!(events(&dirs[0]), events(&dirs[1]));
    assert_eq!(series(&dirs[0]), series(&dirs[1]));
    assert_ne!(series(&dirs[0]), series(&dirs[2]));
    assert_eq!(manifest(&dirs[0])["config_echo"]["seed"], 5);
    let header = String::from_utf8(series(&dirs[0])).unwrap();
    assert!(header.starts_with("time,mean_sx,mean_sz,nn_zz\n"));
}

use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "\
arch = desk_small
episodes = 1
steps = 30
minibuffer = 20
minibatch = 5
replays = 1
capacity = 100
";

fn imrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imrl"))
        .args(args)
        .env_remove("IMRL_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.cfg");
    std::fs::write(&path, TINY).unwrap();
    path.to_str().unwrap().to_string()
}

fn train(dir: &Path, cfg: &str, name: &str, seed: &str) -> String {
    let out = dir.join(name);
    let o = imrl(&["train", "--config", cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out.to_str().unwrap().to_string()
}

#[test]
fn train_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let a = train(tmp.path(), &cfg, "a", "7");
    let b = train(tmp.path(), &cfg, "b", "7");
    for file in ["metrics.csv", "config.cfg", "checkpoints/pnet.net", "checkpoints/targets.net", "log/transitions.log"] {
        let x = std::fs::read(Path::new(&a).join(file)).unwrap();
        let y = std::fs::read(Path::new(&b).join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    let echoed = std::fs::read_to_string(Path::new(&a).join("config.cfg")).unwrap();
    assert!(echoed.contains("seed = 7"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = imrl(&["train", "--config", "/nonexistent/desk.cfg", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/nonexistent/desk.cfg"));
}

#[test]
fn bad_config_reports_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "gamma = 1.5\nminibatch = 0\nbogus = 1\n").unwrap();
    let o = imrl(&["train", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("line 3: bogus"), "{err}");
}

#[test]
fn zero_episodes_writes_untrained_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("zero");
    let o = imrl(&["train", "--config", &cfg, "--episodes", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("checkpoints/pnet.net").is_file());
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1);
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.cfg");
    std::fs::write(&cfg, format!("{TINY}episodes = 0\n").replace("episodes = 1\n", "")).unwrap();
    let run = |env: Option<&str>, file_seed: bool, flag: Option<&str>| {
        let path = tmp.path().join("p.cfg");
        let mut text = std::fs::read_to_string(&cfg).unwrap();
        if file_seed {
            text.push_str("seed = 20\n");
        }
        std::fs::write(&path, text).unwrap();
        let out = tmp.path().join("o");
        let mut c = Command::new(env!("CARGO_BIN_EXE_imrl"));
        c.args(["train", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        c.env_remove("IMRL_SEED");
        if let Some(e) = env {
            c.env("IMRL_SEED", e);
        }
        let o = c.output().unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let echoed = std::fs::read_to_string(out.join("config.cfg")).unwrap();
        echoed.lines().find(|l| l.starts_with("seed =")).unwrap().to_string()
    };
    assert_eq!(run(Some("10"), false, None), "seed = 10");
    assert_eq!(run(Some("10"), true, None), "seed = 20");
    assert_eq!(run(Some("10"), true, Some("30")), "seed = 30");
    let o = Command::new(env!("CARGO_BIN_EXE_imrl"))
        .args(["train", "--out", tmp.path().join("x").to_str().unwrap(), "--episodes", "0"])
        .env("IMRL_SEED", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_report_and_inspect() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let run = train(tmp.path(), &cfg, "run", "3");
    let o = imrl(&["eval", "--run", &run, "--policy", "random,oracle", "--steps", "600", "--seeds", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(Path::new(&run).join("report.csv")).unwrap();
    let rows = imrl::evalkit::parse_report(&text).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.steps == 600));
    let random = rows.iter().find(|r| r.policy == "random").unwrap();
    let oracle = rows.iter().find(|r| r.policy == "oracle").unwrap();
    assert!(oracle.cumulative_reward > random.cumulative_reward);
    assert!(Path::new(&run).join("report.txt").is_file());

    let merged = tmp.path().join("merged");
    let o = imrl(&["report", &run, "--out", merged.to_str().unwrap(), "--policy", "all"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(merged.join("merged.csv")).unwrap(), text);
    let summary = std::fs::read_to_string(merged.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);

    for target in [run.clone(), format!("{run}/checkpoints"), format!("{run}/log"), format!("{run}/report.csv")] {
        let o = imrl(&["inspect", &target]);
        assert_eq!(code(&o), 0, "{target}: {}", stderr(&o));
    }
}

#[test]
fn eval_rejects_unknown_policy_and_training_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let run = train(tmp.path(), &cfg, "run", "3");
    let o = imrl(&["eval", "--run", &run, "--policy", "greedy"]);
    assert_eq!(code(&o), 2);
    let trained = imrl::trainer::episode_seeds(3, 1)[0].to_string();
    let o = imrl(&["eval", "--run", &run, "--seeds", &trained]);
    assert_eq!(code(&o), 2);
}

#[test]
fn corrupt_checkpoint_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let run = train(tmp.path(), &cfg, "run", "3");
    let pnet = Path::new(&run).join("checkpoints/pnet.net");
    let mut bytes = std::fs::read(&pnet).unwrap();
    let n = bytes.len();
    bytes.truncate(n / 2);
    std::fs::write(&pnet, bytes).unwrap();
    let o = imrl(&["eval", "--run", &run, "--steps", "10", "--seeds", "1"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let o = imrl(&["inspect", pnet.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn report_missing_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = imrl(&["report", tmp.path().to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn report_keys_rows_by_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let mut dirs = Vec::new();
    for preset in ["neutral_p0", "neutral_p01", "neutral_p02", "neutral_p05", "neutral_p1"] {
        let out = tmp.path().join(preset);
        let o = imrl(&["train", "--config", &cfg, "--reward", preset, "--episodes", "0", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = imrl(&["eval", "--run", out.to_str().unwrap(), "--policy", "model", "--steps", "20", "--seeds", "1,2"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        dirs.push(out.to_str().unwrap().to_string());
    }
    let merged = tmp.path().join("sweep");
    let mut args = vec!["report"];
    args.extend(dirs.iter().map(String::as_str));
    args.extend(["--out", merged.to_str().unwrap()]);
    let o = imrl(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = std::fs::read_to_string(merged.join("summary.csv")).unwrap();
    let keys: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(keys, ["neutral_p0", "neutral_p01", "neutral_p02", "neutral_p05", "neutral_p1"]);
}

#[test]
fn simulate_writes_graymaps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let o = imrl(&["simulate", "--seed", "4", "--steps", "12", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let steps = std::fs::read_to_string(out.join("steps.csv")).unwrap();
    assert_eq!(steps.lines().count(), 13);
    for line in steps.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3], cols[4], "oracle policy acts as the oracle");
    }
    let pgm = std::fs::read(out.join("frames/00000-gray.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 32\n255\n"));
    assert_eq!(pgm.len(), b"P5\n32 32\n255\n".len() + 32 * 32);
    let o = imrl(&["simulate", "--policy", "model", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

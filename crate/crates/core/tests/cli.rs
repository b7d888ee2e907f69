use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rsdn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsdn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const TINY: [&str; 12] = [
    "--blocks", "1", "--channels", "4", "--max-iters", "3", "--patch", "16", "--clip-len", "2", "--batch", "2",
];

fn synth(dir: &Path) {
    ok(&rsdn(
        &["synth", "--out", "data", "--clips", "4", "--frames", "3", "--size", "32", "--seed", "3"],
        dir,
    ));
}

fn train(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["train", "--data", "data", "--out", out, "--seed", "5"];
    args.extend(TINY);
    args.extend(extra);
    rsdn(&args, dir)
}

#[test]
fn full_pipeline_writes_fixed_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    assert!(dir.join("data/manifest.txt").is_file());
    assert!(dir.join("data/clip_0000/lr/frame_0003.png").is_file());

    ok(&train(dir, "run", &[]));
    for name in ["config.resolved", "metrics.log", "ckpt_final"] {
        assert!(dir.join("run").join(name).is_file(), "missing {name}");
    }
    let log = fs::read_to_string(dir.join("run/metrics.log")).unwrap();
    assert_eq!(log.lines().next(), Some("iter,epoch,lr,loss,psnr_val"));
    assert_eq!(log.lines().count(), 4);

    ok(&rsdn(&["eval", "--ckpt", "run/ckpt_final", "--data", "data", "--crop", "2", "--out", "ev"], dir));
    let report = fs::read_to_string(dir.join("ev/report.csv")).unwrap();
    assert!(report.starts_with("sequence,frame,psnr_y"));
    assert_eq!(report.lines().count(), 1 + 4 * 4);
    assert!(dir.join("ev/config.resolved").is_file());

    ok(&rsdn(
        &[
            "infer",
            "--ckpt",
            "run/ckpt_final",
            "--in-dir",
            "data/clip_0001",
            "--out-dir",
            "inf",
            "--dump-hidden",
            "3",
            "--profile-row",
            "7",
        ],
        dir,
    ));
    assert!(dir.join("inf/sr/frame_0003.png").is_file());
    assert!(dir.join("inf/hidden/frame_0002/hidden_02.png").is_file());
    assert!(dir.join("inf/profile.png").is_file());

    ok(&rsdn(&["degrade", "--in-dir", "data/clip_0002/hr", "--out-dir", "deg", "--scale", "2"], dir));
    assert!(dir.join("deg/lr/frame_0001.png").is_file());
    let cfg = fs::read_to_string(dir.join("deg/config.resolved")).unwrap();
    assert!(cfg.contains("scale = 2"));
}

#[test]
fn ablate_ranks_the_loss_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(&rsdn(
        &[
            "ablate",
            "--grid",
            "table2",
            "--data",
            "data",
            "--budget-iters",
            "1",
            "--blocks",
            "1",
            "--channels",
            "2",
            "--set",
            "patch=16",
            "--set",
            "clip_len=2",
            "--set",
            "val_fraction=0.5",
            "--out",
            "abl",
        ],
        dir,
    ));
    let csv = fs::read_to_string(dir.join("abl/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(1).unwrap().starts_with("1,"));
    assert!(fs::read_to_string(dir.join("abl/config.resolved")).unwrap().contains("grid = table2"));
}

#[test]
fn same_seed_and_flags_give_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(&train(dir, "a", &[]));
    ok(&train(dir, "b", &[]));
    for name in ["ckpt_final", "metrics.log"] {
        assert_eq!(fs::read(dir.join("a").join(name)).unwrap(), fs::read(dir.join("b").join(name)).unwrap());
    }
    ok(&rsdn(&["eval", "--ckpt", "a/ckpt_final", "--data", "data", "--crop", "2", "--out", "ea"], dir));
    ok(&rsdn(&["eval", "--ckpt", "b/ckpt_final", "--data", "data", "--crop", "2", "--out", "eb"], dir));
    // timing column aside, the reports agree byte for byte
    let strip = |p: &str| -> Vec<String> {
        fs::read_to_string(dir.join(p))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip("ea/report.csv"), strip("eb/report.csv"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    fs::write(dir.join("cfg.txt"), "channels = 3\nalpha = 0.25\nhsa = off\n").unwrap();
    ok(&train(dir, "run", &["--config", "cfg.txt", "--alpha", "2"]));
    let resolved = fs::read_to_string(dir.join("run/config.resolved")).unwrap();
    assert!(resolved.contains("alpha = 2\n"), "{resolved}");
    assert!(resolved.contains("channels = 4\n"), "{resolved}");
    assert!(resolved.contains("hsa = off\n"), "{resolved}");
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(rsdn(&["train", "--out", "x"], dir).status.code(), Some(2));
    assert_eq!(rsdn(&["train", "--no-such-flag"], dir).status.code(), Some(2));
    assert_eq!(rsdn(&["synth", "--out", "d", "--kind", "spirals"], dir).status.code(), Some(2));

    fs::create_dir_all(dir.join("bad/hr")).unwrap();
    fs::write(dir.join("bad/hr/frame_0001.png"), b"not a png").unwrap();
    let out = rsdn(&["eval", "--data", "bad", "--out", "ev"], dir);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frame_0001.png"));

    synth(dir);
    let out = train(dir, "nan", &["--lr", "1e38"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(dir.join("nan/ckpt_last_good").is_file());
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fovea_core::Frame;

fn fovea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fovea")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = fovea(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn metric(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing from {stdout:?}"))
}

#[test]
fn qpmap_default_geometry_is_78_by_69() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mask.pgm");
    ok(&["qpmap", "--width", "2472", "--height", "2178", "-o", s(&out)]);
    let bytes = std::fs::read(&out).unwrap();
    let header = b"P5\n78 69\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    assert_eq!(bytes.len(), header.len() + 78 * 69);
    // Centre black, corners white-ish.
    let px = &bytes[header.len()..];
    assert_eq!(px[34 * 78 + 39], 0);
    assert!(px[0] > 200);
}

#[test]
fn qpmap_zero_strength_is_black_and_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    for out in [&a, &b] {
        ok(&["qpmap", "--width", "640", "--height", "480", "-A", "0", "-o", s(out)]);
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert!(bytes[b"P5\n20 15\n255\n".len()..].iter().all(|&v| v == 0));

    let csv = dir.path().join("m.csv");
    ok(&["qpmap", "--width", "96", "--height", "64", "--format", "csv", "--gaze", "0.16666666666666666,0.25", "-o", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("0,"));
}

#[test]
fn lossless_round_trip_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let src = corpus_dir().join("coffee.png");
    let (fvc, png) = (dir.path().join("c.fvc"), dir.path().join("c.png"));
    ok(&["encode", "-i", s(&src), "-o", s(&fvc), "--base-qp", "0", "-A", "0"]);
    ok(&["decode", "-i", s(&fvc), "-o", s(&png)]);
    let m = ok(&["metrics", s(&src), s(&png)]);
    assert!(metric(&m, "psnr_db") >= 49.0, "{m}");

    let again = dir.path().join("c2.fvc");
    ok(&["encode", "-i", s(&src), "-o", s(&again), "--base-qp", "0", "-A", "0"]);
    assert_eq!(std::fs::read(&fvc).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn metrics_of_identical_images_is_the_sentinel() {
    let src = corpus_dir().join("rocket.png");
    let m = ok(&["metrics", s(&src), s(&src)]);
    assert_eq!(metric(&m, "psnr_db"), 100.0);
    assert_eq!(metric(&m, "foveal_psnr_db"), 100.0);
}

#[test]
fn warp_then_dewarp_keeps_the_fovea() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("fisheye.png");
    Frame::load_png(corpus_dir().join("astronaut.png")).unwrap().resize(2472, 2178).unwrap().save_png(&src).unwrap();
    let (warped, map, back) = (dir.path().join("w.png"), dir.path().join("w.fwm"), dir.path().join("back.png"));
    ok(&["warp", "-i", s(&src), "-o", s(&warped), "--map", s(&map), "--fixation", "0.4,0.55"]);
    let w = Frame::load_png(&warped).unwrap();
    assert_eq!((w.width(), w.height()), (1100, 1100));
    assert_eq!(&std::fs::read(&map).unwrap()[..4], b"FWM1");
    ok(&["dewarp", "-i", s(&warped), "--map", s(&map), "-o", s(&back), "--source-size", "2472x2178"]);
    // About 2 degrees of a 190-degree lens across 2472 px.
    let m = ok(&["metrics", s(&src), s(&back), "--gaze", "0.4,0.55", "--radius", "0.008"]);
    let (global, foveal) = (metric(&m, "psnr_db"), metric(&m, "foveal_psnr_db"));
    assert!(foveal >= 35.0 && foveal > global, "{m}");
}

#[test]
fn sweep_writes_the_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let img = corpus_dir().join("chelsea.png");
    ok(&["sweep", "--corpus", s(&img), "--a-values", "0,50", "--sigma-values", "0.03", "-o", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "sigma,A,mbits");
    assert_eq!(lines.len(), 3);
    let mbits = |l: &str| l.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert!(lines[1].starts_with("0.03,0,") && lines[2].starts_with("0.03,50,"));
    assert!(mbits(lines[2]) < mbits(lines[1]));
    // Stdout output matches the file.
    let stdout = ok(&["sweep", "--corpus", s(&img), "--a-values", "0,50", "--sigma-values", "0.03"]);
    assert_eq!(stdout, text);
}

#[test]
fn sweep_skips_unreadable_images_and_rejects_an_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.png");
    std::fs::write(&bad, b"nope").unwrap();
    let out = fovea(&["sweep", "--corpus", s(dir.path()), "--a-values", "0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
    std::fs::copy(corpus_dir().join("chelsea.png"), dir.path().join("good.png")).unwrap();
    let stdout = ok(&["sweep", "--corpus", s(dir.path()), "--a-values", "0", "--sigma-values", "0.03"]);
    assert_eq!(stdout.lines().count(), 2);
}

#[test]
fn bad_arguments_fail_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = s(&out);
    for args in [
        vec!["qpmap", "--width", "0", "--height", "10", "-o", out],
        vec!["qpmap", "--width", "10", "--height", "10", "--sigma", "0", "-o", out],
        vec!["qpmap", "--width", "10", "--height", "10", "--gaze", "2,0", "-o", out],
        vec!["decode", "-i", "/nonexistent.fvc", "-o", out],
        vec!["encode", "-i", "/nonexistent.png", "-o", out],
        vec!["sweep", "--corpus", "/nonexistent-dir"],
        vec!["bogus"],
    ] {
        let o = fovea(&args);
        assert!(!o.status.success(), "{args:?} succeeded");
    }
    let garbage = dir.path().join("g.fvc");
    std::fs::write(&garbage, b"FVC1garbage").unwrap();
    assert!(!fovea(&["decode", "-i", s(&garbage), "-o", out]).status.success());
}

#[test]
fn serve_and_probe_talk_to_each_other() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let listen = format!("127.0.0.1:{port}");
    let mut server = Command::new(env!("CARGO_BIN_EXE_fovea"))
        .args(["serve", "--listen", &listen, "--size", "160x96"])
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let url = format!("ws://{listen}");
    let mut result = None;
    for _ in 0..50 {
        let out = fovea(&["probe", "--url", &url, "--seconds", "2"]);
        if out.status.success() {
            result = Some(String::from_utf8(out.stdout).unwrap());
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(100));
    }
    server.kill().unwrap();
    server.wait().unwrap();
    let out = result.expect("probe never connected");
    assert!(metric(&out, "frames") >= 30.0, "{out}");
    assert!(metric(&out, "p95_ms") >= 0.0);
    assert_eq!(metric(&out, "non_monotone"), 0.0);
    assert_eq!(metric(&out, "mismatched"), 0.0);
    assert_eq!(metric(&out, "decode_failures"), 0.0);
}

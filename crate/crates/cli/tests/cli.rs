use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lutfilt_core::container::LutFile;
use lutfilt_core::io;
use lutfilt_core::metrics::ssd;
use lutfilt_core::plane::{Frame, Plane};

fn lutfilt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lutfilt"))
        .current_dir(dir)
        .args(args)
        .env_remove("LUTFILT_THREADS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lutfilt(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    lutfilt(dir, args).status.code().unwrap()
}

fn texture(w: usize, h: usize, seed: usize) -> Plane {
    Plane::from_fn(w, h, |y, x| ((x * 37 + y * 11 + seed * 101) % 251) as u8)
}

/// Rounded ramp plus a fixed pseudo-random +-12 perturbation.
fn noisy_gradient(w: usize, h: usize) -> (Plane, Plane) {
    let clean = Plane::from_fn(w, h, |y, x| (40 + x * 120 / w + y * 60 / h) as u8);
    let noisy = Plane::from_fn(w, h, |y, x| {
        let mut z = (x as u32).wrapping_mul(0x9E37_79B9) ^ (y as u32).wrapping_mul(0x85EB_CA6B);
        z ^= z >> 16;
        z = z.wrapping_mul(0x7FEB_352D);
        z ^= z >> 15;
        (clean.get(y, x) as i32 + (z % 25) as i32 - 12) as u8
    });
    (clean, noisy)
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

#[test]
fn identity_table_leaves_images_unchanged() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    ok(dir, &["build", "--oracle", "identity", "--pattern", "3", "--out", "id.lutf"]);
    write_config(
        dir,
        "one.json",
        r#"{"luma": [{"type": "spatial", "patterns": [3], "luts": {"file": "id.lutf"}}]}"#,
    );
    let img = texture(33, 20, 1);
    io::write_pgm(&dir.join("in.pgm"), &img).unwrap();
    ok(dir, &["filter", "--config", "one.json", "--in", "in.pgm", "--out", "out.pgm"]);
    assert_eq!(io::read_pgm(&dir.join("out.pgm")).unwrap(), img);

    // same through a compacted table
    ok(dir, &["compact", "--in", "id.lutf", "--dw", "2", "--Q", "1", "--p", "4", "--out", "idc.lutf"]);
    write_config(
        dir,
        "onec.json",
        r#"{"luma": [{"type": "spatial", "patterns": [3], "luts": {"file": "idc.lutf"}}]}"#,
    );
    ok(dir, &["filter", "--config", "onec.json", "--in", "in.pgm", "--out", "outc.pgm"]);
    assert_eq!(io::read_pgm(&dir.join("outc.pgm")).unwrap(), img);
}

#[test]
fn identity_preset_roundtrips_yuv() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    ok(dir, &["preset", "--name", "identity", "--out", "id.json"]);
    let frames: Vec<Frame> = (0..2)
        .map(|s| Frame::yuv420(texture(18, 10, s), texture(9, 5, s + 2), texture(9, 5, s + 4)).unwrap())
        .collect();
    io::write_yuv420(&dir.join("in.yuv"), &frames).unwrap();
    ok(dir, &["filter", "--config", "id.json", "--in", "in.yuv", "--size", "18x10", "--out", "out.yuv"]);
    assert_eq!(
        std::fs::read(dir.join("out.yuv")).unwrap(),
        std::fs::read(dir.join("in.yuv")).unwrap()
    );
    // YUV without a size is a usage error
    assert_eq!(code(dir, &["filter", "--config", "id.json", "--in", "in.yuv", "--out", "x.yuv"]), 2);
    assert!(!dir.join("x.yuv").exists());
}

#[test]
fn smoothing_improves_noisy_input_and_rd_never_hurts() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    ok(dir, &["preset", "--name", "smoothing", "--out", "s.json"]);
    let (clean, noisy) = noisy_gradient(96, 64);
    io::write_pgm(&dir.join("clean.pgm"), &clean).unwrap();
    io::write_pgm(&dir.join("noisy.pgm"), &noisy).unwrap();
    let stdout = ok(
        dir,
        &["filter", "--config", "s.json", "--in", "noisy.pgm", "--reference", "clean.pgm", "--out", "f.pgm", "--stats", "ops.json"],
    );
    assert!(stdout.contains("PSNR before"));
    let f = io::read_pgm(&dir.join("f.pgm")).unwrap();
    assert!(ssd(&clean, &f).unwrap() < ssd(&clean, &noisy).unwrap());
    let ops: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("ops.json")).unwrap()).unwrap();
    assert!(ops["ops"]["total_adds"].as_u64().unwrap() > 0);

    ok(
        dir,
        &["filter", "--config", "s.json", "--in", "noisy.pgm", "--reference", "clean.pgm", "--rd-lambda", "0", "--out", "rd.pgm"],
    );
    let rd = io::read_pgm(&dir.join("rd.pgm")).unwrap();
    assert!(ssd(&clean, &rd).unwrap() <= ssd(&clean, &noisy).unwrap());
    assert!(ssd(&clean, &rd).unwrap() <= ssd(&clean, &f).unwrap());
    // lambda needs a reference
    assert_eq!(code(dir, &["filter", "--config", "s.json", "--in", "noisy.pgm", "--rd-lambda", "1", "--out", "z.pgm"]), 2);
}

#[test]
fn stats_are_stable_and_match_table_files() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    let mut files = Vec::new();
    for (pat, oracle) in [("1", "box"), ("2", "weighted:112,48,48,48"), ("3", "edge:20")] {
        let out = format!("p{pat}.lutf");
        ok(dir, &["build", "--oracle", oracle, "--pattern", pat, "--out", &out]);
        files.push(out);
    }
    ok(dir, &["compact", "--in", "p3.lutf", "--dw", "3", "--Q", "1", "--p", "4", "--out", "p3c.lutf"]);
    files[2] = "p3c.lutf".into();
    let luts: Vec<String> = files.iter().map(|f| format!(r#"{{"file": "{f}"}}"#)).collect();
    write_config(
        dir,
        "cfg.json",
        &format!(
            r#"{{"luma": [{{"type": "spatial", "patterns": [1, 2, 3], "luts": [{}]}}]}}"#,
            luts.join(", ")
        ),
    );
    let runs: Vec<String> = ["1", "4", "1", "4", "2", "1"]
        .iter()
        .map(|t| {
            let out = Command::new(env!("CARGO_BIN_EXE_lutfilt"))
                .current_dir(dir)
                .args(["stats", "--config", "cfg.json", "--size", "40x24", "--json"])
                .env("LUTFILT_THREADS", t)
                .output()
                .unwrap();
            assert!(out.status.success());
            String::from_utf8(out.stdout).unwrap()
        })
        .collect();
    assert!(runs.iter().all(|r| *r == runs[0]));
    let v: serde_json::Value = serde_json::from_str(&runs[0]).unwrap();
    let payload: usize = files
        .iter()
        .map(|f| LutFile::read(&dir.join(f)).unwrap().table.payload_bytes())
        .sum();
    assert_eq!(v["luma_lut_bytes"].as_u64().unwrap() as usize, payload);
    assert_eq!(v["total_lut_bytes"], v["luma_lut_bytes"]);
    let text = ok(dir, &["stats", "--config", "cfg.json", "--size", "40x24"]);
    assert!(text.contains("pJ/pixel"));
}

#[test]
fn channel_and_cross_tables_from_files() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    ok(dir, &["build", "--oracle", "identity", "--pattern", "1", "--out", "y.lutf"]);
    ok(dir, &["build", "--oracle", "offset:0,0,0:3", "--channel", "3", "--out", "cc.lutf"]);
    write_config(
        dir,
        "cfg.json",
        r#"{"luma": [{"type": "spatial", "patterns": [1], "luts": {"file": "y.lutf"}}],
            "chroma": [],
            "cross_component": {"u": {"file": "cc.lutf"}, "v": {"oracle": "offset:0,0,0"}}}"#,
    );
    let f = Frame::yuv420(texture(8, 6, 0), Plane::filled(4, 3, 100), Plane::filled(4, 3, 200)).unwrap();
    io::write_yuv420(&dir.join("in.yuv"), std::slice::from_ref(&f)).unwrap();
    ok(dir, &["filter", "--config", "cfg.json", "--in", "in.yuv", "--size", "8x6", "--out", "out.yuv"]);
    let out = io::read_yuv420(&dir.join("out.yuv"), 8, 6).unwrap().remove(0);
    assert_eq!(out.y, f.y);
    assert_eq!(out.u, Plane::filled(4, 3, 103));
    assert_eq!(out.v, f.v);
}

#[test]
fn exit_codes_and_no_partial_outputs() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    assert_eq!(code(dir, &[]), 2);
    assert_eq!(code(dir, &["--help"]), 0);
    assert_eq!(code(dir, &["build", "--oracle", "box", "--out", "a.lutf"]), 2);
    assert_eq!(code(dir, &["build", "--oracle", "box", "--pattern", "9", "--out", "a.lutf"]), 2);
    assert_eq!(code(dir, &["build", "--oracle", "box", "--pattern", "1", "--q", "9", "--out", "a.lutf"]), 2);
    assert_eq!(code(dir, &["stats", "--config", "missing.json", "--size", "8x8"]), 3);
    std::fs::write(dir.join("junk.lutf"), b"LUTF garbage").unwrap();
    assert_eq!(code(dir, &["compact", "--in", "junk.lutf", "--dw", "2", "--Q", "1", "--p", "4", "--out", "b.lutf"]), 3);
    ok(dir, &["build", "--oracle", "box", "--pattern", "1", "--out", "a.lutf"]);
    assert_eq!(code(dir, &["compact", "--in", "a.lutf", "--dw", "2", "--Q", "1", "--p", "5", "--out", "b.lutf"]), 2);
    assert!(!dir.join("b.lutf").exists());

    write_config(dir, "bad.json", r#"{"luma": [], "bogus": 1}"#);
    io::write_pgm(&dir.join("in.pgm"), &texture(4, 4, 0)).unwrap();
    assert_eq!(code(dir, &["filter", "--config", "bad.json", "--in", "in.pgm", "--out", "o.pgm"]), 3);
    assert!(!dir.join("o.pgm").exists());

    assert_eq!(code(dir, &["verify", "--suite", "everything"]), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_lutfilt"))
        .current_dir(dir)
        .args(["stats", "--config", "bad.json", "--size", "8x8"])
        .env("LUTFILT_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // rebuilding is idempotent and leaves no temp files
    let first = std::fs::read(dir.join("a.lutf")).unwrap();
    ok(dir, &["build", "--oracle", "box", "--pattern", "1", "--out", "a.lutf"]);
    assert_eq!(std::fs::read(dir.join("a.lutf")).unwrap(), first);
    assert!(std::fs::read_dir(dir)
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn verify_suite_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["verify", "--suite", "all", "--samples", "20000", "--stride", "16"]);
    assert!(out.contains("PASS simplex weight conservation"));
    assert!(!out.contains("FAIL"));
}

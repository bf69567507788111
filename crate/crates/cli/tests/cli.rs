use std::path::Path;
use std::process::{Command, Output};

fn kernattr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kernattr"))
        .args(args)
        .current_dir(dir)
        .env_remove("KERNATTR_ARCH")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = kernattr(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const TINY: [&str; 8] = [
    "--sample-size",
    "16",
    "--epochs",
    "2",
    "--conv-width",
    "6",
    "--conv-width2",
    "6",
];

/// Synthetic corpus with vocab.toml and cache.bin in `dir`.
fn prepared(styles: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out", "corpus", "--styles", styles, "--per-style", "10"]);
    ok(d, &["build-vocab", "--manifest", "corpus/manifest.tsv", "--vocab", "vocab.toml"]);
    ok(d, &["encode", "--manifest", "corpus/manifest.tsv", "--vocab", "vocab.toml", "--cache", "cache.bin"]);
    dir
}

#[test]
fn toy_manifest_vocab_is_union_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("a.krn"), "**kern\n4c\n8d\n*-\n").unwrap();
    std::fs::write(d.join("b.krn"), "**kern\t**kern\n4.e\t2g\n*-\t*-\n").unwrap();
    std::fs::write(d.join("c.krn"), "**kern\n16r\n8f\n*-\n").unwrap();
    std::fs::write(d.join("m.tsv"), "a.krn\tx\t1\nb.krn\ty\t1\nc.krn\tx\t1\n").unwrap();
    ok(d, &["build-vocab", "--manifest", "m.tsv", "--vocab", "v1.toml"]);
    ok(d, &["build-vocab", "--manifest", "m.tsv", "--vocab", "v2.toml"]);
    let v1 = std::fs::read_to_string(d.join("v1.toml")).unwrap();
    assert_eq!(v1, std::fs::read_to_string(d.join("v2.toml")).unwrap());
    for value in ["\"1/4\"", "\"1/8\"", "\"3/8\"", "\"1/2\"", "\"1/16\""] {
        assert!(v1.contains(value), "{value} missing from\n{v1}");
    }
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("empty.tsv"), "# nothing\n").unwrap();
    let out = kernattr(d, &["build-vocab", "--manifest", "empty.tsv", "--vocab", "v.toml"]);
    assert_eq!(code(&out), 2);
    assert!(!d.join("v.toml").exists());

    let out = kernattr(d, &["xval", "--vocab", "v.toml", "--cache", "c.bin", "--out", "r"]);
    assert_eq!(code(&out), 2, "missing artifacts");

    let out = kernattr(d, &["xval", "--arch", "transformer"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("transformer"));

    std::fs::write(d.join("bad.krn"), "**kern\n4q\n*-\n").unwrap();
    std::fs::write(d.join("bad.tsv"), "bad.krn\tx\t1\n").unwrap();
    let out = kernattr(d, &["build-vocab", "--manifest", "bad.tsv", "--vocab", "v.toml"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.krn"));
}

#[test]
fn cache_must_match_vocab() {
    let dir = prepared("2");
    let d = dir.path();
    let mut vocab = std::fs::read_to_string(d.join("vocab.toml")).unwrap();
    vocab.push_str("\n# edited\n");
    std::fs::write(d.join("vocab.toml"), vocab).unwrap();
    let mut args = vec!["xval", "--vocab", "vocab.toml", "--cache", "cache.bin", "--out", "r"];
    args.extend(TINY);
    let out = kernattr(d, &args);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("different vocabulary"));
}

#[test]
fn divergence_exits_3() {
    let dir = prepared("2");
    let mut args = vec![
        "xval", "--vocab", "vocab.toml", "--cache", "cache.bin", "--out", "r", "--arch", "voice", "--lr", "1e308",
    ];
    args.extend(TINY);
    let out = kernattr(dir.path(), &args);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn subset_writes_square_confusion_and_reports() {
    let dir = prepared("3");
    let d = dir.path();
    let mut args = vec![
        "subset", "--composers", "style-2,style-0,style-1", "--vocab", "vocab.toml", "--cache", "cache.bin", "--out",
        "sub",
    ];
    args.extend(TINY);
    let stdout = ok(d, &args);
    assert!(stdout.lines().last().unwrap().starts_with("overall\t30\t"));
    let confusion = std::fs::read_to_string(d.join("sub/confusion.tsv")).unwrap();
    let rows: Vec<&str> = confusion.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split('\t').count() == 4));
    assert!(rows[0].ends_with("style-2\tstyle-0\tstyle-1"));

    let report = ok(d, &["report", "sub"]);
    assert!(report.starts_with(&stdout));
    assert!(report.contains("command: kernattr subset --composers style-2,style-0,style-1"));

    std::fs::write(d.join("sub/runs/fold-04.json"), "not json").unwrap();
    assert_eq!(code(&kernattr(d, &["report", "sub"])), 2);

    std::fs::create_dir(d.join("empty")).unwrap();
    let out = ok(d, &["report", "empty"]);
    assert!(out.contains("no runs"));
}

#[test]
fn env_overrides_flags() {
    let dir = prepared("2");
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_kernattr"))
        .args(["xval", "--out", "r"])
        .args(TINY)
        .current_dir(d)
        .env("KERNATTR_VOCAB", "vocab.toml")
        .env("KERNATTR_CACHE", "cache.bin")
        .env("KERNATTR_ARCH", "histogram")
        .env("KERNATTR_SEED", "17")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("# architecture=histogram seed=17 sample=16 folds=10\n"), "{stdout}");
}

#[test]
fn sweep_writes_grid() {
    let dir = prepared("2");
    let d = dir.path();
    let mut args = vec![
        "sweep", "--vocab", "vocab.toml", "--cache", "cache.bin", "--out", "sw", "--arch", "histogram,voice",
        "--sizes", "4,8",
    ];
    args.extend(TINY);
    let table = ok(d, &args);
    assert_eq!(table.lines().next().unwrap(), "architecture\ts=4\ts=8\tspearman");
    assert_eq!(table.lines().count(), 3);
    for cell in ["histogram-s4", "histogram-s8", "voice-s4", "voice-s8"] {
        assert!(d.join("sw").join(cell).join("summary.tsv").exists(), "{cell}");
    }
    let report = ok(d, &["report", "sw"]);
    assert_eq!(report.matches("== ").count(), 4);
    assert!(report.ends_with(&table));
}

#[test]
fn manifest_scan_and_template() {
    let dir = prepared("2");
    let d = dir.path();
    let scanned = ok(d, &["manifest", "corpus"]);
    let entries: Vec<&str> = scanned.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(entries.len(), 20);
    assert!(entries.iter().all(|l| Path::new(l.split('\t').next().unwrap()).is_absolute()));
    assert!(entries[0].ends_with("style-0/score-000.krn\tstyle-0\t1/1"));

    // Written elsewhere, the scanned manifest still encodes.
    std::fs::create_dir(d.join("elsewhere")).unwrap();
    ok(d, &["manifest", "corpus", "--out", "elsewhere/m.tsv"]);
    ok(d, &["build-vocab", "--manifest", "elsewhere/m.tsv", "--vocab", "v2.toml"]);
    assert_eq!(
        std::fs::read(d.join("v2.toml")).unwrap(),
        std::fs::read(d.join("vocab.toml")).unwrap()
    );

    let template = ok(d, &["manifest", "--template"]);
    assert!(template.contains("josquin\t1/4"));
    assert!(template.contains("joplin\t1/1"));
}

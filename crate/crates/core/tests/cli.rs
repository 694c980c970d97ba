mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lexalign::io::{read_map, read_space_binary};

fn lexalign(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexalign"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const VEC: &str = "4 3\na 1 0 0\nb 0 3 4\nnew york 1 1 1\nc 0 0 2\n";

#[test]
fn ingest_is_deterministic_and_truncates() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.vec"), VEC).unwrap();
    ok(&lexalign(dir.path(), &["ingest", "--vec", "x.vec", "--out", "a.lxrw"]));
    ok(&lexalign(dir.path(), &["ingest", "--vec", "x.vec", "--out", "b.lxrw"]));
    assert_eq!(fs::read(dir.path().join("a.lxrw")).unwrap(), fs::read(dir.path().join("b.lxrw")).unwrap());

    let space = read_space_binary(dir.path().join("a.lxrw")).unwrap();
    assert_eq!(space.vocab().words(), ["a", "b", "c"]);
    assert!(space.is_normalized());
    assert_eq!(space.lookup("b").unwrap(), [0.0, 0.6, 0.8]);

    ok(&lexalign(dir.path(), &["ingest", "--vec", "x.vec", "--max", "2", "--out", "c.lxrw"]));
    assert_eq!(read_space_binary(dir.path().join("c.lxrw")).unwrap().len(), 2);
}

#[test]
fn missing_input_exits_with_two_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = lexalign(dir.path(), &["ingest", "--vec", "nope.vec", "--out", "a.lxrw"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.vec"));

    let out = lexalign(dir.path(), &["ingest", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "[paths]\nencoder_src = \"a\"\nencoder_tgt = \"b\"\ntrain_lexicon = \"c\"\ntest_lexicon = \"d\"\nout_dir = \"out\"\n[stages]\ntrain = true\n",
    )
    .unwrap();
    let out = lexalign(dir.path(), &["run", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mine"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.vec"), "2 3\na 1 0\nb 0 1 0\n").unwrap();
    let out = lexalign(dir.path(), &["ingest", "--vec", "bad.vec", "--out", "a.lxrw"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.vec:2: 2 values, expected 3"));
}

#[test]
fn stage_commands_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    common::synthetic_run(d, &common::small_config(2), &[0.3]);
    let out = ["--out-dir", "o"];
    let run = |args: &[&str]| ok(&lexalign(d, &[args, &out[..]].concat()));

    run(&["induce", "--src", "src.static.lxrw", "--tgt", "tgt.static.lxrw", "--lexicon", "train.tsv"]);
    assert_eq!(read_map(d.join("o/clwe_map.lxrw")).unwrap().src_dim(), 8);

    run(&["mine", "--src", "src.enc.lxrw", "--tgt", "tgt.enc.lxrw", "--lexicon", "train.tsv", "--negatives", "4"]);
    let table = fs::read_to_string(d.join("o/negatives.tsv")).unwrap();
    assert_eq!(table.lines().count(), 300);

    let train = ["train", "--src", "src.enc.lxrw", "--tgt", "tgt.enc.lxrw", "--lexicon", "train.tsv", "--negatives", "o/negatives.tsv", "--epochs", "2"];
    let stdout = run(&[&train[..], &["--seed", "4"]].concat());
    assert_eq!(stdout.lines().count(), 2);
    let first = fs::read(d.join("o/adapter.lxrw")).unwrap();
    run(&[&train[..], &["--seed", "4"]].concat());
    assert_eq!(fs::read(d.join("o/adapter.lxrw")).unwrap(), first);

    let views = [
        "--static-src", "o/static_src.mapped.lxrw",
        "--static-tgt", "o/static_tgt.lxrw",
        "--encoder-src", "src.enc.lxrw",
        "--encoder-tgt", "tgt.enc.lxrw",
        "--adapter", "o/adapter.lxrw",
    ];
    run(&[&["map"][..], &views, &["--lexicon", "train.tsv"]].concat());
    let map = read_map(d.join("o/static_to_encoder.lxrw")).unwrap();
    assert_eq!((map.src_dim(), map.dst_dim()), (8, 32));

    for (lang, st, enc) in [("src", "o/static_src.mapped.lxrw", "src.enc.lxrw"), ("tgt", "o/static_tgt.lxrw", "tgt.enc.lxrw")] {
        let dest = format!("o/{lang}.mix.lxrw");
        run(&[
            "interpolate", "--static", st, "--encoder", enc, "--map", "o/static_to_encoder.lxrw",
            "--adapter", "o/adapter.lxrw", "--lambda", "0.4", "--out", &dest,
        ]);
    }
    let stdout = run(&["eval-bli", "--src", "o/src.mix.lxrw", "--tgt", "o/tgt.mix.lxrw", "--test", "test.tsv", "--k", "1,5", "--items"]);
    assert!(stdout.starts_with("P@1\t"));
    assert_eq!(fs::read_to_string(d.join("o/bli.items.tsv")).unwrap().lines().count(), 100);

    let grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    run(&[&["sweep"][..], &views, &["--map", "o/static_to_encoder.lxrw", "--bli-test", "test.tsv", "--lambdas", grid]].concat());
    let csv = fs::read_to_string(d.join("o/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "lambda,P@1");
    assert_eq!(lines.len(), 12);
    let at_04: f64 = lines[5].split(',').nth(1).unwrap().parse().unwrap();
    assert!(lines[5].starts_with("0.4,"));
    assert_eq!(format!("{at_04}"), stdout.lines().next().unwrap().split('\t').nth(1).unwrap());
}

#[test]
fn empty_lambda_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = lexalign(
        dir.path(),
        &[
            "sweep", "--static-src", "a", "--static-tgt", "b", "--encoder-src", "c", "--encoder-tgt", "d",
            "--map", "m", "--bli-test", "t", "--lambdas", "",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_command_applies_seed_and_out_dir_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = common::synthetic_run(dir.path(), &common::small_config(8), &[0.0, 0.3, 0.5, 1.0]);
    fs::write(dir.path().join("run.toml"), cfg.to_toml()).unwrap();
    let stdout = ok(&lexalign(dir.path(), &["run", "--config", "run.toml", "--seed", "21", "--out-dir", "elsewhere", "--threads", "2"]));
    assert!(stdout.contains("bli_lambda0.5\tP@1\t"));
    let manifest = fs::read_to_string(dir.path().join("elsewhere/manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 21"));
    for l in ["0", "0.3", "0.5", "1"] {
        assert!(dir.path().join(format!("elsewhere/bli_lambda{l}.tsv")).is_file());
    }
}

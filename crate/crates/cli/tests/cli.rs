use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gng-shape"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gng-shape")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or_default().to_string()
}

// Tiny nets keep the plumbing tests fast; recognition quality is the
// core crate's concern, not the CLI's.
fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.conf");
    std::fs::write(&path, "n_max = 60\nlambda = 50\n").unwrap();
    path.display().to_string()
}

#[test]
fn synth_featurize_evaluate_distance_chain() {
    let dir = tempfile::tempdir().unwrap();
    let conf = tiny_config(dir.path());
    let corpus = dir.path().join("corpus");
    let feat = dir.path().join("feat");
    let eval = dir.path().join("eval");
    let dist = dir.path().join("dist");

    let out = run(&[
        "synth", "--config", &conf, "--out", corpus.to_str().unwrap(),
        "--subjects", "2", "--samples", "2",
    ]);
    assert_ok(&out);
    assert_eq!(std::fs::read_dir(&corpus).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png")
    }).count(), 24);

    let out = run(&[
        "featurize", "--config", &conf, "--root", corpus.to_str().unwrap(),
        "--layout", "generic-mask", "--out", feat.to_str().unwrap(), "--dump-graphs",
    ]);
    assert_ok(&out);
    let sig_path = feat.join("signatures.txt");
    let sig_text = std::fs::read_to_string(&sig_path).unwrap();
    assert_eq!(sig_text.lines().count(), 24);
    assert_eq!(std::fs::read_dir(feat.join("graphs")).unwrap().count(), 24);
    assert!(feat.join("run.conf").exists());

    let out = run(&[
        "evaluate", sig_path.to_str().unwrap(), "--protocol", "h-h", "--k", "1",
        "--out", eval.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let summary = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(summary.contains("protocol h-h"), "summary was: {summary}");
    assert!(summary.contains("mean_accuracy "));
    let confusion = std::fs::read_to_string(eval.join("confusion.csv")).unwrap();
    assert!(confusion.starts_with("true\\predicted,0,1,2,3,4,5"));
    assert_eq!(std::fs::read_to_string(eval.join("summary.txt")).unwrap(), summary);

    let out = run(&[
        "distance", sig_path.to_str().unwrap(), sig_path.to_str().unwrap(),
        "--out", dist.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let matrix = std::fs::read_to_string(dist.join("distances.csv")).unwrap();
    let rows: Vec<&str> = matrix.lines().collect();
    assert_eq!(rows.len(), 24);
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 24);
        assert_eq!(cells[i], "0", "self-distance must be exactly zero");
    }
}

#[test]
fn featurize_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let conf = tiny_config(dir.path());
    let corpus = dir.path().join("corpus");
    assert_ok(&run(&[
        "synth", "--config", &conf, "--out", corpus.to_str().unwrap(),
        "--subjects", "1", "--samples", "2",
    ]));
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        assert_ok(&run(&[
            "featurize", "--config", &conf, "--root", corpus.to_str().unwrap(),
            "--out", out_dir.to_str().unwrap(), "--seed", "9",
        ]));
        texts.push(std::fs::read(out_dir.join("signatures.txt")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn synth_rerun_is_byte_identical_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let read_one = |out: &Path| std::fs::read(out.join("c2_s0_0.png")).unwrap();
    for (name, seed) in [("s0", "0"), ("s0again", "0"), ("s1", "1")] {
        let out = dir.path().join(name);
        assert_ok(&run(&[
            "synth", "--out", out.to_str().unwrap(), "--subjects", "1",
            "--samples", "1", "--seed", seed,
        ]));
    }
    assert_eq!(read_one(&dir.path().join("s0")), read_one(&dir.path().join("s0again")));
    assert_ne!(read_one(&dir.path().join("s0")), read_one(&dir.path().join("s1")));
}

#[test]
fn usage_errors_exit_1_with_prefix() {
    let out = run(&["featurize", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error[usage]:"), "got: {}", stderr_line(&out));

    // featurize without a root is a usage problem, not a data problem
    let out = run(&["featurize"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error[usage]:"));

    let out = run(&["evaluate", "whatever.txt", "--protocol", "l-oops-o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error[usage]:"));
}

#[test]
fn data_errors_exit_2_with_prefix() {
    let dir = tempfile::tempdir().unwrap();

    let out = run(&["featurize", "--root", dir.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error[data]:"), "got: {}", stderr_line(&out));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0 0 1 not-a-number\n").unwrap();
    let out = run(&["evaluate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let line = stderr_line(&out);
    assert!(line.starts_with("error[data]:") && line.contains(":1:"), "got: {line}");

    let out = run(&["dump-graph", dir.path().join("missing.png").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error[data]:"));
}

#[test]
fn cli_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf_path = dir.path().join("run.conf");
    let file_out = dir.path().join("from-file");
    let flag_out = dir.path().join("from-flag");
    std::fs::write(
        &conf_path,
        format!("n_max = 60\nlambda = 50\nout = {}\n", file_out.display()),
    )
    .unwrap();

    assert_ok(&run(&[
        "synth", "--config", conf_path.to_str().unwrap(), "--subjects", "1", "--samples", "1",
        "--out", flag_out.to_str().unwrap(),
    ]));
    assert!(flag_out.join("c0_s0_0.png").exists());
    assert!(!file_out.exists());

    assert_ok(&run(&[
        "synth", "--config", conf_path.to_str().unwrap(), "--subjects", "1", "--samples", "1",
    ]));
    assert!(file_out.join("c0_s0_0.png").exists());
}

#[test]
fn dump_graph_emits_parseable_graph_and_bulge_lines() {
    let dir = tempfile::tempdir().unwrap();
    let conf = tiny_config(dir.path());
    let corpus = dir.path().join("corpus");
    assert_ok(&run(&[
        "synth", "--config", &conf, "--out", corpus.to_str().unwrap(),
        "--subjects", "1", "--samples", "1",
    ]));
    let mask = corpus.join("c5_s0_0.png");
    let out = run(&["dump-graph", mask.to_str().unwrap(), "--config", &conf, "--seed", "4"]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let header: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header[0], "gng");
    assert_eq!(header[1], "60");
    let graph_part: String =
        text.lines().take_while(|l| !l.starts_with("bulge")).collect::<Vec<_>>().join("\n");
    gng_shape::GngGraph::parse(&graph_part).expect("dump must be parseable");
    for line in text.lines().filter(|l| l.starts_with("bulge")) {
        assert_eq!(line.split_whitespace().count(), 6);
    }
}

#[test]
fn jobs_flag_does_not_change_output_order() {
    let dir = tempfile::tempdir().unwrap();
    let conf = tiny_config(dir.path());
    let corpus = dir.path().join("corpus");
    assert_ok(&run(&[
        "synth", "--config", &conf, "--out", corpus.to_str().unwrap(),
        "--subjects", "1", "--samples", "2",
    ]));
    let mut texts = Vec::new();
    for (name, jobs) in [("j1", "1"), ("j8", "8")] {
        let out_dir = dir.path().join(name);
        assert_ok(&run(&[
            "featurize", "--config", &conf, "--root", corpus.to_str().unwrap(),
            "--out", out_dir.to_str().unwrap(), "--jobs", jobs,
        ]));
        texts.push(std::fs::read(out_dir.join("signatures.txt")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

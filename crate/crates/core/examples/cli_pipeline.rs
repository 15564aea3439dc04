//! Drives the command-line stages in-process: synth, extract, grid,
//! cluster, train, explain and report into one run directory.

fn step(args: &[&str]) {
    let code = texturekit::cli::run(std::iter::once("texturekit").chain(args.iter().copied()));
    assert_eq!(code, 0, "texturekit {} failed", args[0]);
}

fn main() {
    let root = std::env::temp_dir().join("texturekit-cli-example");
    let run = root.join("run");
    let data = root.join("data");
    let manifest = data.join("manifest.csv");
    let (run, data, manifest) = (run.to_str().unwrap(), data.to_str().unwrap(), manifest.to_str().unwrap());
    step(&["synth", "--out", data, "--patients", "16"]);
    step(&["extract", "--run-dir", run, "--dataset", manifest, "--augment-count", "3"]);
    step(&["grid", "--run-dir", run, "--family", "svm"]);
    step(&["cluster", "--run-dir", run]);
    step(&["train", "--run-dir", run, "--trees", "100", "--max-depth", "0", "--min-leaf", "2", "--min-split", "1"]);
    step(&["explain", "--run-dir", run]);
    step(&["report", "--run-dir", run, "--no-timestamp"]);
    print!("{}", std::fs::read_to_string(root.join("run/metrics.csv")).unwrap());
}

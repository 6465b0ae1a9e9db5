//! Running a JSON experiment definition from code, as the command line does.

use capcert::cli::{parse_config, run_experiments, RunOptions};

const CONFIG: &str = r#"{
  "name": "loss-sweep",
  "protocol": "p2",
  "channel": {"kind": "loss", "tau": 0.9},
  "params": {"n": 1000000, "k": 1000000, "n_bar": 9.5, "delta": 0.05, "epsilon": 0.02},
  "sweep": [{"param": "tau", "values": [0.7, 0.8, 0.9]}],
  "output": {"path": "loss_sweep.csv"}
}"#;

fn main() -> capcert::Result<()> {
    let dir = std::env::temp_dir().join("capcert-example");
    let cfgs = parse_config(CONFIG)?;
    let opts = RunOptions { out_dir: Some(dir), seed: None, threads: Some(1) };
    let report = run_experiments(&cfgs, &opts)?;
    for file in &report.files {
        println!("== {}", file.display());
        print!("{}", std::fs::read_to_string(file)?);
    }
    Ok(())
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn bt(args: &[&str], dir: &Path) -> Run {
    bt_env(args, dir, &[])
}

pub fn bt_env(args: &[&str], dir: &Path, env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bt"));
    cmd.args(args).current_dir(dir).env_remove("BT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output { status, stdout, stderr } = cmd.output().expect("failed to launch bt");
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

pub fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// CSV rows below the header, ignoring `#` provenance lines.
pub fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

pub fn event_study_json(beta_pre: &[f64], beta_post: &[f64], sigma: &[Vec<f64>]) -> String {
    let pre: Vec<i64> = (-(beta_pre.len() as i64)..0).collect();
    let post: Vec<i64> = (1..=beta_post.len() as i64).collect();
    serde_json::json!({
        "pre_periods": pre,
        "post_periods": post,
        "beta_pre": beta_pre,
        "beta_post": beta_post,
        "sigma": sigma,
    })
    .to_string()
}

pub fn diagonal(d: &[f64]) -> Vec<Vec<f64>> {
    (0..d.len())
        .map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect())
        .collect()
}

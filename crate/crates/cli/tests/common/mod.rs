#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use snp_core::io::{write_pool, Format};
use snp_core::{SourcePool, TargetSet};
use snp_testkit::target_pool;

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn snp(args: &[&str], envs: &[(&str, &str)]) -> Outcome {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_snp"));
    cmd.args(args).env_remove("SNP_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn snp");
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn write(dir: &Path, file: &str, pool: &SourcePool) -> PathBuf {
    let path = dir.join(file);
    write_pool(&path, pool, Format::from_path(&path)).unwrap();
    path
}

pub fn write_target(dir: &Path, file: &str, target: &TargetSet) -> PathBuf {
    write(dir, file, &target_pool(target))
}

pub fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn read_manifest(dir: &Path) -> snp_cli::Manifest {
    snp_cli::Manifest::read(&dir.join(snp_cli::manifest::MANIFEST_FILE)).unwrap()
}

pub fn manifest_text(dir: &Path) -> String {
    std::fs::read_to_string(dir.join(snp_cli::manifest::MANIFEST_FILE)).unwrap()
}

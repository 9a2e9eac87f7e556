use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::commands::{CliError, Rendered};
use crate::ReplayArgs;

#[derive(Debug, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub cwd: PathBuf,
    pub params: Value,
    pub seeds: Value,
    pub version: String,
    pub inputs: Vec<FileDigest>,
    pub output: FileDigest,
    pub timestamp: String,
}

pub fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

impl Manifest {
    pub fn new(command: &str, argv: &[String], r: &Rendered, out: &Path) -> Result<Self, CliError> {
        let inputs = r
            .inputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.clone(),
                    sha256: digest_file(p)?,
                })
            })
            .collect::<Result<_, CliError>>()?;
        Ok(Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir()?,
            params: r.params.clone(),
            seeds: r.seeds.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            output: FileDigest {
                path: out.to_path_buf(),
                sha256: sha256_hex(&r.text),
            },
            timestamp: chrono::Utc::now().to_rfc3339(),
        })
    }
}

/// The recorded argv with `--out` pointed at `out` and `--json` dropped.
fn replay_argv(argv: &[String], out: &Path) -> Vec<String> {
    let mut v = Vec::with_capacity(argv.len());
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" || a == "--json" {
            it.next();
        } else if a.starts_with("--out=") || a.starts_with("--json=") {
        } else {
            v.push(a.clone());
        }
    }
    v.push("--out".into());
    v.push(out.to_string_lossy().into_owned());
    v
}

pub fn replay(a: &ReplayArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.manifest).map_err(|e| CliError::Data(format!("{}: {e}", a.manifest.display())))?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", a.manifest.display())))?;
    let here = std::env::current_dir()?;
    let out = here.join(a.out.as_ref().unwrap_or(&m.cwd.join(&m.output.path)));
    std::env::set_current_dir(&m.cwd).map_err(|e| CliError::Data(format!("{}: {e}", m.cwd.display())))?;
    for input in &m.inputs {
        let now = digest_file(&input.path)?;
        if now != input.sha256 {
            return Err(CliError::Data(format!("input {} changed since the recorded run", input.path.display())));
        }
    }
    if let Some(seed) = m.seeds.get("tie_break").or(m.seeds.get("base")).or(m.seeds.get("monte_carlo")) {
        if let Some(seed) = seed.as_u64() {
            std::env::set_var("LFDR_SEED", seed.to_string());
        }
    }
    crate::run(replay_argv(&m.argv, &out))?;
    let now = digest_file(&out)?;
    if now != m.output.sha256 {
        return Err(CliError::Data(format!("replayed output {} differs from the recorded digest", out.display())));
    }
    eprintln!("lfdr: replay reproduced {} ({now})", out.display());
    Ok(())
}

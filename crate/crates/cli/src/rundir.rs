//! Run directories and manifests. Every verb writes its outputs into a
//! fresh directory under the output root, then seals a manifest recording
//! the resolved configuration, seeds, code version, timestamp, and a
//! SHA-256 digest of every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ConfigMap;
use crate::CliResult;

/// Environment variable that overrides the default output root.
pub const RUN_DIR_ENV: &str = "WULFF_RUN_DIR";

/// Default output root when neither `--out-dir` nor the environment set one.
pub const DEFAULT_ROOT: &str = "wulff-runs";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// Which verb produced this run.
    pub verb: String,
    /// Crate version that produced the outputs.
    pub version: String,
    /// UTC wall-clock time the run finished, RFC 3339.
    pub timestamp: String,
    /// Master seed for stochastic verbs; absent for exact ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// The fully resolved configuration (file merged with flags).
    pub config: BTreeMap<String, String>,
    /// Relative output path -> lowercase hex SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

/// A run directory being filled in. Files go through [`RunDir::write`] so
/// their digests are captured for the manifest.
#[derive(Debug)]
pub struct RunDir {
    dir: PathBuf,
    outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

impl RunDir {
    /// Creates `<root>/<verb>-NNN` with the smallest unused counter.
    /// Root precedence: `--out-dir` flag, then the environment override,
    /// then `./wulff-runs`.
    pub fn create(out_dir: Option<&Path>, verb: &str) -> CliResult<Self> {
        let root: PathBuf = match out_dir {
            Some(dir) => dir.to_path_buf(),
            None => match std::env::var_os(RUN_DIR_ENV) {
                Some(dir) => PathBuf::from(dir),
                None => PathBuf::from(DEFAULT_ROOT),
            },
        };
        std::fs::create_dir_all(&root)?;
        for counter in 0..10_000u32 {
            let dir = root.join(format!("{verb}-{counter:03}"));
            match std::fs::create_dir(&dir) {
                Ok(()) => {
                    return Ok(RunDir {
                        dir,
                        outputs: BTreeMap::new(),
                    })
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(crate::usage(format!(
            "output root {} holds 10000 runs for this verb; point {RUN_DIR_ENV} elsewhere",
            root.display()
        )))
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes a top-level output file and records its digest.
    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents.as_bytes())?;
        self.outputs
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    /// Writes `subdir/name`, creating the subdirectory on first use.
    pub fn write_in(&mut self, subdir: &str, name: &str, contents: &str) -> CliResult<PathBuf> {
        let parent = self.dir.join(subdir);
        std::fs::create_dir_all(&parent)?;
        let path = parent.join(name);
        std::fs::write(&path, contents.as_bytes())?;
        self.outputs
            .insert(format!("{subdir}/{name}"), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    /// Seals the run: writes the resolved config echo and `manifest.json`,
    /// returning the manifest path. The config echo is itself an output and
    /// is hashed; the manifest is the one file outside its own digest map.
    pub fn finalize(
        mut self,
        verb: &str,
        master_seed: Option<u64>,
        config: &ConfigMap,
    ) -> CliResult<PathBuf> {
        self.write("config.txt", &config.emit())?;
        let manifest = Manifest {
            verb: verb.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            master_seed,
            config: config.entries().clone(),
            outputs: self.outputs,
        };
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| crate::CliError::Core(wulff_core::Error::numerical(e.to_string())))?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_match_a_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn run_directories_count_up_and_manifests_capture_outputs() {
        let tmp = std::env::temp_dir().join(format!("wulff-rundir-test-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&tmp);
        let mut first = RunDir::create(Some(&tmp), "sample").unwrap();
        first.write("a.txt", "alpha\n").unwrap();
        let second = RunDir::create(Some(&tmp), "sample").unwrap();
        assert_ne!(first.path(), second.path());
        assert!(first.path().ends_with("sample-000"));
        assert!(second.path().ends_with("sample-001"));

        let mut config = ConfigMap::new();
        config.set("beta", 1.5);
        let manifest_path = first.finalize("sample", Some(7), &config).unwrap();
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
        assert_eq!(manifest.verb, "sample");
        assert_eq!(manifest.master_seed, Some(7));
        assert_eq!(manifest.config.get("beta").unwrap(), "1.5");
        assert_eq!(
            manifest.outputs.get("a.txt").unwrap(),
            &sha256_hex(b"alpha\n")
        );
        assert!(manifest.outputs.contains_key("config.txt"));
        let _ = std::fs::remove_dir_all(&tmp);
    }
}

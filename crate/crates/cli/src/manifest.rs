//! Run manifest: a config snapshot plus one line per finished realization,
//! appended as work completes so an interrupted run can be resumed.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use homog_core::experiments::ExperimentConfig;

use crate::config;

pub const FILE_NAME: &str = "manifest.txt";

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub path: PathBuf,
    pub command: String,
    pub config: ExperimentConfig,
    /// Finished `(L index, realization index)` pairs, successful or failed.
    pub done: BTreeSet<(usize, usize)>,
    pub failed: BTreeSet<(usize, usize)>,
    pub complete: bool,
}

impl RunManifest {
    /// Starts a fresh manifest, replacing any previous one.
    pub fn create(path: &Path, command: &str, cfg: &ExperimentConfig, outputs: &[&str]) -> Result<Self> {
        let mut text = format!(
            "tool = homog-lab {}\ncommand = {command}\nstarted = {}\noutputs = {}\n",
            env!("CARGO_PKG_VERSION"),
            now(),
            outputs.join(",")
        );
        text.push_str(&config::to_text(cfg));
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(Self {
            path: path.to_path_buf(),
            command: command.to_string(),
            config: cfg.clone(),
            done: BTreeSet::new(),
            failed: BTreeSet::new(),
            complete: false,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let pairs = config::parse_pairs(&text).context("corrupt manifest")?;
        let mut cfg_text = String::new();
        let mut command = None;
        let mut done = BTreeSet::new();
        let mut failed = BTreeSet::new();
        let mut complete = false;
        let parse_item = |v: &str| -> Result<(usize, usize)> {
            let mut it = v.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(l)), Some(Ok(i)), None) => Ok((l, i)),
                _ => bail!("corrupt manifest: bad completion line {v:?}"),
            }
        };
        for (k, v) in &pairs {
            match k.as_str() {
                "tool" | "started" | "finished" | "outputs" | "count" => {}
                "command" => command = Some(v.clone()),
                "status" => complete = v == "complete",
                "done" => {
                    done.insert(parse_item(v)?);
                }
                "failed" => {
                    failed.insert(parse_item(v)?);
                }
                key if config::KEYS.contains(&key) => cfg_text.push_str(&format!("{k} = {v}\n")),
                _ => bail!("corrupt manifest: unknown key {k:?}"),
            }
        }
        let command = command.context("corrupt manifest: no command line")?;
        let found: usize = config::KEYS.iter().filter(|k| cfg_text.contains(&format!("{k} = "))).count();
        if found != config::KEYS.len() {
            bail!("corrupt manifest: config snapshot incomplete");
        }
        let config = config::from_text(&cfg_text).context("corrupt manifest")?;
        let total = config.work_items();
        if done.iter().chain(&failed).any(|item| !total.contains(item)) {
            bail!("corrupt manifest: completion line outside the configured work");
        }
        Ok(Self {
            path: path.to_path_buf(),
            command,
            config,
            done,
            failed,
            complete,
        })
    }

    /// Refuses to continue a run made with a different command or config.
    pub fn check_matches(&self, command: &str, cfg: &ExperimentConfig) -> Result<()> {
        if self.command != command {
            bail!("manifest belongs to `{}`, not `{command}`", self.command);
        }
        if &self.config != cfg {
            bail!(
                "configuration differs from the manifest snapshot:\n--- manifest\n{}--- requested\n{}",
                config::to_text(&self.config),
                config::to_text(cfg)
            );
        }
        Ok(())
    }

    fn append(&self, text: &str) -> Result<()> {
        let mut f: File = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .with_context(|| format!("appending to {}", self.path.display()))?;
        f.write_all(text.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    pub fn record(&mut self, ok: &[(usize, usize)], failed: &[(usize, usize)]) -> Result<()> {
        let mut text = String::new();
        for &(l, i) in ok {
            text.push_str(&format!("done = {l} {i}\n"));
            self.done.insert((l, i));
        }
        for &(l, i) in failed {
            text.push_str(&format!("failed = {l} {i}\n"));
            self.failed.insert((l, i));
        }
        self.append(&text)
    }

    pub fn finish(&mut self) -> Result<()> {
        let counts: Vec<String> = (0..self.config.side_lengths.len())
            .map(|l| self.done.iter().filter(|(li, _)| *li == l).count().to_string())
            .collect();
        self.append(&format!("count = {}\nfinished = {}\nstatus = complete\n", counts.join(","), now()))?;
        self.complete = true;
        Ok(())
    }

    pub fn is_finished(&self, item: (usize, usize)) -> bool {
        self.done.contains(&item) || self.failed.contains(&item)
    }
}

//! Append-only session event logs, one JSON-lines file per session.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::DatasetDoc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        session_id: String,
        dataset: DatasetDoc,
        grouping: Vec<u32>,
    },
    Declaration {
        station_id: String,
        votes: Vec<i64>,
    },
    GroupingApplied {
        job_id: String,
        labels: Vec<u32>,
    },
}

/// `None` directory: nothing is persisted.
#[derive(Debug, Clone)]
pub struct EventLog {
    dir: Option<PathBuf>,
}

impl EventLog {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        Ok(Self { dir })
    }

    fn path(dir: &Path, session_id: &str) -> PathBuf {
        dir.join(format!("{session_id}.jsonl"))
    }

    pub fn append(&self, session_id: &str, event: &Event) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = Self::path(dir, session_id);
        let mut line = serde_json::to_vec(event).expect("serializable event");
        line.push(b'\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        f.write_all(&line).map_err(|e| Error::io(&path, e))?;
        f.sync_data().map_err(|e| Error::io(&path, e))
    }

    /// Event streams of all logged sessions, ordered by file name. A torn
    /// final line (crash during append) is dropped.
    pub fn load_all(&self) -> Result<Vec<(String, Vec<Event>)>> {
        let Some(dir) = &self.dir else {
            return Ok(Vec::new());
        };
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        let mut out = Vec::new();
        for path in files {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            let mut events = Vec::with_capacity(lines.len());
            for (i, line) in lines.iter().enumerate() {
                match serde_json::from_str::<Event>(line) {
                    Ok(ev) => events.push(ev),
                    Err(_) if i + 1 == lines.len() && !text.ends_with('\n') => {
                        eprintln!("warning: {}: dropping torn final line", path.display());
                    }
                    Err(e) => {
                        return Err(Error::parse(&path, format!("line {}: {e}", i + 1)));
                    }
                }
            }
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.push((id, events));
        }
        Ok(out)
    }
}

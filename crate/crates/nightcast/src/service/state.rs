use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use nightcast_core::ga::BatchEvaluator;
use nightcast_core::{
    run_with, DeclareOutcome, Error as CoreError, FitnessContext, GaConfig, Objective,
};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use super::error::ApiError;
use super::session::Session;
use super::store::{Event, EventLog};
use crate::error::{Error, Result};
use crate::io::DatasetDoc;
use crate::parallel::Parallel;

/// Hold-out share used when final results are unknown.
pub const LIVE_HOLDOUT_FRACTION: f64 = 0.2;

/// Notification pushed to event-stream subscribers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Notice {
    Revision {
        revision: u64,
        forecast_digest: Option<String>,
    },
    Job {
        job_id: String,
        status: JobStatus,
        generation: usize,
        best_fitness: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
    Cancelled,
}

impl JobStatus {
    pub fn is_final(self) -> bool {
        matches!(
            self,
            JobStatus::Done | JobStatus::Failed | JobStatus::Cancelled
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobDoc {
    pub id: String,
    pub session_id: String,
    pub status: JobStatus,
    pub config: GaConfig,
    /// Session revision the job's snapshot was taken at.
    pub base_revision: u64,
    pub generation: usize,
    pub generations: usize,
    pub best_fitness: Option<f64>,
    /// Best fitness per generation so far, generation 0 first.
    pub history: Vec<f64>,
    pub labels: Option<Vec<u32>>,
    pub error: Option<String>,
}

pub struct Job {
    pub doc: Mutex<JobDoc>,
    cancel: AtomicBool,
}

pub struct SessionCell {
    pub session: Mutex<Session>,
    pub active_job: Mutex<Option<String>>,
    pub events: broadcast::Sender<Notice>,
}

impl SessionCell {
    fn new(session: Session) -> Self {
        Self {
            session: Mutex::new(session),
            active_job: Mutex::new(None),
            events: broadcast::channel(256).0,
        }
    }

    fn notify_revision(&self, s: &Session) {
        let _ = self.events.send(Notice::Revision {
            revision: s.revision,
            forecast_digest: s.forecast_digest().map(str::to_string),
        });
    }
}

pub struct AppState {
    sessions: RwLock<BTreeMap<String, Arc<SessionCell>>>,
    jobs: RwLock<BTreeMap<String, Arc<Job>>>,
    log: EventLog,
    next_session: AtomicU64,
    next_job: AtomicU64,
    evaluator: Arc<dyn BatchEvaluator + Send + Sync>,
}

fn lock_err<T>(_: T) -> ApiError {
    ApiError::internal("state lock poisoned")
}

impl AppState {
    /// Opens the state, replaying any event logs found in `data_dir`.
    pub fn open(data_dir: Option<PathBuf>, threads: usize) -> Result<Arc<Self>> {
        let log = EventLog::new(data_dir)?;
        let state = Self {
            sessions: RwLock::new(BTreeMap::new()),
            jobs: RwLock::new(BTreeMap::new()),
            log: log.clone(),
            next_session: AtomicU64::new(1),
            next_job: AtomicU64::new(1),
            evaluator: Arc::new(Parallel::new(threads)),
        };
        for (file_id, events) in log.load_all()? {
            let session = replay(&file_id, events)?;
            if let Some(n) = session
                .id
                .strip_prefix("session-")
                .and_then(|n| n.parse::<u64>().ok())
            {
                state.next_session.fetch_max(n + 1, Ordering::SeqCst);
            }
            state
                .sessions
                .write()
                .expect("fresh lock")
                .insert(session.id.clone(), Arc::new(SessionCell::new(session)));
        }
        Ok(Arc::new(state))
    }

    pub fn session(&self, id: &str) -> Result<Arc<SessionCell>, ApiError> {
        self.sessions
            .read()
            .map_err(lock_err)?
            .get(id)
            .cloned()
            .ok_or_else(|| {
                ApiError::not_found("unknown_session", format!("unknown session `{id}`"))
            })
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions
            .read()
            .map(|s| s.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn create_session(
        &self,
        doc: DatasetDoc,
        grouping: Option<Vec<u32>>,
    ) -> Result<Session, ApiError> {
        let id = format!(
            "session-{:06}",
            self.next_session.fetch_add(1, Ordering::SeqCst)
        );
        let session = Session::new(id.clone(), doc.clone(), grouping)?;
        self.log
            .append(
                &id,
                &Event::SessionCreated {
                    session_id: id.clone(),
                    dataset: doc,
                    grouping: session.grouping.clone(),
                },
            )
            .map_err(|e| ApiError::internal(e.to_string()))?;
        let snapshot = session.clone();
        self.sessions
            .write()
            .map_err(lock_err)?
            .insert(id, Arc::new(SessionCell::new(session)));
        Ok(snapshot)
    }

    /// Logs then applies a declaration under the session lock.
    pub fn declare(
        &self,
        id: &str,
        station_id: &str,
        votes: &[i64],
    ) -> Result<(DeclareOutcome, Session), ApiError> {
        let cell = self.session(id)?;
        let mut s = cell.session.lock().map_err(lock_err)?;
        let mut probe = Session::clone(&s);
        let outcome = probe.declare(station_id, votes)?;
        if outcome == DeclareOutcome::Recorded {
            self.log
                .append(
                    id,
                    &Event::Declaration {
                        station_id: station_id.to_string(),
                        votes: votes.to_vec(),
                    },
                )
                .map_err(|e| ApiError::internal(e.to_string()))?;
            *s = probe;
            cell.notify_revision(&s);
        }
        Ok((outcome, s.clone()))
    }

    pub fn start_job(
        &self,
        session_id: &str,
        overrides: serde_json::Value,
    ) -> Result<JobDoc, ApiError> {
        let cell = self.session(session_id)?;
        let (dataset, declarations, revision) = {
            let s = cell.session.lock().map_err(lock_err)?;
            (s.dataset.clone(), s.declarations.clone(), s.revision)
        };
        if declarations.is_empty() {
            return Err(ApiError::conflict(
                "no_declarations",
                "optimization needs declared stations",
            ));
        }
        let config = job_config(&dataset, overrides)?;
        let ctx = FitnessContext::new(&dataset, &declarations, &config).map_err(|e| match e {
            CoreError::Config(m) if m.contains("declared") => {
                ApiError::conflict("too_few_declarations", m)
            }
            CoreError::Config(m) => ApiError::unprocessable("invalid_config", m),
            other => ApiError::conflict("not_optimizable", other.to_string()),
        })?;

        let job_id = format!("job-{:06}", self.next_job.fetch_add(1, Ordering::SeqCst));
        let doc = JobDoc {
            id: job_id.clone(),
            session_id: session_id.to_string(),
            status: JobStatus::Queued,
            config: config.clone(),
            base_revision: revision,
            generation: 0,
            generations: config.generations,
            best_fitness: None,
            history: Vec::new(),
            labels: None,
            error: None,
        };
        let job = Arc::new(Job {
            doc: Mutex::new(doc.clone()),
            cancel: AtomicBool::new(false),
        });
        {
            let mut active = cell.active_job.lock().map_err(lock_err)?;
            if let Some(prev) = active.replace(job_id.clone()) {
                if let Some(p) = self.jobs.read().map_err(lock_err)?.get(&prev) {
                    p.cancel.store(true, Ordering::SeqCst);
                }
            }
            self.jobs
                .write()
                .map_err(lock_err)?
                .insert(job_id, job.clone());
        }

        let evaluator = self.evaluator.clone();
        let events = cell.events.clone();
        tokio::task::spawn_blocking(move || {
            run_job(&ctx, &config, &job, evaluator.as_ref(), &events)
        });
        Ok(doc)
    }

    pub fn job(&self, id: &str) -> Result<JobDoc, ApiError> {
        let jobs = self.jobs.read().map_err(lock_err)?;
        let job = jobs
            .get(id)
            .ok_or_else(|| ApiError::not_found("unknown_job", format!("unknown job `{id}`")))?;
        let doc = job.doc.lock().map_err(lock_err)?.clone();
        Ok(doc)
    }

    pub fn apply_job(&self, session_id: &str, job_id: &str) -> Result<Session, ApiError> {
        let cell = self.session(session_id)?;
        let job = self.job(job_id)?;
        if job.session_id != session_id {
            return Err(ApiError::not_found(
                "unknown_job",
                format!("job `{job_id}` belongs to another session"),
            ));
        }
        let Some(labels) = job.labels.filter(|_| job.status == JobStatus::Done) else {
            return Err(ApiError::conflict(
                "job_not_done",
                format!("job `{job_id}` is {:?}", job.status).to_lowercase(),
            )
            .with_detail(serde_json::json!({ "status": job.status })));
        };
        let mut s = cell.session.lock().map_err(lock_err)?;
        let mut next = Session::clone(&s);
        next.apply_grouping(labels.clone())?;
        self.log
            .append(
                session_id,
                &Event::GroupingApplied {
                    job_id: job_id.to_string(),
                    labels,
                },
            )
            .map_err(|e| ApiError::internal(e.to_string()))?;
        *s = next;
        cell.notify_revision(&s);
        Ok(s.clone())
    }
}

/// Server defaults overlaid with the request's fields. Without an explicit
/// objective, sessions whose stored data has every final result optimize
/// against the true totals; otherwise against held-out declarations.
fn job_config(
    dataset: &nightcast_core::Dataset,
    overrides: serde_json::Value,
) -> Result<GaConfig, ApiError> {
    let has_objective = overrides.get("objective").is_some();
    let obj = match overrides {
        serde_json::Value::Null => serde_json::Value::Object(Default::default()),
        v @ serde_json::Value::Object(_) => v,
        _ => {
            return Err(ApiError::bad_request(
                "bad_request",
                "config overrides must be a JSON object",
            ))
        }
    };
    let mut config: GaConfig = serde_json::from_value(obj)
        .map_err(|e| ApiError::unprocessable("invalid_config", e.to_string()))?;
    if !has_objective {
        config.objective = if dataset.has_current_votes() {
            Objective::Truth
        } else {
            Objective::HoldOut {
                fraction: LIVE_HOLDOUT_FRACTION,
            }
        };
    }
    config
        .validate()
        .map_err(|e| ApiError::unprocessable("invalid_config", e.to_string()))?;
    Ok(config)
}

fn run_job(
    ctx: &FitnessContext,
    config: &GaConfig,
    job: &Job,
    evaluator: &(dyn BatchEvaluator + Send + Sync),
    events: &broadcast::Sender<Notice>,
) {
    let notify = |d: &JobDoc| {
        let _ = events.send(Notice::Job {
            job_id: d.id.clone(),
            status: d.status,
            generation: d.generation,
            best_fitness: d.best_fitness,
        });
    };
    {
        let mut d = job.doc.lock().expect("job lock");
        d.status = JobStatus::Running;
        notify(&d);
    }
    let result = run_with(ctx, config, evaluator, &mut |rec| {
        let mut d = job.doc.lock().expect("job lock");
        d.generation = rec.generation;
        d.best_fitness = Some(rec.best);
        d.history.push(rec.best);
        if job.cancel.load(Ordering::SeqCst) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    let mut d = job.doc.lock().expect("job lock");
    match result {
        Ok(_) if job.cancel.load(Ordering::SeqCst) => d.status = JobStatus::Cancelled,
        Ok(out) => {
            d.labels = Some(out.best.genes);
            d.status = JobStatus::Done;
        }
        Err(e) => {
            d.error = Some(e.to_string());
            d.status = JobStatus::Failed;
        }
    }
    notify(&d);
}

/// Rebuilds a session from its event stream through the regular mutation
/// paths.
fn replay(file_id: &str, events: Vec<Event>) -> Result<Session> {
    let bad = |m: String| Error::Validation(format!("event log `{file_id}`: {m}"));
    let mut it = events.into_iter();
    let mut session = match it.next() {
        Some(Event::SessionCreated {
            session_id,
            dataset,
            grouping,
        }) => Session::new(session_id, dataset, Some(grouping)).map_err(|e| bad(e.body.message))?,
        _ => return Err(bad("does not start with session_created".into())),
    };
    for ev in it {
        match ev {
            Event::SessionCreated { .. } => return Err(bad("second session_created".into())),
            Event::Declaration { station_id, votes } => {
                session
                    .declare(&station_id, &votes)
                    .map_err(|e| bad(e.body.message))?;
            }
            Event::GroupingApplied { labels, .. } => {
                session
                    .apply_grouping(labels)
                    .map_err(|e| bad(e.body.message))?;
            }
        }
    }
    Ok(session)
}

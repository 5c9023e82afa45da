use std::collections::{BTreeMap, VecDeque};
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{run_with_progress, RunConfig};
use crate::report::ReportBundle;

pub const JOB_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_finished(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub solved: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub schema_version: u32,
    pub id: String,
    pub state: JobState,
    pub progress: Progress,
    /// Path of the report file once the job is done.
    pub result: Option<String>,
    pub error: Option<String>,
    pub submitted_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum JobError {
    #[error("unknown job {0}")]
    UnknownId(String),
    #[error("job {id} is not ready (state {state:?})")]
    NotReady { id: String, state: JobState },
    #[error("job {id} failed: {message}")]
    Failed { id: String, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("run directory: {0}")]
    Storage(String),
    #[error("timed out waiting for job {0}")]
    Timeout(String),
}

struct Entry {
    record: JobRecord,
    config: RunConfig,
    report: Option<Arc<ReportBundle>>,
}

struct Inner {
    jobs: Mutex<BTreeMap<String, Entry>>,
    queue: Mutex<VecDeque<String>>,
    queued: Condvar,
    changed: Condvar,
    shutdown: AtomicBool,
    root: PathBuf,
    base: PathBuf,
}

impl Inner {
    fn jobs(&self) -> MutexGuard<'_, BTreeMap<String, Entry>> {
        self.jobs.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn job_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    fn log(&self, id: &str, line: &str) {
        let path = self.job_dir(id).join("log.txt");
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(path) {
            let _ = writeln!(f, "{} {line}", Utc::now().to_rfc3339());
        }
    }

    fn persist(&self, record: &JobRecord) {
        let path = self.job_dir(&record.id).join("job.json");
        let text = serde_json::to_string_pretty(record).expect("job record serializes");
        if let Err(e) = fs::write(&path, text) {
            log::warn!("cannot write {}: {e}", path.display());
        }
    }

    /// Applies `f` to the record and persists it. Transitions never go back.
    fn update(&self, id: &str, f: impl FnOnce(&mut JobRecord)) {
        {
            let mut jobs = self.jobs();
            let Some(entry) = jobs.get_mut(id) else { return };
            let before = entry.record.clone();
            f(&mut entry.record);
            let r = &mut entry.record;
            if r.state < before.state {
                r.state = before.state;
            }
            if r.progress.solved < before.progress.solved {
                r.progress.solved = before.progress.solved;
            }
            self.persist(r);
        }
        self.changed.notify_all();
    }

    fn next(&self) -> Option<String> {
        let mut queue = self.queue.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if self.shutdown.load(Ordering::SeqCst) {
                return None;
            }
            if let Some(id) = queue.pop_front() {
                return Some(id);
            }
            queue = self.queued.wait(queue).unwrap_or_else(|e| e.into_inner());
        }
    }

    fn execute(&self, id: &str) {
        let Some(mut config) = self.jobs().get(id).map(|e| e.config.clone()) else {
            return;
        };
        let dir = self.job_dir(id);
        config.output.dir = Some(dir.clone());
        self.update(id, |r| {
            r.state = JobState::Running;
            r.started_at = Some(Utc::now());
        });
        self.log(id, "running");
        let outcome = run_with_progress(&config, &self.base, &|p| {
            self.update(id, |r| r.progress = p);
        });
        match outcome {
            Ok(out) => {
                {
                    let mut jobs = self.jobs();
                    if let Some(entry) = jobs.get_mut(id) {
                        entry.report = Some(Arc::new(out.report));
                    }
                }
                self.update(id, |r| {
                    r.state = JobState::Done;
                    r.result = Some(dir.join("report.json").display().to_string());
                    r.finished_at = Some(Utc::now());
                });
                self.log(id, "done");
            }
            Err(e) => {
                let message = e.to_string();
                self.log(id, &message);
                self.update(id, |r| {
                    r.state = JobState::Failed;
                    r.error = Some(message);
                    r.finished_at = Some(Utc::now());
                });
            }
        }
    }
}

/// Runs submitted configs on a fixed pool of worker threads. Each job gets
/// a directory under the service root holding its config, report and log.
pub struct JobService {
    inner: Arc<Inner>,
    workers: Vec<JoinHandle<()>>,
}

impl JobService {
    /// `base` resolves relative paths inside submitted configs.
    pub fn new(root: impl Into<PathBuf>, base: impl Into<PathBuf>, workers: usize) -> Result<Self, JobError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| JobError::Storage(format!("{}: {e}", root.display())))?;
        let inner = Arc::new(Inner {
            jobs: Mutex::new(BTreeMap::new()),
            queue: Mutex::new(VecDeque::new()),
            queued: Condvar::new(),
            changed: Condvar::new(),
            shutdown: AtomicBool::new(false),
            root,
            base: base.into(),
        });
        let workers = (0..workers.max(1))
            .map(|i| {
                let inner = Arc::clone(&inner);
                std::thread::Builder::new()
                    .name(format!("job-worker-{i}"))
                    .spawn(move || {
                        while let Some(id) = inner.next() {
                            inner.execute(&id);
                        }
                    })
                    .expect("spawn job worker")
            })
            .collect();
        Ok(Self { inner, workers })
    }

    pub fn root(&self) -> &Path {
        &self.inner.root
    }

    pub fn submit_job(&self, config: RunConfig) -> Result<String, JobError> {
        config.validate().map_err(|e| JobError::InvalidConfig(e.message))?;
        let id = uuid::Uuid::new_v4().to_string();
        let dir = self.inner.job_dir(&id);
        fs::create_dir_all(&dir).map_err(|e| JobError::Storage(format!("{}: {e}", dir.display())))?;
        fs::write(dir.join("config.json"), config.to_json())
            .map_err(|e| JobError::Storage(format!("{}: {e}", dir.display())))?;
        let record = JobRecord {
            schema_version: JOB_SCHEMA_VERSION,
            id: id.clone(),
            state: JobState::Queued,
            progress: Progress::default(),
            result: None,
            error: None,
            submitted_at: Utc::now(),
            started_at: None,
            finished_at: None,
        };
        self.inner.persist(&record);
        self.inner.log(&id, "queued");
        self.inner.jobs().insert(
            id.clone(),
            Entry {
                record,
                config,
                report: None,
            },
        );
        self.inner
            .queue
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push_back(id.clone());
        self.inner.queued.notify_one();
        Ok(id)
    }

    pub fn job_status(&self, id: &str) -> Result<JobRecord, JobError> {
        self.inner
            .jobs()
            .get(id)
            .map(|e| e.record.clone())
            .ok_or_else(|| JobError::UnknownId(id.to_owned()))
    }

    pub fn job_result(&self, id: &str) -> Result<Arc<ReportBundle>, JobError> {
        let jobs = self.inner.jobs();
        let entry = jobs.get(id).ok_or_else(|| JobError::UnknownId(id.to_owned()))?;
        match (&entry.report, entry.record.state) {
            (Some(report), JobState::Done) => Ok(Arc::clone(report)),
            (_, JobState::Failed) => Err(JobError::Failed {
                id: id.to_owned(),
                message: entry.record.error.clone().unwrap_or_default(),
            }),
            (_, state) => Err(JobError::NotReady {
                id: id.to_owned(),
                state,
            }),
        }
    }

    pub fn list_jobs(&self) -> Vec<JobRecord> {
        self.inner.jobs().values().map(|e| e.record.clone()).collect()
    }

    /// Blocks until the job is done or failed.
    pub fn wait(&self, id: &str, timeout: Duration) -> Result<JobRecord, JobError> {
        let deadline = Instant::now() + timeout;
        let mut jobs = self.inner.jobs();
        loop {
            let record = jobs
                .get(id)
                .map(|e| e.record.clone())
                .ok_or_else(|| JobError::UnknownId(id.to_owned()))?;
            if record.state.is_finished() {
                return Ok(record);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(JobError::Timeout(id.to_owned()));
            }
            jobs = self
                .inner
                .changed
                .wait_timeout(jobs, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }
}

impl Drop for JobService {
    fn drop(&mut self) {
        self.inner.shutdown.store(true, Ordering::SeqCst);
        {
            let _queue = self.inner.queue.lock().unwrap_or_else(|e| e.into_inner());
            self.inner.queued.notify_all();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

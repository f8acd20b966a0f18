//! DIMACS I/O, external SAT backend processes, and split-job orchestration.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoder::{CnfFormula, Lit};

pub const SOLVER_ENV: &str = "SAT_SOLVER_CMD";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("could not start backend `{command}`: {source}")]
    SpawnFailure { command: String, source: io::Error },
    #[error("backend output is malformed: {0}")]
    MalformedOutput(String),
    #[error("backend model falsifies clause {clause}")]
    ModelRejected { clause: usize },
    #[error("malformed DIMACS at line {line}: {message}")]
    Dimacs { line: usize, message: String },
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    /// `model[v]` is the value of variable `v`; index 0 is unused.
    Sat(Vec<bool>),
    Unsat,
    Unknown(String),
}

impl SolveStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Sat(_) => "sat",
            SolveStatus::Unsat => "unsat",
            SolveStatus::Unknown(_) => "unknown",
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, SolveStatus::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveStatus::Unsat)
    }

    pub fn model(&self) -> Option<&[bool]> {
        match self {
            SolveStatus::Sat(m) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Unknown(reason) => write!(f, "unknown ({reason})"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub wall_time: Duration,
    pub backend: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendConfig {
    /// Program and arguments; `{cnf}` inside any argument is replaced by the
    /// CNF path, which is appended when no argument mentions it.
    pub command: Vec<String>,
    pub timeout: Duration,
    pub parallel_jobs: usize,
}

impl BackendConfig {
    pub fn new(template: &str, timeout: Duration, parallel_jobs: usize) -> Result<BackendConfig, SolverError> {
        let command: Vec<String> = template.split_whitespace().map(str::to_owned).collect();
        if command.is_empty() {
            return Err(SolverError::Config("empty backend command".into()));
        }
        if timeout.is_zero() {
            return Err(SolverError::Config("timeout must be positive".into()));
        }
        if parallel_jobs == 0 {
            return Err(SolverError::Config("need at least one parallel job".into()));
        }
        Ok(BackendConfig {
            command,
            timeout,
            parallel_jobs,
        })
    }

    /// Reads the command template from `SAT_SOLVER_CMD`.
    pub fn from_env(timeout: Duration, parallel_jobs: usize) -> Result<BackendConfig, SolverError> {
        let template = std::env::var(SOLVER_ENV)
            .map_err(|_| SolverError::Config(format!("{SOLVER_ENV} is not set")))?;
        BackendConfig::new(&template, timeout, parallel_jobs)
    }

    pub fn argv(&self, cnf: &Path) -> Vec<String> {
        let path = cnf.to_string_lossy();
        let mut argv: Vec<String> = self.command.iter().map(|a| a.replace("{cnf}", &path)).collect();
        if !self.command.iter().any(|a| a.contains("{cnf}")) {
            argv.push(path.into_owned());
        }
        argv
    }

    pub fn display(&self) -> String {
        self.command.join(" ")
    }
}

fn write_clause<W: Write>(w: &mut W, clause: &[Lit], buf: &mut itoa::Buffer) -> io::Result<usize> {
    let mut n = 0;
    for &l in clause {
        let s = buf.format(l);
        w.write_all(s.as_bytes())?;
        w.write_all(b" ")?;
        n += s.len() + 1;
    }
    w.write_all(b"0\n")?;
    Ok(n + 2)
}

/// `p cnf <vars> <clauses>` followed by one zero-terminated clause per line.
/// Returns the number of bytes written.
pub fn write_dimacs<W: Write>(cnf: &CnfFormula, sink: W) -> io::Result<u64> {
    write_dimacs_parts(&[cnf], sink)
}

/// Writes the conjunction of several formulas as one DIMACS file.
pub fn write_dimacs_parts<W: Write>(parts: &[&CnfFormula], sink: W) -> io::Result<u64> {
    let vars = parts.iter().map(|c| c.variable_count()).max().unwrap_or(0);
    let clauses: usize = parts.iter().map(|c| c.clause_count()).sum();
    let mut w = BufWriter::with_capacity(1 << 20, sink);
    let header = format!("p cnf {vars} {clauses}\n");
    w.write_all(header.as_bytes())?;
    let mut bytes = header.len() as u64;
    let mut buf = itoa::Buffer::new();
    for part in parts {
        for c in part.clauses() {
            bytes += write_clause(&mut w, c, &mut buf)? as u64;
        }
    }
    w.flush()?;
    Ok(bytes)
}

/// Accepts comments, clauses spanning lines, and a trailing `%` marker.
pub fn parse_dimacs<R: Read>(source: R) -> Result<CnfFormula, SolverError> {
    let reader = BufReader::new(source);
    let mut header: Option<(u32, usize)> = None;
    let mut cnf = CnfFormula::new(0);
    let mut current: Vec<Lit> = Vec::new();
    let mut line_no = 0;
    for line in reader.lines() {
        line_no += 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('c') {
            continue;
        }
        if t.starts_with('%') {
            break;
        }
        let bad = |m: String| SolverError::Dimacs { line: line_no, message: m };
        if t.starts_with('p') {
            let f: Vec<&str> = t.split_whitespace().collect();
            if header.is_some() || f.len() != 4 || f[1] != "cnf" {
                return Err(bad("expected a single `p cnf <vars> <clauses>` header".into()));
            }
            let v = f[2].parse().map_err(|_| bad("bad variable count".into()))?;
            let c = f[3].parse().map_err(|_| bad("bad clause count".into()))?;
            cnf.declare_variables(v);
            header = Some((v, c));
            continue;
        }
        let Some((vars, _)) = header else {
            return Err(bad("clause before header".into()));
        };
        for tok in t.split_whitespace() {
            let l: Lit = tok.parse().map_err(|_| bad(format!("bad literal `{tok}`")))?;
            if l == 0 {
                if current.is_empty() {
                    return Err(bad("empty clause".into()));
                }
                cnf.push(&current);
                current.clear();
            } else if l.unsigned_abs() > vars {
                return Err(bad(format!("literal {l} exceeds declared variables")));
            } else {
                current.push(l);
            }
        }
    }
    let Some((_, clauses)) = header else {
        return Err(SolverError::Dimacs { line: line_no, message: "missing header".into() });
    };
    if !current.is_empty() {
        return Err(SolverError::Dimacs { line: line_no, message: "unterminated clause".into() });
    }
    if cnf.clause_count() != clauses {
        return Err(SolverError::Dimacs {
            line: line_no,
            message: format!("header declares {clauses} clauses, found {}", cnf.clause_count()),
        });
    }
    Ok(cnf)
}

/// Parses SAT-competition output: one `s` line, and `v` lines when satisfiable.
pub fn parse_solver_output(text: &str, variable_count: u32) -> Result<SolveStatus, SolverError> {
    let mut status = None;
    let mut model = vec![false; variable_count as usize + 1];
    let mut terminated = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("s ") {
            if status.is_some() {
                return Err(SolverError::MalformedOutput("several status lines".into()));
            }
            status = Some(rest.trim().to_owned());
        } else if let Some(rest) = line.strip_prefix("v ").or(if line == "v" { Some("") } else { None }) {
            for tok in rest.split_whitespace() {
                let l: i64 = tok
                    .parse()
                    .map_err(|_| SolverError::MalformedOutput(format!("bad model literal `{tok}`")))?;
                if l == 0 {
                    terminated = true;
                } else if let Some(slot) = model.get_mut(l.unsigned_abs() as usize) {
                    *slot = l > 0;
                }
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE") if terminated => Ok(SolveStatus::Sat(model)),
        Some("SATISFIABLE") => Err(SolverError::MalformedOutput("model not terminated by 0".into())),
        Some("UNSATISFIABLE") => Ok(SolveStatus::Unsat),
        Some("UNKNOWN") => Ok(SolveStatus::Unknown("backend reported UNKNOWN".into())),
        Some(other) => Err(SolverError::MalformedOutput(format!("unknown status `{other}`"))),
        None => Err(SolverError::MalformedOutput("no status line".into())),
    }
}

/// Runs the backend on an existing DIMACS file. `cancel` aborts early with
/// Unknown("cancelled"). The caller verifies models.
pub fn run_backend_file(
    cnf_path: &Path,
    variable_count: u32,
    config: &BackendConfig,
    cancel: Option<&AtomicBool>,
) -> Result<SolveOutcome, SolverError> {
    let argv = config.argv(cnf_path);
    let backend = argv.join(" ");
    let out_file = tempfile::NamedTempFile::new()?;
    let start = Instant::now();
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(out_file.reopen()?)
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SolverError::SpawnFailure {
            command: backend.clone(),
            source,
        })?;
    let mut pause = Duration::from_millis(1);
    let mut exit = None;
    let stopped = loop {
        if let Some(code) = child.try_wait()? {
            exit = Some(code);
            break None;
        }
        if start.elapsed() >= config.timeout {
            break Some("timeout");
        }
        if cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            break Some("cancelled");
        }
        thread::sleep(pause.min(config.timeout.saturating_sub(start.elapsed())));
        pause = (pause * 2).min(Duration::from_millis(50));
    };
    if let Some(reason) = stopped {
        // The process may have exited between the checks; kill errors are moot.
        let _ = child.kill();
        child.wait()?;
        return Ok(SolveOutcome {
            status: SolveStatus::Unknown(reason.into()),
            wall_time: start.elapsed(),
            backend,
        });
    }
    let wall_time = start.elapsed();
    let text = fs::read_to_string(out_file.path())?;
    let status = parse_solver_output(&text, variable_count).map_err(|e| match (e, exit) {
        // A backend killed mid-search (often by the OOM killer) prints nothing useful.
        (SolverError::MalformedOutput(m), Some(code)) if !code.success() => {
            SolverError::MalformedOutput(format!("{m}; backend exited with {code}"))
        }
        (e, _) => e,
    })?;
    Ok(SolveOutcome {
        status,
        wall_time,
        backend,
    })
}

fn verify_model(parts: &[&CnfFormula], status: &SolveStatus) -> Result<(), SolverError> {
    if let SolveStatus::Sat(model) = status {
        let mut offset = 0;
        for part in parts {
            if let Some(i) = part.first_falsified(model) {
                return Err(SolverError::ModelRejected { clause: offset + i });
            }
            offset += part.clause_count();
        }
    }
    Ok(())
}

/// Writes `cnf` to a temporary file, runs the backend, and re-checks any model.
pub fn run_backend(cnf: &CnfFormula, config: &BackendConfig) -> Result<SolveOutcome, SolverError> {
    let file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
    write_dimacs(cnf, file.as_file())?;
    let outcome = run_backend_file(file.path(), cnf.variable_count(), config, None)?;
    verify_model(&[cnf], &outcome.status)?;
    Ok(outcome)
}

/// One subproblem: extra clauses conjoined with the shared base formula.
#[derive(Debug, Clone)]
pub struct SplitJob {
    pub name: String,
    pub extra: CnfFormula,
    /// Free-form provenance copied into the job log, e.g. how to rebuild the CNF.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub name: String,
    /// `Err` holds the rendered error of a job that failed to run.
    pub outcome: Result<SolveOutcome, String>,
    pub cnf_sha256: String,
}

impl JobRecord {
    pub fn status_label(&self) -> &'static str {
        match &self.outcome {
            Ok(o) => o.status.label(),
            Err(_) => "error",
        }
    }

    pub fn seconds(&self) -> f64 {
        self.outcome.as_ref().map_or(0.0, |o| o.wall_time.as_secs_f64())
    }

    /// `job <name> <status> <seconds>`
    pub fn summary_line(&self) -> String {
        format!("job {} {} {:.3}", self.name, self.status_label(), self.seconds())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub aggregate: SolveOutcome,
    /// Name of the job whose model is reported, when satisfiable.
    pub sat_job: Option<String>,
    /// In input order.
    pub jobs: Vec<JobRecord>,
}

impl SplitOutcome {
    pub fn summary(&self) -> String {
        let mut s: String = self.jobs.iter().map(|j| j.summary_line() + "\n").collect();
        s.push_str(&format!(
            "aggregate {} {:.3}\n",
            self.aggregate.status.label(),
            self.aggregate.wall_time.as_secs_f64()
        ));
        s
    }
}

/// Sat if some job is Sat, Unsat if every job is Unsat, Unknown otherwise.
pub fn aggregate_status<'a>(statuses: impl IntoIterator<Item = Option<&'a SolveStatus>>) -> SolveStatus {
    let mut all_unsat = true;
    let mut any = false;
    for s in statuses {
        any = true;
        match s {
            Some(SolveStatus::Sat(m)) => return SolveStatus::Sat(m.clone()),
            Some(SolveStatus::Unsat) => {}
            _ => all_unsat = false,
        }
    }
    if any && all_unsat {
        SolveStatus::Unsat
    } else {
        SolveStatus::Unknown("not every subproblem was refuted".into())
    }
}

struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn run_job(
    base: &CnfFormula,
    job: &SplitJob,
    config: &BackendConfig,
    dir: &Path,
    cancel: &AtomicBool,
) -> (JobRecord, Option<SolveOutcome>) {
    let cnf_path = dir.join(format!("{}.cnf", job.name));
    let parts = [base, &job.extra];
    let written = File::create(&cnf_path).and_then(|f| {
        let mut w = HashingWriter {
            inner: f,
            hasher: Sha256::new(),
        };
        write_dimacs_parts(&parts, &mut w)?;
        Ok(hex::encode(w.hasher.finalize()))
    });
    let vars = base.variable_count().max(job.extra.variable_count());
    let (hash, result) = match written {
        Ok(hash) => {
            let r = run_backend_file(&cnf_path, vars, config, Some(cancel))
                .and_then(|o| verify_model(&parts, &o.status).map(|_| o));
            (hash, r)
        }
        Err(e) => (String::new(), Err(SolverError::Io(e))),
    };
    let _ = fs::remove_file(&cnf_path);
    let record = JobRecord {
        name: job.name.clone(),
        outcome: result.as_ref().map_err(|e| e.to_string()).cloned(),
        cnf_sha256: hash,
    };
    (record, result.ok())
}

fn job_log(record: &JobRecord, job: &SplitJob, config: &BackendConfig) -> String {
    let mut s = format!(
        "job {}\nnote {}\ncnf_sha256 {}\ncommand {}\ntimeout_seconds {}\n",
        record.name,
        job.note,
        record.cnf_sha256,
        config.argv(Path::new("{cnf}")).join(" "),
        config.timeout.as_secs_f64()
    );
    match &record.outcome {
        Ok(o) => s.push_str(&format!("status {}\nseconds {:.3}\n", o.status, o.wall_time.as_secs_f64())),
        Err(e) => s.push_str(&format!("status error\nerror {e}\n")),
    }
    s
}

/// Runs every job with at most `config.parallel_jobs` backends at once.
/// The first Sat answer cancels the remaining jobs. With `log_dir`, each job
/// leaves `<name>.log` there (CNF hash, command, note, outcome), plus
/// `summary.txt`. Job CNFs live in a scratch directory.
pub fn solve_split(
    base: &CnfFormula,
    jobs: &[SplitJob],
    config: &BackendConfig,
    log_dir: Option<&Path>,
) -> Result<SplitOutcome, SolverError> {
    if jobs.is_empty() {
        return Err(SolverError::Config("no subproblems to solve".into()));
    }
    if let Some(d) = log_dir {
        fs::create_dir_all(d)?;
    }
    let scratch = tempfile::tempdir()?;
    let dir: PathBuf = scratch.path().to_path_buf();
    let start = Instant::now();
    let next = AtomicUsize::new(0);
    let cancel = AtomicBool::new(false);
    let results: Mutex<Vec<Option<JobRecord>>> = Mutex::new(vec![None; jobs.len()]);
    let first_sat: Mutex<Option<(usize, SolveOutcome)>> = Mutex::new(None);
    thread::scope(|s| {
        for _ in 0..config.parallel_jobs.min(jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let (record, outcome) = if cancel.load(Ordering::SeqCst) {
                    let skipped = JobRecord {
                        name: jobs[i].name.clone(),
                        outcome: Ok(SolveOutcome {
                            status: SolveStatus::Unknown("cancelled".into()),
                            wall_time: Duration::ZERO,
                            backend: config.display(),
                        }),
                        cnf_sha256: String::new(),
                    };
                    (skipped, None)
                } else {
                    run_job(base, &jobs[i], config, &dir, &cancel)
                };
                if let Some(o) = outcome.filter(|o| o.status.is_sat()) {
                    let mut slot = first_sat.lock().expect("aggregation lock");
                    if slot.is_none() {
                        *slot = Some((i, o));
                        cancel.store(true, Ordering::SeqCst);
                    }
                }
                log::info!("{}", record.summary_line());
                results.lock().expect("aggregation lock")[i] = Some(record);
            });
        }
    });
    let jobs_done: Vec<JobRecord> = results
        .into_inner()
        .expect("aggregation lock")
        .into_iter()
        .map(|r| r.expect("every job recorded"))
        .collect();
    let first_sat = first_sat.into_inner().expect("aggregation lock");
    let status = match &first_sat {
        Some((_, o)) => o.status.clone(),
        None => aggregate_status(jobs_done.iter().map(|j| j.outcome.as_ref().ok().map(|o| &o.status))),
    };
    let outcome = SplitOutcome {
        aggregate: SolveOutcome {
            status,
            wall_time: start.elapsed(),
            backend: config.display(),
        },
        sat_job: first_sat.map(|(i, _)| jobs[i].name.clone()),
        jobs: jobs_done,
    };
    if let Some(d) = log_dir {
        for (r, job) in outcome.jobs.iter().zip(jobs) {
            fs::write(d.join(format!("{}.log", r.name)), job_log(r, job, config))?;
        }
        fs::write(d.join("summary.txt"), outcome.summary())?;
    }
    Ok(outcome)
}

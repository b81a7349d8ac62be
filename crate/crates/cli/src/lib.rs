//! The `pvdb` command line, callable in-process.
//!
//! [`run`] parses arguments and executes one command, returning what the
//! binary would print and its exit code:
//!
//! | exit | meaning                                                    |
//! |------|------------------------------------------------------------|
//! | 0    | success                                                    |
//! | 1    | bad input: arguments, query, parameters, stale list, I/O   |
//! | 2    | reproduction failure: dataset hash mismatch                |
//! | 3    | damaged data or internal failure                           |

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use pvdb_core::engine::{
    run_fingerprint, EngineError, EvalBudget, EvalError, Fingerprint, FingerprintError, ListError,
    OriginList, RunOptions,
};
use pvdb_core::extract::{
    diff_lists, extract_subgraph, forge_stats, render_diff, render_stats, ExtractError,
    ReportFormat,
};
use pvdb_core::model::{merge_append_only, verify_integrity, IssueKind, ModelError};
use pvdb_core::sim::{synthesize, SimError, SimParams};
use pvdb_core::store::{load_archive, save_archive, StoreError, FILE_EXTENSION};
use pvdb_core::time::{format_rfc3339, parse_timestamp_arg};
use pvdb_core::ArchiveGraph;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_INTEGRITY: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutcome {
    pub exit: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

impl CommandOutcome {
    fn ok(stdout: impl Into<Vec<u8>>) -> Self {
        CommandOutcome {
            exit: EXIT_OK,
            stdout: stdout.into(),
            stderr: String::new(),
        }
    }

    fn fail(exit: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        CommandOutcome {
            exit,
            stdout: Vec::new(),
            stderr,
        }
    }

    pub fn stdout_text(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "pvdb",
    version,
    about = "Build and replay datasets of software origins selected by FPQL queries"
)]
struct Cli {
    /// Output style for reports.
    #[arg(long, value_enum, global = true, default_value = "table")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Records,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => ReportFormat::Table,
            Format::Records => ReportFormat::Records,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a series of synthetic archive exports.
    Synth {
        /// JSON simulation parameters.
        #[arg(long)]
        params: PathBuf,
        /// Comma-separated export times (unix seconds or RFC 3339), increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        export_times: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Overwrite existing export files.
        #[arg(long)]
        force: bool,
    },
    /// Evaluate a fingerprint against an archive export and print the origin list.
    Run {
        fingerprint: PathBuf,
        archive: PathBuf,
        #[command(flatten)]
        engine: EngineFlags,
        /// Append the dataset hash to the list instead of printing it on stderr.
        #[arg(long)]
        emit_hash: bool,
    },
    /// Materialize the subgraph of an origin list as a dataset archive.
    Extract {
        archive: PathBuf,
        list: PathBuf,
        /// Dataset timestamp (unix seconds or RFC 3339).
        #[arg(long)]
        at: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Check every identifier and reference of an archive file.
    Verify { archive: PathBuf },
    /// Compare two origin lists.
    Diff { before: PathBuf, after: PathBuf },
    /// Count the origins of a list per forge.
    Stats { list: PathBuf },
    /// Append a delta export to a base export.
    Merge {
        base: PathBuf,
        delta: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args, Debug)]
struct EngineFlags {
    /// Worker threads; all cores when unset.
    #[arg(long, env = "PVDB_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Evaluate conjuncts in source order.
    #[arg(long)]
    no_optimize: bool,
    /// Maximum nesting of operation calls per origin.
    #[arg(long, default_value_t = EvalBudget::DEFAULT_DEPTH)]
    budget_depth: u64,
    /// Maximum archive node lookups per origin.
    #[arg(long)]
    budget_nodes: Option<u64>,
}

impl EngineFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            budget: EvalBudget {
                max_depth: self.budget_depth,
                max_nodes: self.budget_nodes.unwrap_or(u64::MAX),
                wall_clock: None,
            },
            threads: self.threads.map(|n| n as usize),
            optimize: !self.no_optimize,
        }
    }
}

/// Runs one command. `args` includes the program name.
pub fn run<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutcome::fail(EXIT_USER, text)
            } else {
                CommandOutcome::ok(text)
            };
        }
    };
    let format = ReportFormat::from(cli.format);
    match cli.command {
        Command::Synth {
            params,
            export_times,
            out,
            force,
        } => synth(&params, &export_times, &out, force),
        Command::Run {
            fingerprint,
            archive,
            engine,
            emit_hash,
        } => run_cmd(&fingerprint, &archive, &engine, emit_hash),
        Command::Extract {
            archive,
            list,
            at,
            out,
            force,
        } => extract(&archive, &list, &at, &out, force),
        Command::Verify { archive } => verify(&archive),
        Command::Diff { before, after } => diff(&before, &after, format),
        Command::Stats { list } => stats(&list, format),
        Command::Merge {
            base,
            delta,
            out,
            force,
        } => merge(&base, &delta, &out, force),
    }
}

type Failure = CommandOutcome;

fn store_failure(e: StoreError) -> Failure {
    match e {
        StoreError::Io { .. } => CommandOutcome::fail(EXIT_USER, e.to_string()),
        StoreError::Integrity { ref report, .. } => {
            let mut text = String::from("archive failed verification:\n");
            for issue in &report.issues {
                let _ = writeln!(text, "  {}: {}", issue.id, describe(&issue.kind));
            }
            CommandOutcome::fail(EXIT_INTEGRITY, text)
        }
        other => CommandOutcome::fail(EXIT_INTEGRITY, format!("archive is damaged: {other}")),
    }
}

fn describe(kind: &IssueKind) -> String {
    match kind {
        IssueKind::IdMismatch { computed } => format!("content hashes to {computed}"),
        IssueKind::InvalidNode { reason } => reason.clone(),
        IssueKind::DanglingReference { referrer } => format!("missing, referenced from {referrer}"),
        IssueKind::BadVisit { url, detail } => format!("visit of `{url}`: {detail}"),
    }
}

fn load(path: &Path) -> Result<ArchiveGraph, Failure> {
    load_archive(path).map_err(store_failure)
}

fn load_list(path: &Path) -> Result<OriginList, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CommandOutcome::fail(EXIT_USER, format!("{}: {e}", path.display())))?;
    OriginList::parse(&text).map_err(|e| {
        let exit = match e {
            ListError::TrailerMismatch { .. } => EXIT_INTEGRITY,
            _ => EXIT_USER,
        };
        CommandOutcome::fail(exit, format!("{}: {e}", path.display()))
    })
}

fn timestamp_arg(text: &str) -> Result<i64, Failure> {
    parse_timestamp_arg(text).ok_or_else(|| {
        CommandOutcome::fail(
            EXIT_USER,
            format!("`{text}` is neither unix seconds nor an RFC 3339 UTC timestamp"),
        )
    })
}

/// Refuses to overwrite inputs, and outputs unless forced.
fn check_output(out: &Path, inputs: &[&Path], force: bool) -> Result<(), Failure> {
    for input in inputs {
        let same = match (std::fs::canonicalize(out), std::fs::canonicalize(input)) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        if same {
            return Err(CommandOutcome::fail(
                EXIT_USER,
                format!("{}: output would overwrite an input", out.display()),
            ));
        }
    }
    if out.exists() && !force {
        return Err(CommandOutcome::fail(
            EXIT_USER,
            format!(
                "{} already exists (use --force to overwrite)",
                out.display()
            ),
        ));
    }
    Ok(())
}

fn save(archive: &ArchiveGraph, out: &Path) -> Result<(), Failure> {
    save_archive(archive, out).map_err(|e| CommandOutcome::fail(EXIT_USER, e.to_string()))
}

fn finish(result: Result<CommandOutcome, Failure>) -> CommandOutcome {
    result.unwrap_or_else(|f| f)
}

/// File name of the export taken at `t`.
pub fn export_file_name(t: i64) -> String {
    format!("{t}.{FILE_EXTENSION}")
}

fn synth(params: &Path, times: &[String], out: &Path, force: bool) -> CommandOutcome {
    finish((|| {
        let params =
            SimParams::load(params).map_err(|e| CommandOutcome::fail(EXIT_USER, e.to_string()))?;
        let times = times
            .iter()
            .map(|t| timestamp_arg(t.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        let paths: Vec<PathBuf> = times
            .iter()
            .map(|t| out.join(export_file_name(*t)))
            .collect();
        if !force {
            if let Some(p) = paths.iter().find(|p| p.exists()) {
                return Err(CommandOutcome::fail(
                    EXIT_USER,
                    format!("{} already exists (use --force to overwrite)", p.display()),
                ));
            }
        }
        let archives = synthesize(&params, &times).map_err(|e| {
            let exit = if matches!(e, SimError::Model(_)) {
                EXIT_INTEGRITY
            } else {
                EXIT_USER
            };
            CommandOutcome::fail(exit, e.to_string())
        })?;
        std::fs::create_dir_all(out)
            .map_err(|e| CommandOutcome::fail(EXIT_USER, format!("{}: {e}", out.display())))?;
        let mut stdout = String::new();
        for (archive, path) in archives.iter().zip(&paths) {
            save(archive, path)?;
            let _ = writeln!(stdout, "{}", path.display());
        }
        Ok(CommandOutcome::ok(stdout))
    })())
}

fn engine_exit(e: &EngineError) -> i32 {
    match e {
        EngineError::Query(_) | EngineError::TimestampAhead { .. } => EXIT_USER,
        EngineError::HashMismatch { .. } => EXIT_MISMATCH,
        EngineError::Eval {
            error: EvalError::MissingNode { .. } | EvalError::Internal(_),
            ..
        } => EXIT_INTEGRITY,
        EngineError::Eval { .. } => EXIT_USER,
        EngineError::Threads(_) => EXIT_INTEGRITY,
    }
}

fn render_list(list: &OriginList, emit_hash: bool) -> String {
    if emit_hash {
        list.serialize_with_hash()
    } else {
        list.serialize()
    }
}

fn run_cmd(
    fingerprint: &Path,
    archive: &Path,
    flags: &EngineFlags,
    emit_hash: bool,
) -> CommandOutcome {
    finish((|| {
        let fp = Fingerprint::load(fingerprint).map_err(|e| {
            let text = match &e {
                FingerprintError::Io { .. } => e.to_string(),
                _ => format!("{}: {e}", fingerprint.display()),
            };
            CommandOutcome::fail(EXIT_USER, text)
        })?;
        let archive = load(archive)?;
        match run_fingerprint(&fp, &archive, &flags.options()) {
            Ok(out) => {
                let stderr = if emit_hash { String::new() } else { format!("dataset_hash {}\n", out.dataset_hash) };
                Ok(CommandOutcome { exit: EXIT_OK, stdout: render_list(&out.list, emit_hash).into_bytes(), stderr })
            }
            Err(EngineError::HashMismatch { expected, computed, list }) => Ok(CommandOutcome {
                exit: EXIT_MISMATCH,
                stdout: render_list(&list, emit_hash).into_bytes(),
                stderr: format!(
                    "dataset hash mismatch: the fingerprint records {expected}, this run computed {computed}\n"
                ),
            }),
            Err(e) => Err(CommandOutcome::fail(engine_exit(&e), e.to_string())),
        }
    })())
}

fn extract(archive: &Path, list: &Path, at: &str, out: &Path, force: bool) -> CommandOutcome {
    finish((|| {
        let t = timestamp_arg(at)?;
        check_output(out, &[archive, list], force)?;
        let source = load(archive)?;
        let origins = load_list(list)?;
        let dataset = extract_subgraph(&source, &origins, t).map_err(|e| {
            let exit = match e {
                ExtractError::StaleList { .. } => EXIT_USER,
                ExtractError::MissingNode(_) => EXIT_INTEGRITY,
            };
            CommandOutcome::fail(exit, e.to_string())
        })?;
        save(&dataset, out)?;
        Ok(CommandOutcome::ok(format!(
            "{}: {} origins, {} visits, {} nodes\n",
            out.display(),
            dataset.origin_count(),
            dataset.visit_count(),
            dataset.node_count()
        )))
    })())
}

fn verify(path: &Path) -> CommandOutcome {
    finish((|| {
        let archive = load(path)?;
        // loading verifies already; this re-check is the documented contract
        let report = verify_integrity(&archive);
        if !report.is_ok() {
            return Err(store_failure(StoreError::Integrity {
                id: report.issues[0].id,
                report,
            }));
        }
        let mut text = format!(
            "ok: export {}, {} origins, {} visits, {} nodes\n",
            format_rfc3339(archive.export_timestamp()),
            archive.origin_count(),
            archive.visit_count(),
            archive.node_count()
        );
        if let Some(p) = archive.provenance() {
            let _ = writeln!(
                text,
                "dataset of {} taken from the export of {}, dataset_hash {}",
                format_rfc3339(p.fingerprint_timestamp),
                format_rfc3339(p.source_export_timestamp),
                p.dataset_hash
            );
        }
        Ok(CommandOutcome::ok(text))
    })())
}

fn diff(before: &Path, after: &Path, format: ReportFormat) -> CommandOutcome {
    finish((|| {
        let a = load_list(before)?;
        let b = load_list(after)?;
        Ok(CommandOutcome::ok(render_diff(&diff_lists(&a, &b), format)))
    })())
}

fn stats(list: &Path, format: ReportFormat) -> CommandOutcome {
    finish((|| {
        let l = load_list(list)?;
        Ok(CommandOutcome::ok(render_stats(&forge_stats(&l), format)))
    })())
}

fn merge(base: &Path, delta: &Path, out: &Path, force: bool) -> CommandOutcome {
    finish((|| {
        check_output(out, &[base, delta], force)?;
        let b = load(base)?;
        let d = load(delta)?;
        let merged = merge_append_only(&b, &d).map_err(|e| {
            let exit = match e {
                ModelError::IntegrityConflict { .. } | ModelError::Integrity(_) => EXIT_INTEGRITY,
                _ => EXIT_USER,
            };
            CommandOutcome::fail(exit, e.to_string())
        })?;
        save(&merged, out)?;
        Ok(CommandOutcome::ok(format!(
            "{}: {} origins, {} visits, {} nodes\n",
            out.display(),
            merged.origin_count(),
            merged.visit_count(),
            merged.node_count()
        )))
    })())
}

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use corner_benders::vrpsd::{
    cutting_plane_loop, solve_integer, IntegerStatus, LoopOptions, Mode, StopReason, TraceEntry, VrpsdError,
    VrpsdInstance,
};

use crate::Failure;

pub const SUMMARY_HEADER: &str = "instance,mode,root_bound,root_time_s,bb_nodes,opt_value,status";
pub const TRACE_HEADER: &str = "iter,time_s,bound,cut_type,cuts_total";

pub struct SolveArgs {
    pub instance: PathBuf,
    pub mode: Mode,
    pub root_only: bool,
    pub time_limit: f64,
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

pub enum Outcome {
    Done,
    TimeLimit,
    Infeasible,
}

struct Summary {
    root_bound: Option<f64>,
    root_time_s: f64,
    bb_nodes: usize,
    opt_value: Option<f64>,
    status: &'static str,
}

fn solver_failure(e: VrpsdError) -> Failure {
    match e {
        VrpsdError::Parse { .. } | VrpsdError::InvalidInstance(_) => Failure::usage(e.to_string()),
        other => Failure::solver(other.to_string()),
    }
}

pub fn run(args: &SolveArgs) -> Result<Outcome, Failure> {
    let text = std::fs::read_to_string(&args.instance)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.instance.display())))?;
    let inst = VrpsdInstance::parse(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.instance.display())))?;
    let opts = LoopOptions {
        deadline: Instant::now().checked_add(Duration::from_secs_f64(args.time_limit.min(1e9))),
        ..LoopOptions::default()
    };
    let (summary, trace, outcome) = if args.root_only {
        match cutting_plane_loop(&inst, args.mode, &opts) {
            Ok(rep) => {
                let timed_out = rep.stop == StopReason::TimeLimit;
                let summary = Summary {
                    root_bound: Some(rep.root_bound),
                    root_time_s: rep.time_s,
                    bb_nodes: 0,
                    opt_value: None,
                    status: if timed_out { "time_limit" } else { "root" },
                };
                let outcome = if timed_out { Outcome::TimeLimit } else { Outcome::Done };
                (summary, rep.trace, outcome)
            }
            Err(VrpsdError::Infeasible) => (infeasible(), Vec::new(), Outcome::Infeasible),
            Err(e) => return Err(solver_failure(e)),
        }
    } else {
        match solve_integer(&inst, args.mode, &opts) {
            Ok(res) => {
                let timed_out = res.status == IntegerStatus::TimeLimit;
                let summary = Summary {
                    root_bound: Some(res.root.root_bound),
                    root_time_s: res.root.time_s,
                    bb_nodes: res.nodes,
                    opt_value: res.value,
                    status: if timed_out { "time_limit" } else { "optimal" },
                };
                let outcome = if timed_out { Outcome::TimeLimit } else { Outcome::Done };
                (summary, res.root.trace, outcome)
            }
            Err(VrpsdError::Infeasible) => (infeasible(), Vec::new(), Outcome::Infeasible),
            Err(e) => return Err(solver_failure(e)),
        }
    };
    if let Some(path) = &args.csv {
        write_trace(path, &trace)?;
    }
    let row = summary_row(&args.instance, args.mode, &summary);
    if let Some(path) = &args.summary {
        append_summary(path, &row)?;
    }
    println!("{SUMMARY_HEADER}");
    println!("{row}");
    Ok(outcome)
}

fn infeasible() -> Summary {
    Summary {
        root_bound: None,
        root_time_s: 0.0,
        bb_nodes: 0,
        opt_value: None,
        status: "infeasible",
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.6}"))
}

fn summary_row(instance: &Path, mode: Mode, s: &Summary) -> String {
    format!(
        "{},{},{},{:.3},{},{},{}",
        instance.display(),
        mode.name(),
        fmt_opt(s.root_bound),
        s.root_time_s,
        s.bb_nodes,
        fmt_opt(s.opt_value),
        s.status
    )
}

fn write_trace(path: &Path, trace: &[TraceEntry]) -> Result<(), Failure> {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in trace {
        out.push_str(&format!("{},{:.3},{:.6},{},{}\n", t.iter, t.time_s, t.bound, t.cut_type, t.cuts_total));
    }
    std::fs::write(path, out).map_err(|e| Failure::io(path, e))
}

fn append_summary(path: &Path, row: &str) -> Result<(), Failure> {
    let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Failure::io(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(SUMMARY_HEADER);
        text.push('\n');
    }
    text.push_str(row);
    text.push('\n');
    file.write_all(text.as_bytes()).map_err(|e| Failure::io(path, e))
}

//! CSV output. Floats are written with 17 significant digits so values
//! round-trip exactly.
//!
//! Files written into the output directory:
//! - `aggregate.csv`: `iteration,algorithm,bias,mean_abs_error,policy_suboptimality,bellman_error_avg,runs`
//! - `runs.csv` (optional): `run,iteration,algorithm,bias,mean_abs_error,policy_suboptimality,bellman_error_avg,cumulative_cost`
//! - `<algorithm>_state_visits.csv`: `state,visits`
//! - `<algorithm>_transitions.csv`: `from_state,to_state,count`
//! - `sweep.csv` when a parameter was swept: `algorithm,candidate,empirical_cost,chosen`
//!
//! Files are first written as `<name>.partial` and renamed once every file
//! has been written, so an aborted write leaves only `.partial` files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::experiment::ExperimentResult;

pub const AGGREGATE_HEADER: [&str; 7] = [
    "iteration",
    "algorithm",
    "bias",
    "mean_abs_error",
    "policy_suboptimality",
    "bellman_error_avg",
    "runs",
];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

struct Staged {
    partial: PathBuf,
    target: PathBuf,
}

fn write_csv<F>(dir: &Path, name: &str, staged: &mut Vec<Staged>, fill: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<BufWriter<File>>) -> Result<()>,
{
    let target = dir.join(name);
    let partial = dir.join(format!("{name}.partial"));
    let file = File::create(&partial).map_err(io_err(&partial))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    fill(&mut w)?;
    let mut inner = w.into_inner().map_err(|e| CliError::Io {
        path: partial.clone(),
        source: e.into_error(),
    })?;
    inner.flush().map_err(io_err(&partial))?;
    staged.push(Staged { partial, target });
    Ok(())
}

/// Writes all CSV files for `result` into `dir` and returns their paths.
pub fn emit_csv(result: &ExperimentResult, dir: &Path, per_run: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged = Vec::new();
    write_csv(dir, "aggregate.csv", &mut staged, |w| {
        w.write_record(AGGREGATE_HEADER)?;
        for p in &result.aggregate {
            w.write_record([
                p.iteration.to_string(),
                p.algorithm.clone(),
                format_float(p.bias),
                format_float(p.mean_abs_error),
                format_float(p.policy_suboptimality),
                format_float(p.bellman_error_avg),
                p.runs.to_string(),
            ])?;
        }
        Ok(())
    })?;
    if per_run {
        write_csv(dir, "runs.csv", &mut staged, |w| {
            w.write_record([
                "run",
                "iteration",
                "algorithm",
                "bias",
                "mean_abs_error",
                "policy_suboptimality",
                "bellman_error_avg",
                "cumulative_cost",
            ])?;
            for s in &result.series {
                for p in &s.points {
                    w.write_record([
                        s.run.to_string(),
                        p.iteration.to_string(),
                        s.algorithm.clone(),
                        format_float(p.bias),
                        format_float(p.mean_abs_error),
                        format_float(p.policy_suboptimality),
                        format_float(p.bellman_error_avg),
                        format_float(p.cumulative_cost),
                    ])?;
                }
            }
            Ok(())
        })?;
    }
    for (name, h) in &result.histograms {
        write_csv(dir, &format!("{name}_state_visits.csv"), &mut staged, |w| {
            w.write_record(["state", "visits"])?;
            for (s, v) in h.state_visits.iter().enumerate() {
                w.write_record([s.to_string(), v.to_string()])?;
            }
            Ok(())
        })?;
        write_csv(dir, &format!("{name}_transitions.csv"), &mut staged, |w| {
            w.write_record(["from_state", "to_state", "count"])?;
            for (&(a, b), c) in &h.transitions {
                w.write_record([a.to_string(), b.to_string(), c.to_string()])?;
            }
            Ok(())
        })?;
    }
    if !result.sweeps.is_empty() {
        write_csv(dir, "sweep.csv", &mut staged, |w| {
            w.write_record(["algorithm", "candidate", "empirical_cost", "chosen"])?;
            for s in &result.sweeps {
                for (c, cost) in s.candidates.iter().zip(&s.costs) {
                    w.write_record([
                        s.label.clone(),
                        format_float(*c),
                        format_float(*cost),
                        (*c == s.chosen).to_string(),
                    ])?;
                }
            }
            Ok(())
        })?;
    }
    let mut written = Vec::with_capacity(staged.len());
    for s in staged {
        std::fs::rename(&s.partial, &s.target).map_err(io_err(&s.target))?;
        written.push(s.target);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        for x in [std::f64::consts::PI, 1e-300, -123.456, 0.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}

//! Drives experiments to their output files.
//!
//! For every subrun the runner echoes the exact config it executed, runs
//! the engine once (all measures in a single pass over the trials), and
//! writes the CSVs. On failure every partially written output is removed.
//!
//! Outage CSV schema: `snr_db,user_rank,outage,ci_lo,ci_hi,events,trials`
//! with one row per rank (1 = largest true channel norm) and an extra
//! `user_rank = 0` row for the overall outage. Multi-scheme runs also emit
//! a paired-columns file `snr_db,user_rank,outage_<scheme>...` for direct
//! comparison.

use std::fs;
use std::path::{Path, PathBuf};

use mixsim::montecarlo::{run_measures, ExperimentResults, MeasureRequest};

use crate::config::{serialize_config, RunPlan, RunSpec};
use crate::csv::{emit_csv, Field};
use crate::manifest::{artifact_version, unix_now, RunManifest};
use crate::CliError;

pub fn run_experiment(plan: &RunPlan, out_dir: &Path) -> Result<RunManifest, CliError> {
    let started_unix = unix_now();
    fs::create_dir_all(out_dir)?;
    let mut outputs: Vec<PathBuf> = Vec::new();

    let result = (|| -> Result<(), CliError> {
        for (label, spec) in &plan.subruns {
            run_subrun(plan, label, spec, out_dir, &mut outputs)?;
        }
        Ok(())
    })();

    if let Err(e) = result {
        for f in &outputs {
            let _ = fs::remove_file(f);
        }
        return Err(e);
    }

    let manifest = RunManifest {
        version: artifact_version(),
        run_name: plan.name.clone(),
        master_seed: plan
            .subruns
            .first()
            .map(|(_, s)| s.experiment.master_seed)
            .unwrap_or(0),
        started_unix,
        finished_unix: unix_now(),
        outputs,
        manifest_path: out_dir.join(format!("{}_manifest.txt", plan.name)),
    };
    manifest.write()?;
    Ok(manifest)
}

fn run_subrun(
    plan: &RunPlan,
    label: &str,
    spec: &RunSpec,
    out_dir: &Path,
    outputs: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let stem = if label == "main" {
        plan.name.clone()
    } else {
        format!("{}_{}", plan.name, label)
    };

    // Echo the executed config; parsing it back yields the same spec.
    let echo_path = out_dir.join(format!("{}.config", stem));
    fs::write(&echo_path, serialize_config(spec))?;
    outputs.push(echo_path);

    let request = MeasureRequest {
        outage: spec.measures.outage,
        sum_rate: spec.measures.sum_rate,
        histogram_snr_db: spec.measures.hist_snr_db.clone(),
    };
    let results = run_measures(&spec.experiment, &request)
        .map_err(|e| CliError::Engine(e.to_string()))?;

    write_outputs(&stem, spec, &results, out_dir, outputs)
}

fn write_outputs(
    stem: &str,
    spec: &RunSpec,
    results: &ExperimentResults,
    out_dir: &Path,
    outputs: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    const OUTAGE_HEADER: [&str; 7] =
        ["snr_db", "user_rank", "outage", "ci_lo", "ci_hi", "events", "trials"];

    for curve in &results.outage {
        let mut rows = Vec::new();
        for p in &curve.points {
            for rank in 0..p.per_rank_events.len() {
                let (lo, hi) = p.rank_ci(rank);
                rows.push(vec![
                    Field::Float(p.snr_db),
                    Field::Int(rank as u64 + 1),
                    Field::Float(p.rank_outage(rank)),
                    Field::Float(lo),
                    Field::Float(hi),
                    Field::Int(p.per_rank_events[rank]),
                    Field::Int(p.trials),
                ]);
            }
            let (lo, hi) = p.overall_ci();
            rows.push(vec![
                Field::Float(p.snr_db),
                Field::Int(0),
                Field::Float(p.overall_outage()),
                Field::Float(lo),
                Field::Float(hi),
                Field::Int(p.overall_events),
                Field::Int(p.trials),
            ]);
        }
        let path = out_dir.join(format!("{}_outage_{}.csv", stem, curve.scheme));
        emit_csv(&path, &OUTAGE_HEADER, &rows)?;
        outputs.push(path);
    }

    // Paired columns when several schemes ran on common random numbers.
    if results.outage.len() >= 2 {
        let mut header: Vec<String> = vec!["snr_db".into(), "user_rank".into()];
        for c in &results.outage {
            header.push(format!("outage_{}", c.scheme));
        }
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut rows = Vec::new();
        let first = &results.outage[0];
        for (pi, p) in first.points.iter().enumerate() {
            for rank in 0..=p.per_rank_events.len() {
                // rank 0 row is the overall outage.
                let mut row = vec![Field::Float(p.snr_db), Field::Int(rank as u64)];
                for c in &results.outage {
                    let q = &c.points[pi];
                    let est = if rank == 0 {
                        q.overall_outage()
                    } else {
                        q.rank_outage(rank - 1)
                    };
                    row.push(Field::Float(est));
                }
                rows.push(row);
            }
        }
        let path = out_dir.join(format!("{}_outage_paired.csv", stem));
        emit_csv(&path, &header_refs, &rows)?;
        outputs.push(path);
    }

    if !results.sum_rate.is_empty() {
        let mut rows = Vec::new();
        for curve in &results.sum_rate {
            for p in &curve.points {
                rows.push(vec![
                    Field::Float(p.snr_db),
                    Field::Str(curve.scheme.clone()),
                    Field::Float(p.mean),
                    Field::Float(p.stderr),
                    Field::Int(p.trials),
                ]);
            }
        }
        let path = out_dir.join(format!("{}_sumrate.csv", stem));
        emit_csv(
            &path,
            &["snr_db", "scheme", "mean_sum_rate", "stderr", "trials"],
            &rows,
        )?;
        outputs.push(path);
    }

    if !results.histograms.is_empty() {
        // One file per histogram SNR point; bins with zero count are
        // omitted. A summary file carries the tail/cap masses.
        let mut summary_rows = Vec::new();
        for &snr in &spec.measures.hist_snr_db {
            let mut rows = Vec::new();
            for h in results.histograms.iter().filter(|h| (h.snr_db - snr).abs() < 1e-9) {
                for (i, &count) in h.counts.iter().enumerate() {
                    if count == 0 {
                        continue;
                    }
                    rows.push(vec![
                        Field::Float(i as f64 * h.bin_width),
                        Field::Float((i + 1) as f64 * h.bin_width),
                        Field::Int(count),
                        Field::Str(h.scheme.clone()),
                    ]);
                }
                summary_rows.push(vec![
                    Field::Str(h.scheme.clone()),
                    Field::Float(h.snr_db),
                    Field::Int(h.total_values),
                    Field::Int(h.below_target),
                    Field::Int(h.near_cap),
                    Field::Float(h.cap),
                ]);
            }
            let path = out_dir.join(format!("{}_hist_{}db.csv", stem, snr));
            emit_csv(&path, &["bin_lo", "bin_hi", "count", "scheme"], &rows)?;
            outputs.push(path);
        }
        let path = out_dir.join(format!("{}_histsummary.csv", stem));
        emit_csv(
            &path,
            &["scheme", "snr_db", "total", "below_target", "near_cap", "cap"],
            &summary_rows,
        )?;
        outputs.push(path);
    }

    Ok(())
}

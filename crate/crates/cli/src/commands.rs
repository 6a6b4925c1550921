use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ptmoments::bounds::{error_scaling_sweep, SweepResult, TrialSetup};
use ptmoments::entcond::{
    compare_conditions, r3_ratio, werner_equivalence_sweep, werner_r3_nonmonotone_check, werner_s3,
    ConditionReport, WernerSpec,
};
use ptmoments::qstate::{build_hamiltonian, ground_state, make_ghz, PartitionSpec};
use ptmoments::randmeas::{
    derive_seed, generate_dataset, read_dataset_file, write_dataset, MeasurementDataset,
};
use ptmoments::shadows::{
    estimate_with_replicates, jackknife_spread, median_of_means, snapshots_from_dataset,
    EstimateRecord, Method, Snapshot, Statistic,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Config, StateKind};
use crate::error::{CliError, CliResult};
use crate::output::{opt, Csv, Manifest, Output};
use crate::scenario::time_points;

fn json_lines<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    out.into_bytes()
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("summaries serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn simulate(cfg: &Config, cfg_bytes: &[u8]) -> CliResult<PathBuf> {
    let n = cfg.n_qubits()?;
    let (m, p) = (cfg.m()?, cfg.p()?);
    let parts = cfg.partitions()?;
    let sites: Vec<usize> = if parts.is_empty() {
        (1..=n).collect()
    } else {
        parts
            .iter()
            .flat_map(|q| q.ab_sites())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    let mut out = Output::create(&cfg.output_dir, "simulate", cfg_bytes)?;
    for tp in time_points(cfg)? {
        let seed = derive_seed(cfg.seed, &[tp.index as u64]);
        let ds = generate_dataset(tp.state.as_ref(), &sites, m, p, cfg.ensemble, seed)?;
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf)?;
        let name = match tp.t_ms {
            Some(_) => format!("dataset_t{:03}.jsonl", tp.index),
            None => "dataset.jsonl".to_string(),
        };
        out.write(&name, "dataset", &buf, Some(seed), tp.t_ms)?;
    }
    out.finish()
}

struct Input {
    path: PathBuf,
    label: String,
    t_ms: Option<f64>,
}

fn estimate_inputs(cfg: &Config, cli: &[PathBuf]) -> CliResult<Vec<Input>> {
    let plain = |paths: &[PathBuf]| {
        paths
            .iter()
            .map(|p| Input {
                path: p.clone(),
                label: stem(p),
                t_ms: None,
            })
            .collect()
    };
    if !cli.is_empty() {
        return Ok(plain(cli));
    }
    if !cfg.dataset_files.is_empty() {
        return Ok(plain(&cfg.dataset_files));
    }
    let manifest = Manifest::read(&cfg.output_dir, "simulate")?;
    Ok(manifest
        .files
        .iter()
        .filter(|f| f.kind == "dataset")
        .map(|f| {
            let path = cfg.output_dir.join(&f.path);
            Input {
                label: stem(&path),
                path,
                t_ms: f.t_ms,
            }
        })
        .collect())
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Ratio or R3 line next to the estimator records.
#[derive(Serialize)]
struct DerivedRecord {
    quantity: &'static str,
    partition: PartitionSpec,
    /// A number, or the string `undefined`.
    value: Value,
    std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    m: usize,
    seed: u64,
}

struct Derived {
    ratio: Option<(f64, Option<f64>)>,
    r3: Option<Result<(f64, Option<f64>), String>>,
}

fn spread(reps: Option<Vec<f64>>) -> Option<f64> {
    reps.map(|r| jackknife_spread(&r)).filter(|e| e.is_finite())
}

/// U-statistic value and leave-one-out replicates of one statistic.
type Replicates = (Statistic, f64, Vec<f64>);

fn derived(
    snaps: &[Snapshot],
    part: &PartitionSpec,
    stats: &[Statistic],
    mut known: Vec<Replicates>,
) -> CliResult<Derived> {
    let has = |s| stats.contains(&s);
    let mut result = Derived {
        ratio: None,
        r3: None,
    };
    if !has(Statistic::P3) || !(has(Statistic::P2) || has(Statistic::S3)) {
        return Ok(result);
    }
    let mut get = |stat: Statistic| -> CliResult<(f64, Vec<f64>)> {
        if let Some(pos) = known.iter().position(|r| r.0 == stat) {
            let (_, v, reps) = known.swap_remove(pos);
            return Ok((v, reps));
        }
        let (est, reps) = estimate_with_replicates(snaps, part, stat)?;
        Ok((est.value, reps))
    };
    let (p3, p3_reps) = get(Statistic::P3)?;
    if has(Statistic::P2) && p3 != 0.0 {
        let (p2, p2_reps) = get(Statistic::P2)?;
        let reps = p2_reps
            .iter()
            .zip(&p3_reps)
            .map(|(a, b)| a * a / b)
            .collect();
        result.ratio = Some((p2 * p2 / p3, spread(Some(reps))));
    }
    if has(Statistic::S3) {
        let (s3, s3_reps) = get(Statistic::S3)?;
        result.r3 = Some(match r3_ratio(p3, s3) {
            Ok(r3) => {
                let reps: Option<Vec<f64>> = p3_reps
                    .iter()
                    .zip(&s3_reps)
                    .map(|(a, b)| r3_ratio(*a, *b).ok())
                    .collect();
                Ok((r3, spread(reps)))
            }
            Err(e) => Err(e.to_string()),
        });
    }
    Ok(result)
}

fn load_dataset(input: &Input) -> CliResult<MeasurementDataset> {
    read_dataset_file(&input.path)
        .map_err(|e| CliError::Data(format!("{}: {e}", input.path.display())))
}

pub fn estimate_cmd(
    cfg: &Config,
    cfg_bytes: &[u8],
    datasets: &[PathBuf],
    plot: bool,
) -> CliResult<PathBuf> {
    let parts = cfg.require_partitions()?;
    let stats = cfg.statistics();
    let inputs = estimate_inputs(cfg, datasets)?;
    let mut out = Output::create(&cfg.output_dir, "estimate", cfg_bytes)?;
    let mut fig1c = Csv::new(&[
        "dataset",
        "t_ms",
        "partition",
        "p2",
        "p2_err",
        "p3",
        "p3_err",
        "p2sq_over_p3",
        "ratio_err",
    ]);
    let mut fig4a = Csv::new(&["dataset", "t_ms", "partition", "r3", "r3_err"]);
    for input in &inputs {
        let ds = load_dataset(input)?;
        let mut records = Vec::new();
        let mut derived_lines = Vec::new();
        for part in &parts {
            let ab = part.ab_sites();
            let missing: Vec<usize> = ab
                .iter()
                .copied()
                .filter(|s| !ds.sites.contains(s))
                .collect();
            if !missing.is_empty() {
                return Err(CliError::Config(format!(
                    "partition {part}: sites {missing:?} are not in dataset {}",
                    input.label
                )));
            }
            let snaps = snapshots_from_dataset(&ds, &ab)?;
            let mut by_stat = Vec::new();
            let mut known = Vec::new();
            for &stat in &stats {
                let est = match cfg.method {
                    Some(Method::MedianOfMeans) => {
                        median_of_means(&snaps, part, stat, cfg.k_groups.unwrap_or(10))?
                    }
                    _ => {
                        let (est, reps) = estimate_with_replicates(&snaps, part, stat)?;
                        known.push((stat, est.value, reps));
                        est
                    }
                };
                records.push(EstimateRecord::new(&est, part, Some(ds.seed)));
                by_stat.push((stat, est));
            }
            let d = derived(&snaps, part, &stats, known)?;
            let line = |quantity, value, std_error, reason| DerivedRecord {
                quantity,
                partition: part.clone(),
                value,
                std_error,
                reason,
                m: ds.m(),
                seed: ds.seed,
            };
            if let Some((v, e)) = d.ratio {
                derived_lines.push(line("p2_sq_over_p3", Value::from(v), e, None));
            }
            match &d.r3 {
                Some(Ok((v, e))) => derived_lines.push(line("r3", Value::from(*v), *e, None)),
                Some(Err(reason)) => derived_lines.push(line(
                    "r3",
                    Value::from("undefined"),
                    None,
                    Some(reason.clone()),
                )),
                None => {}
            }
            let find = |s| by_stat.iter().find(|(k, _)| *k == s).map(|(_, e)| e);
            let t = opt(input.t_ms);
            if let (Some(p2), Some(p3)) = (find(Statistic::P2), find(Statistic::P3)) {
                let (ratio, ratio_err) = d.ratio.map_or((None, None), |(v, e)| (Some(v), e));
                fig1c.row(&[
                    input.label.clone(),
                    t.clone(),
                    part.to_string(),
                    p2.value.to_string(),
                    p2.std_error.to_string(),
                    p3.value.to_string(),
                    p3.std_error.to_string(),
                    opt(ratio),
                    opt(ratio_err),
                ]);
            }
            match &d.r3 {
                Some(Ok((v, e))) => fig4a.row(&[
                    input.label.clone(),
                    t,
                    part.to_string(),
                    v.to_string(),
                    opt(*e),
                ]),
                Some(Err(_)) => fig4a.row(&[
                    input.label.clone(),
                    t,
                    part.to_string(),
                    "undefined".into(),
                    String::new(),
                ]),
                None => {}
            }
        }
        let name = format!("estimates_{}.jsonl", input.label);
        out.write(
            &name,
            "estimates",
            &json_lines(&records),
            Some(ds.seed),
            input.t_ms,
        )?;
        if !derived_lines.is_empty() {
            let name = format!("derived_{}.jsonl", input.label);
            out.write(
                &name,
                "derived",
                &json_lines(&derived_lines),
                Some(ds.seed),
                input.t_ms,
            )?;
        }
    }
    if plot {
        out.write("fig1c.csv", "plot", &fig1c.into_bytes(), None, None)?;
        out.write("fig4a.csv", "plot", &fig4a.into_bytes(), None, None)?;
    }
    out.finish()
}

#[derive(Serialize)]
struct CompareRecord<'a> {
    t_ms: Option<f64>,
    partition: &'a PartitionSpec,
    #[serde(flatten)]
    report: &'a ConditionReport,
}

pub fn compare(cfg: &Config, cfg_bytes: &[u8], plot: bool) -> CliResult<PathBuf> {
    let parts = cfg.require_partitions()?;
    let mut out = Output::create(&cfg.output_dir, "compare", cfg_bytes)?;
    let mut rows = Vec::new();
    for tp in time_points(cfg)? {
        for part in &parts {
            let rho = tp.state.reduced(&part.ab_sites())?;
            rows.push((tp.t_ms, part.clone(), compare_conditions(&rho, part)?));
        }
    }
    let records: Vec<CompareRecord> = rows
        .iter()
        .map(|(t_ms, partition, report)| CompareRecord {
            t_ms: *t_ms,
            partition,
            report,
        })
        .collect();
    out.write(
        "conditions.jsonl",
        "conditions",
        &json_lines(&records),
        None,
        None,
    )?;
    let mut table = Csv::new(&[
        "t_ms",
        "partition",
        "negativity",
        "p2",
        "p3",
        "p3_ppt_margin",
        "purity_gap",
        "ppt_violated",
        "p3_ppt_violated",
        "purity_condition_met",
    ]);
    let mut fig6 = Csv::new(&[
        "t_ms",
        "ab_size",
        "partition",
        "negativity",
        "p3_ppt_margin",
        "purity_gap",
    ]);
    for (t_ms, part, r) in &rows {
        table.row(&[
            opt(*t_ms),
            part.to_string(),
            r.negativity.to_string(),
            r.p2.to_string(),
            r.p3.to_string(),
            r.p3_ppt_margin.to_string(),
            r.purity_gap.to_string(),
            r.ppt_violated.to_string(),
            r.p3_ppt_violated.to_string(),
            r.purity_condition_met.to_string(),
        ]);
        fig6.row(&[
            opt(*t_ms),
            part.ab_size().to_string(),
            part.to_string(),
            r.negativity.to_string(),
            r.p3_ppt_margin.to_string(),
            r.purity_gap.to_string(),
        ]);
    }
    out.write("conditions.csv", "table", &table.into_bytes(), None, None)?;
    if plot {
        out.write("fig6.csv", "plot", &fig6.into_bytes(), None, None)?;
    }
    out.finish()
}

#[derive(Serialize)]
struct SweepSummary {
    statistic: Statistic,
    state_label: String,
    ab_size: usize,
    exact: f64,
    small_m_slope: f64,
    large_m_slope: f64,
    seed: u64,
}

fn half_partition(ab: usize) -> CliResult<PartitionSpec> {
    Ok(PartitionSpec::new(
        (1..=ab / 2).collect(),
        (ab / 2 + 1..=ab).collect(),
    )?)
}

pub fn sweep(cfg: &Config, cfg_bytes: &[u8], plot: bool) -> CliResult<PathBuf> {
    let s = cfg.sweep()?;
    let label = match cfg.state {
        StateKind::Ghz => "ghz",
        StateKind::TfimGround => "tfim",
        _ => {
            return Err(CliError::Config(
                "state: sweeps support ghz and tfim_ground".into(),
            ))
        }
    };
    let mut out = Output::create(&cfg.output_dir, "sweep", cfg_bytes)?;
    let mut summary = Vec::new();
    let mut figs: Vec<(Statistic, Csv)> = Vec::new();
    for (si, &stat) in s.statistics.iter().enumerate() {
        let mut fig = Csv::new(&["ab_size", "M", "mean_abs_err", "stderr", "trials"]);
        for &ab in &s.ab_sizes {
            let state = match cfg.state {
                StateKind::Ghz => make_ghz(ab)?,
                _ => ground_state(&build_hamiltonian(&cfg.hamiltonian_spec(ab)?)?)?.state,
            };
            let part = half_partition(ab)?;
            let seed = derive_seed(cfg.seed, &[si as u64, ab as u64]);
            let setup = TrialSetup {
                shots: cfg.p()?,
                ensemble: cfg.ensemble,
                trials: s.trials,
                seed,
            };
            let mut res: SweepResult = error_scaling_sweep(&state, &part, stat, &s.m_grid, setup)?;
            res.state_label = label.to_string();
            let name = format!("sweep_{label}_{stat}_ab{ab}.csv");
            out.write(&name, "sweep", res.to_csv().as_bytes(), Some(seed), None)?;
            for p in &res.grid {
                fig.row(&[
                    ab.to_string(),
                    p.m.to_string(),
                    p.errors.mean_abs_err.to_string(),
                    p.errors.stderr.to_string(),
                    p.errors.trials.to_string(),
                ]);
            }
            summary.push(SweepSummary {
                statistic: stat,
                state_label: res.state_label,
                ab_size: ab,
                exact: res.exact,
                small_m_slope: res.small_m_slope,
                large_m_slope: res.large_m_slope,
                seed,
            });
        }
        figs.push((stat, fig));
    }
    out.write(
        "sweep_summary.json",
        "summary",
        &pretty(&summary),
        None,
        None,
    )?;
    if plot {
        let figure = if label == "ghz" { "fig2" } else { "fig7" };
        for (stat, fig) in figs {
            let panel = match stat {
                Statistic::P2 => "a",
                Statistic::P3 => "b",
                _ => continue,
            };
            out.write(
                &format!("{figure}{panel}.csv"),
                "plot",
                &fig.into_bytes(),
                None,
                None,
            )?;
        }
    }
    out.finish()
}

#[derive(Serialize)]
struct WernerSummary {
    d: usize,
    points: usize,
    disagreements: Vec<f64>,
    equivalent: bool,
    p3_root: Option<f64>,
    r3_witness: Option<ptmoments::entcond::WernerWitness>,
}

pub fn werner(cfg: &Config, cfg_bytes: &[u8], d: Option<usize>) -> CliResult<PathBuf> {
    let d = cfg.werner_d(d)?;
    let grid = cfg.werner_grid()?;
    let sweep = werner_equivalence_sweep(d, &grid)?;
    let mut out = Output::create(&cfg.output_dir, "werner", cfg_bytes)?;
    let mut table = Csv::new(&[
        "alpha",
        "p2",
        "p3",
        "s3",
        "ppt_violated",
        "p3_ppt_violated",
        "agree",
    ]);
    for r in &sweep.rows {
        table.row(&[
            r.alpha.to_string(),
            r.p2.to_string(),
            r.p3.to_string(),
            werner_s3(WernerSpec::new(d, r.alpha)?)?.to_string(),
            r.ppt_violated.to_string(),
            r.p3_ppt_violated.to_string(),
            r.agrees().to_string(),
        ]);
    }
    out.write(
        &format!("werner_d{d}.csv"),
        "table",
        &table.into_bytes(),
        None,
        None,
    )?;
    let summary = WernerSummary {
        d,
        points: grid.len(),
        equivalent: sweep.disagreements.is_empty(),
        disagreements: sweep.disagreements,
        p3_root: sweep.p3_root,
        r3_witness: werner_r3_nonmonotone_check(d)?,
    };
    out.write(
        &format!("werner_d{d}.json"),
        "summary",
        &pretty(&summary),
        None,
        None,
    )?;
    out.finish()
}

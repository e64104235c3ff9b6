use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use aberrant::detectors::detect;
use aberrant::evaluation::{
    aggregate, align_alerts, count_profile, metrics, score, weekday_means, weekday_profile,
    DatasetScore, DateRange, EvaluationReport,
};
use aberrant::series::{write_counts, write_gold};
use aberrant::synth::{generate, ScenarioSpec};
use aberrant::tuning::{sweep, write_sweep_table, Objective, SweepSpec};
use aberrant::{GoldStandard, MetricValue, Topic};
use chrono::Weekday;
use serde::Serialize;

use crate::args::{
    DetectArgs, EvaluateArgs, Format, ObjectiveArg, ProfileArgs, SimulateArgs, SweepArgs,
};
use crate::error::CliError;
use crate::input::{
    read_counts, read_gold, read_input, read_text, AlertTrack, Input, DETECT_HEADER,
};
use crate::settings::{load_file_config, Settings};

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct DetectRow<'a> {
    disease: &'a str,
    country: &'a str,
    date: String,
    count: u64,
    statistic: Option<f64>,
    alert: bool,
}

pub fn cmd_detect(args: &DetectArgs) -> Result<(), CliError> {
    let file = load_file_config(args.detector.config.as_deref())?;
    let settings = Settings::resolve(&args.detector, &file);
    let cfg = settings.config(settings.single_algorithm("detect")?)?;
    let series = read_counts(&args.counts)?;

    let results: Vec<_> = series
        .iter()
        .map(|s| detect(s, &cfg))
        .collect::<aberrant::Result<_>>()?;
    let mut rows = Vec::new();
    for (s, r) in series.iter().zip(&results) {
        for i in 0..s.len() {
            rows.push(DetectRow {
                disease: s.topic().disease(),
                country: s.topic().country(),
                date: s.date(i).format("%Y-%m-%d").to_string(),
                count: s.counts()[i],
                statistic: r.statistic[i],
                alert: r.alert[i],
            });
        }
    }

    let mut out = open_output(args.detector.output.as_deref())?;
    match settings.format {
        Format::Json => write_json(&mut out, &rows)?,
        // No topics, no rows: the output stays empty rather than header-only.
        Format::Csv if rows.is_empty() => {}
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(DETECT_HEADER)?;
            for r in &rows {
                w.write_record([
                    r.disease,
                    r.country,
                    &r.date,
                    &r.count.to_string(),
                    &r.statistic.map(|v| v.to_string()).unwrap_or_default(),
                    if r.alert { "true" } else { "false" },
                ])?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    algorithm: String,
    scope: &'static str,
    disease: Option<String>,
    country: Option<String>,
    report: EvaluationReport<f64>,
}

#[derive(Serialize)]
struct ReportFile {
    reports: Vec<ReportRow>,
}

const REPORT_HEADER: [&str; 24] = [
    "algorithm",
    "scope",
    "disease",
    "country",
    "days",
    "alert_days",
    "tp",
    "fp",
    "fn",
    "tn",
    "sensitivity",
    "sensitivity_ci_low",
    "sensitivity_ci_high",
    "specificity",
    "specificity_ci_low",
    "specificity_ci_high",
    "ppv",
    "ppv_ci_low",
    "ppv_ci_high",
    "npv",
    "npv_ci_low",
    "npv_ci_high",
    "f1",
    "alarms_per_100_days",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn metric_cells(m: Option<MetricValue>) -> [String; 3] {
    [
        opt(m.map(|m| m.value)),
        opt(m.and_then(|m| m.ci_low)),
        opt(m.and_then(|m| m.ci_high)),
    ]
}

fn write_reports(out: &mut dyn Write, rows: &[ReportRow], format: Format) -> Result<(), CliError> {
    if format == Format::Json {
        return write_json(
            out,
            &ReportFile {
                reports: rows.iter().map(clone_row).collect(),
            },
        );
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for row in rows {
        let r = &row.report;
        let mut rec = vec![
            row.algorithm.clone(),
            row.scope.to_string(),
            row.disease.clone().unwrap_or_default(),
            row.country.clone().unwrap_or_default(),
            r.days_observed.to_string(),
            r.alert_days.to_string(),
            r.tally.tp.to_string(),
            r.tally.fp.to_string(),
            r.tally.fn_.to_string(),
            r.tally.tn.to_string(),
        ];
        for m in [r.sensitivity, r.specificity, r.ppv, r.npv] {
            rec.extend(metric_cells(m));
        }
        rec.push(opt(r.f1.map(|m| m.value)));
        rec.push(r.alarms_per_100_days.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn clone_row(r: &ReportRow) -> ReportRow {
    ReportRow {
        algorithm: r.algorithm.clone(),
        scope: r.scope,
        disease: r.disease.clone(),
        country: r.country.clone(),
        report: r.report.clone(),
    }
}

fn gold_for(gold: &[GoldStandard], topic: &Topic) -> GoldStandard {
    gold.iter()
        .find(|g| g.topic() == topic)
        .cloned()
        .unwrap_or_else(|| GoldStandard::empty(topic.clone()))
}

fn check_gold_topics<'a>(
    gold: &[GoldStandard],
    topics: impl Iterator<Item = &'a Topic>,
) -> Result<(), CliError> {
    let known: BTreeSet<&Topic> = topics.collect();
    for g in gold {
        if !known.contains(g.topic()) {
            return Err(aberrant::Error::MissingTopic(g.topic().to_string()).into());
        }
    }
    Ok(())
}

fn topic_rows(
    algorithm: &str,
    scored: Vec<(Topic, DatasetScore)>,
) -> Result<Vec<ReportRow>, CliError> {
    let mut rows = Vec::new();
    let scores: Vec<DatasetScore> = scored.iter().map(|(_, s)| *s).collect();
    for (topic, s) in scored {
        rows.push(ReportRow {
            algorithm: algorithm.to_string(),
            scope: "topic",
            disease: Some(topic.disease().to_string()),
            country: Some(topic.country().to_string()),
            report: metrics(s.tally, s.days_observed, s.alert_days)?,
        });
    }
    if !scores.is_empty() {
        rows.push(ReportRow {
            algorithm: algorithm.to_string(),
            scope: "aggregate",
            disease: None,
            country: None,
            report: aggregate(&scores)?,
        });
    }
    Ok(rows)
}

fn score_track(track: &AlertTrack, gold: &GoldStandard) -> Result<DatasetScore, CliError> {
    let period = DateRange::new(track.start_date, track.date(track.alert.len() - 1))?;
    let tally = align_alerts(&track.topic, track.start_date, &track.alert, gold, period)?;
    Ok(DatasetScore {
        tally,
        days_observed: period.days() as u64,
        alert_days: track.alert.iter().filter(|&&a| a).count() as u64,
    })
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let file = load_file_config(args.detector.config.as_deref())?;
    let settings = Settings::resolve(&args.detector, &file);
    let input = read_input(&args.counts)?;
    let gold = read_gold(&args.gold)?;
    let mut rows = Vec::new();

    match input {
        Input::Counts(series) => {
            check_gold_topics(&gold, series.iter().map(|s| s.topic()))?;
            for algorithm in settings.algorithms() {
                let cfg = settings.config(algorithm)?;
                let scored = series
                    .iter()
                    .map(|s| {
                        let g = gold_for(&gold, s.topic());
                        Ok((s.topic().clone(), score(&detect(s, &cfg)?, &g)?))
                    })
                    .collect::<aberrant::Result<Vec<_>>>()?;
                rows.extend(topic_rows(algorithm.name(), scored)?);
            }
        }
        Input::Alerts(tracks) => {
            check_gold_topics(&gold, tracks.iter().map(|t| &t.topic))?;
            let scored = tracks
                .iter()
                .map(|t| Ok((t.topic.clone(), score_track(t, &gold_for(&gold, &t.topic))?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            rows.extend(topic_rows("input", scored)?);
        }
    }

    let mut out = open_output(args.detector.output.as_deref())?;
    write_reports(&mut out, &rows, settings.format)?;
    out.flush()?;
    Ok(())
}

/// Default threshold grid: 0.1, 0.2, ..., 10.0.
fn default_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 10.0).collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let file = load_file_config(args.detector.config.as_deref())?;
    let settings = Settings::resolve(&args.detector, &file);
    let template = settings.config(settings.single_algorithm("sweep")?)?;
    let series = read_counts(&args.counts)?;
    let gold = read_gold(&args.gold)?;
    check_gold_topics(&gold, series.iter().map(|s| s.topic()))?;
    if series.is_empty() {
        return Err(CliError::Data("no count series to train on".into()));
    }
    let training = series
        .into_iter()
        .map(|s| {
            let g = gold_for(&gold, s.topic());
            (s, g)
        })
        .collect();

    let grid = args.grid.clone().or(file.grid).unwrap_or_else(default_grid);
    let mut spec = SweepSpec::new(template, grid, training);
    spec.k_grid = args.k_grid.clone().or(file.k_grid).unwrap_or_default();
    spec.lambda_grid = args
        .lambda_grid
        .clone()
        .or(file.lambda_grid)
        .unwrap_or_default();
    spec.sigma_floor_grid = args
        .sigma_floor_grid
        .clone()
        .or(file.sigma_floor_grid)
        .unwrap_or_default();
    spec.purge_grid = args
        .purge_grid
        .clone()
        .or(file.purge_grid)
        .unwrap_or_default();
    spec.objective = match args.objective.or(file.objective) {
        Some(ObjectiveArg::PerDatasetMean) => Objective::PerDatasetMean,
        _ => Objective::Pooled,
    };
    for cfg in spec
        .lambda_grid
        .iter()
        .map(|&l| aberrant::DetectorConfig {
            lambda: l,
            ..spec.template.clone()
        })
        .chain(
            spec.sigma_floor_grid
                .iter()
                .map(|&f| aberrant::DetectorConfig {
                    sigma_floor: f,
                    ..spec.template.clone()
                }),
        )
    {
        cfg.validate()?;
    }

    let outcome = sweep(&spec)?;
    let mut out = open_output(args.detector.output.as_deref())?;
    match settings.format {
        Format::Json => write_json(&mut out, &outcome)?,
        Format::Csv => write_sweep_table(&outcome, &mut out)?,
    }
    out.flush()?;
    eprintln!(
        "best_threshold={} f1={}",
        outcome.best_threshold, outcome.best_objective
    );
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let file = load_file_config(args.config.as_deref())?;
    let text = read_text(&args.scenario)?;
    let mut spec = ScenarioSpec::from_json(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.scenario.display())))?;
    if let Some(seed) = args.seed.or(file.seed) {
        spec.seed = seed;
    }
    let (series, gold) = generate(&spec)?;
    let mut out = open_output(args.counts_out.as_deref())?;
    write_counts(std::slice::from_ref(&series), &mut out)?;
    out.flush()?;
    if let Some(path) = &args.gold_out {
        let mut g = open_output(Some(path))?;
        write_gold(std::slice::from_ref(&gold), &mut g)?;
        g.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ProfileRow {
    weekday: String,
    mean_value: Option<f64>,
}

const WEEKDAYS: [Weekday; 7] = [
    Weekday::Mon,
    Weekday::Tue,
    Weekday::Wed,
    Weekday::Thu,
    Weekday::Fri,
    Weekday::Sat,
    Weekday::Sun,
];

pub fn cmd_profile(args: &ProfileArgs) -> Result<(), CliError> {
    let file = load_file_config(args.detector.config.as_deref())?;
    let settings = Settings::resolve(&args.detector, &file);
    let profile = match read_input(&args.input)? {
        Input::Alerts(tracks) => weekday_means(tracks.iter().flat_map(|t| {
            t.alert
                .iter()
                .enumerate()
                .map(move |(i, &a)| (t.date(i), if a { 1.0 } else { 0.0 }))
        })),
        Input::Counts(series) if settings.algorithm.is_some() => {
            let mut results = Vec::new();
            for algorithm in settings.algorithms() {
                let cfg = settings.config(algorithm)?;
                for s in &series {
                    results.push(detect(s, &cfg)?);
                }
            }
            weekday_profile(&results)
        }
        Input::Counts(series) => count_profile(&series),
    };
    let rows: Vec<ProfileRow> = WEEKDAYS
        .iter()
        .zip(profile)
        .map(|(d, v)| ProfileRow {
            weekday: d.to_string(),
            mean_value: v,
        })
        .collect();

    let mut out = open_output(args.detector.output.as_deref())?;
    match settings.format {
        Format::Json => write_json(&mut out, &rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["weekday", "mean_value"])?;
            for r in &rows {
                w.write_record([r.weekday.clone(), opt(r.mean_value)])?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

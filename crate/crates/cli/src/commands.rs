use std::fs::File;
use std::io::{self, Read};

use odrpo_core::rater::{kendalls_w, rank_flip_rate, row_stats, StudyConfig};
use odrpo_core::theory::{beta_alpha, curl_report, limiting_beta_minus_alpha, EstimatorField};
use odrpo_core::trainer::{
    run as train_run, TaskSpec, TrainConfig, TrainMode, DEFAULT_EXACT_LR, DEFAULT_SAMPLED_LR,
};
use odrpo_core::{bin_stats, decompose, Estimator, NormalizationKind, RewardScale, RolloutGroup, WeightScheme};
use rayon::prelude::*;

use crate::error::CliError;
use crate::io::{csv_writer, num, read_groups};
use crate::{
    AdvantageArgs, Command, Common, CurlScanArgs, ObjectiveArgs, RaterSimArgs, TrainArgs, TrainingArgs,
    VoteSweepArgs,
};

pub fn dispatch(command: Command) -> Result<(), CliError> {
    let provenance = format!("odrpo {command:?}");
    match command {
        Command::Advantage(a) => with_threads(&a.common, || advantage(&a, &provenance)),
        Command::CurlScan(a) => with_threads(&a.common, || curl_scan(&a, &provenance)),
        Command::Objective(a) => with_threads(&a.common, || objective(&a, &provenance)),
        Command::RaterSim(a) => with_threads(&a.common, || rater_sim(&a, &provenance)),
        Command::Train(a) => with_threads(&a.common, || train(&a, &provenance)),
        Command::VoteSweep(a) => with_threads(&a.common, || vote_sweep(&a, &provenance)),
    }
}

fn with_threads<T>(common: &Common, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError>
where
    T: Send,
{
    match common.threads {
        None => f(),
        Some(0) => Err(CliError::Input("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn advantage(args: &AdvantageArgs, provenance: &str) -> Result<(), CliError> {
    let scale = args.scale.build(10)?;
    let estimator = args.estimator.resolve()?;
    if args.per_bin && !matches!(estimator, Estimator::Odrpo { .. }) {
        return Err(CliError::Input(format!("--per-bin needs an odrpo estimator, got {estimator}")));
    }
    let rows = match &args.input {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
            read_groups(file)?
        }
        None => {
            let mut body = String::new();
            io::stdin().read_to_string(&mut body)?;
            read_groups(body.as_bytes())?
        }
    };

    let k = scale.k();
    let mut header = vec!["group_id".to_string(), "rollout".into(), "reward".into(), "advantage".into()];
    if args.per_bin {
        header.extend((1..=k).map(|b| format!("bin_{b}")));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = csv_writer(args.common.out.as_deref(), provenance, &header_refs)?;
    let mut diag = match &args.weights_out {
        Some(p) => Some(csv_writer(Some(p), provenance, &["group_id", "bin", "mu", "weight"])?),
        None => None,
    };
    let scheme = match estimator {
        Estimator::Odrpo { weights, .. } => weights,
        _ => WeightScheme::Unit,
    };

    for row in &rows {
        let at = |e: CliError| e.context(format!("line {} (group {})", row.line, row.group_id));
        let group = RolloutGroup::from_values(&scale, &row.rewards).map_err(|e| at(e.into()))?;
        let adv = estimator.advantages(&group).map_err(|e| at(e.into()))?;
        for i in 0..group.len() {
            let mut record =
                vec![row.group_id.clone(), (i + 1).to_string(), num(group.reward(i)), num(adv.values[i])];
            if args.per_bin {
                let per_bin = adv.per_bin.as_ref().expect("ordinal estimator has bins");
                record.extend(per_bin[i].iter().map(|&v| num(v)));
            }
            out.write_record(&record)?;
        }
        if let Some(w) = diag.as_mut() {
            let stats = bin_stats(&decompose(&group));
            let weights = scheme.weights_for_group(&group, &stats);
            for b in 1..=k {
                w.write_record([row.group_id.clone(), b.to_string(), num(stats.mean(b)), num(weights.get(b))])?;
            }
        }
    }
    out.flush()?;
    if let Some(mut w) = diag {
        w.flush()?;
    }
    Ok(())
}

fn all_estimators() -> Vec<Estimator> {
    let mut v = vec![Estimator::Grpo, Estimator::MaxRl];
    for norm in [NormalizationKind::StdDev, NormalizationKind::Mean] {
        for weights in [WeightScheme::Unit, WeightScheme::Gini, WeightScheme::GiniMedian] {
            v.push(Estimator::Odrpo { norm, weights });
        }
    }
    v
}

fn curl_scan(args: &CurlScanArgs, provenance: &str) -> Result<(), CliError> {
    if args.k_min < 2 || args.m_min < 2 || args.k_min > args.k_max || args.m_min > args.m_max {
        return Err(CliError::Input("need 2 <= k-min <= k-max and 2 <= m-min <= m-max".into()));
    }
    let estimators = args.estimators.clone().unwrap_or_else(all_estimators);
    let mut cells = Vec::new();
    for &e in &estimators {
        for k in args.k_min..=args.k_max {
            for m in args.m_min..=args.m_max {
                cells.push((e, k, m));
            }
        }
    }
    let reports: Vec<(Estimator, usize, usize, f64, f64)> = cells
        .par_iter()
        .map(|&(e, k, m)| {
            let scale = RewardScale::integer(k)?;
            let report = curl_report(&EstimatorField::new(e, &scale, m)?)?;
            Ok((e, k, m, report.mac, report.max_abs))
        })
        .collect::<Result<_, odrpo_core::OdrpoError>>()?;
    let mut out = csv_writer(args.common.out.as_deref(), provenance, &["estimator", "K", "M", "mac", "max_abs"])?;
    for (e, k, m, mac, max_abs) in reports {
        out.write_record([e.label(), k.to_string(), m.to_string(), num(mac), num(max_abs)])?;
    }
    out.flush()?;
    Ok(())
}

fn objective(args: &ObjectiveArgs, provenance: &str) -> Result<(), CliError> {
    if args.points < 2 {
        return Err(CliError::Input("--points must be >= 2".into()));
    }
    let mut out = csv_writer(
        args.common.out.as_deref(),
        provenance,
        &["P", "beta", "alpha", "beta_minus_alpha", "arcsin_grad"],
    )?;
    for i in 0..args.points {
        let p = i as f64 / (args.points - 1) as f64;
        let (beta, alpha) = beta_alpha(p, args.group_size, args.norm)?;
        // arcsin gradient in field units, infinite at the endpoints
        let grad = limiting_beta_minus_alpha(p);
        out.write_record([num(p), num(beta), num(alpha), num(beta - alpha), num(grad)])?;
    }
    out.flush()?;
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn rater_sim(args: &RaterSimArgs, provenance: &str) -> Result<(), CliError> {
    if args.responses < 2 || args.calls < 2 || args.datapoints < 1 {
        return Err(CliError::Input("need --responses >= 2, --calls >= 2 and --datapoints >= 1".into()));
    }
    if args.quality_spread.is_nan() || args.quality_spread < 0.0 {
        return Err(CliError::Input("--quality-spread must be >= 0".into()));
    }
    let study = StudyConfig {
        k: args.scale.build(10)?.k(),
        responses: args.responses,
        calls: args.calls,
        noise: args.judge.build()?,
        quality_spread: args.quality_spread,
    };
    let results: Vec<_> = (0..args.datapoints as u64)
        .into_par_iter()
        .map(|d| -> Result<_, odrpo_core::OdrpoError> {
            let matrix = study.datapoint(args.common.seed, d)?;
            let concordance = match kendalls_w(&matrix) {
                Ok(r) => Some(r),
                Err(odrpo_core::OdrpoError::DegenerateMatrix) => None,
                Err(e) => return Err(e),
            };
            Ok((concordance, rank_flip_rate(&matrix)?, row_stats(&matrix)))
        })
        .collect::<Result<_, _>>()?;

    let mut out =
        csv_writer(args.common.out.as_deref(), provenance, &["datapoint", "W", "chi2", "p_value", "flip_rate"])?;
    let mut resp = match &args.responses_out {
        Some(p) => {
            Some(csv_writer(Some(p), provenance, &["datapoint", "response", "mean", "std", "skew", "kurtosis"])?)
        }
        None => None,
    };
    let mut ws = Vec::new();
    for (d, (concordance, flip, stats)) in results.iter().enumerate() {
        let (w, chi2, p) = match concordance {
            Some(r) => {
                ws.push(r.w);
                (r.w, r.chi2, r.p_value)
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        out.write_record([d.to_string(), num(w), num(chi2), num(p), num(*flip)])?;
        if let Some(r) = resp.as_mut() {
            for (i, s) in stats.iter().enumerate() {
                r.write_record([
                    d.to_string(),
                    (i + 1).to_string(),
                    num(s.mean),
                    num(s.std),
                    num(s.skewness.unwrap_or(f64::NAN)),
                    num(s.excess_kurtosis.unwrap_or(f64::NAN)),
                ])?;
            }
        }
    }
    out.flush()?;
    if let Some(mut r) = resp {
        r.flush()?;
    }
    let below = ws.iter().filter(|&&w| w < args.threshold).count();
    let degenerate = results.len() - ws.len();
    let median_w = median(ws.clone());
    eprintln!(
        "datapoints={} median_W={} below_threshold({})={} degenerate={}",
        results.len(),
        num(median_w),
        args.threshold,
        num(below as f64 / ws.len().max(1) as f64),
        degenerate
    );
    Ok(())
}

fn tasks_for(scale: &RewardScale, count: usize, judge: Option<odrpo_core::rater::JudgeNoise>) -> Vec<TaskSpec> {
    (0..count)
        .map(|_| TaskSpec { judge, ..TaskSpec::identity(scale.clone()) })
        .collect()
}

fn train_config(t: &TrainingArgs, estimator: Estimator, mode: TrainMode, votes: usize, seed: u64) -> TrainConfig {
    let base = match mode {
        TrainMode::Exact => TrainConfig::exact(estimator),
        TrainMode::Sampled => TrainConfig::sampled(estimator),
    };
    let default_lr = if mode == TrainMode::Exact { DEFAULT_EXACT_LR } else { DEFAULT_SAMPLED_LR };
    TrainConfig {
        group_size: t.group_size,
        learning_rate: t.lr.unwrap_or(default_lr),
        steps: t.steps,
        votes,
        batch_size: t.batch_size,
        batch_norm: t.batch_norm,
        seed,
        tie_break: t.tie_break,
        ..base
    }
}

fn train(args: &TrainArgs, provenance: &str) -> Result<(), CliError> {
    if args.training.tasks < 1 {
        return Err(CliError::Input("--tasks must be >= 1".into()));
    }
    if args.judge && args.mode == TrainMode::Exact {
        return Err(CliError::Input("--judge applies to sampled mode only".into()));
    }
    let scale = args.scale.build(5)?;
    let estimator = args.estimator.resolve()?;
    let judge = if args.judge { Some(args.judge_noise.build()?) } else { None };
    let tasks = tasks_for(&scale, args.training.tasks, judge);
    let config = train_config(&args.training, estimator, args.mode, args.votes, args.common.seed);
    let trace = train_run(&config, &tasks)?;
    let mut out = csv_writer(
        args.common.out.as_deref(),
        provenance,
        &["step", "J", "expected_reward", "adv_mean", "adv_std", "grad_norm"],
    )?;
    for r in &trace.records {
        out.write_record([
            r.step.to_string(),
            num(r.objective),
            num(r.expected_reward),
            num(r.adv_mean),
            num(r.adv_std),
            num(r.grad_norm),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn vote_sweep(args: &VoteSweepArgs, provenance: &str) -> Result<(), CliError> {
    if args.training.tasks < 1 {
        return Err(CliError::Input("--tasks must be >= 1".into()));
    }
    let scale = args.scale.build(10)?;
    let judge = if args.deterministic_judge { None } else { Some(args.judge_noise.build()?) };
    let tasks = tasks_for(&scale, args.training.tasks, judge);
    let mut cells = Vec::new();
    for &n in &args.votes {
        for &e in &args.estimators {
            cells.push((n, e));
        }
    }
    let rows: Vec<(usize, Estimator, f64, f64)> = cells
        .par_iter()
        .map(|&(n, e)| {
            let config = train_config(&args.training, e, TrainMode::Sampled, n, args.common.seed);
            let trace = train_run(&config, &tasks)?;
            let last = trace.last().expect("at least one step");
            Ok((n, e, last.objective, last.expected_reward))
        })
        .collect::<Result<_, odrpo_core::OdrpoError>>()?;
    let mut out = csv_writer(
        args.common.out.as_deref(),
        provenance,
        &["N", "estimator", "final_J", "final_expected_reward"],
    )?;
    for (n, e, j, r) in rows {
        out.write_record([n.to_string(), e.label(), num(j), num(r)])?;
    }
    out.flush()?;
    Ok(())
}

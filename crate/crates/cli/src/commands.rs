use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use compound_fsc::capacity::{compute_cn, compute_cn_nofeedback};
use compound_fsc::causal::{CausalConditioning, InitialState};
use compound_fsc::channel::CompoundFamily;
use compound_fsc::codetree::{tree_size, CodeTree, Codebook, ConcatTree};
use compound_fsc::sim::{
    empirical_violation_rate, exact_error_probability, example1_demo, run_trials, sanov_pinsker_bound, trial_rng,
    two_phase_scheme, Decoder, DecoderChoice, TrialConfig,
};
use compound_fsc::verify::run_suite;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Config, Format};
use crate::failure::{Failure, EXIT_NOT_CONVERGED, EXIT_VERIFY};

const LN2: f64 = std::f64::consts::LN_2;

/// Files written by a command, and its exit code.
pub struct Written {
    pub files: Vec<PathBuf>,
    pub code: u8,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, Failure> {
    Ok(csv::Writer::from_path(path)?)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn echo(path: &Path) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(&std::fs::read(path)?)?;
    Ok(())
}

pub fn capacity(cfg: &mut Config, out: &Path) -> Result<Written, Failure> {
    let fam = cfg.resolve_family()?;
    let n = cfg.n.unwrap_or(1);
    cfg.n = Some(n);
    let fb = cfg.resolve_feedback(fam.shape().n_outputs())?;
    let solver = cfg.solver();
    solver.validate()?;
    let report = if fb.z_card() == 1 { compute_cn_nofeedback(&fam, n, &solver)? } else { compute_cn(&fam, &fb, n, &solver)? };

    let report_path = out.join("capacity_report.json");
    write_json(&report_path, &report)?;
    let conv_path = out.join("convergence.csv");
    let mut w = csv_writer(&conv_path)?;
    w.write_record(["iteration", "value_nats_per_symbol", "best_nats_per_symbol"])?;
    let mut best = f64::NEG_INFINITY;
    for (i, v) in report.solver.value_history.iter().enumerate() {
        best = best.max(*v);
        w.write_record([i.to_string(), v.to_string(), best.to_string()])?;
    }
    w.flush()?;

    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            println!("quantity,n,nats_per_symbol,bits_per_symbol");
            println!("C_n,{n},{},{}", report.c_n, report.c_n / LN2);
            println!("hatC_n,{n},{},{}", report.hat_c_n, report.hat_c_n / LN2);
        }
        Format::Json => println!(
            "{}",
            json!({
                "n": n,
                "C_n_nats_per_symbol": report.c_n,
                "C_n_bits_per_symbol": report.c_n / LN2,
                "hatC_n_nats_per_symbol": report.hat_c_n,
                "hatC_n_bits_per_symbol": report.hat_c_n / LN2,
                "converged": report.solver.converged,
            })
        ),
    }
    let code = if report.solver.converged {
        0
    } else {
        eprintln!(
            "warning: solver stopped after {} iterations without meeting the stopping rule",
            report.solver.iterations
        );
        EXIT_NOT_CONVERGED
    };
    Ok(Written { files: vec![report_path, conv_path], code })
}

fn build_codebook(cfg: &Config, fam: &CompoundFamily, n: usize, z_card: usize) -> Result<Codebook, Failure> {
    let nx = fam.shape().n_inputs();
    let messages = cfg.messages.unwrap_or(2);
    let kind = cfg.codebook.clone().unwrap_or_else(|| {
        if cfg.preset.as_deref() == Some("noiseless") { "constant" } else { "random" }.to_string()
    });
    match kind.as_str() {
        "random" => Ok(Codebook::generate(&CausalConditioning::uniform(n, nx, z_card), 1, messages, cfg.seed.unwrap_or(0))?),
        "constant" => {
            if messages as usize > nx {
                return Err(Failure::input(format!("a constant codebook has at most {nx} messages")));
            }
            let size = tree_size(n, z_card)?;
            let trees = (0..messages as usize)
                .map(|w| Ok(ConcatTree::single(CodeTree::new(n, nx, z_card, vec![w; size])?)))
                .collect::<Result<Vec<_>, Failure>>()?;
            Ok(Codebook::new(trees)?)
        }
        other => Err(Failure::input(format!("codebook must be random or constant, got {other}"))),
    }
}

pub fn simulate(cfg: &mut Config, out: &Path) -> Result<Written, Failure> {
    if cfg.preset.as_deref() == Some("example1") && cfg.family.is_none() {
        return example1(cfg, out);
    }
    let fam = cfg.resolve_family()?;
    let n = cfg.n.unwrap_or(4);
    let trials = cfg.trials.unwrap_or(1000);
    let seed = cfg.seed.unwrap_or(0);
    let theta = cfg.theta.clone().unwrap_or_else(|| fam.labels()[0].clone());
    let truth = fam.get(&theta).ok_or_else(|| Failure::input(format!("no member labelled {theta}")))?.clone();
    let (ny, ns) = (truth.n_outputs(), truth.n_states());
    let fb = cfg.resolve_feedback(ny)?;
    let cb = build_codebook(cfg, &fam, n, fb.z_card())?;
    let decoder_name = cfg.decoder.clone().unwrap_or_else(|| "universal".into());
    let choice = match decoder_name.as_str() {
        "universal" => DecoderChoice::Universal(fam.clone()),
        "ml" => DecoderChoice::Ml(truth.clone()),
        other => match other.strip_prefix("ml:") {
            Some(label) => DecoderChoice::Ml(fam.get(label).ok_or_else(|| Failure::input(format!("no member labelled {label}")))?.clone()),
            None => return Err(Failure::input(format!("decoder must be universal, ml or ml:<label>, got {other}"))),
        },
    };
    (cfg.n, cfg.trials, cfg.seed, cfg.theta) = (Some(n), Some(trials), Some(seed), Some(theta.clone()));
    cfg.messages = Some(cb.len() as u64);
    cfg.decoder = Some(decoder_name);
    let decoder = Decoder { choice, prior: InitialState::uniform(ns) };
    let tc = TrialConfig {
        family: fam,
        true_theta: theta,
        s0: InitialState::uniform(ns),
        codebook: cb,
        feedback: fb,
        decoder,
        trials,
        seed,
    };
    let summary = run_trials(&tc)?;
    let exact = if (ny as f64).powi(n as i32) <= 4096.0 {
        Some(exact_error_probability(&tc.codebook, &truth, &tc.s0, &tc.feedback, &tc.decoder)?)
    } else {
        None
    };

    let codebook_path = out.join("codebook.json");
    write_json(&codebook_path, &tc.codebook.to_json())?;
    let results = out.join("results.csv");
    let mut w = csv_writer(&results)?;
    w.write_record([
        "n",
        "messages",
        "rate_nats_per_symbol",
        "rate_bits_per_symbol",
        "trials",
        "errors",
        "error_rate",
        "ci95_low",
        "ci95_high",
        "exact_error_probability",
    ])?;
    let rate = (tc.codebook.len() as f64).ln() / n as f64;
    w.write_record([
        n.to_string(),
        tc.codebook.len().to_string(),
        rate.to_string(),
        (rate / LN2).to_string(),
        summary.trials.to_string(),
        summary.errors.to_string(),
        summary.error_rate.to_string(),
        summary.ci95.0.to_string(),
        summary.ci95.1.to_string(),
        exact.map(|e| e.to_string()).unwrap_or_default(),
    ])?;
    w.flush()?;
    drop(w);

    let log_path = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let p = out.join("trials.csv");
            let mut w = csv_writer(&p)?;
            w.write_record(["trial", "s0", "message", "decoded", "error"])?;
            for r in &summary.log {
                w.write_record([r.trial.to_string(), r.s0.to_string(), r.message.to_string(), r.decoded.to_string(), r.error.to_string()])?;
            }
            w.flush()?;
            p
        }
        Format::Json => {
            let p = out.join("trials.jsonl");
            let mut f = std::io::BufWriter::new(File::create(&p)?);
            for r in &summary.log {
                writeln!(f, "{}", serde_json::to_string(r).map_err(|e| Failure::input(e.to_string()))?)?;
            }
            f.flush()?;
            p
        }
    };
    echo(&results)?;
    Ok(Written { files: vec![results, log_path, codebook_path], code: 0 })
}

fn example1(cfg: &mut Config, out: &Path) -> Result<Written, Failure> {
    let n = cfg.n.unwrap_or(8);
    let trials = cfg.trials.unwrap_or(10_000);
    let seed = cfg.seed.unwrap_or(0);
    (cfg.n, cfg.trials, cfg.seed) = (Some(n), Some(trials), Some(seed));
    let report = example1_demo(&[n], trials, seed)?;
    let results = out.join("results.csv");
    let mut w = csv_writer(&results)?;
    w.write_record([
        "n",
        "theta",
        "all_bad_exact",
        "all_bad_frequency",
        "all_bad_sigma",
        "error_rate",
        "error_sigma",
        "error_exact",
        "fixed_theta_rate_bits_per_symbol",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            r.theta.to_string(),
            r.all_bad_exact.to_string(),
            r.all_bad_empirical.to_string(),
            r.all_bad_sigma.to_string(),
            r.error_empirical.to_string(),
            r.error_sigma.to_string(),
            r.error_exact.map(|e| e.to_string()).unwrap_or_default(),
            report.fixed_theta_rate_bits.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    let json_path = out.join("example1_report.json");
    write_json(&json_path, &report)?;
    echo(&results)?;
    Ok(Written { files: vec![results, json_path], code: 0 })
}

pub fn verify(cfg: &mut Config, out: &Path) -> Result<Written, Failure> {
    let suite = cfg.suite.clone().unwrap_or_else(|| "all".into());
    let seed = cfg.seed.unwrap_or(0);
    (cfg.suite, cfg.seed) = (Some(suite.clone()), Some(seed));
    let checks = run_suite(&suite, seed)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    let path = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let p = out.join("verify.csv");
            let mut w = csv_writer(&p)?;
            w.write_record(["suite", "check", "status", "instances", "violations", "worst", "detail"])?;
            for c in &checks {
                w.write_record([
                    c.suite.clone(),
                    c.name.clone(),
                    if c.pass { "pass" } else { "fail" }.to_string(),
                    c.instances.to_string(),
                    c.violations.to_string(),
                    c.worst.to_string(),
                    c.detail.clone(),
                ])?;
            }
            w.flush()?;
            p
        }
        Format::Json => {
            let p = out.join("verify.json");
            write_json(&p, &checks)?;
            p
        }
    };
    echo(&path)?;
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", checks.len());
    }
    Ok(Written { files: vec![path], code: if failed > 0 { EXIT_VERIFY } else { 0 } })
}

pub fn estimate(cfg: &mut Config, out: &Path) -> Result<Written, Failure> {
    let fam = cfg.resolve_family()?;
    if !fam.is_memoryless() {
        return Err(Failure::input("estimate needs a family of single-state channels"));
    }
    let n = cfg.n.unwrap_or(100_000);
    let trials = cfg.trials.unwrap_or(100);
    let seed = cfg.seed.unwrap_or(0);
    let m_values = cfg.m_values.clone().unwrap_or_else(|| vec![100, 200, 500, 1000, 2000, 5000, 10_000]);
    if let Some(&m) = m_values.iter().find(|&&m| m > n || m < fam.shape().n_inputs()) {
        return Err(Failure::input(format!("training length {m} must lie between |X| and n = {n}")));
    }
    (cfg.n, cfg.trials, cfg.seed, cfg.m_values) = (Some(n), Some(trials), Some(seed), Some(m_values.clone()));

    let rates = out.join("rates.csv");
    let mut w = csv_writer(&rates)?;
    w.write_record([
        "true_theta",
        "m_train",
        "n_total",
        "trials",
        "correct_fraction",
        "achieved_rate_nats_per_symbol",
        "achieved_rate_bits_per_symbol",
        "target_rate_nats_per_symbol",
        "true_capacity_nats_per_symbol",
        "compound_capacity_nats_per_symbol",
    ])?;
    for (k, label) in fam.labels().iter().enumerate() {
        for (j, &m) in m_values.iter().enumerate() {
            let stream = seed.wrapping_add(((k * m_values.len() + j) as u64) << 32);
            let reports = (0..trials)
                .into_par_iter()
                .map(|t| two_phase_scheme(&fam, label, m, n, &mut trial_rng(stream, t)))
                .collect::<Result<Vec<_>, _>>()?;
            let correct = reports.iter().filter(|r| &r.estimated_theta == label).count() as f64 / trials as f64;
            let avg = reports.iter().map(|r| r.achieved_rate).sum::<f64>() / trials as f64;
            let r0 = &reports[0];
            w.write_record([
                label.clone(),
                m.to_string(),
                n.to_string(),
                trials.to_string(),
                correct.to_string(),
                avg.to_string(),
                (avg / LN2).to_string(),
                ((1.0 - m as f64 / n as f64) * r0.true_capacity).to_string(),
                r0.true_capacity.to_string(),
                r0.compound_capacity.to_string(),
            ])?;
        }
    }
    w.flush()?;
    drop(w);

    let sanov = out.join("sanov.csv");
    let mut w = csv_writer(&sanov)?;
    w.write_record(["m", "eps1", "trials", "bound", "empirical_rate", "sigma", "within_bound"])?;
    let first = &fam.members()[0];
    let ny = first.n_outputs();
    let sanov_trials = 10_000;
    for (i, &m) in [100usize, 200, 500, 1000].iter().enumerate() {
        for (j, &eps) in [0.1f64, 0.15, 0.2, 0.3].iter().enumerate() {
            let bound = sanov_pinsker_bound(m, ny, eps);
            let (rate, sigma) = empirical_violation_rate(first, 0, m, eps, sanov_trials, seed.wrapping_add((i * 4 + j) as u64))?;
            let cap = bound.min(1.0);
            let within = rate <= cap + 3.0 * (cap * (1.0 - cap) / sanov_trials as f64).sqrt();
            w.write_record([
                m.to_string(),
                eps.to_string(),
                sanov_trials.to_string(),
                bound.to_string(),
                rate.to_string(),
                sigma.to_string(),
                within.to_string(),
            ])?;
        }
    }
    w.flush()?;
    drop(w);
    echo(&rates)?;
    echo(&sanov)?;
    Ok(Written { files: vec![rates, sanov], code: 0 })
}

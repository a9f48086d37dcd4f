use std::path::{Path, PathBuf};

use conedeflate::io::{MatrixJson, VectorJson};
use conedeflate::report::{energy_rows, Audit, ChainReport, FeatureSummary, FrameReport};
use conedeflate::strategies::random_pool;
use conedeflate::{
    kernel_feature_chain, parsevalize_unchecked, run_chain, verify_chain, CVector, ChainInput,
    HermitianMatrix, Kernel, KernelModel, Schedule, StopRule, StrategyConfig, StrategyKind,
    ToleranceConfig,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::{
    DecomposeArgs, KernelArgs, KernelFlag, ParsevalizeArgs, ReportArgs, ScheduleFlag,
    StopArgs, StrategyArgs, StrategyFlag, TolArgs, VerifyArgs,
};
use crate::exit::{Failure, INVALID_CHAIN, NUMERIC, UNCERTIFIED};
use crate::output::{csv_bytes, emit, json_bytes, read_text, sidecar, write_atomic};

/// Pool size per dimension when weak greedy runs without a configured pool.
const POOL_PER_DIM: usize = 16;

type Outcome = Result<(), Failure>;

fn parse_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("malformed {what} in {}: {e}", path.display())))
}

fn load_tolerances(a: &TolArgs) -> Result<ToleranceConfig, Failure> {
    let tol = match &a.tolerances {
        Some(p) => parse_json(p, "tolerance config")?,
        None => ToleranceConfig::default(),
    };
    tol.validate()?;
    Ok(tol)
}

fn load_matrix(path: &Path) -> Result<HermitianMatrix, Failure> {
    let raw: MatrixJson = parse_json(path, "matrix JSON")?;
    Ok(HermitianMatrix::try_from(raw)?)
}

fn stop_rule(max_steps: usize, trace_tol: Option<f64>, opnorm_tol: Option<f64>) -> Result<StopRule, Failure> {
    let mut stop = StopRule::max_steps(max_steps);
    stop.trace_tol = trace_tol;
    stop.opnorm_tol = opnorm_tol;
    stop.validate()?;
    Ok(stop)
}

fn stop_from(a: &StopArgs) -> Result<StopRule, Failure> {
    stop_rule(a.max_steps, a.trace_tol, a.opnorm_tol)
}

fn load_strategy(a: &StrategyArgs) -> Result<StrategyConfig, Failure> {
    let mut cfg = match &a.strategy_config {
        Some(p) => parse_json(p, "strategy config")?,
        None => StrategyConfig::greedy(),
    };
    if let Some(flag) = a.strategy {
        cfg.kind = match flag {
            StrategyFlag::Greedy => StrategyKind::Greedy,
            StrategyFlag::WeakGreedy => StrategyKind::WeakGreedy,
            StrategyFlag::Cyclic => StrategyKind::CyclicBasis,
            StrategyFlag::Random => StrategyKind::RandomSphere,
            StrategyFlag::Explicit => StrategyKind::ExplicitList,
        };
    }
    if a.c.is_some() {
        cfg.c = a.c;
    }
    if a.seed.is_some() {
        cfg.seed = a.seed;
    }
    if cfg.kind == StrategyKind::RandomSphere && cfg.seed.is_none() {
        cfg.seed = Some(0);
    }
    Ok(cfg)
}

/// Fills in a seeded pool for weak greedy when none was configured, then
/// validates against `dim`.
fn finish_strategy(mut cfg: StrategyConfig, a: &StrategyArgs, dim: usize) -> Result<StrategyConfig, Failure> {
    if cfg.kind == StrategyKind::WeakGreedy && cfg.pool.is_none() {
        let size = a.pool_size.unwrap_or(POOL_PER_DIM * dim.max(1));
        let seed = cfg.seed.unwrap_or(0);
        log::info!("weak greedy: generated pool of {size} directions from seed {seed}");
        cfg.pool = Some(random_pool(dim, size, seed)?);
        cfg.seed = Some(seed);
        cfg.fallback_to_greedy = true;
    }
    cfg.validate(dim)?;
    Ok(cfg)
}

/// The run parameters recorded alongside each report.
#[derive(Serialize)]
struct StrategySummary {
    kind: StrategyKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pool_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    explicit_len: Option<usize>,
    fallback_to_greedy: bool,
}

impl From<&StrategyConfig> for StrategySummary {
    fn from(c: &StrategyConfig) -> Self {
        Self {
            kind: c.kind,
            c: c.c,
            seed: c.seed,
            pool_size: c.pool.as_ref().map(Vec::len),
            explicit_len: c.explicit.as_ref().map(Vec::len),
            fallback_to_greedy: c.fallback_to_greedy,
        }
    }
}

#[derive(Serialize)]
struct WithStrategy<'a, T: Serialize> {
    #[serde(flatten)]
    report: &'a T,
    strategy: StrategySummary,
}

fn audit_failure(audit: &Audit) -> Failure {
    Failure::numeric(format!(
        "self-audit failed: telescoping defect {:.3e}, trace identity gap {:.3e}",
        audit.telescoping_defect, audit.trace_identity_gap
    ))
}

pub fn decompose(a: &DecomposeArgs) -> Outcome {
    let r0 = load_matrix(&a.input)?;
    let tol = load_tolerances(&a.tol)?;
    let cfg = load_strategy(&a.strategy)?;
    let stop = stop_from(&a.stop)?;
    let cfg = finish_strategy(cfg, &a.strategy, r0.dim())?;

    let mut source = cfg.build(r0.dim())?;
    let chain = run_chain(&r0, source.as_mut(), &stop, &tol)?;
    log::info!("chain stopped after {} steps: {:?}", chain.len(), chain.stop_reason);
    let report = ChainReport::new(&chain, &stop, a.emit_vectors)?;

    let out = a.output.as_deref();
    emit(
        out,
        &json_bytes(&WithStrategy {
            report: &report,
            strategy: (&cfg).into(),
        })?,
    )?;
    if let Some(p) = sidecar(out, "energy.csv") {
        write_atomic(&p, &csv_bytes(&energy_rows(&chain))?)?;
    }
    if a.emit_chain {
        let p = sidecar(out, "chain.json").unwrap_or_else(|| PathBuf::from("chain.json"));
        let input = ChainInput::from_chain(&chain)?;
        write_atomic(&p, &json_bytes(&input)?)?;
    }
    if !report.audit.passed {
        return Err(audit_failure(&report.audit));
    }
    Ok(())
}

pub fn parsevalize(a: &ParsevalizeArgs) -> Outcome {
    let tol = load_tolerances(&a.tol)?;
    let cfg = load_strategy(&a.strategy)?;
    let stop = stop_from(&a.stop)?;
    if a.dim == 0 {
        return Err(Failure::usage("--dim must be >= 1"));
    }
    let cfg = finish_strategy(cfg, &a.strategy, a.dim)?;

    let mut source = cfg.build(a.dim)?;
    let frame = parsevalize_unchecked(a.dim, source.as_mut(), &stop, &tol)?;
    let report = FrameReport::new(&frame)?;
    emit(
        a.output.as_deref(),
        &json_bytes(&WithStrategy {
            report: &report,
            strategy: (&cfg).into(),
        })?,
    )?;
    if !report.audit.passed {
        return Err(audit_failure(&report.audit));
    }
    if !report.certified {
        return Err(Failure::new(
            UNCERTIFIED,
            format!(
                "chain not exhausted after {} steps: Parseval defect {:.3e}",
                report.len, report.parseval_defect
            ),
        ));
    }
    Ok(())
}

/// Chain file as written, before any matrix validation.
#[derive(Deserialize)]
struct RawChain {
    #[serde(rename = "R")]
    residuals: Vec<MatrixJson>,
    #[serde(rename = "E")]
    vectors: Vec<VectorJson>,
}

fn load_chain(path: &Path) -> Result<(Vec<HermitianMatrix>, Vec<CVector>), Failure> {
    let raw: RawChain = parse_json(path, "chain JSON")?;
    chain_from_raw(raw)
}

fn chain_from_raw(raw: RawChain) -> Result<(Vec<HermitianMatrix>, Vec<CVector>), Failure> {
    let rs = raw
        .residuals
        .into_iter()
        .map(HermitianMatrix::try_from)
        .collect::<conedeflate::Result<Vec<_>>>()?;
    let es = raw
        .vectors
        .into_iter()
        .map(CVector::try_from)
        .collect::<conedeflate::Result<Vec<_>>>()?;
    Ok((rs, es))
}

pub fn verify(a: &VerifyArgs) -> Outcome {
    let (rs, es) = load_chain(&a.input)?;
    let tol = load_tolerances(&a.tol)?;
    let witness = verify_chain(&rs, &es, &tol)?;
    emit(a.output.as_deref(), &json_bytes(&witness)?)?;
    match witness.verdict {
        conedeflate::Verdict::ValidChain => Ok(()),
        conedeflate::Verdict::Invalid { step, reason } => Err(Failure::new(
            INVALID_CHAIN,
            format!("invalid chain at step {step}: {reason}"),
        )),
    }
}

fn read_points(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Failure::usage(format!("malformed CSV in {}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(p) if p.iter().all(|x| x.is_finite()) => points.push(p),
            Ok(_) => {
                return Err(Failure::usage(format!(
                    "non-finite value on row {} of {}",
                    row + 1,
                    path.display()
                )))
            }
            // A non-numeric first row is a header.
            Err(_) if row == 0 => continue,
            Err(e) => {
                return Err(Failure::usage(format!(
                    "row {} of {}: {e}",
                    row + 1,
                    path.display()
                )))
            }
        }
    }
    if points.is_empty() {
        return Err(Failure::usage(format!("{} holds no points", path.display())));
    }
    Ok(points)
}

fn load_kernel(a: &KernelArgs) -> Result<(Kernel, Vec<Vec<f64>>), Failure> {
    let need_input = || {
        a.input
            .as_deref()
            .ok_or_else(|| Failure::usage("--input is required for this kernel"))
    };
    let kernel = match (&a.kernel_config, a.kernel) {
        (Some(p), None) => parse_json(p, "kernel config")?,
        (Some(_), Some(_)) => {
            return Err(Failure::usage("use either --kernel or --kernel-config, not both"))
        }
        (None, None) => return Err(Failure::usage("one of --kernel or --kernel-config is required")),
        (None, Some(KernelFlag::Gaussian)) => Kernel::Gaussian {
            sigma: a
                .sigma
                .ok_or_else(|| Failure::usage("--kernel gaussian needs --sigma"))?,
        },
        (None, Some(KernelFlag::Poly)) => Kernel::Polynomial {
            degree: a
                .degree
                .ok_or_else(|| Failure::usage("--kernel poly needs --degree"))?,
            offset: a.offset.unwrap_or(0.0),
        },
        (None, Some(KernelFlag::Linear)) => Kernel::Linear,
        (None, Some(KernelFlag::Explicit)) => Kernel::ExplicitGram {
            gram: load_matrix(need_input()?)?,
        },
    };
    kernel.validate()?;
    let points = match (&kernel, a.kernel) {
        (Kernel::ExplicitGram { .. }, _) => Vec::new(),
        _ => read_points(need_input()?)?,
    };
    Ok((kernel, points))
}

#[derive(Serialize)]
struct KernelSummary<'a> {
    #[serde(flatten)]
    summary: &'a FeatureSummary,
    kernel: &'a str,
    schedule: ScheduleName,
    max_steps: usize,
    /// Whether the feature CSV carries separate real and imaginary columns.
    complex_features: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "lowercase")]
enum ScheduleName {
    Greedy,
    Cyclic,
}

/// Imaginary parts below this fraction of the largest feature are roundoff.
const REAL_FEATURE_REL: f64 = 1e-12;

fn feature_csv(values: &conedeflate::psd::CMatrix, complex: bool) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::numeric(format!("cannot write CSV: {e}"));
    let header: Vec<String> = (0..values.ncols())
        .flat_map(|n| {
            if complex {
                vec![format!("f{n}_re"), format!("f{n}_im")]
            } else {
                vec![format!("f{n}")]
            }
        })
        .collect();
    if !header.is_empty() {
        w.write_record(&header).map_err(err)?;
    }
    for i in 0..values.nrows() {
        let row: Vec<String> = values
            .row(i)
            .iter()
            .flat_map(|z| {
                if complex {
                    vec![format!("{:?}", z.re), format!("{:?}", z.im)]
                } else {
                    vec![format!("{:?}", z.re)]
                }
            })
            .collect();
        if !row.is_empty() {
            w.write_record(&row).map_err(err)?;
        }
    }
    w.into_inner()
        .map_err(|e| Failure::numeric(format!("cannot write CSV: {e}")))
}

pub fn kernel_features(a: &KernelArgs) -> Outcome {
    let (kernel, points) = load_kernel(a)?;
    let tol = load_tolerances(&a.tol)?;
    let stop = stop_rule(a.max_steps, a.trace_tol, a.opnorm_tol)?;
    let kernel_name = match &kernel {
        Kernel::Gaussian { .. } => "gaussian",
        Kernel::Polynomial { .. } => "poly",
        Kernel::Linear => "linear",
        Kernel::ExplicitGram { .. } => "explicit",
    };

    let model = KernelModel::new(kernel, points, &tol)?;
    let (schedule, schedule_name) = match a.schedule {
        ScheduleFlag::Greedy => (Schedule::Greedy, ScheduleName::Greedy),
        ScheduleFlag::Cyclic => (Schedule::Cyclic, ScheduleName::Cyclic),
    };
    let table = kernel_feature_chain(&model, &schedule, &stop, &tol)?;
    log::info!(
        "{} features for {} points, gram defect {:.3e}",
        table.num_features(),
        model.len(),
        table.residual_gram_defect
    );
    let scale = table.values.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let complex = table
        .values
        .iter()
        .any(|z| z.im.abs() > REAL_FEATURE_REL * scale);
    let summary = FeatureSummary::new(&table, &tol);

    let out = a.output.as_deref();
    emit(
        out,
        &json_bytes(&KernelSummary {
            summary: &summary,
            kernel: kernel_name,
            schedule: schedule_name,
            max_steps: a.max_steps,
            complex_features: complex,
        })?,
    )?;
    let csv_path = sidecar(out, "features.csv").unwrap_or_else(|| PathBuf::from("features.csv"));
    write_atomic(&csv_path, &feature_csv(&table.values, complex)?)?;
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReportSummary {
    Chain {
        steps: usize,
        audit: Audit,
    },
    ChainReport {
        dim: usize,
        steps: usize,
        stop_reason: conedeflate::StopReason,
        total_energy: f64,
        final_trace: f64,
        /// Trace identity recomputed from the step records.
        recomputed_trace_gap: f64,
        audit: Audit,
    },
    FrameReport {
        dim: usize,
        len: usize,
        certified: bool,
        parseval_defect: f64,
        audit: Audit,
    },
}

pub fn report(a: &ReportArgs) -> Outcome {
    let value: serde_json::Value = parse_json(&a.input, "JSON")?;
    let has = |k: &str| value.get(k).is_some();
    let bad = |e: serde_json::Error| {
        Failure::usage(format!("malformed report in {}: {e}", a.input.display()))
    };
    let (summary, failure) = if has("R") && has("E") {
        let raw: RawChain = serde_json::from_value(value).map_err(bad)?;
        let (rs, es) = chain_from_raw(raw)?;
        let audit = Audit::of_listed(&rs, &es)?;
        let failure = (!audit.passed).then(|| audit_failure(&audit));
        (ReportSummary::Chain { steps: es.len(), audit }, failure)
    } else if has("parseval_defect") {
        let r: FrameReport = serde_json::from_value(value).map_err(bad)?;
        let failure = if !r.audit.passed {
            Some(audit_failure(&r.audit))
        } else if !r.certified {
            Some(Failure::new(
                UNCERTIFIED,
                format!("frame not certified: Parseval defect {:.3e}", r.parseval_defect),
            ))
        } else {
            None
        };
        (
            ReportSummary::FrameReport {
                dim: r.dim,
                len: r.len,
                certified: r.certified,
                parseval_defect: r.parseval_defect,
                audit: r.audit,
            },
            failure,
        )
    } else if has("steps") && has("audit") {
        let r: ChainReport = serde_json::from_value(value).map_err(bad)?;
        let energy: f64 = r.steps.iter().map(|s| s.energy).sum();
        let gap = (r.r0.trace - r.final_trace - energy).abs() / (1.0 + r.r0.trace);
        let failure = if !r.audit.passed {
            Some(audit_failure(&r.audit))
        } else if gap > conedeflate::report::AUDIT_TRACE_GAP_MAX {
            Some(Failure::new(
                NUMERIC,
                format!("step records violate the trace identity: gap {gap:.3e}"),
            ))
        } else {
            None
        };
        (
            ReportSummary::ChainReport {
                dim: r.r0.dim,
                steps: r.steps.len(),
                stop_reason: r.stop_reason,
                total_energy: r.total_energy,
                final_trace: r.final_trace,
                recomputed_trace_gap: gap,
                audit: r.audit,
            },
            failure,
        )
    } else {
        return Err(Failure::usage(format!(
            "{} is neither a chain file nor a chain or frame report",
            a.input.display()
        )));
    };
    emit(a.output.as_deref(), &json_bytes(&summary)?)?;
    failure.map_or(Ok(()), Err)
}

// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cvmbqc::multimode::{compile as compile_target, CompileOptions, CouplingKind};
use cvmbqc::program::{MeasurementProgram, SynthesisReport, TargetMap};
use cvmbqc::sim::{
    db_to_r, extract_effective_map, run_program, GaussianState, MeasurementOutcomePolicy, OutcomeRecord,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cvmbqc::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Core(cvmbqc::Error::Io(_)) => 3,
            _ => 1,
        }
    }
}

pub enum Outcome {
    Pass,
    Fail,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write(p, text),
        None => print(text),
    }
}

fn print(text: &str) -> Result<(), CliError> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Io { path: PathBuf::from("<stdout>"), source: e })
        }
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

fn load_program(path: &Path) -> Result<MeasurementProgram, CliError> {
    Ok(MeasurementProgram::from_json(&read(path)?)?)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn check_db(db: f64) -> Result<f64, CliError> {
    if db.is_finite() && db >= 0.0 {
        Ok(db_to_r(db))
    } else {
        Err(CliError::Usage(format!("squeezing must be a finite non-negative dB value, got {db}")))
    }
}

/// Gaussian state file: `mean` and `cov` in `(x.., p..)` ordering.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl StateFile {
    fn into_state(self) -> Result<GaussianState, CliError> {
        let dim = 2 * self.n;
        if self.mean.len() != dim || self.cov.len() != dim || self.cov.iter().any(|r| r.len() != dim) {
            return Err(CliError::Usage(format!("state file must hold a {dim}-vector mean and a {dim}x{dim} cov")));
        }
        let cov = DMatrix::from_fn(dim, dim, |r, c| self.cov[r][c]);
        Ok(GaussianState::new(DVector::from_vec(self.mean), cov)?)
    }
}

pub fn compile(
    target: &Path,
    out: &Path,
    free_param: Option<f64>,
    coupling: CouplingKind,
    report: Option<&Path>,
) -> Result<Outcome, CliError> {
    let map = TargetMap::from_json(&read(target)?)?.to_map()?;
    let compiled = compile_target(&map, &CompileOptions { free_param, coupling })?;
    write(out, &compiled.program.to_json()?)?;
    emit(report, &to_json(&compiled.report))?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Shot {
    shot: usize,
    mean: Vec<f64>,
    outcomes: Vec<OutcomeRecord>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SimulationOutput {
    n: usize,
    db: f64,
    policy: MeasurementOutcomePolicy,
    cov: Vec<Vec<f64>>,
    shots: Vec<Shot>,
}

/// Sampled shot `k` draws from seed `seed + k`.
pub fn simulate(
    program: &Path,
    db: f64,
    seed: Option<u64>,
    shots: usize,
    input: Option<&Path>,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    if shots == 0 {
        return Err(CliError::Usage("--shots must be at least 1".into()));
    }
    let r = check_db(db)?;
    let program = load_program(program)?;
    let state = match input {
        Some(path) => serde_json::from_str::<StateFile>(&read(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            .into_state()?,
        None => GaussianState::vacuum(program.modes()),
    };
    let policy_of = |k: usize| match seed {
        Some(s) => MeasurementOutcomePolicy::Sampled { seed: s.wrapping_add(k as u64) },
        None => MeasurementOutcomePolicy::PinnedZero,
    };
    let runs = (0..shots)
        .into_par_iter()
        .map(|k| run_program(&program, &state, r, policy_of(k)))
        .collect::<Result<Vec<_>, _>>()?;
    let output = SimulationOutput {
        n: program.modes(),
        db,
        policy: policy_of(0),
        cov: rows(runs[0].state.cov()),
        shots: runs
            .into_iter()
            .enumerate()
            .map(|(shot, run)| Shot { shot, mean: run.state.mean().iter().copied().collect(), outcomes: run.outcomes })
            .collect(),
    };
    emit(out, &to_json(&output))?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WorstEntry {
    row: usize,
    col: usize,
    simulated: f64,
    target: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyReport {
    db: f64,
    tol: f64,
    effective_map_error: f64,
    worst_entry: WorstEntry,
    excess_trace: f64,
    pass: bool,
}

pub fn verify(program: &Path, db: f64, tol: f64, report: Option<&Path>) -> Result<Outcome, CliError> {
    let r = check_db(db)?;
    let parsed = load_program(program)?;
    let target = parsed.target()?;
    let effective = extract_effective_map(&parsed, r)?;
    let (error, row, col) = effective.worst_entry(target.matrix());
    let result = VerifyReport {
        db,
        tol,
        effective_map_error: error,
        worst_entry: WorstEntry {
            row,
            col,
            simulated: effective.m_hat[(row, col)],
            target: target.matrix()[(row, col)],
        },
        excess_trace: effective.excess_trace(),
        pass: error < tol,
    };
    if let Some(path) = report {
        let mut synthesis: SynthesisReport =
            serde_json::from_str(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        synthesis.effective_map_error = Some(result.effective_map_error);
        synthesis.excess_trace = Some(result.excess_trace);
        write(path, &to_json(&synthesis))?;
    }
    print(&to_json(&result))?;
    Ok(if result.pass { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Serialize)]
struct SweepRow {
    db: f64,
    #[serde(rename = "effectiveMapError")]
    effective_map_error: f64,
    #[serde(rename = "excessTrace")]
    excess_trace: f64,
}

pub fn sweep(program: &Path, levels: &[f64], out: &Path) -> Result<Outcome, CliError> {
    if levels.is_empty() {
        return Err(CliError::Usage("--db needs at least one squeezing level".into()));
    }
    let rs = levels.iter().map(|&db| check_db(db)).collect::<Result<Vec<_>, _>>()?;
    let program = load_program(program)?;
    let target = program.target()?;
    let table = levels
        .par_iter()
        .zip(rs)
        .map(|(&db, r)| {
            let effective = extract_effective_map(&program, r)?;
            Ok(SweepRow {
                db,
                effective_map_error: effective.error(target.matrix()),
                excess_trace: effective.excess_trace(),
            })
        })
        .collect::<Result<Vec<_>, cvmbqc::Error>>()?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &table {
        writer.serialize(row).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    write(out, &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    Ok(Outcome::Pass)
}

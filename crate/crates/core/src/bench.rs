//! Benchmark harness: instance classes from a manifest, one JSON line per
//! solved (or timed out) instance, and per-(class, model) aggregates in the
//! column layout of the result tables.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::time::Duration;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{gen_mesh, gen_random, GenError, GeneratedInstance, MeshParams, PatternMode, RandomParams};
use crate::search::{solve, Model, ModelConfig, SearchMode, Status};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("manifest: {0}")]
    Manifest(#[from] toml::de::Error),
    #[error("generator: {0}")]
    Generator(#[from] GenError),
    #[error("log line {line}: {source}")]
    Log {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Random { n: usize, eta: f64 },
    Mesh { side: usize, dims: usize, rho: f64 },
}

fn default_instances() -> usize {
    10
}

fn default_switch() -> f64 {
    0.30
}

fn default_time_limit() -> f64 {
    60.0
}

fn default_models() -> Vec<Model> {
    Model::ALL.to_vec()
}

/// One instance class of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    #[serde(flatten)]
    pub family: Family,
    pub alpha: f64,
    #[serde(default)]
    pub mode: PatternMode,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_models")]
    pub models: Vec<Model>,
    /// Seconds per solve.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default)]
    pub search_mode: SearchMode,
    #[serde(default = "default_switch")]
    pub switch_fraction: f64,
}

impl ClassSpec {
    pub fn instance_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    pub fn generate(&self, index: usize) -> Result<GeneratedInstance, GenError> {
        let seed = self.instance_seed(index);
        match self.family {
            Family::Random { n, eta } => gen_random(&RandomParams {
                n,
                eta,
                alpha: self.alpha,
                seed,
                mode: self.mode,
            }),
            Family::Mesh { side, dims, rho } => gen_mesh(&MeshParams {
                side,
                dims,
                rho,
                alpha: self.alpha,
                seed,
                mode: self.mode,
            }),
        }
    }

    pub fn config(&self, model: Model, index: usize) -> ModelConfig {
        let mut cfg = ModelConfig::new(model)
            .with_mode(self.search_mode)
            .with_time_limit(Duration::from_secs_f64(self.time_limit));
        cfg.switch_fraction = self.switch_fraction;
        cfg.seed = self.instance_seed(index);
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "class")]
    pub classes: Vec<ClassSpec>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        Ok(toml::from_str(text)?)
    }
}

/// Per-instance outcome, one JSON line each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub class: String,
    pub model: Model,
    pub instance: usize,
    pub seed: u64,
    pub status: Status,
    /// Decimal; exact when solved, a lower bound otherwise.
    pub solution_count: String,
    pub elapsed_s: f64,
    pub search_nodes: u64,
    pub decomposition_events: u64,
    pub used_decomposition: bool,
    pub heuristic_fraction: f64,
    pub phase_switch_depth: Option<usize>,
}

/// Aggregated row for one (class, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub class: String,
    pub model: Model,
    pub instances: usize,
    pub solved_pct: f64,
    /// Mean time over solved instances, seconds.
    pub mu_s: Option<f64>,
    pub sigma_s: Option<f64>,
    pub mean_solutions: Option<f64>,
    /// Solved instances that used decomposition.
    #[serde(rename = "D")]
    pub d: usize,
    /// Mean decomposition events over solved instances.
    #[serde(rename = "mean_Dcount")]
    pub mean_dcount: Option<f64>,
    /// Mean heuristic set fraction.
    #[serde(rename = "S")]
    pub s: f64,
}

pub const CSV_HEADER: &str = "class,model,instances,solved_pct,mu_s,sigma_s,mean_solutions,D,mean_Dcount,S";

/// Runs every (class, instance, model) combination, appending a JSON line to
/// `log` after each solve.
pub fn run_manifest<W: Write>(
    manifest: &Manifest,
    log: &mut W,
    mut progress: impl FnMut(&InstanceRecord),
) -> Result<Vec<InstanceRecord>, BenchError> {
    let mut records = Vec::new();
    for class in &manifest.classes {
        for index in 0..class.instances {
            let generated = class.generate(index)?;
            for &model in &class.models {
                let cfg = class.config(model, index);
                let r = solve(&generated.instance, &cfg);
                let rec = InstanceRecord {
                    class: class.label.clone(),
                    model,
                    instance: index,
                    seed: cfg.seed,
                    status: r.status,
                    solution_count: r.solution_count.to_string(),
                    elapsed_s: r.elapsed.as_secs_f64(),
                    search_nodes: r.search_nodes,
                    decomposition_events: r.decomposition_events,
                    used_decomposition: r.used_decomposition,
                    heuristic_fraction: r.heuristic_fraction,
                    phase_switch_depth: r.phase_switch_depth,
                };
                serde_json::to_writer(&mut *log, &rec)?;
                log.write_all(b"\n")?;
                log.flush()?;
                progress(&rec);
                records.push(rec);
            }
        }
    }
    Ok(records)
}

pub fn read_log<R: BufRead>(reader: R) -> Result<Vec<InstanceRecord>, BenchError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| BenchError::Log { line: idx + 1, source })?;
        out.push(rec);
    }
    Ok(out)
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

fn count_as_f64(s: &str) -> f64 {
    s.parse::<num_bigint::BigUint>()
        .ok()
        .and_then(|c| c.to_f64())
        .unwrap_or(f64::NAN)
}

/// Groups records by (class, model) in order of first appearance.
pub fn aggregate(records: &[InstanceRecord]) -> Vec<BenchRecord> {
    let mut order: Vec<(String, Model)> = Vec::new();
    let mut groups: HashMap<(String, Model), Vec<&InstanceRecord>> = HashMap::new();
    for r in records {
        let key = (r.class.clone(), r.model);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let solved: Vec<&&InstanceRecord> = rs.iter().filter(|r| r.status == Status::Solved).collect();
            let times: Vec<f64> = solved.iter().map(|r| r.elapsed_s).collect();
            let (mu, sigma) = mean_std(&times);
            let sols: Vec<f64> = solved.iter().map(|r| count_as_f64(&r.solution_count)).collect();
            let events: Vec<f64> = solved.iter().map(|r| r.decomposition_events as f64).collect();
            let fractions: Vec<f64> = rs.iter().map(|r| r.heuristic_fraction).collect();
            BenchRecord {
                class: key.0,
                model: key.1,
                instances: rs.len(),
                solved_pct: 100.0 * solved.len() as f64 / rs.len() as f64,
                mu_s: mu,
                sigma_s: sigma,
                mean_solutions: mean_std(&sols).0,
                d: solved.iter().filter(|r| r.used_decomposition).count(),
                mean_dcount: mean_std(&events).0,
                s: mean_std(&fractions).0.unwrap_or(0.0),
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRecord], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MANIFEST: &str = r#"
[[class]]
label = "tiny-random"
family = "random"
n = 20
eta = 0.1
alpha = 0.2
instances = 3
seed = 5
models = ["cpfc", "dec-h1"]
time_limit = 10

[[class]]
label = "tiny-mesh"
family = "mesh"
side = 3
dims = 2
rho = 0.2
alpha = 0.4
mode = "embedded"
instances = 2
"#;

    #[test]
    fn manifest_parses_with_defaults() {
        let m = Manifest::parse(MANIFEST).unwrap();
        assert_eq!(m.classes.len(), 2);
        assert_eq!(m.classes[0].family, Family::Random { n: 20, eta: 0.1 });
        assert_eq!(m.classes[0].models, vec![Model::Cpfc, Model::DecH1]);
        assert_eq!(m.classes[1].models.len(), 5);
        assert_eq!(m.classes[1].time_limit, 60.0);
        assert_eq!(m.classes[1].search_mode, SearchMode::CountAll);
        assert!(Manifest::parse("[[class]]\nlabel = 3\n").is_err());
    }

    #[test]
    fn run_log_and_aggregate() {
        let m = Manifest::parse(MANIFEST).unwrap();
        let mut log = Vec::new();
        let recs = run_manifest(&m, &mut log, |_| {}).unwrap();
        assert_eq!(recs.len(), 3 * 2 + 2 * 5);
        let replay = read_log(&log[..]).unwrap();
        assert_eq!(replay, recs);

        let rows = aggregate(&recs);
        assert_eq!(rows.len(), 2 + 5);
        for row in &rows {
            assert_eq!(row.solved_pct, 100.0);
            assert!(row.mean_solutions.unwrap() >= 1.0);
        }

        let mut csv_out = Vec::new();
        write_csv(&rows, &mut csv_out).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 1 + rows.len());
    }

    #[test]
    fn aggregation_uses_solved_only() {
        let base = InstanceRecord {
            class: "c".into(),
            model: Model::DecH1,
            instance: 0,
            seed: 0,
            status: Status::Solved,
            solution_count: "10".into(),
            elapsed_s: 1.0,
            search_nodes: 5,
            decomposition_events: 4,
            used_decomposition: true,
            heuristic_fraction: 0.5,
            phase_switch_depth: Some(1),
        };
        let mut b = base.clone();
        b.elapsed_s = 3.0;
        b.solution_count = "30".into();
        b.decomposition_events = 0;
        b.used_decomposition = false;
        b.heuristic_fraction = 0.25;
        let mut t = base.clone();
        t.status = Status::Timeout;
        t.elapsed_s = 100.0;
        let rows = aggregate(&[base, b, t]);
        let r = &rows[0];
        assert_eq!(r.instances, 3);
        assert!((r.solved_pct - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(r.mu_s, Some(2.0));
        assert_eq!(r.sigma_s, Some(1.0));
        assert_eq!(r.mean_solutions, Some(20.0));
        assert_eq!(r.d, 1);
        assert_eq!(r.mean_dcount, Some(2.0));
        assert!((r.s - 1.25 / 3.0).abs() < 1e-12);

        let mut all_timeout = rows[0].clone();
        all_timeout.mu_s = None;
        let mut out = Vec::new();
        write_csv(&[all_timeout], &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().contains(",,"));
    }
}

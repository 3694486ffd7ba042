//! On-disk artifacts: manifests, datasets, run outputs and the aggregated
//! report (CSV series plus a JSON summary).
//!
//! A run directory looks like
//!
//! ```text
//! manifest.json      config echo, seeds, RNG id, version, sha256 of every artifact
//! u_c.bin            averaged field
//! samples/NNN_final.bin, samples/NNN_slices.bin
//! run.json           per-sample traces, consecutive differences, failures
//! timings.json       wall-clock seconds (kept out of the hashed set)
//! summary.json, reconstruction.csv, error_vs_step.csv, consecutive.csv, loss_trace.csv
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ResolvedConfig;
use crate::driver::{l2_relative_error, PathInput, RunResult, TraceRow};
use crate::error::{Error, Result};
use crate::forward::{CauchyData, PathRecord};
use crate::mesh::{read_raw, write_raw, Field, Mesh, RawArray};
use crate::stochastic::{BrownianPath, RNG_ALGORITHM};

pub const MANIFEST: &str = "manifest.json";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub rng: String,
    pub config: ResolvedConfig,
    pub config_sha256: String,
    /// Relative path → sha256 of the file contents.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: &ResolvedConfig) -> Result<Self> {
        Ok(Self {
            version: VERSION.to_string(),
            command: command.to_string(),
            rng: RNG_ALGORITHM.to_string(),
            config: config.clone(),
            config_sha256: config_hash(config)?,
            artifacts: BTreeMap::new(),
        })
    }

    pub fn record(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let bytes = fs::read(dir.join(rel))?;
        self.artifacts.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))
            .map_err(|e| Error::Manifest(format!("{}: {e}", dir.join(MANIFEST).display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("unreadable manifest: {e}")))
    }

    /// Refuses manifests from another version or RNG, with an edited config,
    /// or whose artifacts no longer match their recorded hashes.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        if self.version != VERSION {
            return Err(Error::Manifest(format!(
                "written by version {}, this is {VERSION}",
                self.version
            )));
        }
        if self.rng != RNG_ALGORITHM {
            return Err(Error::Manifest(format!("RNG `{}` differs from `{RNG_ALGORITHM}`", self.rng)));
        }
        if config_hash(&self.config)? != self.config_sha256 {
            return Err(Error::Manifest("config echo does not match its hash".into()));
        }
        for (rel, expected) in &self.artifacts {
            let bytes = fs::read(dir.join(rel)).map_err(|e| Error::Manifest(format!("{rel}: {e}")))?;
            if &sha256_hex(&bytes) != expected {
                return Err(Error::Manifest(format!("{rel} changed since it was written")));
            }
        }
        Ok(())
    }
}

pub fn config_hash(config: &ResolvedConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(config)?.as_bytes()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub index: usize,
    pub path_seed: u64,
    pub noise_seed: u64,
}

fn dataset_files(index: usize) -> [String; 4] {
    [
        format!("data/{index:03}_f.bin"),
        format!("data/{index:03}_g.bin"),
        format!("data/{index:03}_w.bin"),
        format!("data/{index:03}_u.bin"),
    ]
}

/// Writes the noisy traces, the Brownian increments and the clean trajectory
/// of each simulated path.
pub fn write_dataset(dir: &Path, config: &ResolvedConfig, records: &[PathRecord]) -> Result<Manifest> {
    fs::create_dir_all(dir.join("data"))?;
    let mut manifest = Manifest::new("forward", config)?;
    let mut entries = Vec::new();
    for r in records {
        let [f, g, w, u] = dataset_files(r.index);
        let (fr, gr) = r.noisy.to_raw();
        write_raw(&dir.join(&f), &fr)?;
        write_raw(&dir.join(&g), &gr)?;
        write_raw(&dir.join(&w), &r.path.to_raw())?;
        write_raw(&dir.join(&u), &r.field.to_raw())?;
        for rel in [f, g, w, u] {
            manifest.record(dir, &rel)?;
        }
        entries.push(DatasetEntry {
            index: r.index,
            path_seed: r.path.seed,
            noise_seed: r.noise_seed,
        });
    }
    write_json(&dir.join("data/index.json"), &entries)?;
    manifest.record(dir, "data/index.json")?;
    manifest.write(dir)?;
    Ok(manifest)
}

/// Loads a dataset written by [`write_dataset`] after checking its manifest.
pub fn read_dataset(dir: &Path, mesh: &Mesh) -> Result<Vec<PathInput>> {
    let manifest = Manifest::read(dir)?;
    manifest.verify(dir)?;
    if manifest.command != "forward" {
        return Err(Error::Manifest(format!(
            "{} holds `{}` output, not a dataset",
            dir.display(),
            manifest.command
        )));
    }
    let entries: Vec<DatasetEntry> = read_json(&dir.join("data/index.json"))?;
    if entries.is_empty() {
        return Err(Error::Config(format!("{} contains no paths", dir.display())));
    }
    entries
        .iter()
        .map(|e| {
            let [f, g, w, _] = dataset_files(e.index);
            let data = CauchyData::from_raw(*mesh, e.index as u64, read_raw(&dir.join(f))?, read_raw(&dir.join(g))?)?;
            let path = BrownianPath::from_raw(read_raw(&dir.join(w))?, e.path_seed)?;
            Ok(PathInput { data, path })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub dataset: usize,
    pub functional_seed: u64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub steps_per_outer: usize,
    pub n_outer: usize,
    pub samples: Vec<SampleRecord>,
    pub failures: Vec<(usize, String)>,
    pub consecutive: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub dataset_seconds: f64,
    pub inverse_seconds: f64,
    pub per_sample_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Error of the averaged reconstruction; absent when `u0* ≡ 0`.
    pub error: Option<f64>,
    pub reference_error: f64,
    pub per_sample_errors: Vec<f64>,
    pub consecutive: Vec<f64>,
    /// `d[n+1] / d[n]`.
    pub consecutive_ratios: Vec<f64>,
    /// Mean over samples of the last recorded objective value.
    pub final_objective: f64,
    pub samples_ok: usize,
    pub failed_samples: Vec<usize>,
    /// Largest `|u0 − u0*| / ‖u0*‖∞` and where it occurs.
    pub max_relative_difference: (f64, f64, f64),
}

fn sample_files(sample: usize) -> [String; 2] {
    [format!("samples/{sample:03}_final.bin"), format!("samples/{sample:03}_slices.bin")]
}

/// Persists a finished run, writes its manifest and builds the report.
pub fn write_run(dir: &Path, config: &ResolvedConfig, result: &RunResult, dataset_seconds: f64) -> Result<Summary> {
    fs::create_dir_all(dir.join("samples"))?;
    let mesh = *result.u_c.mesh();
    let mut manifest = Manifest::new("invert", config)?;
    write_raw(&dir.join("u_c.bin"), &result.u_c.to_raw())?;
    manifest.record(dir, "u_c.bin")?;
    for p in &result.paths {
        let [fin, slices] = sample_files(p.sample);
        write_raw(&dir.join(&fin), &p.final_field.to_raw())?;
        let mut raw = RawArray::from_mesh(&mesh, p.initial_slices.concat());
        raw.dims = [p.initial_slices.len() as u64, (mesh.nx + 1) as u64, (mesh.ny + 1) as u64];
        write_raw(&dir.join(&slices), &raw)?;
        manifest.record(dir, &fin)?;
        manifest.record(dir, &slices)?;
    }
    let record = RunRecord {
        steps_per_outer: config.spec.hyper.adam.steps,
        n_outer: config.spec.hyper.n_outer,
        samples: result
            .paths
            .iter()
            .map(|p| SampleRecord {
                sample: p.sample,
                dataset: p.dataset,
                functional_seed: p.functional_seed,
                trace: p.trace.clone(),
            })
            .collect(),
        failures: result.failures.clone(),
        consecutive: result.consecutive.clone(),
    };
    write_json(&dir.join("run.json"), &record)?;
    manifest.record(dir, "run.json")?;
    write_json(
        &dir.join("timings.json"),
        &Timings {
            dataset_seconds,
            inverse_seconds: result.seconds,
            per_sample_seconds: result.paths.iter().map(|p| p.seconds).collect(),
        },
    )?;
    manifest.write(dir)?;
    report(dir)
}

/// Rebuilds the CSV series and `summary.json` of a run directory.
pub fn report(dir: &Path) -> Result<Summary> {
    let manifest = Manifest::read(dir)?;
    if manifest.command != "invert" {
        return Err(Error::Manifest(format!(
            "{} holds `{}` output, not an inversion",
            dir.display(),
            manifest.command
        )));
    }
    manifest.verify(dir)?;
    let spec = &manifest.config.spec;
    let mesh = spec.inverse_mesh()?;
    let u_c = Field::from_raw(read_raw(&dir.join("u_c.bin"))?)?;
    if *u_c.mesh() != mesh {
        return Err(Error::Manifest("u_c.bin does not live on the configured mesh".into()));
    }
    let record: RunRecord = read_json(&dir.join("run.json"))?;
    let u0 = u_c.slice(0);
    let star = spec.u0_star()?;

    let mut per_sample_errors = Vec::new();
    for s in &record.samples {
        let [fin, _] = sample_files(s.sample);
        let field = Field::from_raw(read_raw(&dir.join(fin))?)?;
        if let Ok(e) = l2_relative_error(field.slice(0), &star, &mesh) {
            per_sample_errors.push(e);
        }
    }

    let sup = star.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut w = BufWriter::new(fs::File::create(dir.join("reconstruction.csv"))?);
    writeln!(w, "x,y,u0,u0_star,rel_diff")?;
    let mut max_rel = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=mesh.nx {
        for j in 0..=mesh.ny {
            let s = mesh.sidx(i, j);
            let rel = if sup > 0.0 { (u0[s] - star[s]).abs() / sup } else { 0.0 };
            if rel > max_rel.0 {
                max_rel = (rel, mesh.x(i), mesh.y(j));
            }
            writeln!(w, "{},{},{:e},{:e},{:e}", mesh.x(i), mesh.y(j), u0[s], star[s], rel)?;
        }
    }
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join("loss_trace.csv"))?);
    writeln!(w, "sample,outer,step,J,grad_inf,error")?;
    for s in &record.samples {
        for r in &s.trace {
            let e = r.error.map(|e| format!("{e:e}")).unwrap_or_default();
            writeln!(w, "{},{},{},{:e},{:e},{e}", s.sample, r.outer, r.step, r.value, r.grad_inf)?;
        }
    }
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join("error_vs_step.csv"))?);
    writeln!(w, "global_step,outer,step,mean_J,mean_error")?;
    let rows = record.samples.first().map_or(0, |s| s.trace.len());
    let n = record.samples.len() as f64;
    for r in 0..rows {
        let head = record.samples[0].trace[r];
        let mean_j = record.samples.iter().map(|s| s.trace[r].value).sum::<f64>() / n;
        let errs: Vec<f64> = record.samples.iter().filter_map(|s| s.trace[r].error).collect();
        let mean_e = if errs.len() == record.samples.len() {
            format!("{:e}", errs.iter().sum::<f64>() / n)
        } else {
            String::new()
        };
        let global = (head.outer - 1) * record.steps_per_outer + head.step;
        writeln!(w, "{global},{},{},{mean_j:e},{mean_e}", head.outer, head.step)?;
    }
    w.flush()?;

    let ratios: Vec<f64> = record.consecutive.windows(2).map(|p| p[1] / p[0]).collect();
    let mut w = BufWriter::new(fs::File::create(dir.join("consecutive.csv"))?);
    writeln!(w, "n,difference,ratio")?;
    for (k, d) in record.consecutive.iter().enumerate() {
        let ratio = if k == 0 { String::new() } else { format!("{:e}", ratios[k - 1]) };
        writeln!(w, "{k},{d:e},{ratio}")?;
    }
    w.flush()?;

    let final_objective = if record.samples.is_empty() {
        f64::NAN
    } else {
        record
            .samples
            .iter()
            .filter_map(|s| s.trace.last().map(|r| r.value))
            .sum::<f64>()
            / n
    };
    let summary = Summary {
        experiment: spec.id.clone(),
        seed: manifest.config.seed,
        config_sha256: manifest.config_sha256.clone(),
        error: l2_relative_error(u0, &star, &mesh).ok(),
        reference_error: spec.reference_error,
        per_sample_errors,
        consecutive: record.consecutive.clone(),
        consecutive_ratios: ratios,
        final_objective,
        samples_ok: record.samples.len(),
        failed_samples: record.failures.iter().map(|f| f.0).collect(),
        max_relative_difference: max_rel,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

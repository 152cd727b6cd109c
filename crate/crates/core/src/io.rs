//! File formats: dataset/prediction CSVs, the long-format trace CSV, the
//! flat key=value config format, and the run manifest.
//!
//! Numeric cells use a fixed 17-significant-digit decimal rendering, so a
//! canonical file round-trips byte-for-byte through load/write.

use crate::config::{GpParams, HyperPriors, McmcConfig};
use crate::data::{Dataset, Observation, SpaceTimePoint};
use crate::kernels::KernelKind;
use crate::mcmc::{ChainTrace, KeptState};
use crate::predict::PredictionResult;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {0}")]
    ParseError(usize),
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("unknown config key: {0}")]
    UnknownKey(String),
    #[error("bad value for config key: {0}")]
    BadValue(String),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trace file is incomplete: missing {0}")]
    IncompleteTrace(&'static str),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.display().to_string(), source }
}

/// Fixed 17-significant-digit decimal rendering; stable across platforms
/// and exact under round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads a dataset CSV with header `s1,s2,t,y[,x1,...,xp]`. Rows with an
/// empty response are retained flagged missing: they join no likelihood but
/// stay available as prediction targets.
pub fn load_csv(path: &Path) -> Result<Dataset, IoError> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    parse_dataset_csv(&text)
}

pub(crate) fn parse_dataset_csv(text: &str) -> Result<Dataset, IoError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::ParseError(1))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    for (i, want) in ["s1", "s2", "t", "y"].iter().enumerate() {
        if cols.get(i).copied() != Some(*want) {
            return Err(IoError::MissingColumn((*want).to_string()));
        }
    }
    let p = cols.len() - 4;
    for j in 0..p {
        if cols[4 + j] != format!("x{}", j + 1) {
            return Err(IoError::MissingColumn(format!("x{}", j + 1)));
        }
    }
    let mut observations = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(IoError::ParseError(line_no));
        }
        let s1: f64 = fields[0].parse().map_err(|_| IoError::ParseError(line_no))?;
        let s2: f64 = fields[1].parse().map_err(|_| IoError::ParseError(line_no))?;
        let t: u32 = fields[2].parse().map_err(|_| IoError::ParseError(line_no))?;
        if t < 1 {
            return Err(IoError::ParseError(line_no));
        }
        let y: Option<f64> = if fields[3].is_empty() {
            None
        } else {
            Some(fields[3].parse().map_err(|_| IoError::ParseError(line_no))?)
        };
        let x = if p > 0 {
            let mut row = Vec::with_capacity(p);
            for j in 0..p {
                row.push(fields[4 + j].parse().map_err(|_| IoError::ParseError(line_no))?);
            }
            Some(row)
        } else {
            None
        };
        observations.push(Observation { point: SpaceTimePoint::new(s1, s2, t), y, x });
    }
    if observations.is_empty() {
        return Err(IoError::ParseError(1));
    }
    Ok(Dataset::new(observations))
}

pub fn write_dataset_csv(path: &Path, ds: &Dataset) -> Result<(), IoError> {
    let p = ds.covariate_dim();
    let mut out = String::from("s1,s2,t,y");
    for j in 1..=p {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for obs in &ds.observations {
        let y = obs.y.map(fmt_f64).unwrap_or_default();
        let _ = write!(out, "{},{},{},{y}", fmt_f64(obs.point.s1), fmt_f64(obs.point.s2), obs.point.t);
        if let Some(x) = &obs.x {
            for v in x {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(file_err(path))
}

pub fn write_predictions_csv(path: &Path, pred: &PredictionResult) -> Result<(), IoError> {
    let mut out = String::from("s1,s2,t,mean,sd,q05,q50,q95\n");
    for i in 0..pred.points.len() {
        let p = &pred.points[i];
        let q = pred.quantiles[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(p.s1),
            fmt_f64(p.s2),
            p.t,
            fmt_f64(pred.mean[i]),
            fmt_f64(pred.sd[i]),
            fmt_f64(q[0]),
            fmt_f64(q[1]),
            fmt_f64(q[2]),
        );
    }
    std::fs::write(path, out).map_err(file_err(path))
}

pub fn load_predictions_csv(path: &Path) -> Result<PredictionResult, IoError> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::ParseError(1))?;
    if header != "s1,s2,t,mean,sd,q05,q50,q95" {
        return Err(IoError::MissingColumn("mean".to_string()));
    }
    let mut result = PredictionResult { points: vec![], mean: vec![], sd: vec![], quantiles: vec![] };
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(IoError::ParseError(line_no));
        }
        let parse = |s: &str| -> Result<f64, IoError> { s.parse().map_err(|_| IoError::ParseError(line_no)) };
        result.points.push(SpaceTimePoint::new(
            parse(f[0])?,
            parse(f[1])?,
            f[2].parse().map_err(|_| IoError::ParseError(line_no))?,
        ));
        result.mean.push(parse(f[3])?);
        result.sd.push(parse(f[4])?);
        result.quantiles.push([parse(f[5])?, parse(f[6])?, parse(f[7])?]);
    }
    Ok(result)
}

fn kind_code(kind: KernelKind) -> f64 {
    match kind {
        KernelKind::SeparableExp => 0.0,
        KernelKind::Gneiting => 1.0,
        KernelKind::Constant => 2.0,
    }
}

fn kind_from_code(code: f64) -> Result<KernelKind, IoError> {
    match code as i64 {
        0 => Ok(KernelKind::SeparableExp),
        1 => Ok(KernelKind::Gneiting),
        2 => Ok(KernelKind::Constant),
        _ => Err(IoError::IncompleteTrace("kernel kind")),
    }
}

/// Writes a chain trace in long format: one `iter,param,value` row per
/// stored scalar, preceded by `meta.*` rows echoing the configuration.
pub fn write_trace_csv(path: &Path, trace: &ChainTrace) -> Result<(), IoError> {
    let mut out = String::from("iter,param,value\n");
    let mut meta = |name: &str, value: f64| {
        let _ = writeln!(out, "0,meta.{name},{}", fmt_f64(value));
    };
    meta("kind", kind_code(trace.kind));
    meta("truncation", trace.truncation as f64);
    meta("seed", trace.seed as f64);
    meta("n_iter", trace.n_iter as f64);
    meta("n_burn", trace.n_burn as f64);
    meta("thin", trace.thin as f64);
    meta("base_mean", trace.base_mean);
    meta("base_var", trace.base_var);
    meta("atom_var_shape", trace.atom_var_shape);
    meta("atom_var_rate", trace.atom_var_rate);
    meta("covariate_dim", trace.covariate_dim as f64);
    meta("varying_atoms", trace.varying_atoms as u8 as f64);
    if let Some((h1, h2, ht)) = trace.bandwidths {
        meta("h1", h1);
        meta("h2", h2);
        meta("h_t", ht);
    }
    if let Some(gp) = trace.gp {
        meta("gp_decay", gp.decay);
        meta("gp_rho", gp.rho);
        meta("gp_var", gp.var);
    }
    if let Some(train) = &trace.train_points {
        meta("n_train", train.len() as f64);
        for (i, p) in train.iter().enumerate() {
            meta(&format!("train.{i}.s1"), p.s1);
            meta(&format!("train.{i}.s2"), p.s2);
            meta(&format!("train.{i}.t"), p.t as f64);
        }
    }
    for rec in &trace.records {
        let mut row = |name: &str, value: f64| {
            let _ = writeln!(out, "{},{name},{}", rec.iter, fmt_f64(value));
        };
        for (k, &v) in rec.v.iter().enumerate() {
            row(&format!("v.{k}"), v);
        }
        for (k, &(p1, p2, z)) in rec.knots.iter().enumerate() {
            row(&format!("psi1.{k}"), p1);
            row(&format!("psi2.{k}"), p2);
            row(&format!("zeta.{k}"), z);
        }
        row("gamma", rec.gamma);
        row("lambda", rec.lambda);
        row("a", rec.a);
        row("b", rec.b);
        for (k, &m) in rec.mu.iter().enumerate() {
            row(&format!("mu.{k}"), m);
        }
        for (k, &s) in rec.sigma2.iter().enumerate() {
            row(&format!("sigma2.{k}"), s);
        }
        row("sigma2_eps", rec.sigma2_eps);
        for (j, &b) in rec.beta.iter().enumerate() {
            row(&format!("beta.{j}"), b);
        }
        row("n_occupied", rec.n_occupied as f64);
        row("log_lik", rec.log_lik);
        if let Some(atoms) = &rec.atoms {
            for (k, path) in atoms.iter().enumerate() {
                for (j, &v) in path.iter().enumerate() {
                    row(&format!("atom.{k}.{j}"), v);
                }
            }
        }
    }
    std::fs::write(path, out).map_err(file_err(path))
}

pub fn load_trace_csv(path: &Path) -> Result<ChainTrace, IoError> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::ParseError(1))?;
    if header != "iter,param,value" {
        return Err(IoError::MissingColumn("param".to_string()));
    }
    let mut meta: std::collections::HashMap<String, f64> = std::collections::HashMap::new();
    let mut rows: Vec<(usize, String, f64)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(3, ',').collect();
        if f.len() != 3 {
            return Err(IoError::ParseError(line_no));
        }
        let iter: usize = f[0].parse().map_err(|_| IoError::ParseError(line_no))?;
        let value: f64 = f[2].parse().map_err(|_| IoError::ParseError(line_no))?;
        if let Some(name) = f[1].strip_prefix("meta.") {
            meta.insert(name.to_string(), value);
        } else {
            rows.push((iter, f[1].to_string(), value));
        }
    }
    let get = |name: &'static str| meta.get(name).copied().ok_or(IoError::IncompleteTrace(name));
    let truncation = get("truncation")? as usize;
    let covariate_dim = get("covariate_dim")? as usize;
    let varying_atoms = get("varying_atoms")? != 0.0;
    let bandwidths = match (meta.get("h1"), meta.get("h2"), meta.get("h_t")) {
        (Some(&h1), Some(&h2), Some(&ht)) => Some((h1, h2, ht)),
        _ => None,
    };
    let gp = match (meta.get("gp_decay"), meta.get("gp_rho"), meta.get("gp_var")) {
        (Some(&decay), Some(&rho), Some(&var)) => Some(GpParams { decay, rho, var }),
        _ => None,
    };
    let train_points = match meta.get("n_train") {
        Some(&n) => {
            let n = n as usize;
            let mut pts = Vec::with_capacity(n);
            for i in 0..n {
                let s1 = *meta
                    .get(&format!("train.{i}.s1"))
                    .ok_or(IoError::IncompleteTrace("train point"))?;
                let s2 = *meta
                    .get(&format!("train.{i}.s2"))
                    .ok_or(IoError::IncompleteTrace("train point"))?;
                let t = *meta
                    .get(&format!("train.{i}.t"))
                    .ok_or(IoError::IncompleteTrace("train point"))?;
                pts.push(SpaceTimePoint::new(s1, s2, t as u32));
            }
            Some(pts)
        }
        None => None,
    };

    // group record rows by iteration, in file order
    let mut records: Vec<KeptState> = Vec::new();
    let blank = |iter: usize| KeptState {
        iter,
        v: vec![0.0; truncation],
        knots: vec![(0.0, 0.0, 0.0); truncation],
        gamma: 0.0,
        lambda: 0.0,
        a: 0.0,
        b: 0.0,
        mu: vec![0.0; truncation],
        sigma2: Vec::new(),
        sigma2_eps: 0.0,
        beta: vec![0.0; covariate_dim],
        n_occupied: 0,
        log_lik: 0.0,
        atoms: None,
    };
    for (iter, param, value) in rows {
        if records.last().map(|r| r.iter) != Some(iter) {
            records.push(blank(iter));
        }
        let rec = records.last_mut().unwrap();
        let mut parts = param.split('.');
        match parts.next().unwrap_or("") {
            "v" => {
                let k: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("v"))?;
                rec.v[k] = value;
            }
            "psi1" => {
                let k: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("psi1"))?;
                rec.knots[k].0 = value;
            }
            "psi2" => {
                let k: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("psi2"))?;
                rec.knots[k].1 = value;
            }
            "zeta" => {
                let k: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("zeta"))?;
                rec.knots[k].2 = value;
            }
            "gamma" => rec.gamma = value,
            "lambda" => rec.lambda = value,
            "a" => rec.a = value,
            "b" => rec.b = value,
            "mu" => {
                let k: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("mu"))?;
                rec.mu[k] = value;
            }
            "sigma2" => {
                let k: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("sigma2"))?;
                if rec.sigma2.len() <= k {
                    rec.sigma2.resize(k + 1, 0.0);
                }
                rec.sigma2[k] = value;
            }
            "sigma2_eps" => rec.sigma2_eps = value,
            "beta" => {
                let j: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("beta"))?;
                rec.beta[j] = value;
            }
            "n_occupied" => rec.n_occupied = value as usize,
            "log_lik" => rec.log_lik = value,
            "atom" => {
                let k: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("atom"))?;
                let j: usize = parts.next().and_then(|s| s.parse().ok()).ok_or(IoError::IncompleteTrace("atom"))?;
                let n_train = train_points.as_ref().map(|t| t.len()).unwrap_or(0);
                let atoms = rec.atoms.get_or_insert_with(|| vec![vec![0.0; n_train]; truncation]);
                atoms[k][j] = value;
            }
            other => return Err(IoError::UnknownKey(other.to_string())),
        }
    }
    Ok(ChainTrace {
        kind: kind_from_code(get("kind")?)?,
        truncation,
        seed: get("seed")? as u64,
        n_iter: get("n_iter")? as usize,
        n_burn: get("n_burn")? as usize,
        thin: get("thin")? as usize,
        bandwidths,
        base_mean: get("base_mean")?,
        base_var: get("base_var")?,
        atom_var_shape: get("atom_var_shape")?,
        atom_var_rate: get("atom_var_rate")?,
        covariate_dim,
        varying_atoms,
        gp,
        train_points,
        records,
    })
}

/// Parses the flat key=value run configuration. Every key is optional with
/// a documented default; unknown keys are errors.
pub fn parse_config(path: &Path) -> Result<(HyperPriors, McmcConfig), IoError> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<(HyperPriors, McmcConfig), IoError> {
    let mut hyper = HyperPriors::default();
    let mut config = McmcConfig::default();
    let mut bandwidths = (None, None, None);
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IoError::BadValue(line.to_string()))?;
        let key = key.trim();
        let value = value.trim();
        let bad = || IoError::BadValue(key.to_string());
        let as_f64 = || -> Result<f64, IoError> { value.parse().map_err(|_| bad()) };
        let as_usize = || -> Result<usize, IoError> { value.parse().map_err(|_| bad()) };
        let as_bool = || -> Result<bool, IoError> {
            match value {
                "1" | "true" => Ok(true),
                "0" | "false" => Ok(false),
                _ => Err(bad()),
            }
        };
        match key {
            "truncation" => config.truncation = as_usize()?,
            "n_iter" => config.n_iter = as_usize()?,
            "n_burn" => config.n_burn = as_usize()?,
            "thin" => config.thin = as_usize()?,
            "seed" => config.seed = value.parse().map_err(|_| bad())?,
            "kernel" => config.kernel_kind = value.parse().map_err(|_| bad())?,
            "h1" => bandwidths.0 = Some(as_f64()?),
            "h2" => bandwidths.1 = Some(as_f64()?),
            "h_t" => bandwidths.2 = Some(as_f64()?),
            "knot_scale" => config.knot_scale = Some(as_f64()?),
            "gamma_scale" => config.gamma_scale = Some(as_f64()?),
            "lambda_scale" => config.lambda_scale = Some(as_f64()?),
            "shape_scale" => config.shape_scale = Some(as_f64()?),
            "varying_atoms" => config.varying_atoms = as_bool()?,
            "gp_decay" => config.gp.decay = as_f64()?,
            "gp_rho" => config.gp.rho = as_f64()?,
            "gp_var" => config.gp.var = as_f64()?,
            "va_subsample" => config.va_subsample = as_f64()?,
            "va_max_points" => config.va_max_points = as_usize()?,
            "a_max" => hyper.a_range.1 = as_f64()?,
            "b_max" => hyper.b_range.1 = as_f64()?,
            "base_mean" => hyper.base_mean = as_f64()?,
            "base_var" => hyper.base_var = as_f64()?,
            "noise_shape" => hyper.noise_shape = as_f64()?,
            "noise_rate" => hyper.noise_rate = as_f64()?,
            "atom_var_shape" => hyper.atom_var_shape = as_f64()?,
            "atom_var_rate" => hyper.atom_var_rate = as_f64()?,
            "gamma_max" => hyper.gamma_range.1 = as_f64()?,
            "slab_shape1" => hyper.lambda_slab.0 = as_f64()?,
            "slab_shape2" => hyper.lambda_slab.1 = as_f64()?,
            "omega_shape1" => hyper.omega_lambda_prior.0 = as_f64()?,
            "omega_shape2" => hyper.omega_lambda_prior.1 = as_f64()?,
            "bandwidth_shape" => hyper.bandwidth_shape = as_f64()?,
            "nu_max" => hyper.nu_max = Some(as_f64()?),
            other => return Err(IoError::UnknownKey(other.to_string())),
        }
    }
    if let (Some(h1), Some(h2), Some(ht)) = bandwidths {
        config.bandwidths = Some((h1, h2, ht));
    }
    Ok((hyper, config))
}

/// Echo of one finished command: configuration, seed, version, duration,
/// and content digests of every input and output file.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: Vec<(String, String)>,
    pub seed: u64,
    pub version: String,
    pub duration_secs: f64,
    /// (role:path, sha256 hex digest) pairs.
    pub digests: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: String, seed: u64) -> Self {
        Self {
            command,
            config_echo: Vec::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: 0.0,
            digests: Vec::new(),
        }
    }

    pub fn echo(&mut self, key: &str, value: impl std::fmt::Display) {
        self.config_echo.push((key.to_string(), value.to_string()));
    }

    pub fn add_digest(&mut self, role: &str, path: &Path) -> Result<(), IoError> {
        let digest = sha256_file(path)?;
        self.digests.push((format!("{role}:{}", path.display()), digest));
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(file_err(path))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Writes the manifest atomically (temp file + rename), only after the
/// command has succeeded.
pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), IoError> {
    let mut out = String::new();
    let _ = writeln!(out, "command: {}", manifest.command);
    let _ = writeln!(out, "version: {}", manifest.version);
    let _ = writeln!(out, "seed: {}", manifest.seed);
    let _ = writeln!(out, "duration_secs: {:.3}", manifest.duration_secs);
    for (k, v) in &manifest.config_echo {
        let _ = writeln!(out, "config.{k}: {v}");
    }
    for (role, digest) in &manifest.digests {
        let _ = writeln!(out, "sha256 {role}: {digest}");
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(file_err(&tmp))?;
        f.write_all(out.as_bytes()).map_err(file_err(&tmp))?;
        f.sync_all().ok();
    }
    std::fs::rename(&tmp, path).map_err(file_err(path))
}

/// Density-curve table: one (y, density) row per grid node.
pub fn write_density_csv(path: &Path, y_grid: &[f64], density: &[f64]) -> Result<(), IoError> {
    let rows: Vec<Vec<String>> = y_grid
        .iter()
        .zip(density)
        .map(|(y, d)| vec![fmt_f64(*y), fmt_f64(*d)])
        .collect();
    write_table_csv(path, "y,density", &rows)
}

/// Generic numeric table writer: a header line and rows of preformatted
/// cells.
pub fn write_table_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<(), IoError> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(file_err(path))
}

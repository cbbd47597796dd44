use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use besov_core::besov::{default_delta_min, nu_measure, DEFAULT_DELTA_NODES, DEFAULT_H_NODES};
use besov_core::clt_lab::run_clt_experiment;
use besov_core::entropy::{beta_of_m, entropy_integral, rho_space, DEFAULT_EPS_NODES};
use besov_core::grand_lebesgue::{extrapolated_tail_bound, tail_bound};
use besov_core::io::{fmt_f64, parse_psi_spec, read_path_file, write_ensemble};
use besov_core::process_models::{sample, z_grid, ThetaTable};
use besov_core::{
    BesovEvaluator, BesovKind, BesovParams, Boundary, CltConfig, Error, Exponent, ProcessModel,
    Result, SamplerConfig, UnitGrid,
};

use crate::manifest::{json_err, Conventions, RunManifest, MANIFEST_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Wiener,
    Fbm,
    /// Random walk with Rademacher increments.
    Walk,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Wiener)]
    pub model: ModelArg,
    /// Hurst index (fbm only).
    #[arg(long, default_value_t = 0.5)]
    pub hurst: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<ProcessModel> {
        use besov_core::ModelKind;
        let kind = match self.model {
            ModelArg::Wiener => ModelKind::Wiener,
            ModelArg::Fbm => ModelKind::Fbm,
            ModelArg::Walk => ModelKind::RademacherWalk,
        };
        ProcessModel::new(kind, self.hurst, self.sigma)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BesovArgs {
    #[arg(long, default_value = "2")]
    pub p: Exponent,
    #[arg(long, default_value = "2")]
    pub q: Exponent,
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
}

impl BesovArgs {
    fn build(&self) -> Result<BesovParams> {
        BesovParams::new(self.p, self.q, self.s, self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NormArgs {
    /// CSV file with columns `t,value` on a uniform grid.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub p: Exponent,
    /// Real exponent or `inf`.
    #[arg(long)]
    pub q: Exponent,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub alpha: f64,
    /// Use the generalized seminorm (L_q average over shifts).
    #[arg(long)]
    pub generalized: bool,
    /// Lower end of the delta range; defaults to 1/N.
    #[arg(long)]
    pub delta_min: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA_NODES)]
    pub delta_nodes: usize,
    #[arg(long, default_value_t = DEFAULT_H_NODES)]
    pub h_nodes: usize,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 257)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CltArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub besov: BesovArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,4,16,64")]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "4,6")]
    pub m_list: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub replicas: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    pub u_list: Vec<f64>,
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    #[arg(long, default_value_t = 257)]
    pub grid_n: usize,
    #[arg(long)]
    pub delta_min: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA_NODES)]
    pub delta_nodes: usize,
    #[arg(long, default_value_t = 33)]
    pub h_nodes: usize,
    #[arg(long, default_value_t = 33)]
    pub z_nodes: usize,
    #[arg(long, default_value_t = 17)]
    pub entropy_z_nodes: usize,
    #[arg(long, default_value_t = DEFAULT_EPS_NODES)]
    pub eps_nodes: usize,
    /// Multiplier on kappa before comparison (failure drills).
    #[arg(long, default_value_t = 1.0)]
    pub kappa_scale: f64,
    #[arg(long, default_value_t = besov_core::clt_lab::DEFAULT_MAX_PATHS)]
    pub max_paths: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

impl CltArgs {
    pub fn config(&self) -> Result<CltConfig> {
        Ok(CltConfig {
            model: self.model.build()?,
            besov: self.besov.build()?,
            n_list: self.n_list.clone(),
            replicas: self.replicas,
            m_list: self.m_list.clone(),
            seed: self.seed,
            u_list: self.u_list.clone(),
            grid_n: self.grid_n,
            delta_min: self.delta_min,
            delta_nodes: self.delta_nodes,
            h_nodes: self.h_nodes,
            z_nodes: self.z_nodes,
            entropy_z_nodes: self.entropy_z_nodes,
            eps_nodes: self.eps_nodes,
            kappa_scale: self.kappa_scale,
            max_paths: self.max_paths,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TailsArgs {
    /// `sqrt`, `power:<l>` or `table:<file>`.
    #[arg(long)]
    pub psi: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub u_list: Vec<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub besov: BesovArgs,
    #[arg(long, value_delimiter = ',', default_value = "4,6")]
    pub m_list: Vec<f64>,
    #[arg(long, default_value_t = 17)]
    pub z_nodes: usize,
    #[arg(long, default_value_t = 257)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub delta_min: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA_NODES)]
    pub delta_nodes: usize,
    #[arg(long, default_value_t = DEFAULT_EPS_NODES)]
    pub eps_nodes: usize,
    /// Use only shifts that stay inside [0, 1].
    #[arg(long)]
    pub interior_only: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// A reproducible unit of work: what a manifest records and `verify` replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "lowercase")]
pub enum Job {
    Norm(NormArgs),
    Simulate(SimulateArgs),
    Clt(CltArgs),
    Tails(TailsArgs),
    Entropy(EntropyArgs),
}

/// Where a job puts its artifacts.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Stdout,
    File(PathBuf),
    Dir(PathBuf),
}

/// `pass` is false when a bound comparison failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub pass: bool,
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Norm(_) => "norm",
            Job::Simulate(_) => "simulate",
            Job::Clt(_) => "clt",
            Job::Tails(_) => "tails",
            Job::Entropy(_) => "entropy",
        }
    }

    pub fn writes_dir(&self) -> bool {
        matches!(self, Job::Simulate(_) | Job::Clt(_))
    }

    pub fn target(&self) -> Target {
        let file = |o: &Option<PathBuf>| o.clone().map_or(Target::Stdout, Target::File);
        match self {
            Job::Norm(a) => file(&a.out),
            Job::Tails(a) => file(&a.out),
            Job::Entropy(a) => file(&a.out),
            Job::Simulate(a) => Target::Dir(a.out.clone()),
            Job::Clt(a) => Target::Dir(a.out.clone()),
        }
    }

    /// Same job, artifacts redirected to `path`.
    pub fn retarget(&self, path: &Path) -> Job {
        let mut job = self.clone();
        let p = path.to_path_buf();
        match &mut job {
            Job::Norm(a) => a.out = Some(p),
            Job::Tails(a) => a.out = Some(p),
            Job::Entropy(a) => a.out = Some(p),
            Job::Simulate(a) => a.out = p,
            Job::Clt(a) => a.out = p,
        }
        job
    }

    pub fn run(&self) -> Result<Outcome> {
        match self {
            Job::Norm(a) => run_norm(self, a),
            Job::Simulate(a) => run_simulate(self, a),
            Job::Clt(a) => run_clt(self, a),
            Job::Tails(a) => run_tails(self, a),
            Job::Entropy(a) => run_entropy(self, a),
        }
    }
}

const PASS: Outcome = Outcome { pass: true };

fn emit(target: &Target, bytes: &[u8]) -> Result<()> {
    match target {
        Target::Stdout => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
        Target::File(p) => fs::write(p, bytes)?,
        Target::Dir(_) => unreachable!("directory jobs write named files"),
    }
    Ok(())
}

fn out_dir(target: &Target) -> Result<PathBuf> {
    match target {
        Target::Dir(d) => {
            fs::create_dir_all(d)?;
            Ok(d.clone())
        }
        _ => unreachable!("file jobs write a single artifact"),
    }
}

/// CSV bytes preceded by the manifest comment line.
fn csv_with_header(
    manifest: &RunManifest,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<Vec<u8>> {
    let mut buf = manifest.header_line()?.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn with_manifest<T: Serialize>(value: &T, manifest: &RunManifest) -> Result<Vec<u8>> {
    let mut v = serde_json::to_value(value).map_err(json_err)?;
    v["manifest"] = serde_json::to_value(manifest).map_err(json_err)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(json_err)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn run_norm(job: &Job, a: &NormArgs) -> Result<Outcome> {
    let params = BesovParams::new(a.p, a.q, a.s, a.alpha)?;
    let f = read_path_file(&a.input)?;
    let delta_min = a.delta_min.unwrap_or(default_delta_min(&f.grid()));
    let kind = if a.generalized {
        BesovKind::Generalized
    } else {
        BesovKind::Ordinary
    };
    let eval = BesovEvaluator::new(params, kind, delta_min, a.delta_nodes, a.h_nodes)?;
    let (lp, seminorm) = eval.evaluate(&f)?;
    let manifest = RunManifest::new(
        job,
        None,
        Conventions::new(Some(delta_min), Some(a.h_nodes), None),
    )?;
    #[derive(Serialize)]
    struct NormOutput {
        lp: f64,
        seminorm: f64,
        norm: f64,
    }
    let body = NormOutput {
        lp,
        seminorm,
        norm: lp + seminorm,
    };
    emit(&job.target(), &with_manifest(&body, &manifest)?)?;
    Ok(PASS)
}

fn run_simulate(job: &Job, a: &SimulateArgs) -> Result<Outcome> {
    let cfg = SamplerConfig {
        grid: UnitGrid::new(a.grid_n)?,
        replicas: a.replicas,
        seed: a.seed,
    };
    let ens = sample(&a.model.build()?, &cfg)?;
    let manifest = RunManifest::new(job, Some(a.seed), Conventions::new(None, None, None))?;
    let dir = out_dir(&job.target())?;
    let mut buf = manifest.header_line()?.into_bytes();
    write_ensemble(&mut buf, &ens)?;
    fs::write(dir.join("ensemble.csv"), buf)?;
    fs::write(dir.join(MANIFEST_FILE), manifest.to_pretty()?)?;
    Ok(PASS)
}

fn run_clt(job: &Job, a: &CltArgs) -> Result<Outcome> {
    let cfg = a.config()?;
    cfg.validate()?;
    let dir = out_dir(&job.target())?;
    let report = run_clt_experiment(&cfg)?;
    let meta = &report.metadata;
    let manifest = RunManifest::new(
        job,
        Some(a.seed),
        Conventions::new(Some(meta.delta_min), Some(meta.h_nodes), Some(meta.z_nodes))
            .with_boundary(
                "zero extension outside [0, 1]; interior-only entropy side reported alongside",
            ),
    )?;

    fs::write(dir.join("report.json"), with_manifest(&report, &manifest)?)?;
    for s in &report.per_n {
        let rows: Vec<Vec<String>> = s
            .lp_norms
            .iter()
            .zip(&s.seminorms)
            .enumerate()
            .map(|(r, (lp, sn))| vec![r.to_string(), fmt_f64(*lp), fmt_f64(*sn), fmt_f64(lp + sn)])
            .collect();
        let bytes = csv_with_header(&manifest, &["replica", "lp", "seminorm", "norm"], &rows)?;
        fs::write(dir.join(format!("norms_n{}.csv", s.n)), bytes)?;
    }
    let mut tails = Vec::new();
    for s in &report.per_n {
        for (row, check) in s.tails.iter().zip(&report.tail_checks) {
            tails.push(vec![
                s.n.to_string(),
                fmt_f64(row.u),
                fmt_f64(row.value),
                fmt_f64(row.se),
                fmt_f64(check.bound),
                check.in_theorem.to_string(),
            ]);
        }
    }
    let cols = ["n", "u", "empirical", "se", "bound", "in_theorem"];
    fs::write(
        dir.join("tails.csv"),
        csv_with_header(&manifest, &cols, &tails)?,
    )?;
    let moments: Vec<Vec<String>> = report
        .moment_checks
        .iter()
        .map(|c| {
            vec![
                c.n.to_string(),
                fmt_f64(c.m),
                fmt_f64(c.empirical),
                fmt_f64(c.se),
                fmt_f64(c.kappa),
                fmt_f64(c.beta_tilde),
                c.pass.to_string(),
            ]
        })
        .collect();
    let cols = ["n", "m", "empirical", "se", "kappa", "beta_tilde", "pass"];
    fs::write(
        dir.join("moments.csv"),
        csv_with_header(&manifest, &cols, &moments)?,
    )?;
    fs::write(dir.join(MANIFEST_FILE), manifest.to_pretty()?)?;

    for c in report.moment_checks.iter().filter(|c| !c.pass) {
        eprintln!(
            "moment bound violated: n={} m={} empirical={} kappa={}",
            c.n, c.m, c.empirical, c.kappa
        );
    }
    for c in report.tail_checks.iter().filter(|c| c.pass == Some(false)) {
        eprintln!(
            "tail bound violated: u={} empirical={} bound={}",
            c.u, c.empirical, c.bound
        );
    }
    eprintln!(
        "delta_min={} moments={} tails={}",
        meta.delta_min,
        verdict(report.moments_pass),
        verdict(report.tails_pass)
    );
    Ok(Outcome { pass: report.pass })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn run_tails(job: &Job, a: &TailsArgs) -> Result<Outcome> {
    let psi = parse_psi_spec(&a.psi)?;
    if a.u_list.iter().any(|u| !(*u > 0.0)) {
        return Err(Error::InvalidArgument("u values must be positive".into()));
    }
    let rows = a
        .u_list
        .iter()
        .map(|&u| {
            let in_theorem = u > std::f64::consts::E;
            let bound = if in_theorem {
                tail_bound(&psi, u)?
            } else if u > 1.0 {
                extrapolated_tail_bound(&psi, u)?
            } else {
                1.0
            };
            Ok(vec![fmt_f64(u), fmt_f64(bound), in_theorem.to_string()])
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest::new(job, None, Conventions::new(None, None, None))?;
    emit(
        &job.target(),
        &csv_with_header(&manifest, &["u", "bound", "in_theorem"], &rows)?,
    )?;
    Ok(PASS)
}

fn run_entropy(job: &Job, a: &EntropyArgs) -> Result<Outcome> {
    let params = a.besov.build()?;
    let grid = UnitGrid::new(a.grid_n)?;
    let delta_min = a.delta_min.unwrap_or(default_delta_min(&grid));
    let nu = nu_measure(&params, delta_min, a.delta_nodes)?;
    let cfg = SamplerConfig {
        grid,
        replicas: a.replicas,
        seed: a.seed,
    };
    let ens = sample(&a.model.build()?, &cfg)?;
    let boundary = if a.interior_only {
        Boundary::InteriorOnly
    } else {
        Boundary::ZeroExtension
    };
    let table = ThetaTable::build(&ens, &z_grid(a.z_nodes), nu.nodes(), params.p, boundary)?;
    let rows = a
        .m_list
        .iter()
        .map(|&m| {
            let v = if table.z().len() > 1 {
                entropy_integral(&rho_space(&table, m)?, m, a.eps_nodes)?
            } else {
                0.0
            };
            let beta = beta_of_m(v, &table.mu(m), params.s, &nu)?;
            Ok(vec![fmt_f64(m), fmt_f64(v), fmt_f64(beta)])
        })
        .collect::<Result<Vec<_>>>()?;
    let conv = Conventions::new(Some(delta_min), None, Some(a.z_nodes));
    let conv = if a.interior_only {
        conv.with_boundary("interior-only shifts")
    } else {
        conv
    };
    let manifest = RunManifest::new(job, Some(a.seed), conv)?;
    emit(
        &job.target(),
        &csv_with_header(&manifest, &["m", "V", "beta"], &rows)?,
    )?;
    Ok(PASS)
}

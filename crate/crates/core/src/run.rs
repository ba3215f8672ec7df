//! Run configuration, α sweeps over a uniform time grid, and CSV output.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::blocks::{BlockIndex, EvolutionBlock, FractionalConfig};
use crate::dynamics::{apply_blocks, initial_state, CoherentSpec, JCState, MAX_N_MAX};
use crate::error::{Error, Result};
use crate::mlf;
use crate::observables::{population_inversion, reduced_atom_density, von_neumann_entropy_qubit};
use crate::unitarization::{metric_at, solve_block, BlockSolution, DeltaUnwrapper, DysonParams};

pub const CSV_SCHEMA: &str = "# fracqjc timeseries v1";
pub const CSV_COLUMNS: &str = "t,alpha,W,S_vn,norm,unitarity_residual,metric_residual,delta_unwrap_flag";
pub const AMPLITUDE_SCHEMA: &str = "# fracqjc amplitudes v1";
pub const AMPLITUDE_COLUMNS: &str = "t,alpha,atom,n,re,im";
/// Bound on `|norm - 1|` and on the unitarity residual of every row.
pub const ROW_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Inversion,
    Entropy,
    Amplitudes,
    Diagnostics,
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "inversion" => Ok(Observable::Inversion),
            "entropy" => Ok(Observable::Entropy),
            "amplitudes" => Ok(Observable::Amplitudes),
            "diagnostics" => Ok(Observable::Diagnostics),
            other => Err(format!("unknown observable '{other}' (inversion, entropy, amplitudes, diagnostics)")),
        }
    }
}

/// Photon-number cutoff: fixed, or the smallest one meeting `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NMax {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for NMax {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "auto" => Ok(NMax::Auto),
            n => n.parse().map(NMax::Fixed).map_err(|_| format!("n_max must be 'auto' or an integer, got '{n}'")),
        }
    }
}

impl fmt::Display for NMax {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NMax::Auto => f.write_str("auto"),
            NMax::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for NMax {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NMax::Auto => s.serialize_str("auto"),
            NMax::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for NMax {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(NMax::Fixed(n as usize)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Initial Dyson map `(κ₀, λ₀, Λ₀)`, shared by every block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dyson0 {
    pub kappa0: f64,
    pub lambda0_re: f64,
    pub lambda0_im: f64,
    #[serde(rename = "Lambda0")]
    pub big_lambda0: f64,
}

impl Default for Dyson0 {
    fn default() -> Self {
        Self { kappa0: 0.0, lambda0_re: 0.0, lambda0_im: 0.0, big_lambda0: 1.0 }
    }
}

impl Dyson0 {
    pub fn params(&self) -> Result<DysonParams> {
        DysonParams::new(self.kappa0, Complex64::new(self.lambda0_re, self.lambda0_im), self.big_lambda0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alphas: Vec<f64>,
    pub beta_re: f64,
    pub beta_im: f64,
    pub mu: f64,
    pub t_max: f64,
    pub steps: usize,
    pub n_max: NMax,
    pub tail_tol: f64,
    pub ml_tol: f64,
    pub dyson0: Dyson0,
    pub observables: BTreeSet<Observable>,
    pub output_path: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alphas: vec![1.0, 0.75, 0.5],
            beta_re: 2.0,
            beta_im: 0.0,
            mu: 1.0,
            t_max: 25.0,
            steps: 1000,
            n_max: NMax::Auto,
            tail_tol: 1e-12,
            ml_tol: 1e-12,
            dyson0: Dyson0::default(),
            observables: [Observable::Inversion, Observable::Entropy].into_iter().collect(),
            output_path: PathBuf::from("run.csv"),
        }
    }
}

/// One violated invariant of a [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn beta(&self) -> Complex64 {
        Complex64::new(self.beta_re, self.beta_im)
    }

    /// `steps` uniform points on `[0, t_max]`, both ends included.
    pub fn time_grid(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps).map(|k| if k + 1 == self.steps { self.t_max } else { self.t_max * k as f64 / last }).collect()
    }

    pub fn coherent_spec(&self) -> Result<CoherentSpec> {
        match self.n_max {
            NMax::Auto => CoherentSpec::auto(self.beta(), self.tail_tol),
            NMax::Fixed(n) => CoherentSpec::new(self.beta(), n, self.tail_tol),
        }
    }

    pub fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    /// Every violated invariant; empty for a runnable configuration.
    pub fn validate(&self) -> Vec<Finding> {
        let mut out = Vec::new();
        let mut push = |field, message: String| out.push(Finding { field, message });
        if self.alphas.is_empty() {
            push("alphas", "at least one alpha is required".into());
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1.0) {
                push("alphas", format!("alpha out of (0,1]: {a}"));
            }
        }
        if !(self.beta_re.is_finite() && self.beta_im.is_finite()) {
            push("beta", "beta must be finite".into());
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            push("mu", format!("mu must be positive, got {}", self.mu));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            push("t_max", format!("t_max must be positive, got {}", self.t_max));
        }
        if self.steps < 2 {
            push("steps", format!("steps must be at least 2, got {}", self.steps));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol <= ROW_TOL) {
            push("tail_tol", format!("tail_tol must lie in (0, 1e-8] so rows can meet the norm check, got {:e}", self.tail_tol));
        }
        if !(mlf::MIN_TOL..=mlf::MAX_TOL).contains(&self.ml_tol) {
            push("ml_tol", format!("ml_tol must lie in [1e-15, 1e-2], got {:e}", self.ml_tol));
        }
        let d = &self.dyson0;
        if !(d.kappa0.is_finite() && d.lambda0_re.is_finite() && d.lambda0_im.is_finite()) {
            push("dyson0", "kappa0 and lambda0 must be finite".into());
        }
        if !(d.big_lambda0 > 0.0 && d.big_lambda0.is_finite()) {
            push("Lambda0", format!("Λ₀ must be positive, got {}", d.big_lambda0));
        }
        match self.n_max {
            NMax::Fixed(n) if n > MAX_N_MAX => push("n_max", format!("n_max = {n} exceeds the cap {MAX_N_MAX}")),
            _ if self.tail_tol > 0.0 && self.tail_tol <= ROW_TOL && self.beta().norm().is_finite() => {
                if let Err(e) = self.coherent_spec() {
                    push("n_max", e.to_string());
                }
            }
            _ => {}
        }
        out
    }
}

/// One CSV row. Observables that were not requested are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub alpha: f64,
    #[serde(rename = "W")]
    pub w: Option<f64>,
    #[serde(rename = "S_vn")]
    pub s_vn: Option<f64>,
    /// `‖ψ(t)‖²` of the truncated state.
    pub norm: f64,
    /// `max_n ‖u†u - I‖_F`.
    pub unitarity_residual: f64,
    /// `max_n ‖U†Θ(t)U - Θ(0)‖_F / ‖Θ(0)‖_F`.
    pub metric_residual: Option<f64>,
    /// Some block's `δ` left the principal branch at this time.
    pub delta_unwrap_flag: bool,
}

/// Amplitude of one product basis state `|atom, n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeRow {
    pub t: f64,
    pub alpha: f64,
    pub atom: char,
    pub n: usize,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub rows: Vec<Row>,
    pub amplitudes: Vec<AmplitudeRow>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl TimeSeries {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_SCHEMA}")?;
        writeln!(w, "{CSV_COLUMNS}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                num(r.t),
                num(r.alpha),
                opt(r.w),
                opt(r.s_vn),
                num(r.norm),
                num(r.unitarity_residual),
                opt(r.metric_residual),
                u8::from(r.delta_unwrap_flag)
            )?;
        }
        Ok(())
    }

    pub fn write_amplitudes_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{AMPLITUDE_SCHEMA}")?;
        writeln!(w, "{AMPLITUDE_COLUMNS}")?;
        for a in &self.amplitudes {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                num(a.t),
                num(a.alpha),
                a.atom,
                a.n,
                num(a.amplitude.re),
                num(a.amplitude.im)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn rows_for(&self, alpha: f64) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.alpha == alpha)
    }
}

/// Path of the amplitude file written next to the main CSV.
pub fn amplitude_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    output.with_file_name(format!("{stem}.amplitudes.csv"))
}

fn metric_residual(sol: &BlockSolution, alpha: f64, dyson0: &DysonParams) -> f64 {
    let theta0 = metric_at(dyson0).theta;
    let moved = sol.dyson.eta() * sol.nonunitary(alpha).0;
    (moved.adjoint() * moved - theta0).norm() / theta0.norm()
}

fn product_amplitudes(t: f64, alpha: f64, state: &JCState, out: &mut Vec<AmplitudeRow>) {
    out.push(AmplitudeRow { t, alpha, atom: 'g', n: 0, amplitude: state.ground_amp });
    for (n, [e, g]) in state.pairs.iter().enumerate() {
        out.push(AmplitudeRow { t, alpha, atom: 'e', n, amplitude: *e });
        out.push(AmplitudeRow { t, alpha, atom: 'g', n: n + 1, amplitude: *g });
    }
}

/// Per-α results: rows for every grid time plus optional amplitudes.
fn run_alpha(config: &RunConfig, alpha: f64, s0: &JCState, dyson0: &DysonParams) -> Result<TimeSeries> {
    let cfg = FractionalConfig::with_tolerance(alpha, config.mu, config.ml_tol)?;
    let times = config.time_grid();
    let n_blocks = s0.pairs.len();

    let solved: Vec<Result<BlockSolution>> = (0..times.len() * n_blocks)
        .into_par_iter()
        .map(|i| {
            let (k, n) = (i / n_blocks, i % n_blocks);
            solve_block(&cfg, BlockIndex(n), times[k], dyson0, None)
                .map_err(|e| e.in_block(n).at_point(alpha, times[k]))
        })
        .collect();
    let solved: Vec<BlockSolution> = solved.into_iter().collect::<Result<_>>()?;

    let mut flags = vec![false; times.len()];
    for n in 0..n_blocks {
        let mut unwrap = DeltaUnwrapper::new();
        for (k, flag) in flags.iter_mut().enumerate() {
            *flag |= unwrap.next(solved[k * n_blocks + n].coefficients.d).1;
        }
    }

    let per_time: Vec<Result<(Row, Option<JCState>)>> = times
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let sols = &solved[k * n_blocks..(k + 1) * n_blocks];
            let unitaries: Vec<EvolutionBlock> = sols.iter().map(|s| s.unitary).collect();
            let state = apply_blocks(s0, &unitaries);
            let norm = state.norm_sqr();
            let unitarity_residual = unitaries.iter().map(EvolutionBlock::unitarity_residual).fold(0.0, f64::max);
            if !(unitarity_residual <= ROW_TOL) {
                return Err(Error::UnitarityResidual { residual: unitarity_residual }.at_point(alpha, t));
            }
            if !((norm - 1.0).abs() <= ROW_TOL) {
                return Err(Error::NormDrift { norm }.at_point(alpha, t));
            }
            let row = Row {
                t,
                alpha,
                w: config.wants(Observable::Inversion).then(|| population_inversion(&state)),
                s_vn: config
                    .wants(Observable::Entropy)
                    .then(|| von_neumann_entropy_qubit(&reduced_atom_density(&state))),
                norm,
                unitarity_residual,
                metric_residual: config
                    .wants(Observable::Diagnostics)
                    .then(|| sols.iter().map(|s| metric_residual(s, alpha, dyson0)).fold(0.0, f64::max)),
                delta_unwrap_flag: flags[k],
            };
            Ok((row, config.wants(Observable::Amplitudes).then_some(state)))
        })
        .collect();

    let mut series = TimeSeries::default();
    for item in per_time {
        let (row, state) = item?;
        if let Some(state) = state {
            product_amplitudes(row.t, alpha, &state, &mut series.amplitudes);
        }
        series.rows.push(row);
    }
    Ok(series)
}

/// Evaluate every `α` on the time grid, each time point evolved from `t = 0`.
pub fn run(config: &RunConfig) -> Result<TimeSeries> {
    let findings = config.validate();
    if !findings.is_empty() {
        let list: Vec<String> = findings.iter().map(Finding::to_string).collect();
        return Err(Error::InvalidConfig(list.join("; ")));
    }
    let dyson0 = config.dyson0.params()?;
    let cond = dyson0.condition_number();
    if cond > crate::unitarization::ETA0_CONDITION_WARN {
        log::warn!("eta(0) condition number {cond:.3e} is large; residuals may degrade");
    }
    let spec = config.coherent_spec()?;
    log::info!("n_max = {} (Poisson tail {:.3e})", spec.n_max, spec.tail());
    let s0 = initial_state(&spec)?;

    let mut out = TimeSeries::default();
    for &alpha in &config.alphas {
        let part = run_alpha(config, alpha, &s0, &dyson0)?;
        out.rows.extend(part.rows);
        out.amplitudes.extend(part.amplitudes);
    }
    Ok(out)
}

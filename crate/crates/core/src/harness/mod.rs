//! Sweeps over the coupling: config parsing, per-row solves across methods,
//! coefficient fits, and CSV/JSON emission.

mod fit;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use fit::{fit_coefficients, fit_long_range, ols_slope, step_spread, CoefficientFit, ComparisonPoint, LongRangeFit, RatioPoint};
pub use output::{csv_string, write_csv, write_json, CSV_COLUMNS};

use crate::asymptotics::{predict_dirac_kappa_form, predict_dirac_second_order, Prediction};
use crate::birman_schwinger::BsOptions;
use crate::error::{Error, Result};
use crate::grid::{schrodinger_ground_state, GridSpec};
use crate::linalg::C64;
use crate::moments::{compute_moments, MomentSet};
use crate::potentials::{check_hypotheses, load_tabulated, FamilyRegistry, HypothesisReport, PotentialSpec, Theorem};
use crate::resolvent::Threshold;
use crate::solvers::{SolverRegistry, SpectralProblem};

pub const THREADS_ENV: &str = "GAPSPECTRA_THREADS";

/// Where the potential comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialDescriptor {
    Builtin {
        family: String,
        #[serde(default)]
        params: Vec<f64>,
    },
    Tabulated {
        tabulated: PathBuf,
    },
}

impl PotentialDescriptor {
    pub fn build(&self) -> Result<PotentialSpec> {
        match self {
            PotentialDescriptor::Builtin { family, params } => FamilyRegistry::default().build(family, params),
            PotentialDescriptor::Tabulated { tabulated } => load_tabulated(tabulated),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

fn default_threshold() -> Threshold {
    Threshold::PlusM
}

fn default_grid() -> GridSpec {
    GridSpec::new(200.0, 40000)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub potential: PotentialDescriptor,
    pub m: f64,
    /// Strictly decreasing couplings.
    pub eps_list: Vec<f64>,
    pub methods: Vec<String>,
    #[serde(default = "default_threshold")]
    pub threshold: Threshold,
    #[serde(default)]
    pub bs: BsOptions,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    /// Grid for the min-max method and the Schrodinger comparison;
    /// defaults to `grid`.
    #[serde(default)]
    pub minmax_grid: Option<GridSpec>,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    /// Also compute the Schrodinger ground state of `V11` on each row.
    #[serde(default)]
    pub schrodinger: bool,
    #[serde(default)]
    pub outputs: Outputs,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn minmax_grid(&self) -> GridSpec {
        self.minmax_grid.unwrap_or(self.grid)
    }

    /// Check the config and build its potential.
    pub fn validate(&self) -> Result<PotentialSpec> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("m must be positive, got {}", self.m));
        }
        if self.eps_list.is_empty() {
            return bad("eps_list is empty".into());
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps_list entries must be positive".into());
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_list must be strictly decreasing".into());
        }
        if self.methods.is_empty() {
            return bad("methods is empty".into());
        }
        let reg = SolverRegistry::default();
        for name in &self.methods {
            reg.get(name)?;
        }
        let v = self.potential.build().map_err(|e| Error::Config(e.to_string()))?;
        self.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.minmax_grid().validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.methods.iter().any(|n| n == "minmax") {
            if !v.is_hermitian() {
                return bad(format!("minmax needs a Hermitian potential; {} is not", v.name()));
            }
            let limit = self.m / v.sup_norm();
            if self.eps_list[0] >= limit {
                return bad(format!("minmax needs eps < m / |V|_inf = {limit}, got {}", self.eps_list[0]));
            }
        }
        if self.schrodinger && v.entry(0, 0, 0.0).im != 0.0 {
            return bad("the Schrodinger comparison needs a real V11".into());
        }
        Ok(v)
    }

    pub fn problem(&self, v: &PotentialSpec, eps: f64) -> SpectralProblem {
        SpectralProblem {
            potential: v.clone(),
            m: self.m,
            eps,
            threshold: self.threshold,
            bs: self.bs,
            grid: self.grid,
            minmax_grid: self.minmax_grid(),
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub z: Option<C64>,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub results: BTreeMap<String, MethodResult>,
    /// Method whose eigenvalue the residuals use.
    pub primary: Option<String>,
    pub lambda_s: Option<f64>,
    pub pred2: Option<C64>,
    pub pred3: Option<C64>,
    pub pred_kappa: Option<C64>,
    pub resid2: Option<f64>,
    pub resid3: Option<f64>,
    pub resid_kappa: Option<f64>,
}

impl SweepRow {
    pub fn z(&self, method: &str) -> Option<C64> {
        self.results.get(method).and_then(|r| r.z)
    }

    pub fn primary_z(&self) -> Option<C64> {
        self.primary.as_deref().and_then(|p| self.z(p))
    }

    fn residuals(&self) -> [Option<f64>; 3] {
        let z = self.primary_z();
        let r = |p: Option<C64>| Some((z? - p?).norm());
        [r(self.pred2), r(self.pred3), r(self.pred_kappa)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub crate_version: String,
    pub solver_versions: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fitted {
    pub coefficients: Option<CoefficientFit>,
    pub long_range: Option<LongRangeFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub m: f64,
    pub threshold: Threshold,
    pub potential: String,
    pub moments: Option<MomentSet>,
    pub hypotheses: Vec<HypothesisReport>,
    pub rows: Vec<SweepRow>,
    pub fitted: Fitted,
    pub provenance: Provenance,
}

impl SweepReport {
    /// Every stored residual equals the one recomputed from its row.
    pub fn is_consistent(&self) -> bool {
        self.rows.iter().all(|r| {
            let [a, b, c] = r.residuals();
            a == r.resid2 && b == r.resid3 && c == r.resid_kappa
        })
    }

    /// `(eps, z)` pairs of the primary method.
    pub fn primary_series(&self) -> Vec<(f64, C64)> {
        self.rows.iter().filter_map(|r| Some((r.eps, r.primary_z()?))).collect()
    }

    /// Recompute the fitted block from the rows.
    pub fn refit(&mut self) {
        let mut fitted = Fitted::default();
        let series = self.primary_series();
        match &self.moments {
            Some(ms) => match fit_coefficients(&series, self.m, ms, self.threshold) {
                Ok(c) => fitted.coefficients = Some(c),
                Err(e) => fitted.notes.push(format!("coefficients: {e}")),
            },
            None => fitted.notes.push("coefficients: no moments for this potential".into()),
        }
        let lambda: Vec<Option<f64>> =
            self.rows.iter().filter(|r| r.primary_z().is_some()).map(|r| r.lambda_s).collect();
        match fit_long_range(&series, self.m, &lambda) {
            Ok(l) => fitted.long_range = Some(l),
            Err(e) => fitted.notes.push(format!("long range: {e}")),
        }
        self.fitted = fitted;
    }
}

/// Worker pool honoring `GAPSPECTRA_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var(THREADS_ENV) {
        let n: usize = s
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{s}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn predictions(moments: Option<&MomentSet>, m: f64, eps: f64, threshold: Threshold) -> [Option<C64>; 3] {
    let Some(ms) = moments else { return [None; 3] };
    let Ok(full) = predict_dirac_second_order(ms, m, eps, threshold) else { return [None; 3] };
    let two: C64 = full.order_terms.iter().filter(|t| t.power < 3.0).map(|t| t.eval(eps)).sum();
    let kappa = predict_dirac_kappa_form(ms, m, eps, threshold).ok().map(|p: Prediction| p.value);
    [Some(two), Some(full.value), kappa]
}

fn solve_row(config: &SweepConfig, v: &PotentialSpec, moments: Option<&MomentSet>, eps: f64) -> SweepRow {
    let reg = SolverRegistry::default();
    let problem = config.problem(v, eps);
    let results: BTreeMap<String, MethodResult> = config
        .methods
        .iter()
        .map(|name| {
            let out = reg.get(name).and_then(|s| s.solve(&problem));
            let r = match out {
                Ok(est) => MethodResult { z: est.z, accepted: est.accepted, error: None },
                Err(e) => MethodResult { z: None, accepted: false, error: Some(e.to_string()) },
            };
            (name.clone(), r)
        })
        .collect();
    let primary = config.methods.iter().find(|n| results[*n].z.is_some()).cloned();
    let lambda_s = if config.schrodinger {
        let src = v.clone();
        schrodinger_ground_state(move |x| src.entry(0, 0, x).re, config.m, eps, &config.minmax_grid())
            .ok()
            .flatten()
            .map(|s| s.lambda)
    } else {
        None
    };
    let [pred2, pred3, pred_kappa] = predictions(moments, config.m, eps, config.threshold);
    let mut row = SweepRow {
        eps,
        results,
        primary,
        lambda_s,
        pred2,
        pred3,
        pred_kappa,
        resid2: None,
        resid3: None,
        resid_kappa: None,
    };
    [row.resid2, row.resid3, row.resid_kappa] = row.residuals();
    row
}

/// Solve every `eps` with every requested method and fit the results.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    let v = config.validate()?;
    let hypotheses: Vec<HypothesisReport> =
        [Theorem::ThmSecondOrder, Theorem::ThmLongRange].iter().map(|t| check_hypotheses(&v, *t)).collect();
    let moments = if hypotheses[0].passed() && !v.is_zero() {
        compute_moments(&v, config.m, config.bs.moment_tol).ok()
    } else {
        None
    };
    let pool = thread_pool()?;
    let rows: Vec<SweepRow> = pool.install(|| {
        config.eps_list.par_iter().map(|&eps| solve_row(config, &v, moments.as_ref(), eps)).collect()
    });
    let all_failed = rows.iter().all(|r| r.results.values().all(|m| m.error.is_some()));
    if all_failed {
        let first = rows.iter().flat_map(|r| r.results.values()).find_map(|m| m.error.clone()).unwrap_or_default();
        return Err(Error::Convergence(format!("every solve in the sweep failed; first error: {first}")));
    }
    let reg = SolverRegistry::default();
    let solver_versions =
        config.methods.iter().map(|n| (n.clone(), reg.get(n).map(|s| s.version().to_string()).unwrap_or_default())).collect();
    let mut report = SweepReport {
        m: config.m,
        threshold: config.threshold,
        potential: v.name().to_string(),
        moments,
        hypotheses,
        rows,
        fitted: Fitted::default(),
        provenance: Provenance {
            config_hash: config.hash(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            solver_versions,
        },
    };
    report.refit();
    Ok(report)
}

/// Run the sweep and write the configured outputs, relative to `out_dir`
/// when given.
pub fn run_and_write(config: &SweepConfig, out_dir: Option<&Path>) -> Result<SweepReport> {
    let report = run_sweep(config)?;
    let place = |p: &Path| out_dir.map_or_else(|| p.to_path_buf(), |d| d.join(p));
    if let Some(p) = &config.outputs.csv {
        write_csv(&report, &place(p))?;
    }
    if let Some(p) = &config.outputs.json {
        write_json(&report, &place(p))?;
    }
    Ok(report)
}

//! Name-keyed registry of eigenvalue methods behind one trait.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::birman_schwinger::{find_bound_state, mirror_potential, BsOptions};
use crate::error::{Error, Result};
use crate::grid::{dirac_eigen_in_gap, GridSpec};
use crate::linalg::C64;
use crate::minmax::solve_minmax;
use crate::potentials::PotentialSpec;
use crate::resolvent::Threshold;

/// One eigenvalue problem `D_m - eps V` with every method's controls.
#[derive(Debug, Clone)]
pub struct SpectralProblem {
    pub potential: PotentialSpec,
    pub m: f64,
    pub eps: f64,
    pub threshold: Threshold,
    pub bs: BsOptions,
    pub grid: GridSpec,
    pub minmax_grid: GridSpec,
    /// Real-part window for the grid method; defaults to the half of the
    /// gap next to the threshold.
    pub window: Option<(f64, f64)>,
}

impl SpectralProblem {
    pub fn new(potential: PotentialSpec, m: f64, eps: f64) -> Self {
        let grid = GridSpec::new(200.0, 40000);
        Self {
            potential,
            m,
            eps,
            threshold: Threshold::PlusM,
            bs: BsOptions::default(),
            grid,
            minmax_grid: grid,
            window: None,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.window.unwrap_or(match self.threshold {
            Threshold::PlusM => (0.0, self.m * (1.0 - 1e-10)),
            Threshold::MinusM => (-self.m * (1.0 - 1e-10), 0.0),
        })
    }
}

/// What a method found; `z = None` means no eigenvalue near the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    pub method: String,
    pub z: Option<C64>,
    /// Method-specific acceptance (tail mass, residual, or threshold flag).
    pub accepted: bool,
    pub detail: serde_json::Value,
}

pub trait EigenSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn version(&self) -> &'static str {
        env!("CARGO_PKG_VERSION")
    }
    fn solve(&self, problem: &SpectralProblem) -> Result<EigenEstimate>;
}

pub struct BirmanSchwingerSolver;
pub struct GridSolver;
pub struct MinmaxSolver;

impl EigenSolver for BirmanSchwingerSolver {
    fn name(&self) -> &'static str {
        "bs"
    }

    fn solve(&self, p: &SpectralProblem) -> Result<EigenEstimate> {
        let root = find_bound_state(&p.potential, p.m, p.eps, p.threshold, &p.bs)?;
        Ok(EigenEstimate {
            method: self.name().into(),
            z: root.as_ref().map(|r| r.z),
            accepted: root.as_ref().is_none_or(|r| r.residual <= p.bs.residual_tol * r.kappa.norm().max(1.0)),
            detail: serde_json::to_value(root)?,
        })
    }
}

impl EigenSolver for GridSolver {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn solve(&self, p: &SpectralProblem) -> Result<EigenEstimate> {
        let found = dirac_eigen_in_gap(&p.potential, p.m, p.eps, &p.grid, p.window())?;
        // The eigenvalue closest to the threshold.
        let pick = match p.threshold {
            Threshold::PlusM => found.iter().max_by(|a, b| a.z.re.total_cmp(&b.z.re)),
            Threshold::MinusM => found.iter().min_by(|a, b| a.z.re.total_cmp(&b.z.re)),
        };
        Ok(EigenEstimate {
            method: self.name().into(),
            z: pick.map(|g| g.z),
            accepted: pick.is_none_or(|g| g.accepted),
            detail: serde_json::to_value(&found)?,
        })
    }
}

impl EigenSolver for MinmaxSolver {
    fn name(&self) -> &'static str {
        "minmax"
    }

    fn solve(&self, p: &SpectralProblem) -> Result<EigenEstimate> {
        let (v, sign) = match p.threshold {
            Threshold::PlusM => (p.potential.clone(), 1.0),
            Threshold::MinusM => (mirror_potential(&p.potential), -1.0),
        };
        let r = solve_minmax(&v, p.m, p.eps, &p.minmax_grid)?;
        Ok(EigenEstimate {
            method: self.name().into(),
            z: (!r.at_threshold).then(|| C64::from(sign * r.gamma1)),
            accepted: !r.at_threshold,
            detail: serde_json::to_value(&r)?,
        })
    }
}

pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn EigenSolver>>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut reg = Self { solvers: BTreeMap::new() };
        reg.register(Box::new(BirmanSchwingerSolver));
        reg.register(Box::new(GridSolver));
        reg.register(Box::new(MinmaxSolver));
        reg
    }
}

impl SolverRegistry {
    pub fn register(&mut self, solver: Box<dyn EigenSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn EigenSolver> {
        self.solvers.get(name).map(|s| s.as_ref()).ok_or_else(|| {
            let known: Vec<_> = self.solvers.keys().collect();
            Error::Config(format!("unknown method `{name}`; known: {known:?}"))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }
}

//! One module per subcommand. Each reads its keys from the run
//! configuration and writes its tables, fields and report.

pub mod bifurcate;
pub mod branch;
pub mod eig;
pub mod harmonic;
pub mod mse;
pub mod tile;

use branchlab_core::harmonic::{poisson_extend, MeshModes, ModalBoundaryData, ModalTerm, Phase};
use branchlab_core::mesh::{mesh_cone_with, mesh_spherical_polytope, ConeOptions, Mesh, Tag};
use branchlab_core::mse::{solve_mse, BoundaryData, MseOptions, MseSolution};
use branchlab_core::spectral::{dirichlet_eigs, EigenPair};
use branchlab_core::tiling::Tiling;

use crate::config::RunConfig;
use crate::output::{num, Table};
use crate::RunError;

/// The cone over the tetrahedral cell with the harmonic extension of the
/// configured modal cap data.
pub struct ConeProblem {
    pub tiling: Tiling,
    pub surface: Mesh,
    pub cone: Mesh,
    pub eigs: Vec<EigenPair>,
    pub harmonic: Vec<f64>,
    /// Harmonic extension restricted to cap nodes, zero elsewhere.
    pub cap: Vec<f64>,
}

impl ConeProblem {
    pub fn new(cfg: &RunConfig) -> Result<Self, RunError> {
        let tiling = Tiling::simplex(3)?;
        let (h, grading) = (cfg.f64("h")?, cfg.f64("grading")?);
        let surface = mesh_spherical_polytope(tiling.base_cell(), h, grading)?;
        let opts = ConeOptions {
            h_surface: h,
            grading_surface: grading,
            h_radial: cfg.f64("h_radial")?,
            grading_radial: cfg.f64("grading_radial")?,
        };
        let cone = mesh_cone_with(tiling.base_cell(), &opts)?;
        let terms = cfg.modes("data")?;
        let count = terms.iter().map(|t| t.0).max().unwrap_or(1);
        let eigs = dirichlet_eigs(&surface, count)?;
        let mut data = ModalBoundaryData::new(0);
        for (mode, coefficient) in terms {
            data.push(ModalTerm {
                mode,
                k: Vec::new(),
                phase: Phase::Cos,
                coefficient,
            })?;
        }
        let modes = MeshModes::new(&surface, &eigs)?;
        let harmonic = poisson_extend(&modes, &data, &cone)?.values;
        let cap = (0..cone.nodes().len())
            .map(|i| {
                if cone.has_tag(i, Tag::Cap) {
                    harmonic[i]
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self {
            tiling,
            surface,
            cone,
            eigs,
            harmonic,
            cap,
        })
    }

    /// Minimal surface solve with the configured amplitude and Newton
    /// settings. Non-convergence is returned in the report, not as an error.
    pub fn solve(&self, cfg: &RunConfig) -> Result<MseSolution, RunError> {
        let data = BoundaryData {
            values: self.cap.clone(),
            epsilon: cfg.f64("epsilon")?,
            generator: cfg.str("data").into(),
        };
        let opts = MseOptions {
            tolerance: cfg.f64("tol")?,
            max_newton: cfg.usize("max_newton")?,
            step: cfg.f64("step")?,
        };
        Ok(solve_mse(&self.cone, &data, &opts)?)
    }

    /// Provenance label of the cone mesh.
    pub fn level(&self, cfg: &RunConfig) -> String {
        format!(
            "cone h_radial={} grading={}",
            cfg.str("h_radial"),
            cfg.str("grading")
        )
    }
}

/// Newton history of a minimal surface solve, one row per step.
pub fn history_table(sol: &MseSolution) -> Table {
    let mut t = Table::new(&["level", "epsilon", "iteration", "residual", "damping"]);
    let r = &sol.report;
    for (l, eps) in r.continuation.iter().enumerate() {
        let hist = r.residual_history.get(l).map(Vec::as_slice).unwrap_or(&[]);
        let damp = r.damping.get(l).map(Vec::as_slice).unwrap_or(&[]);
        for (i, res) in hist.iter().enumerate() {
            let d = if i == 0 {
                String::new()
            } else {
                damp.get(i - 1).map(|d| num(*d)).unwrap_or_default()
            };
            t.push(vec![l.to_string(), num(*eps), i.to_string(), num(*res), d]);
        }
    }
    t
}

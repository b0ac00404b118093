//! Continuous post: time discretization and the support-function recurrence
//! producing the flowpipe `Ω₀ … Ω_j` of one symbolic state.
//!
//! The recurrence `ρ_{Ωᵢ₊₁}(ℓ) = ρ_{Ωᵢ}(Φᵀℓ) + ρ_W(ℓ)` is evaluated in its
//! unrolled form one template direction at a time, so a single direction's
//! sequence is an independent unit of work. Every engine goes through
//! [`PreparedFlowpipe`], which keeps the bounds bitwise identical no matter
//! how the per-direction work is scheduled.

use std::sync::Arc;

use thiserror::Error;

use crate::automaton::{Dynamics, HybridAutomaton, Input, LocationId, SymbolicState};
use crate::geometry::{
    project_vertices_2d, satisfies, ConvexSet, GeometryError, HalfSpace, TemplateDirections,
    TemplatePolytope, SAT_TOL,
};
use crate::numerics::{mat_exp, Matrix, NumericsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReachError {
    #[error("invalid reach parameters: {0}")]
    InvalidParams(String),
    #[error("initial set violates the location invariant")]
    EmptyFlowpipe,
    #[error("unknown location {0}")]
    UnknownLocation(LocationId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Time horizon, step and template shared by a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachParams {
    horizon: f64,
    step: f64,
    steps: usize,
    directions: Arc<TemplateDirections>,
}

impl ReachParams {
    pub fn new(horizon: f64, step: f64, directions: Arc<TemplateDirections>) -> Result<Self, ReachError> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(ReachError::InvalidParams("time horizon must be positive".into()));
        }
        if !(step > 0.0) || !step.is_finite() || step > horizon {
            return Err(ReachError::InvalidParams("step must be in (0, T]".into()));
        }
        let steps = (horizon / step).round();
        if steps > u32::MAX as f64 {
            return Err(ReachError::InvalidParams("too many time steps".into()));
        }
        Ok(ReachParams {
            horizon,
            step,
            steps: (steps as usize).max(1),
            directions,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `N = round(T/τ)`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn directions(&self) -> &Arc<TemplateDirections> {
        &self.directions
    }
}

/// `Φ = e^{Aτ}` together with the bloated sets entering the recurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedDynamics {
    pub phi: Matrix,
    pub w: ConvexSet,
    pub omega0: ConvexSet,
}

fn input_set(dyn_: &Dynamics) -> ConvexSet {
    match &dyn_.input {
        Input::Fixed(u) => ConvexSet::point(u.clone()),
        Input::Set(s) => s.clone(),
    }
}

fn inf_ball(n: usize, r: f64) -> ConvexSet {
    ConvexSet::Box {
        lower: vec![-r; n],
        upper: vec![r; n],
    }
}

/// First-order discretization with bloating by `∞`-norm balls.
pub fn discretize(dyn_: &Dynamics, x0: &ConvexSet, tau: f64) -> Result<DiscretizedDynamics, ReachError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(ReachError::InvalidParams("step must be positive".into()));
    }
    let n = dyn_.dim();
    let a = &dyn_.a;
    let phi = mat_exp(a, tau)?;
    let u = input_set(dyn_);
    let tau_u = ConvexSet::affine(Arc::new(Matrix::identity(n).scale(tau)), u.clone(), vec![0.0; n])?;

    let norm_a = a.norm_inf();
    let (alpha, beta) = if norm_a == 0.0 {
        (0.0, 0.0)
    } else {
        let ta = tau * norm_a;
        let e = ta.exp() - 1.0 - ta;
        let su = u.sup_norm()? / norm_a;
        (e * (x0.sup_norm()? + su), e * su)
    };

    let moved = ConvexSet::affine(Arc::new(phi.clone()), x0.clone(), vec![0.0; n])?;
    let omega0 = ConvexSet::hull(
        x0.clone(),
        ConvexSet::sum(moved, ConvexSet::sum(tau_u.clone(), inf_ball(n, alpha))?)?,
    )?;
    let w = ConvexSet::sum(tau_u, inf_ball(n, beta))?;
    Ok(DiscretizedDynamics { phi, w, omega0 })
}

/// Lazily evaluates `ρ_{Ωᵢ}(ℓ)` for `i = 0, 1, ...`.
pub struct SupportSequence<'a> {
    disc: &'a DiscretizedDynamics,
    dir: Vec<f64>,
    acc: f64,
}

impl<'a> SupportSequence<'a> {
    pub fn new(disc: &'a DiscretizedDynamics, dir: &[f64]) -> Self {
        SupportSequence {
            disc,
            dir: dir.to_vec(),
            acc: 0.0,
        }
    }

    pub fn next_value(&mut self) -> Result<f64, ReachError> {
        let v = self.disc.omega0.support(&self.dir)? + self.acc;
        self.acc += self.disc.w.support(&self.dir)?;
        self.dir = self.disc.phi.tr_mul_vec(&self.dir);
        Ok(v)
    }
}

/// Emitted prefix of the recurrence, one template polytope per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Flowpipe {
    pub loc: LocationId,
    pub omegas: Vec<TemplatePolytope>,
    /// One per (emitted Ω, template direction).
    pub support_samples: u64,
    /// Evaluations spent on the invariant scan.
    pub check_samples: u64,
}

impl Flowpipe {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// A state that passed the invariant check, discretized and ready for the
/// invariant scan and the per-direction sequences.
#[derive(Debug, Clone)]
pub struct PreparedFlowpipe {
    pub loc: LocationId,
    pub disc: DiscretizedDynamics,
    pub invariant: Vec<HalfSpace>,
    pub steps: usize,
    pub directions: Arc<TemplateDirections>,
}

/// Result of scanning one invariant constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanResult {
    /// Index of the first Ω violating the constraint, or `N` if none does.
    pub first_violation: usize,
    pub samples: u64,
}

pub fn prepare(s: &SymbolicState, ha: &HybridAutomaton, p: &ReachParams) -> Result<PreparedFlowpipe, ReachError> {
    let loc = ha.location(s.loc).ok_or(ReachError::UnknownLocation(s.loc))?;
    if !satisfies(&s.set, &loc.invariant)? {
        return Err(ReachError::EmptyFlowpipe);
    }
    let disc = discretize(&loc.dynamics, &s.set, p.step())?;
    Ok(PreparedFlowpipe {
        loc: s.loc,
        disc,
        invariant: loc.invariant.clone(),
        steps: p.steps(),
        directions: Arc::clone(p.directions()),
    })
}

impl PreparedFlowpipe {
    /// Scans constraint `k` of the invariant until the first Ω whose lowest
    /// point along its normal exceeds the offset.
    pub fn scan_constraint(&self, k: usize) -> Result<ScanResult, ReachError> {
        self.scan(k, None)
    }

    /// [`scan_constraint`](Self::scan_constraint) that also returns the
    /// support values along the negated normal, one per sampled Ω.
    pub fn scan_constraint_values(&self, k: usize) -> Result<(ScanResult, Vec<f64>), ReachError> {
        let mut values = Vec::new();
        let r = self.scan(k, Some(&mut values))?;
        Ok((r, values))
    }

    /// Template direction equal to the negated normal of constraint `k`.
    pub fn scan_direction(&self, k: usize) -> Option<usize> {
        let h = &self.invariant[k];
        (0..self.directions.len()).find(|&d| {
            let dir = self.directions.get(d);
            dir.len() == h.normal.len() && dir.iter().zip(&h.normal).all(|(x, a)| *x == -a)
        })
    }

    fn scan(&self, k: usize, mut keep: Option<&mut Vec<f64>>) -> Result<ScanResult, ReachError> {
        let h = &self.invariant[k];
        let neg: Vec<f64> = h.normal.iter().map(|a| -a).collect();
        let mut seq = SupportSequence::new(&self.disc, &neg);
        for i in 0..self.steps {
            let v = seq.next_value()?;
            if let Some(out) = keep.as_deref_mut() {
                out.push(v);
            }
            if -v > h.offset + SAT_TOL {
                return Ok(ScanResult {
                    first_violation: i,
                    samples: i as u64 + 1,
                });
            }
        }
        Ok(ScanResult {
            first_violation: self.steps,
            samples: self.steps as u64,
        })
    }

    /// Number of Ω emitted given every constraint's scan.
    pub fn emitted(&self, scans: &[ScanResult]) -> usize {
        scans
            .iter()
            .map(|s| s.first_violation)
            .min()
            .unwrap_or(self.steps)
    }

    /// `ρ_{Ωᵢ}(ℓ_d)` for `i < count`, `d` a template direction index.
    pub fn direction_bounds(&self, d: usize, count: usize) -> Result<Vec<f64>, ReachError> {
        let mut seq = SupportSequence::new(&self.disc, self.directions.get(d));
        (0..count).map(|_| seq.next_value()).collect()
    }

    /// Joins per-direction columns into tightened template polytopes.
    pub fn assemble(&self, columns: &[Vec<f64>], scans: &[ScanResult]) -> Flowpipe {
        let count = self.emitted(scans);
        let mut omegas = Vec::with_capacity(count);
        for i in 0..count {
            let mut tp = TemplatePolytope {
                template: Arc::clone(&self.directions),
                bounds: columns.iter().map(|c| c[i]).collect(),
            };
            tp.tighten(&self.invariant);
            omegas.push(tp);
        }
        Flowpipe {
            loc: self.loc,
            omegas,
            support_samples: (count * columns.len()) as u64,
            check_samples: scans.iter().map(|s| s.samples).sum(),
        }
    }

    /// Sequential evaluation of the whole flowpipe.
    pub fn run(&self) -> Result<Flowpipe, ReachError> {
        let scans = (0..self.invariant.len())
            .map(|k| self.scan_constraint(k))
            .collect::<Result<Vec<_>, _>>()?;
        let count = self.emitted(&scans);
        let columns = (0..self.directions.len())
            .map(|d| self.direction_bounds(d, count))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.assemble(&columns, &scans))
    }
}

/// PostC of one symbolic state.
pub fn compute_flowpipe(s: &SymbolicState, ha: &HybridAutomaton, p: &ReachParams) -> Result<Flowpipe, ReachError> {
    prepare(s, ha, p)?.run()
}

/// 2D vertex cycles of every Ω projected onto `axes`; empty slices are skipped.
pub fn flowpipe_template_union(f: &Flowpipe, axes: (usize, usize)) -> Result<Vec<Vec<[f64; 2]>>, ReachError> {
    let mut out = Vec::with_capacity(f.omegas.len());
    for om in &f.omegas {
        match project_vertices_2d(&om.to_hpolytope(), axes) {
            Ok(v) => out.push(v),
            Err(GeometryError::EmptySet) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

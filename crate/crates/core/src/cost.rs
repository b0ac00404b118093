//! Cheap cost estimates for post operations.
//!
//! For a fixed input the reachable set at a single time point is an affine
//! image of the initial set, so the time at which it leaves the invariant can
//! be located with a coarse sweep followed by a fine one. The number of
//! flowpipe steps before that time predicts the work of PostC and PostD.

use std::sync::Arc;

use thiserror::Error;

use crate::automaton::{Dynamics, HybridAutomaton, Input, SymbolicState};
use crate::geometry::{satisfies, ConvexSet, GeometryError, HalfSpace};
use crate::numerics::{mat_exp, phi1, NumericsError};
use crate::postc::{Flowpipe, ReachParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("exact reach requires a fixed input")]
    NotDeterministic,
    #[error("unknown location {0}")]
    UnknownLocation(u32),
    #[error("invalid crossing search: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Coarse step `δ_C = T/d`, fine step `δ_F = δ_C/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSearchParams {
    pub discretization: usize,
}

impl Default for CrossingSearchParams {
    fn default() -> Self {
        CrossingSearchParams { discretization: 10 }
    }
}

impl CrossingSearchParams {
    pub fn coarse(&self, horizon: f64) -> f64 {
        horizon / self.discretization as f64
    }

    pub fn fine(&self, horizon: f64) -> f64 {
        self.coarse(horizon) / self.discretization as f64
    }
}

/// `X(t) = e^{At} X₀ ⊕ A⁻¹(e^{At} − I) u`.
pub fn reach_at_time(x0: &ConvexSet, dyn_: &Dynamics, t: f64) -> Result<ConvexSet, CostError> {
    let Input::Fixed(u) = &dyn_.input else {
        return Err(CostError::NotDeterministic);
    };
    let e = mat_exp(&dyn_.a, t)?;
    let shift = phi1(&dyn_.a, t)?.mul_vec(u);
    Ok(ConvexSet::affine(Arc::new(e), x0.clone(), shift)?)
}

/// Upper bound on the time at which the reachable set stops meeting `inv`,
/// capped at `horizon`. Returns 0 when `x0` already fails the test.
pub fn crossing_time(inv: &[HalfSpace], x0: &ConvexSet, dyn_: &Dynamics, horizon: f64) -> Result<f64, CostError> {
    crossing_time_with(inv, x0, dyn_, horizon, CrossingSearchParams::default())
}

pub fn crossing_time_with(
    inv: &[HalfSpace],
    x0: &ConvexSet,
    dyn_: &Dynamics,
    horizon: f64,
    params: CrossingSearchParams,
) -> Result<f64, CostError> {
    if !(horizon > 0.0) || params.discretization < 2 {
        return Err(CostError::InvalidParams("need T > 0 and discretization ≥ 2".into()));
    }
    let holds = |t: f64| -> Result<bool, CostError> { Ok(satisfies(&reach_at_time(x0, dyn_, t)?, inv)?) };
    if !holds(0.0)? {
        return Ok(0.0);
    }
    let d = params.discretization;
    let coarse = params.coarse(horizon);
    let mut i = 1;
    while i <= d && holds(coarse * i as f64)? {
        i += 1;
    }
    if i > d {
        return Ok(horizon);
    }
    let t1 = coarse * (i - 1) as f64;
    let fine = params.fine(horizon);
    let mut k = 1;
    while k < d && holds(t1 + fine * k as f64)? {
        k += 1;
    }
    Ok((t1 + fine * k as f64).min(horizon))
}

/// Predicted work of PostC (`flow_cost = j·|D|`) and PostD (`jump_cost = j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostEstimate {
    pub j: usize,
    pub flow_cost: u64,
    pub jump_cost: u64,
}

fn center_dynamics(dyn_: &Dynamics) -> Result<Dynamics, CostError> {
    match &dyn_.input {
        Input::Fixed(_) => Ok(dyn_.clone()),
        Input::Set(u) => {
            let n = u.dim();
            let mut e = vec![0.0; n];
            let mut c = vec![0.0; n];
            for k in 0..n {
                e[k] = 1.0;
                let hi = u.support(&e)?;
                e[k] = -1.0;
                let lo = -u.support(&e)?;
                e[k] = 0.0;
                c[k] = 0.5 * (lo + hi);
            }
            Ok(Dynamics::fixed(dyn_.a.clone(), c))
        }
    }
}

/// Cost of PostC on `s`: `j = min(N, ⌈t'/τ⌉)` from the crossing-time search.
/// Set-valued inputs are replaced by the center of their bounding box.
pub fn flow_cost(s: &SymbolicState, ha: &HybridAutomaton, p: &ReachParams) -> Result<CostEstimate, CostError> {
    let loc = ha.location(s.loc).ok_or(CostError::UnknownLocation(s.loc))?;
    let j = if loc.invariant.is_empty() {
        p.steps()
    } else {
        let dyn_ = center_dynamics(&loc.dynamics)?;
        let t = crossing_time(&loc.invariant, &s.set, &dyn_, p.horizon())?;
        ((t / p.step()).ceil() as usize).min(p.steps())
    };
    Ok(CostEstimate {
        j,
        flow_cost: (j * p.directions().len()) as u64,
        jump_cost: j as u64,
    })
}

/// Cost of PostD on a computed flowpipe: one task per Ω for each transition.
pub fn jump_cost(f: &Flowpipe) -> u64 {
    f.omegas.len() as u64
}

//! Discrete post: guard intersection, assignment map and successor merging.
//!
//! One jump task is a (transition, Ω index) pair. [`jump_task`] runs it and
//! [`merge_successors`] folds the results of all tasks of a flowpipe, in a
//! fixed order, into successor states. [`post_d`] chains both sequentially.

use std::sync::Arc;

use crate::automaton::{HybridAutomaton, LocationId, SymbolicState, Transition};
use crate::geometry::{
    poly_intersect, template_hull, template_satisfies, BoundedPolytope, ConvexSet, GeometryError, HalfSpace,
    TemplateDirections, TemplatePolytope,
};
use crate::postc::{Flowpipe, ReachError};

/// Indices of the Ω that pass the per-constraint guard test, ascending.
pub fn guard_hits(f: &Flowpipe, t: &Transition) -> Result<Vec<usize>, ReachError> {
    let mut hits = Vec::new();
    for (i, om) in f.omegas.iter().enumerate() {
        if template_satisfies(om, &t.guard)? {
            hits.push(i);
        }
    }
    Ok(hits)
}

/// Intersects `omega` with the guard, maps it and re-hulls it over `dirs`,
/// then tightens by the target invariant. `None` when the intersection is
/// empty.
pub fn apply_jump(
    omega: &TemplatePolytope,
    t: &Transition,
    target_invariant: &[HalfSpace],
    dirs: &Arc<TemplateDirections>,
) -> Result<Option<TemplatePolytope>, ReachError> {
    let piece = poly_intersect(omega, &t.guard)?;
    let piece = match BoundedPolytope::new(piece) {
        Ok(p) => p,
        Err(GeometryError::EmptySet) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let image = ConvexSet::affine(
        Arc::new(t.map.m.clone()),
        ConvexSet::Polytope(Arc::new(piece)),
        t.map.v.clone(),
    )?;
    let mut hull = template_hull(&image, dirs)?;
    hull.tighten(target_invariant);
    Ok(Some(hull))
}

/// One atomic jump task: guard test on Ω `i`, then [`apply_jump`] if it hits.
pub fn jump_task(
    f: &Flowpipe,
    ha: &HybridAutomaton,
    transition: usize,
    i: usize,
    dirs: &Arc<TemplateDirections>,
) -> Result<Option<TemplatePolytope>, ReachError> {
    let t = &ha.transitions()[transition];
    let om = &f.omegas[i];
    if !template_satisfies(om, &t.guard)? {
        return Ok(None);
    }
    let target = ha
        .location(t.target)
        .ok_or(ReachError::UnknownLocation(t.target))?;
    apply_jump(om, t, &target.invariant, dirs)
}

/// The (transition index, Ω index) tasks of a flowpipe, in merge order.
pub fn jump_tasks(f: &Flowpipe, ha: &HybridAutomaton) -> Vec<(usize, usize)> {
    ha.outgoing(f.loc)
        .flat_map(|(t, _)| (0..f.omegas.len()).map(move |i| (t, i)))
        .collect()
}

/// A successor produced by PostD.
#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    pub transition: usize,
    pub bounds: TemplatePolytope,
    pub state: SymbolicState,
}

fn finish(ha: &HybridAutomaton, transition: usize, bounds: TemplatePolytope) -> Result<Option<Successor>, ReachError> {
    let target: LocationId = ha.transitions()[transition].target;
    let inv = &ha
        .location(target)
        .ok_or(ReachError::UnknownLocation(target))?
        .invariant;
    if !template_satisfies(&bounds, inv)? {
        return Ok(None);
    }
    let set = match bounds.to_set() {
        Ok(s) => s,
        Err(GeometryError::EmptySet) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    Ok(Some(Successor {
        transition,
        bounds,
        state: SymbolicState { loc: target, set },
    }))
}

/// Folds task results (same order as [`jump_tasks`]) into successors.
/// With `aggregate`, all images of one transition are joined by taking the
/// per-direction maximum of their bounds.
pub fn merge_successors(
    ha: &HybridAutomaton,
    tasks: &[(usize, usize)],
    results: Vec<Option<TemplatePolytope>>,
    aggregate: bool,
) -> Result<Vec<Successor>, ReachError> {
    debug_assert_eq!(tasks.len(), results.len());
    let mut out = Vec::new();
    let mut pending: Option<(usize, TemplatePolytope)> = None;
    for (&(t, _), r) in tasks.iter().zip(results) {
        if let Some((pt, _)) = &pending {
            if *pt != t {
                let (pt, b) = pending.take().expect("checked");
                out.extend(finish(ha, pt, b)?);
            }
        }
        let Some(img) = r else { continue };
        if !aggregate {
            out.extend(finish(ha, t, img)?);
            continue;
        }
        match &mut pending {
            Some((_, acc)) => acc.join(&img),
            None => pending = Some((t, img)),
        }
    }
    if let Some((pt, b)) = pending {
        out.extend(finish(ha, pt, b)?);
    }
    Ok(out)
}

/// PostD of a flowpipe, evaluated sequentially.
pub fn post_d(
    f: &Flowpipe,
    ha: &HybridAutomaton,
    dirs: &Arc<TemplateDirections>,
    aggregate: bool,
) -> Result<Vec<Successor>, ReachError> {
    let tasks = jump_tasks(f, ha);
    let results = tasks
        .iter()
        .map(|&(t, i)| jump_task(f, ha, t, i, dirs))
        .collect::<Result<Vec<_>, _>>()?;
    merge_successors(ha, &tasks, results, aggregate)
}

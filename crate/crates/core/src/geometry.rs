//! Compact convex sets given by their support functions, template polytopes,
//! and the support-function based invariant/guard satisfaction test.
//!
//! A [`ConvexSet`] is a small expression tree (boxes, balls, H-polytopes and
//! their affine images, Minkowski sums and convex hulls). Nothing is ever
//! converted to a vertex representation; every query is answered by
//! evaluating the support function in the requested direction. The only
//! place vertices are produced is [`project_vertices_2d`], for plotting.

use std::sync::Arc;

use thiserror::Error;

use crate::numerics::{dot, lp_max, norm_2, norm_inf, LinearProgram, Matrix, NumericsError, Vector};

/// Slack allowed when comparing supports against half-space offsets.
pub const SAT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("set is unbounded in the queried direction")]
    Unbounded,
    #[error("set is empty")]
    EmptySet,
    #[error("invalid set: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn check_dim(expected: usize, got: usize) -> Result<(), GeometryError> {
    if expected == got {
        Ok(())
    } else {
        Err(GeometryError::Dimension { expected, got })
    }
}

/// A nonzero direction vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vector);

impl Direction {
    pub fn new(v: Vector) -> Result<Self, GeometryError> {
        if v.is_empty() || v.iter().all(|x| *x == 0.0) || v.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::Invalid("direction must be finite and nonzero".into()));
        }
        Ok(Direction(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `normal · x ≤ offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vector,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        Direction::new(normal.clone())?;
        if !offset.is_finite() {
            return Err(GeometryError::Invalid("half-space offset must be finite".into()));
        }
        Ok(HalfSpace { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        dot(&self.normal, p) <= self.offset + tol
    }

    /// If the normal has a single nonzero coordinate, returns `(axis, coeff)`.
    fn axis(&self) -> Option<(usize, f64)> {
        let mut found = None;
        for (k, &a) in self.normal.iter().enumerate() {
            if a != 0.0 {
                if found.is_some() {
                    return None;
                }
                found = Some((k, a));
            }
        }
        found
    }
}

/// A conjunction of half-spaces. May be empty or unbounded; see
/// [`BoundedPolytope`] for the checked form.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    pub dim: usize,
    pub constraints: Vec<HalfSpace>,
}

impl HPolytope {
    pub fn new(dim: usize, constraints: Vec<HalfSpace>) -> Result<Self, GeometryError> {
        for c in &constraints {
            check_dim(dim, c.dim())?;
        }
        Ok(HPolytope { dim, constraints })
    }

    fn lp(&self, objective: &[f64]) -> LinearProgram {
        LinearProgram {
            objective: objective.to_vec(),
            constraints: self
                .constraints
                .iter()
                .map(|h| (h.normal.clone(), h.offset))
                .collect(),
        }
    }

    /// Feasibility by a single LP (a zero objective is enough for phase one).
    pub fn is_empty(&self) -> Result<bool, GeometryError> {
        if self.constraints.is_empty() {
            return Ok(false);
        }
        match lp_max(&self.lp(&vec![0.0; self.dim])) {
            Ok(_) => Ok(false),
            Err(NumericsError::Infeasible) => Ok(true),
            Err(e) => Err(e.into()),
        }
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|h| h.contains(p, tol))
    }
}

/// Nonempty, bounded H-polytope with its bounding box. Polytopes whose
/// constraints are all axis-aligned are boxes and get closed-form supports.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedPolytope {
    poly: HPolytope,
    lower: Vector,
    upper: Vector,
    is_box: bool,
}

impl BoundedPolytope {
    pub fn new(poly: HPolytope) -> Result<Self, GeometryError> {
        let n = poly.dim;
        if poly.constraints.iter().all(|h| h.axis().is_some()) {
            let mut lower = vec![f64::NEG_INFINITY; n];
            let mut upper = vec![f64::INFINITY; n];
            for h in &poly.constraints {
                let (k, a) = h.axis().expect("checked above");
                let v = h.offset / a;
                if a > 0.0 {
                    upper[k] = upper[k].min(v);
                } else {
                    lower[k] = lower[k].max(v);
                }
            }
            for k in 0..n {
                if !lower[k].is_finite() || !upper[k].is_finite() {
                    return Err(GeometryError::Unbounded);
                }
                if lower[k] > upper[k] {
                    let scale = lower[k].abs().max(upper[k].abs()).max(1.0);
                    if lower[k] - upper[k] > SAT_TOL * scale {
                        return Err(GeometryError::EmptySet);
                    }
                    // Touching within tolerance: keep both values.
                    std::mem::swap(&mut lower[k], &mut upper[k]);
                }
            }
            return Ok(BoundedPolytope {
                poly,
                lower,
                upper,
                is_box: true,
            });
        }
        if poly.constraints.is_empty() {
            return Err(GeometryError::Unbounded);
        }
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            upper[k] = Self::lp_support(&poly, &e)?;
            e[k] = -1.0;
            lower[k] = -Self::lp_support(&poly, &e)?;
        }
        Ok(BoundedPolytope {
            poly,
            lower,
            upper,
            is_box: false,
        })
    }

    fn lp_support(poly: &HPolytope, dir: &[f64]) -> Result<f64, GeometryError> {
        match lp_max(&poly.lp(dir)) {
            Ok(s) => Ok(s.value),
            Err(NumericsError::Infeasible) => Err(GeometryError::EmptySet),
            Err(NumericsError::Unbounded) => Err(GeometryError::Unbounded),
            Err(e) => Err(e.into()),
        }
    }

    pub fn polytope(&self) -> &HPolytope {
        &self.poly
    }

    pub fn dim(&self) -> usize {
        self.poly.dim
    }

    pub fn is_box(&self) -> bool {
        self.is_box
    }

    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    pub fn support(&self, dir: &[f64]) -> Result<f64, GeometryError> {
        if self.is_box {
            Ok(box_support(&self.lower, &self.upper, dir))
        } else {
            Self::lp_support(&self.poly, dir)
        }
    }

    /// A point attaining the support value.
    pub fn support_point(&self, dir: &[f64]) -> Result<Vector, GeometryError> {
        if self.is_box {
            return Ok(dir
                .iter()
                .enumerate()
                .map(|(k, &d)| if d > 0.0 { self.upper[k] } else { self.lower[k] })
                .collect());
        }
        match lp_max(&self.poly.lp(dir)) {
            Ok(s) => Ok(s.argmax),
            Err(NumericsError::Infeasible) => Err(GeometryError::EmptySet),
            Err(NumericsError::Unbounded) => Err(GeometryError::Unbounded),
            Err(e) => Err(e.into()),
        }
    }
}

#[inline]
fn box_support(lower: &[f64], upper: &[f64], dir: &[f64]) -> f64 {
    dir.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&d, (&lo, &hi))| if d > 0.0 { d * hi } else { d * lo })
        .sum()
}

/// Compact convex set, evaluated lazily through its support function.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    Polytope(Arc<BoundedPolytope>),
    AffineImage {
        map: Arc<Matrix>,
        base: Arc<ConvexSet>,
        shift: Vector,
    },
    MinkowskiSum(Arc<ConvexSet>, Arc<ConvexSet>),
    ConvexHull(Arc<ConvexSet>, Arc<ConvexSet>),
}

impl ConvexSet {
    pub fn new_box(lower: Vector, upper: Vector) -> Result<Self, GeometryError> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(GeometryError::Invalid("zero-dimensional box".into()));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(GeometryError::Invalid("box bounds must be finite".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(GeometryError::Invalid("box lower bound exceeds upper bound".into()));
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    pub fn point(p: Vector) -> Self {
        ConvexSet::Box {
            lower: p.clone(),
            upper: p,
        }
    }

    pub fn new_ball(center: Vector, radius: f64) -> Result<Self, GeometryError> {
        if !(radius >= 0.0) || !radius.is_finite() || center.is_empty() {
            return Err(GeometryError::Invalid("ball radius must be finite and nonnegative".into()));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn polytope(poly: HPolytope) -> Result<Self, GeometryError> {
        Ok(ConvexSet::Polytope(Arc::new(BoundedPolytope::new(poly)?)))
    }

    pub fn affine(map: Arc<Matrix>, base: ConvexSet, shift: Vector) -> Result<Self, GeometryError> {
        check_dim(map.cols(), base.dim())?;
        check_dim(map.rows(), shift.len())?;
        Ok(ConvexSet::AffineImage {
            map,
            base: Arc::new(base),
            shift,
        })
    }

    pub fn sum(a: ConvexSet, b: ConvexSet) -> Result<Self, GeometryError> {
        check_dim(a.dim(), b.dim())?;
        Ok(ConvexSet::MinkowskiSum(Arc::new(a), Arc::new(b)))
    }

    pub fn hull(a: ConvexSet, b: ConvexSet) -> Result<Self, GeometryError> {
        check_dim(a.dim(), b.dim())?;
        Ok(ConvexSet::ConvexHull(Arc::new(a), Arc::new(b)))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Polytope(p) => p.dim(),
            ConvexSet::AffineImage { map, .. } => map.rows(),
            ConvexSet::MinkowskiSum(a, _) | ConvexSet::ConvexHull(a, _) => a.dim(),
        }
    }

    /// Largest absolute coordinate over the set (max support over `±eᵢ`).
    pub fn sup_norm(&self) -> Result<f64, GeometryError> {
        let n = self.dim();
        let mut best: f64 = 0.0;
        let mut e = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            best = best.max(self.support_unchecked(&e)?);
            e[k] = -1.0;
            best = best.max(self.support_unchecked(&e)?);
            e[k] = 0.0;
        }
        Ok(best)
    }

    /// `sup { dir · x : x ∈ self }`.
    pub fn support(&self, dir: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dim(), dir.len())?;
        self.support_unchecked(dir)
    }

    fn support_unchecked(&self, dir: &[f64]) -> Result<f64, GeometryError> {
        match self {
            ConvexSet::Box { lower, upper } => Ok(box_support(lower, upper, dir)),
            ConvexSet::Ball { center, radius } => Ok(dot(center, dir) + radius * norm_2(dir)),
            ConvexSet::Polytope(p) => p.support(dir),
            ConvexSet::AffineImage { map, base, shift } => {
                let pulled = map.tr_mul_vec(dir);
                Ok(base.support_unchecked(&pulled)? + dot(dir, shift))
            }
            ConvexSet::MinkowskiSum(a, b) => {
                Ok(a.support_unchecked(dir)? + b.support_unchecked(dir)?)
            }
            ConvexSet::ConvexHull(a, b) => {
                Ok(a.support_unchecked(dir)?.max(b.support_unchecked(dir)?))
            }
        }
    }
}

/// Ordered, pairwise distinct set of template directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDirections {
    dim: usize,
    dirs: Vec<Vector>,
}

impl TemplateDirections {
    pub fn new(dirs: Vec<Vector>) -> Result<Self, GeometryError> {
        let Some(first) = dirs.first() else {
            return Err(GeometryError::Invalid("empty template".into()));
        };
        let dim = first.len();
        for (i, d) in dirs.iter().enumerate() {
            check_dim(dim, d.len())?;
            Direction::new(d.clone())?;
            if dirs[..i].contains(d) {
                return Err(GeometryError::Invalid("repeated template direction".into()));
            }
        }
        Ok(TemplateDirections { dim, dirs })
    }

    /// `+e₀, −e₀, +e₁, −e₁, ...`
    pub fn boxed(n: usize) -> Self {
        let mut dirs = Vec::with_capacity(2 * n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            dirs.push(e.clone());
            e[k] = -1.0;
            dirs.push(e);
        }
        TemplateDirections { dim: n, dirs }
    }

    /// Box directions plus `±eᵢ ± eⱼ` for every pair `i < j`.
    pub fn octagonal(n: usize) -> Self {
        let mut t = Self::boxed(n);
        for i in 0..n {
            for j in (i + 1)..n {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut d = vec![0.0; n];
                    d[i] = si;
                    d[j] = sj;
                    t.dirs.push(d);
                }
            }
        }
        t
    }

    /// `k` evenly spaced unit directions in the plane, starting at `+e₀`.
    pub fn uniform_2d(k: usize) -> Result<Self, GeometryError> {
        if k < 3 {
            return Err(GeometryError::Invalid("uniform template needs at least 3 directions".into()));
        }
        let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
        let dirs = (0..k)
            .map(|m| {
                let a = 2.0 * std::f64::consts::PI * m as f64 / k as f64;
                vec![snap(a.cos()), snap(a.sin())]
            })
            .collect();
        Self::new(dirs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn directions(&self) -> &[Vector] {
        &self.dirs
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.dirs[i]
    }
}

/// `∩ᵢ dᵢ · x ≤ boundsᵢ` over a shared template.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplatePolytope {
    pub template: Arc<TemplateDirections>,
    pub bounds: Vec<f64>,
}

impl TemplatePolytope {
    pub fn new(template: Arc<TemplateDirections>, bounds: Vec<f64>) -> Result<Self, GeometryError> {
        check_dim(template.len(), bounds.len())?;
        Ok(TemplatePolytope { template, bounds })
    }

    pub fn dim(&self) -> usize {
        self.template.dim()
    }

    pub fn to_hpolytope(&self) -> HPolytope {
        HPolytope {
            dim: self.dim(),
            constraints: self
                .template
                .directions()
                .iter()
                .zip(&self.bounds)
                .map(|(d, &b)| HalfSpace {
                    normal: d.clone(),
                    offset: b,
                })
                .collect(),
        }
    }

    pub fn to_set(&self) -> Result<ConvexSet, GeometryError> {
        ConvexSet::polytope(self.to_hpolytope())
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.template
            .directions()
            .iter()
            .zip(&self.bounds)
            .all(|(d, &b)| dot(d, p) <= b + tol * norm_2(d))
    }

    /// Tightens bounds of template directions that are positive multiples
    /// of a constraint normal. Other constraints cannot be expressed in the
    /// template and are left out.
    pub fn tighten(&mut self, constraints: &[HalfSpace]) {
        for h in constraints {
            for (d, b) in self.template.directions().iter().zip(self.bounds.iter_mut()) {
                if let Some(scale) = positive_multiple(&h.normal, d) {
                    *b = b.min(h.offset * scale);
                }
            }
        }
    }

    /// Per-direction maximum of bounds; both must share a template.
    pub fn join(&mut self, other: &TemplatePolytope) {
        debug_assert!(Arc::ptr_eq(&self.template, &other.template) || self.template == other.template);
        for (a, b) in self.bounds.iter_mut().zip(&other.bounds) {
            *a = a.max(*b);
        }
    }

    /// Per-direction dominance: every bound of `self` is at most the
    /// corresponding bound of `other` plus `tol`.
    pub fn dominated_by(&self, other: &TemplatePolytope, tol: f64) -> bool {
        self.bounds.iter().zip(&other.bounds).all(|(a, b)| *a <= b + tol)
    }
}

/// `Some(s)` with `d = s·n`, `s > 0`, if `d` is a positive multiple of `n`.
fn positive_multiple(n: &[f64], d: &[f64]) -> Option<f64> {
    let k = n.iter().position(|v| *v != 0.0)?;
    let s = d[k] / n[k];
    if !(s > 0.0) {
        return None;
    }
    let tol = 1e-12 * norm_inf(d);
    n.iter().zip(d).all(|(a, b)| (a * s - b).abs() <= tol).then_some(s)
}

/// Samples the support function of `set` in every template direction.
pub fn template_hull(
    set: &ConvexSet,
    template: &Arc<TemplateDirections>,
) -> Result<TemplatePolytope, GeometryError> {
    check_dim(set.dim(), template.dim())?;
    let bounds = template
        .directions()
        .iter()
        .map(|d| set.support(d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TemplatePolytope {
        template: Arc::clone(template),
        bounds,
    })
}

/// Per-constraint satisfaction test: `−sup_S(−ℓᵢ) ≤ bᵢ` for every
/// constraint. Necessary, not sufficient, for `S ∩ I ≠ ∅` when `I` has
/// several constraints.
pub fn satisfies(set: &ConvexSet, inv: &[HalfSpace]) -> Result<bool, GeometryError> {
    let mut neg = vec![0.0; set.dim()];
    for h in inv {
        check_dim(set.dim(), h.dim())?;
        for (n, a) in neg.iter_mut().zip(&h.normal) {
            *n = -a;
        }
        if -set.support_unchecked(&neg)? > h.offset + SAT_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Same test against a template polytope, without building a set when the
/// negated normal is itself a template direction.
pub fn template_satisfies(p: &TemplatePolytope, inv: &[HalfSpace]) -> Result<bool, GeometryError> {
    let mut fallback: Option<BoundedPolytope> = None;
    for h in inv {
        check_dim(p.dim(), h.dim())?;
        let neg: Vector = h.normal.iter().map(|a| -a).collect();
        let lowest = match p
            .template
            .directions()
            .iter()
            .zip(&p.bounds)
            .find_map(|(d, &b)| positive_multiple(&neg, d).map(|s| b / s))
        {
            Some(v) => -v,
            None => {
                if fallback.is_none() {
                    fallback = Some(BoundedPolytope::new(p.to_hpolytope())?);
                }
                -fallback.as_ref().expect("just set").support(&neg)?
            }
        };
        if lowest > h.offset + SAT_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Conjunction of a template polytope with extra half-spaces. The result may
/// be empty; check with [`HPolytope::is_empty`] or [`BoundedPolytope::new`].
pub fn poly_intersect(p: &TemplatePolytope, g: &[HalfSpace]) -> Result<HPolytope, GeometryError> {
    let mut h = p.to_hpolytope();
    for c in g {
        check_dim(h.dim, c.dim())?;
        h.constraints.push(c.clone());
    }
    Ok(h)
}

/// Counterclockwise vertex cycle of the projection of `p` onto axes `(i, j)`.
pub fn project_vertices_2d(p: &HPolytope, axes: (usize, usize)) -> Result<Vec<[f64; 2]>, GeometryError> {
    let (i, j) = axes;
    if i >= p.dim || j >= p.dim || i == j {
        return Err(GeometryError::Invalid(format!("bad projection axes ({i}, {j})")));
    }
    let bp = BoundedPolytope::new(p.clone())?;
    let lift = |d: [f64; 2]| {
        let mut v = vec![0.0; p.dim];
        v[i] = d[0];
        v[j] = d[1];
        v
    };
    let query = |d: [f64; 2]| -> Result<([f64; 2], f64), GeometryError> {
        let x = bp.support_point(&lift(d))?;
        let q = [x[i], x[j]];
        Ok((q, bp.support(&lift(d))?))
    };

    let mut pts: Vec<[f64; 2]> = Vec::new();
    for d in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
        let (q, _) = query(d)?;
        pts.push(q);
    }
    let (lo, hi) = bp.bounding_box();
    let scale = [lo[i], hi[i], lo[j], hi[j]].iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let same = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).abs() <= 1e-12 * scale && (a[1] - b[1]).abs() <= 1e-12 * scale;
    dedup_cyclic(&mut pts, same);

    // Refine every edge by querying its outward normal until nothing sticks out.
    let mut k = 0;
    let mut guard = 0;
    while pts.len() >= 2 && k < pts.len() && guard < 10_000 {
        guard += 1;
        let a = pts[k];
        let b = pts[(k + 1) % pts.len()];
        let normal = [b[1] - a[1], -(b[0] - a[0])];
        let len = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
        if len <= 1e-14 * scale {
            k += 1;
            continue;
        }
        let (q, val) = query(normal)?;
        let edge_val = normal[0] * a[0] + normal[1] * a[1];
        if val > edge_val + 1e-9 * len * scale && !same(&q, &a) && !same(&q, &b) {
            pts.insert(k + 1, q);
        } else {
            k += 1;
        }
    }
    drop_collinear(&mut pts, scale);
    Ok(pts)
}

fn dedup_cyclic(pts: &mut Vec<[f64; 2]>, same: impl Fn(&[f64; 2], &[f64; 2]) -> bool) {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts.iter() {
        if out.last().map_or(true, |l| !same(l, p)) {
            out.push(*p);
        }
    }
    while out.len() > 1 && same(&out[0], out.last().unwrap()) {
        out.pop();
    }
    *pts = out;
}

fn drop_collinear(pts: &mut Vec<[f64; 2]>, scale: f64) {
    if pts.len() < 3 {
        return;
    }
    let mut changed = true;
    while changed && pts.len() >= 3 {
        changed = false;
        let n = pts.len();
        for k in 0..n {
            let a = pts[(k + n - 1) % n];
            let b = pts[k];
            let c = pts[(k + 1) % n];
            let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if cross.abs() <= 1e-12 * scale * scale {
                pts.remove(k);
                changed = true;
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hs(n: &[f64], b: f64) -> HalfSpace {
        HalfSpace::new(n.to_vec(), b).unwrap()
    }

    fn unit_box(n: usize, lo: f64, hi: f64) -> ConvexSet {
        ConvexSet::new_box(vec![lo; n], vec![hi; n]).unwrap()
    }

    fn box_template(n: usize) -> Arc<TemplateDirections> {
        Arc::new(TemplateDirections::boxed(n))
    }

    fn tpoly(n: usize, lo: f64, hi: f64) -> TemplatePolytope {
        template_hull(&unit_box(n, lo, hi), &box_template(n)).unwrap()
    }

    #[test]
    fn support_closed_forms() {
        let b = unit_box(2, -1.0, 1.0);
        assert_eq!(b.support(&[1.0, 0.0]).unwrap(), 1.0);
        let ball = ConvexSet::new_ball(vec![0.0, 0.0], 0.7).unwrap();
        let a = 0.3f64;
        assert!((ball.support(&[a.cos(), a.sin()]).unwrap() - 0.7).abs() < 1e-15);
        assert!(matches!(
            b.support(&[1.0, 0.0, 0.0]),
            Err(GeometryError::Dimension { .. })
        ));
    }

    #[test]
    fn minkowski_box_ball_matches_sampling() {
        let s = ConvexSet::sum(
            unit_box(2, -1.0, 1.0),
            ConvexSet::new_ball(vec![0.0, 0.0], 0.5).unwrap(),
        )
        .unwrap();
        // Dense grids of both operands; max of y over pairwise sums.
        let mut best = f64::NEG_INFINITY;
        for i in 0..=40 {
            let by = -1.0 + 2.0 * i as f64 / 40.0;
            for k in 0..720 {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 720.0;
                best = best.max(by + 0.5 * t.sin());
            }
        }
        let got = s.support(&[0.0, 1.0]).unwrap();
        assert!((got - 1.5).abs() < 1e-12);
        assert!((got - best).abs() < 1e-6);
    }

    #[test]
    fn unbounded_polytope_is_rejected() {
        let p = HPolytope::new(2, vec![hs(&[1.0, 0.0], 1.0)]).unwrap();
        assert_eq!(ConvexSet::polytope(p), Err(GeometryError::Unbounded));
        let p = HPolytope::new(2, vec![hs(&[1.0, 1.0], 1.0), hs(&[-1.0, 0.0], 0.0)]).unwrap();
        assert_eq!(ConvexSet::polytope(p), Err(GeometryError::Unbounded));
    }

    #[test]
    fn template_hull_of_ball_and_box() {
        let ball = ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let t = template_hull(&ball, &box_template(2)).unwrap();
        assert_eq!(t.bounds, vec![1.0, 1.0, 1.0, 1.0]);
        let b = ConvexSet::new_box(vec![0.5, -2.0], vec![1.5, 3.0]).unwrap();
        let t = template_hull(&b, &box_template(2)).unwrap();
        assert_eq!(t.bounds, vec![1.5, -0.5, 3.0, 2.0]);
        let back = t.to_set().unwrap();
        for d in [[1.0, 0.0], [-1.0, 0.0], [0.3, -0.7], [1.0, 1.0]] {
            assert_eq!(back.support(&d).unwrap(), b.support(&d).unwrap());
        }
    }

    #[test]
    fn satisfies_examples() {
        let b = unit_box(2, 0.0, 1.0);
        assert!(satisfies(&b, &[hs(&[1.0, 0.0], 2.0)]).unwrap());
        assert!(!satisfies(&b, &[hs(&[1.0, 0.0], -0.5)]).unwrap());
        let ball = ConvexSet::new_ball(vec![2.0, 0.0], 1.0).unwrap();
        let inv = [hs(&[1.0, 0.0], 1.5), hs(&[0.0, 1.0], 0.0)];
        // sampled points of the ball that meet both constraints
        let mut hit = false;
        for k in 0..3600 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3600.0;
            for r in [0.5, 1.0] {
                let p = [2.0 + r * t.cos(), r * t.sin()];
                hit |= inv.iter().all(|h| h.contains(&p, 0.0));
            }
        }
        assert!(hit);
        assert!(satisfies(&ball, &inv).unwrap());
    }

    #[test]
    fn template_satisfies_agrees_with_set_test() {
        let p = tpoly(2, 0.0, 1.0);
        let set = p.to_set().unwrap();
        for inv in [
            vec![hs(&[1.0, 0.0], 2.0)],
            vec![hs(&[1.0, 0.0], -0.5)],
            vec![hs(&[1.0, 1.0], -0.1)],
            vec![hs(&[1.0, 1.0], 0.1), hs(&[0.0, -1.0], -0.5)],
        ] {
            assert_eq!(
                template_satisfies(&p, &inv).unwrap(),
                satisfies(&set, &inv).unwrap()
            );
        }
    }

    #[test]
    fn intersect_examples() {
        let p = tpoly(2, 0.0, 1.0);
        let slice = poly_intersect(&p, &[hs(&[-1.0, 0.0], -0.5)]).unwrap();
        let b = BoundedPolytope::new(slice).unwrap();
        assert_eq!(b.bounding_box(), (&[0.5, 0.0][..], &[1.0, 1.0][..]));
        let empty = poly_intersect(&p, &[hs(&[-1.0, 0.0], -2.0)]).unwrap();
        assert!(empty.is_empty().unwrap());
        assert_eq!(BoundedPolytope::new(empty), Err(GeometryError::EmptySet));
        let tri = poly_intersect(&p, &[hs(&[1.0, 1.0], 1.0)]).unwrap();
        let v = project_vertices_2d(&tri, (0, 1)).unwrap();
        assert_eq!(v.len(), 3);
        for corner in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
            assert!(v
                .iter()
                .any(|q| (q[0] - corner[0]).abs() < 1e-9 && (q[1] - corner[1]).abs() < 1e-9));
        }
    }

    fn signed_area(v: &[[f64; 2]]) -> f64 {
        let n = v.len();
        (0..n)
            .map(|k| {
                let a = v[k];
                let b = v[(k + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0
    }

    #[test]
    fn projection_of_box() {
        let p = tpoly(4, 0.0, 1.0).to_hpolytope();
        let v = project_vertices_2d(&p, (0, 1)).unwrap();
        assert_eq!(v, vec![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]);
        assert!(signed_area(&v) > 0.0);
    }

    #[test]
    fn projection_of_octagon() {
        let oct = Arc::new(TemplateDirections::octagonal(2));
        let ball = ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let t = template_hull(&ball, &oct).unwrap();
        let v = project_vertices_2d(&t.to_hpolytope(), (0, 1)).unwrap();
        assert_eq!(v.len(), 8);
        assert!(signed_area(&v) > 0.0);
        // Oracle: support of the vertex cycle matches the polytope support in 64 directions.
        let bp = BoundedPolytope::new(t.to_hpolytope()).unwrap();
        for k in 0..64 {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let d = [a.cos(), a.sin()];
            let from_vertices = v.iter().map(|q| q[0] * d[0] + q[1] * d[1]).fold(f64::MIN, f64::max);
            assert!((from_vertices - bp.support(&d).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn projection_of_empty_polytope() {
        let p = poly_intersect(&tpoly(2, 0.0, 1.0), &[hs(&[1.0, 0.0], -1.0)]).unwrap();
        assert_eq!(project_vertices_2d(&p, (0, 1)), Err(GeometryError::EmptySet));
    }

    #[test]
    fn refined_uniform_template_reproduces_coarse_bounds() {
        let set = ConvexSet::sum(
            ConvexSet::new_box(vec![-1.0, 0.0], vec![2.0, 0.5]).unwrap(),
            ConvexSet::new_ball(vec![0.3, 0.0], 0.25).unwrap(),
        )
        .unwrap();
        let coarse = Arc::new(TemplateDirections::uniform_2d(8).unwrap());
        let fine = Arc::new(TemplateDirections::uniform_2d(16).unwrap());
        let c = template_hull(&set, &coarse).unwrap();
        let f = template_hull(&set, &fine).unwrap();
        for (k, b) in c.bounds.iter().enumerate() {
            assert_eq!(*b, f.bounds[2 * k]);
        }
    }

    #[test]
    fn tighten_only_parallel_directions() {
        let mut p = tpoly(2, 0.0, 2.0);
        p.tighten(&[hs(&[2.0, 0.0], 2.0), hs(&[1.0, 1.0], 0.5)]);
        assert_eq!(p.bounds, vec![1.0, 0.0, 2.0, 0.0]);
    }

    /// Dense sample of a set built from a box and a ball under an affine map.
    fn sample_points(lo: [f64; 2], hi: [f64; 2], m: &Matrix, shift: [f64; 2], r: f64) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for i in 0..=12 {
            for j in 0..=12 {
                let x = [
                    lo[0] + (hi[0] - lo[0]) * i as f64 / 12.0,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / 12.0,
                ];
                let y = m.mul_vec(&x);
                for k in 0..16 {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
                    out.push([y[0] + shift[0] + r * a.cos(), y[1] + shift[1] + r * a.sin()]);
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sum_and_hull_calculus(
            lo in proptest::collection::vec(-2.0..0.0f64, 2),
            ext in proptest::collection::vec(0.0..2.0f64, 2),
            c in proptest::collection::vec(-1.0..1.0f64, 2),
            r in 0.0..1.0f64,
            a in 0.0..6.3f64,
        ) {
            let hi: Vec<f64> = lo.iter().zip(&ext).map(|(l, e)| l + e).collect();
            let b = ConvexSet::new_box(lo.clone(), hi).unwrap();
            let ball = ConvexSet::new_ball(c, r).unwrap();
            let d = [a.cos(), a.sin()];
            let s = ConvexSet::sum(b.clone(), ball.clone()).unwrap();
            let h = ConvexSet::hull(b.clone(), ball.clone()).unwrap();
            let (sb, sc) = (b.support(&d).unwrap(), ball.support(&d).unwrap());
            prop_assert_eq!(s.support(&d).unwrap(), sb + sc);
            prop_assert_eq!(h.support(&d).unwrap(), sb.max(sc));
        }

        #[test]
        fn template_hull_contains_samples(
            lo in proptest::collection::vec(-2.0..0.0f64, 2),
            ext in proptest::collection::vec(0.0..2.0f64, 2),
            m in proptest::collection::vec(-1.5..1.5f64, 4),
            shift in proptest::collection::vec(-1.0..1.0f64, 2),
            r in 0.0..0.5f64,
            oct in proptest::bool::ANY,
        ) {
            let hi = [lo[0] + ext[0], lo[1] + ext[1]];
            let mat = Matrix::from_row_major(2, 2, m).unwrap();
            let base = ConvexSet::new_box(lo.clone(), hi.to_vec()).unwrap();
            let img = ConvexSet::affine(Arc::new(mat.clone()), base, shift.clone()).unwrap();
            let set = ConvexSet::sum(img, ConvexSet::new_ball(vec![0.0, 0.0], r).unwrap()).unwrap();
            let t = if oct { TemplateDirections::octagonal(2) } else { TemplateDirections::uniform_2d(7).unwrap() };
            let tp = template_hull(&set, &Arc::new(t)).unwrap();
            for p in sample_points([lo[0], lo[1]], hi, &mat, [shift[0], shift[1]], r) {
                prop_assert!(tp.contains(&p, 1e-9));
            }
        }

        #[test]
        fn random_polytope_hull_contains_vertices(
            normals in proptest::collection::vec(-1.0..1.0f64, 10),
            offsets in proptest::collection::vec(0.2..1.5f64, 5),
        ) {
            let mut cons = vec![hs(&[1.0, 0.0], 2.0), hs(&[-1.0, 0.0], 2.0), hs(&[0.0, 1.0], 2.0), hs(&[0.0, -1.0], 2.0)];
            for k in 0..5 {
                let n = [normals[2 * k], normals[2 * k + 1]];
                if n[0].abs() + n[1].abs() > 1e-3 {
                    cons.push(hs(&n, offsets[k]));
                }
            }
            let poly = HPolytope::new(2, cons.clone()).unwrap();
            let set = ConvexSet::polytope(poly.clone()).unwrap();
            let tp = template_hull(&set, &Arc::new(TemplateDirections::octagonal(2))).unwrap();
            // Vertex oracle: pairwise constraint intersections that are feasible.
            for a in 0..cons.len() {
                for b in (a + 1)..cons.len() {
                    let m = Matrix::from_rows(&[cons[a].normal.clone(), cons[b].normal.clone()]).unwrap();
                    if let Some(inv) = m.inverse() {
                        let x = inv.mul_vec(&[cons[a].offset, cons[b].offset]);
                        if poly.contains(&x, 1e-9) {
                            prop_assert!(tp.contains(&x, 1e-9));
                        }
                    }
                }
            }
        }

        #[test]
        fn satisfies_has_no_false_negatives(
            lo in proptest::collection::vec(-1.0..1.0f64, 2),
            ext in proptest::collection::vec(0.0..1.0f64, 2),
            n1 in proptest::collection::vec(-1.0..1.0f64, 2),
            n2 in proptest::collection::vec(-1.0..1.0f64, 2),
            b in proptest::collection::vec(-1.0..1.0f64, 2),
        ) {
            prop_assume!(n1[0].abs() + n1[1].abs() > 1e-3 && n2[0].abs() + n2[1].abs() > 1e-3);
            let hi = [lo[0] + ext[0], lo[1] + ext[1]];
            let set = ConvexSet::new_box(lo.clone(), hi.to_vec()).unwrap();
            let inv = [hs(&n1, b[0]), hs(&n2, b[1])];
            let mut sampled = false;
            for i in 0..=30 {
                for j in 0..=30 {
                    let p = [lo[0] + ext[0] * i as f64 / 30.0, lo[1] + ext[1] * j as f64 / 30.0];
                    sampled |= inv.iter().all(|h| h.contains(&p, 0.0));
                }
            }
            if sampled {
                prop_assert!(satisfies(&set, &inv).unwrap());
            }
        }
    }
}

//! Hybrid automata with linear dynamics, the line-oriented model format and
//! generators for the built-in benchmark families.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{satisfies, ConvexSet, GeometryError, HalfSpace};
use crate::numerics::{Matrix, Vector};

pub type LocationId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Semantic(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn semantic<T>(msg: impl Into<String>) -> Result<T, ModelError> {
    Err(ModelError::Semantic(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Fixed(Vector),
    Set(ConvexSet),
}

/// `ẋ = A x + u`, with `u` either a constant or ranging over a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub a: Matrix,
    pub input: Input,
}

impl Dynamics {
    pub fn fixed(a: Matrix, u: Vector) -> Self {
        Dynamics {
            a,
            input: Input::Fixed(u),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !self.a.is_square() {
            return semantic("dynamics matrix must be square");
        }
        let got = match &self.input {
            Input::Fixed(u) => u.len(),
            Input::Set(s) => s.dim(),
        };
        if got != self.a.rows() {
            return semantic(format!(
                "input has dimension {got}, dynamics has {}",
                self.a.rows()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub id: LocationId,
    pub name: String,
    /// Free-form marker, e.g. `target` or `unsafe` for navigation cells.
    pub tag: Option<String>,
    pub dynamics: Dynamics,
    pub invariant: Vec<HalfSpace>,
}

/// `x ↦ M x + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub m: Matrix,
    pub v: Vector,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        AffineMap {
            m: Matrix::identity(n),
            v: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: LocationId,
    pub target: LocationId,
    pub guard: Vec<HalfSpace>,
    pub map: AffineMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicState {
    pub loc: LocationId,
    pub set: ConvexSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridAutomaton {
    dim: usize,
    vars: Vec<String>,
    locations: Vec<Location>,
    transitions: Vec<Transition>,
    init: SymbolicState,
}

impl HybridAutomaton {
    /// Builds and validates an automaton.
    pub fn new(
        vars: Vec<String>,
        locations: Vec<Location>,
        transitions: Vec<Transition>,
        init: SymbolicState,
    ) -> Result<Self, ModelError> {
        let dim = vars.len();
        if dim == 0 {
            return semantic("automaton needs at least one variable");
        }
        if locations.is_empty() {
            return semantic("automaton needs at least one location");
        }
        for (i, l) in locations.iter().enumerate() {
            if locations[..i].iter().any(|o| o.id == l.id) {
                return semantic(format!("duplicate location id {}", l.id));
            }
            l.dynamics.validate()?;
            if l.dynamics.dim() != dim {
                return semantic(format!("location {}: dynamics dimension mismatch", l.id));
            }
            if l.invariant.iter().any(|h| h.dim() != dim) {
                return semantic(format!("location {}: invariant dimension mismatch", l.id));
            }
        }
        let exists = |id: LocationId| locations.iter().any(|l| l.id == id);
        for t in &transitions {
            for id in [t.source, t.target] {
                if !exists(id) {
                    return semantic(format!("transition refers to unknown location {id}"));
                }
            }
            if t.guard.iter().any(|h| h.dim() != dim) {
                return semantic(format!("transition {} -> {}: guard dimension mismatch", t.source, t.target));
            }
            if t.map.m.rows() != dim || t.map.m.cols() != dim || t.map.v.len() != dim {
                return semantic(format!("transition {} -> {}: map dimension mismatch", t.source, t.target));
            }
        }
        let Some(init_loc) = locations.iter().find(|l| l.id == init.loc) else {
            return semantic(format!("init refers to unknown location {}", init.loc));
        };
        if init.set.dim() != dim {
            return semantic("init set dimension mismatch");
        }
        if !satisfies(&init.set, &init_loc.invariant)? {
            return semantic("init set violates the invariant of its location");
        }
        Ok(HybridAutomaton {
            dim,
            vars,
            locations,
            transitions,
            init,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn init(&self) -> &SymbolicState {
        &self.init
    }

    pub fn location(&self, id: LocationId) -> Option<&Location> {
        self.locations.iter().find(|l| l.id == id)
    }

    /// Outgoing transitions of `id`, in declaration order, with their indices.
    pub fn outgoing(&self, id: LocationId) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.source == id)
    }
}

// ---------------------------------------------------------------------------
// Model format

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    LBracket,
    RBracket,
    Semi,
    Comma,
    Eq,
    Range,
    Arrow,
    Le,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Tok>, ModelError> {
    let text = line.split('#').next().unwrap_or("");
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<Tok>| {
        if !word.is_empty() {
            out.push(Tok::Word(std::mem::take(word)));
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        let punct = match (c, next) {
            ('.', Some('.')) => Some((Tok::Range, 2)),
            ('-', Some('>')) => Some((Tok::Arrow, 2)),
            ('<', Some('=')) => Some((Tok::Le, 2)),
            ('[', _) => Some((Tok::LBracket, 1)),
            (']', _) => Some((Tok::RBracket, 1)),
            (';', _) => Some((Tok::Semi, 1)),
            (',', _) => Some((Tok::Comma, 1)),
            ('=', _) => Some((Tok::Eq, 1)),
            _ => None,
        };
        if let Some((tok, len)) = punct {
            flush(&mut word, &mut out);
            out.push(tok);
            i += len;
        } else if c.is_whitespace() {
            flush(&mut word, &mut out);
            i += 1;
        } else if c.is_ascii_alphanumeric() || "+-._".contains(c) {
            word.push(c);
            i += 1;
        } else {
            return Err(ModelError::Syntax {
                line: lineno,
                msg: format!("unexpected character {c:?}"),
            });
        }
    }
    flush(&mut word, &mut out);
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ModelError> {
        Err(ModelError::Syntax {
            line: self.line,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ModelError> {
        match self.next() {
            Some(t) if *t == tok => Ok(()),
            other => {
                let other = other.cloned();
                self.err(format!("expected {tok:?}, found {other:?}"))
            }
        }
    }

    fn word(&mut self) -> Result<String, ModelError> {
        match self.next() {
            Some(Tok::Word(w)) => Ok(w.clone()),
            other => {
                let other = other.cloned();
                self.err(format!("expected a word, found {other:?}"))
            }
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ModelError> {
        let w = self.word()?;
        if w == kw {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found `{w}`"))
        }
    }

    fn number(&mut self) -> Result<f64, ModelError> {
        let w = self.word()?;
        match w.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => self.err(format!("invalid number `{w}`")),
        }
    }

    fn integer(&mut self) -> Result<u32, ModelError> {
        let w = self.word()?;
        w.parse::<u32>()
            .or_else(|_| self.err(format!("invalid integer `{w}`")))
    }

    fn numbers_until(&mut self, stop: &Tok) -> Result<Vec<f64>, ModelError> {
        let mut v = Vec::new();
        while self.peek().is_some_and(|t| t != stop) {
            v.push(self.number()?);
        }
        Ok(v)
    }

    /// `[a b; c d]`
    fn matrix(&mut self) -> Result<Vec<Vec<f64>>, ModelError> {
        self.expect(Tok::LBracket)?;
        let mut rows = vec![Vec::new()];
        loop {
            match self.peek() {
                Some(Tok::RBracket) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Semi) => {
                    self.pos += 1;
                    rows.push(Vec::new());
                }
                Some(Tok::Word(_)) => {
                    let v = self.number()?;
                    rows.last_mut().expect("nonempty").push(v);
                }
                other => {
                    let other = other.cloned();
                    return self.err(format!("unexpected {other:?} in matrix"));
                }
            }
        }
        Ok(rows)
    }

    fn vector(&mut self) -> Result<Vec<f64>, ModelError> {
        let rows = self.matrix()?;
        if rows.len() != 1 {
            return self.err("expected a single-row vector");
        }
        Ok(rows.into_iter().next().expect("one row"))
    }

    /// `box [lo..hi; lo,hi]`
    fn interval_box(&mut self) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        self.keyword("box")?;
        self.expect(Tok::LBracket)?;
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        loop {
            lo.push(self.number()?);
            match self.next() {
                Some(Tok::Range) | Some(Tok::Comma) => {}
                _ => return self.err("expected `..` or `,` inside an interval"),
            }
            hi.push(self.number()?);
            match self.next() {
                Some(Tok::Semi) => {}
                Some(Tok::RBracket) => break,
                _ => return self.err("expected `;` or `]` after an interval"),
            }
        }
        Ok((lo, hi))
    }

    /// `n1 .. nk <= b`
    fn half_space(&mut self, dim: usize) -> Result<HalfSpace, ModelError> {
        let normal = self.numbers_until(&Tok::Le)?;
        self.expect(Tok::Le)?;
        let b = self.number()?;
        if normal.len() != dim {
            return self.err(format!("constraint has {} coefficients, expected {dim}", normal.len()));
        }
        HalfSpace::new(normal, b).or_else(|e| self.err(e.to_string()))
    }

    fn key_value(&mut self, key: &str) -> Result<String, ModelError> {
        self.keyword(key)?;
        self.expect(Tok::Eq)?;
        self.word()
    }

    fn end(&self) -> Result<(), ModelError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.err(format!("trailing input starting at {t:?}")),
        }
    }
}

struct PendingLocation {
    line: usize,
    id: LocationId,
    name: String,
    tag: Option<String>,
    dynamics: Option<Dynamics>,
    invariant: Vec<HalfSpace>,
}

struct PendingTransition {
    source: LocationId,
    target: LocationId,
    guard: Vec<HalfSpace>,
    map: Option<AffineMap>,
}

enum Block {
    None,
    Location(PendingLocation),
    Transition(PendingTransition),
}

/// Parses the model format documented in `grammar/model.ebnf`.
pub fn parse_model(text: &str) -> Result<HybridAutomaton, ModelError> {
    let mut dim: Option<usize> = None;
    let mut vars: Option<Vec<String>> = None;
    let mut locations: Vec<Location> = Vec::new();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut init: Option<SymbolicState> = None;
    let mut block = Block::None;
    let mut last_line = 0;

    let close = |block: &mut Block, locations: &mut Vec<Location>, transitions: &mut Vec<Transition>, n: usize| -> Result<(), ModelError> {
        match std::mem::replace(block, Block::None) {
            Block::None => {}
            Block::Location(p) => {
                let Some(dynamics) = p.dynamics else {
                    return Err(ModelError::Syntax {
                        line: p.line,
                        msg: format!("location {} has no flow", p.id),
                    });
                };
                locations.push(Location {
                    id: p.id,
                    name: p.name,
                    tag: p.tag,
                    dynamics,
                    invariant: p.invariant,
                });
            }
            Block::Transition(p) => transitions.push(Transition {
                source: p.source,
                target: p.target,
                guard: p.guard,
                map: p.map.unwrap_or_else(|| AffineMap::identity(n)),
            }),
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let toks = lex(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor {
            toks: &toks,
            pos: 0,
            line,
        };
        let kw = c.word()?;
        let need_dim = |c: &Cursor| -> Result<usize, ModelError> {
            match (dim, &vars) {
                (Some(n), Some(_)) => Ok(n),
                _ => c.err("`dim` and `vars` must come first"),
            }
        };
        match kw.as_str() {
            "dim" => {
                if dim.is_some() {
                    return c.err("duplicate `dim`");
                }
                let n = c.integer()? as usize;
                if n == 0 {
                    return c.err("dimension must be positive");
                }
                dim = Some(n);
            }
            "vars" => {
                let Some(n) = dim else {
                    return c.err("`vars` before `dim`");
                };
                if vars.is_some() {
                    return c.err("duplicate `vars`");
                }
                let mut names = Vec::new();
                while c.peek().is_some() {
                    names.push(c.word()?);
                }
                if names.len() != n {
                    return c.err(format!("{} variable names for dimension {n}", names.len()));
                }
                vars = Some(names);
            }
            "location" => {
                let n = need_dim(&c)?;
                close(&mut block, &mut locations, &mut transitions, n)?;
                let id = c.integer()?;
                let name = c.key_value("name")?;
                let tag = if c.peek().is_some() {
                    Some(c.key_value("tag")?)
                } else {
                    None
                };
                block = Block::Location(PendingLocation {
                    line,
                    id,
                    name,
                    tag,
                    dynamics: None,
                    invariant: Vec::new(),
                });
            }
            "flow" => {
                let n = need_dim(&c)?;
                let Block::Location(p) = &mut block else {
                    return c.err("`flow` outside a location");
                };
                if p.dynamics.is_some() {
                    return c.err("duplicate `flow`");
                }
                c.keyword("A")?;
                c.expect(Tok::Eq)?;
                let rows = c.matrix()?;
                let a = Matrix::from_rows(&rows).or_else(|e| c.err(e.to_string()))?;
                if a.rows() != n || a.cols() != n {
                    return c.err(format!("flow matrix must be {n}x{n}"));
                }
                let input = match c.word()?.as_str() {
                    "u" => {
                        c.expect(Tok::Eq)?;
                        let u = c.vector()?;
                        if u.len() != n {
                            return c.err(format!("input vector must have {n} entries"));
                        }
                        Input::Fixed(u)
                    }
                    "U" => {
                        c.expect(Tok::Eq)?;
                        let (lo, hi) = c.interval_box()?;
                        if lo.len() != n {
                            return c.err(format!("input box must have {n} intervals"));
                        }
                        Input::Set(ConvexSet::new_box(lo, hi).or_else(|e| c.err(e.to_string()))?)
                    }
                    w => return c.err(format!("expected `u` or `U`, found `{w}`")),
                };
                c.end()?;
                p.dynamics = Some(Dynamics { a, input });
            }
            "inv" => {
                let n = need_dim(&c)?;
                let Block::Location(p) = &mut block else {
                    return c.err("`inv` outside a location");
                };
                let h = c.half_space(n)?;
                c.end()?;
                p.invariant.push(h);
            }
            "transition" => {
                let n = need_dim(&c)?;
                close(&mut block, &mut locations, &mut transitions, n)?;
                let source = c.integer()?;
                c.expect(Tok::Arrow)?;
                let target = c.integer()?;
                block = Block::Transition(PendingTransition {
                    source,
                    target,
                    guard: Vec::new(),
                    map: None,
                });
            }
            "guard" => {
                let n = need_dim(&c)?;
                let Block::Transition(p) = &mut block else {
                    return c.err("`guard` outside a transition");
                };
                let h = c.half_space(n)?;
                c.end()?;
                p.guard.push(h);
            }
            "map" => {
                let n = need_dim(&c)?;
                let Block::Transition(p) = &mut block else {
                    return c.err("`map` outside a transition");
                };
                if p.map.is_some() {
                    return c.err("duplicate `map`");
                }
                c.keyword("M")?;
                c.expect(Tok::Eq)?;
                let rows = c.matrix()?;
                let m = Matrix::from_rows(&rows).or_else(|e| c.err(e.to_string()))?;
                c.keyword("v")?;
                c.expect(Tok::Eq)?;
                let v = c.vector()?;
                if m.rows() != n || m.cols() != n || v.len() != n {
                    return c.err(format!("map must be {n}x{n} with a {n}-vector"));
                }
                p.map = Some(AffineMap { m, v });
            }
            "init" => {
                let n = need_dim(&c)?;
                close(&mut block, &mut locations, &mut transitions, n)?;
                if init.is_some() {
                    return c.err("duplicate `init`");
                }
                let loc = c.key_value("location")?;
                let loc = loc
                    .parse::<u32>()
                    .or_else(|_| c.err(format!("invalid location id `{loc}`")))?;
                let (lo, hi) = c.interval_box()?;
                if lo.len() != n {
                    return c.err(format!("init box must have {n} intervals"));
                }
                if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                    return semantic("init box is empty");
                }
                let set = ConvexSet::new_box(lo, hi).or_else(|e| c.err(e.to_string()))?;
                init = Some(SymbolicState { loc, set });
            }
            other => return c.err(format!("unknown keyword `{other}`")),
        }
        c.end()?;
    }

    let (Some(n), Some(vars)) = (dim, vars) else {
        return Err(ModelError::Syntax {
            line: last_line.max(1),
            msg: "missing `dim` or `vars`".into(),
        });
    };
    close(&mut block, &mut locations, &mut transitions, n)?;
    let Some(init) = init else {
        return Err(ModelError::Syntax {
            line: last_line,
            msg: "missing `init`".into(),
        });
    };
    HybridAutomaton::new(vars, locations, transitions, init)
}

fn fmt_row(out: &mut String, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x}");
    }
}

fn fmt_matrix(out: &mut String, m: &Matrix) {
    out.push('[');
    for r in 0..m.rows() {
        if r > 0 {
            out.push_str("; ");
        }
        fmt_row(out, m.row(r));
    }
    out.push(']');
}

fn fmt_box(out: &mut String, set: &ConvexSet) -> Result<(), ModelError> {
    let ConvexSet::Box { lower, upper } = set else {
        return semantic("only boxes can be written as init or input sets");
    };
    out.push_str("box [");
    for (i, (l, h)) in lower.iter().zip(upper).enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{l}..{h}");
    }
    out.push(']');
    Ok(())
}

fn fmt_half_space(out: &mut String, kw: &str, h: &HalfSpace) {
    let _ = write!(out, "  {kw} ");
    fmt_row(out, &h.normal);
    let _ = writeln!(out, " <= {}", h.offset);
}

/// Serializes `ha` in the model format. Init and input sets must be boxes.
pub fn render(ha: &HybridAutomaton) -> Result<String, ModelError> {
    let mut out = String::new();
    let _ = writeln!(out, "dim {}", ha.dim);
    let _ = writeln!(out, "vars {}", ha.vars.join(" "));
    for l in &ha.locations {
        let _ = write!(out, "location {} name={}", l.id, l.name);
        if let Some(tag) = &l.tag {
            let _ = write!(out, " tag={tag}");
        }
        out.push('\n');
        out.push_str("  flow A = ");
        fmt_matrix(&mut out, &l.dynamics.a);
        match &l.dynamics.input {
            Input::Fixed(u) => {
                out.push_str(" u = [");
                fmt_row(&mut out, u);
                out.push(']');
            }
            Input::Set(s) => {
                out.push_str(" U = ");
                fmt_box(&mut out, s)?;
            }
        }
        out.push('\n');
        for h in &l.invariant {
            fmt_half_space(&mut out, "inv", h);
        }
    }
    for t in &ha.transitions {
        let _ = writeln!(out, "transition {} -> {}", t.source, t.target);
        for h in &t.guard {
            fmt_half_space(&mut out, "guard", h);
        }
        out.push_str("  map M = ");
        fmt_matrix(&mut out, &t.map.m);
        out.push_str(" v = [");
        fmt_row(&mut out, &t.map.v);
        out.push_str("]\n");
    }
    let _ = write!(out, "init location={} ", ha.init.loc);
    fmt_box(&mut out, &ha.init.set)?;
    out.push('\n');
    Ok(out)
}

// ---------------------------------------------------------------------------
// Benchmark generators

fn hs(normal: Vec<f64>, offset: f64) -> HalfSpace {
    HalfSpace::new(normal, offset).expect("generator constraints are valid")
}

fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> ConvexSet {
    ConvexSet::new_box(lo, hi).expect("generator boxes are valid")
}

fn two_location_loop(
    vars: [&str; 2],
    a: Matrix,
    u1: Vector,
    u2: Vector,
    init: ConvexSet,
) -> HybridAutomaton {
    let right = vec![hs(vec![-1.0, 0.0], 0.0)];
    let left = vec![hs(vec![1.0, 0.0], 0.0)];
    let locations = vec![
        Location {
            id: 1,
            name: "right".into(),
            tag: None,
            dynamics: Dynamics::fixed(a.clone(), u1),
            invariant: right,
        },
        Location {
            id: 2,
            name: "left".into(),
            tag: None,
            dynamics: Dynamics::fixed(a, u2),
            invariant: left,
        },
    ];
    let transitions = vec![
        Transition {
            source: 1,
            target: 2,
            guard: vec![hs(vec![1.0, 0.0], 0.0), hs(vec![0.0, -1.0], 0.0)],
            map: AffineMap::identity(2),
        },
        Transition {
            source: 2,
            target: 1,
            guard: vec![hs(vec![-1.0, 0.0], 0.0), hs(vec![0.0, 1.0], 0.0)],
            map: AffineMap::identity(2),
        },
    ];
    HybridAutomaton::new(
        vars.iter().map(|s| s.to_string()).collect(),
        locations,
        transitions,
        SymbolicState { loc: 1, set: init },
    )
    .expect("generated automaton is valid")
}

/// Counterclockwise rotation split into the half-planes `x ≥ 0` and `x ≤ 0`.
pub fn gen_circle() -> HybridAutomaton {
    let a = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).expect("2x2");
    two_location_loop(
        ["x", "y"],
        a,
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        boxed(vec![1.0, -0.05], vec![1.1, 0.05]),
    )
}

pub const OSCILLATOR_A: [[f64; 2]; 2] = [[-1.0, -4.0], [4.0, -1.0]];

/// Switched stable focus with input `±(0, 1)` on either side of `x = 0`.
pub fn gen_oscillator() -> HybridAutomaton {
    let a = Matrix::from_rows(&[OSCILLATOR_A[0].to_vec(), OSCILLATOR_A[1].to_vec()]).expect("2x2");
    two_location_loop(
        ["x", "y"],
        a,
        vec![0.0, 1.0],
        vec![0.0, -1.0],
        boxed(vec![0.8, -0.05], vec![0.9, 0.05]),
    )
}

pub const GRAVITY: f64 = 9.81;
pub const RESTITUTION: f64 = 0.75;

/// Ball dropped from `x ∈ [10, 10.2]` bouncing with restitution 0.75.
pub fn gen_bouncing_ball() -> HybridAutomaton {
    let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).expect("2x2");
    let loc = Location {
        id: 1,
        name: "falling".into(),
        tag: None,
        dynamics: Dynamics::fixed(a, vec![0.0, -GRAVITY]),
        invariant: vec![hs(vec![-1.0, 0.0], 0.0)],
    };
    let bounce = Transition {
        source: 1,
        target: 1,
        guard: vec![hs(vec![1.0, 0.0], 0.0), hs(vec![0.0, 1.0], 0.0)],
        map: AffineMap {
            m: Matrix::diag(&[1.0, -RESTITUTION]),
            v: vec![0.0, 0.0],
        },
    };
    HybridAutomaton::new(
        vec!["x".into(), "v".into()],
        vec![loc],
        vec![bounce],
        SymbolicState {
            loc: 1,
            set: boxed(vec![10.0, 0.0], vec![10.2, 0.0]),
        },
    )
    .expect("generated automaton is valid")
}

/// A navigation cell: a desired-velocity code `0..=7` or a marked cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NavCell {
    Dir(u8),
    Target,
    Unsafe,
}

impl NavCell {
    /// `(sin(kπ/4), cos(kπ/4))` for code `k`, zero for marked cells.
    pub fn desired_velocity(self) -> [f64; 2] {
        match self {
            NavCell::Dir(k) => {
                let a = k as f64 * std::f64::consts::FRAC_PI_4;
                let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
                [snap(a.sin()), snap(a.cos())]
            }
            NavCell::Target | NavCell::Unsafe => [0.0, 0.0],
        }
    }
}

pub const NAV_DEFAULT_A: [[f64; 2]; 2] = [[-1.2, 0.1], [0.1, -1.2]];

/// Navigation benchmark over a grid of unit cells.
///
/// `grid[0]` is the top row. The cell in row `r`, column `c` of an `R`-row
/// grid covers `x ∈ [c, c+1]`, `y ∈ [R-1-r, R-r]` and gets id `r·C + c + 1`.
/// `init` is `(row, col, set)` with `set` over `(x, y, vx, vy)`.
pub fn gen_navigation(
    grid: &[Vec<NavCell>],
    a: &Matrix,
    init: (usize, usize, ConvexSet),
) -> Result<HybridAutomaton, ModelError> {
    let rows = grid.len();
    let cols = grid.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 || grid.iter().any(|r| r.len() != cols) {
        return semantic("navigation grid must be a nonempty rectangle");
    }
    if a.rows() != 2 || a.cols() != 2 {
        return semantic("navigation velocity matrix must be 2x2");
    }
    if let Some(NavCell::Dir(k)) = grid.iter().flatten().find(|c| matches!(c, NavCell::Dir(k) if *k > 7)) {
        return semantic(format!("navigation direction code {k} out of range"));
    }
    let id = |r: usize, c: usize| (r * cols + c + 1) as LocationId;
    let x_range = |c: usize| (c as f64, c as f64 + 1.0);
    let y_range = |r: usize| ((rows - 1 - r) as f64, (rows - r) as f64);
    let e = |k: usize, s: f64| {
        let mut v = vec![0.0; 4];
        v[k] = s;
        v
    };
    let range = |k: usize, (lo, hi): (f64, f64)| vec![hs(e(k, 1.0), hi), hs(e(k, -1.0), -lo)];

    let mut full = Matrix::zeros(4, 4);
    full[(0, 2)] = 1.0;
    full[(1, 3)] = 1.0;
    for i in 0..2 {
        for j in 0..2 {
            full[(2 + i, 2 + j)] = a[(i, j)];
        }
    }

    let mut locations = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let cell = grid[r][c];
            let vd = cell.desired_velocity();
            // v̇ = A (v − v_d)
            let av = [
                a[(0, 0)] * vd[0] + a[(0, 1)] * vd[1],
                a[(1, 0)] * vd[0] + a[(1, 1)] * vd[1],
            ];
            let u = vec![0.0, 0.0, 0.0 - av[0], 0.0 - av[1]];
            let mut invariant = range(0, x_range(c));
            invariant.extend(range(1, y_range(r)));
            let (name, tag) = match cell {
                NavCell::Dir(k) => (format!("cell_{r}_{c}_d{k}"), None),
                NavCell::Target => (format!("cell_{r}_{c}_target"), Some("target".to_string())),
                NavCell::Unsafe => (format!("cell_{r}_{c}_unsafe"), Some("unsafe".to_string())),
            };
            locations.push(Location {
                id: id(r, c),
                name,
                tag,
                dynamics: Dynamics::fixed(full.clone(), u),
                invariant,
            });
        }
    }

    let mut transitions = Vec::new();
    let mut link = |from: (usize, usize), to: (usize, usize), guard: Vec<HalfSpace>| {
        transitions.push(Transition {
            source: id(from.0, from.1),
            target: id(to.0, to.1),
            guard,
            map: AffineMap::identity(4),
        });
    };
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                let x = c as f64 + 1.0;
                let mut g = range(0, (x, x));
                g.extend(range(1, y_range(r)));
                link((r, c), (r, c + 1), g.clone());
                link((r, c + 1), (r, c), g);
            }
            if r + 1 < rows {
                let y = (rows - 1 - r) as f64;
                let mut g = range(1, (y, y));
                g.extend(range(0, x_range(c)));
                link((r, c), (r + 1, c), g.clone());
                link((r + 1, c), (r, c), g);
            }
        }
    }

    let (ir, ic, set) = init;
    if ir >= rows || ic >= cols {
        return semantic("navigation init cell outside the grid");
    }
    HybridAutomaton::new(
        ["x", "y", "vx", "vy"].iter().map(|s| s.to_string()).collect(),
        locations,
        transitions,
        SymbolicState { loc: id(ir, ic), set },
    )
}

/// The `N×N` navigation instance used by the CLI and the tests.
///
/// `N = 3` is the classic map (`B 2 4 / 4 3 4 / 2 2 A`); larger grids use a
/// snake path from the top row to the target in the bottom-right corner with
/// the unsafe cell top-left. The initial set sits in the top row, second
/// column, with a small velocity box.
pub fn nav_benchmark(n: usize) -> Result<HybridAutomaton, ModelError> {
    use NavCell::*;
    if n == 0 {
        return semantic("navigation size must be positive");
    }
    let grid: Vec<Vec<NavCell>> = if n == 3 {
        vec![
            vec![Unsafe, Dir(2), Dir(4)],
            vec![Dir(4), Dir(3), Dir(4)],
            vec![Dir(2), Dir(2), Target],
        ]
    } else {
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        let rightward = r % 2 == 0;
                        let at_turn = if rightward { c == n - 1 } else { c == 0 };
                        if at_turn && r + 1 < n {
                            Dir(4)
                        } else if rightward {
                            Dir(2)
                        } else {
                            Dir(6)
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let mut grid = grid;
    grid[0][0] = Unsafe;
    grid[n - 1][n - 1] = Target;
    let a = Matrix::from_rows(&[NAV_DEFAULT_A[0].to_vec(), NAV_DEFAULT_A[1].to_vec()]).expect("2x2");
    let col = if n > 1 { 1 } else { 0 };
    let top = n as f64 - 1.0;
    let x0 = col as f64;
    let set = boxed(
        vec![x0 + 0.4, top + 0.4, -0.1, -0.1],
        vec![x0 + 0.6, top + 0.6, 0.1, 0.1],
    );
    gen_navigation(&grid, &a, (0, col, set))
}

/// Looks up a built-in model by CLI name: `circle`, `ball`, `oscillator`,
/// `nav:N`.
pub fn builtin(name: &str) -> Option<Result<HybridAutomaton, ModelError>> {
    match name {
        "circle" => Some(Ok(gen_circle())),
        "ball" => Some(Ok(gen_bouncing_ball())),
        "oscillator" => Some(Ok(gen_oscillator())),
        _ => {
            let n = name.strip_prefix("nav:")?;
            Some(match n.parse::<usize>() {
                Ok(n) => nav_benchmark(n),
                Err(_) => semantic(format!("invalid navigation size `{n}`")),
            })
        }
    }
}

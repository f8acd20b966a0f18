//! CNF encoding of "does `g` have a `p`-page book embedding?" over order
//! variables σ, page variables φ and same-page variables χ, plus optional
//! symmetry-breaking rules, the two gadget restriction profiles and
//! subproblem pinning.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::family::GadgetGraph;
use crate::graph::{Edge, GraphView, VertexId};
use crate::layout::{BookEmbedding, BLUE, RED};

pub type Lit = i32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("page count must be at least 1")]
    NoPages,
    #[error("profile does not match the graph: {0}")]
    ProfileRoleMismatch(String),
    #[error("profile needs {expected} pages, got {actual}")]
    WrongPageCount { expected: usize, actual: usize },
    #[error("model is inconsistent: {0}")]
    InconsistentModel(String),
    #[error("malformed variable map: {0}")]
    MalformedMap(String),
}

/// Clauses stored back to back; `offsets[i]..offsets[i + 1]` delimits clause `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    variable_count: u32,
    lits: Vec<Lit>,
    offsets: Vec<u32>,
}

impl CnfFormula {
    pub fn new(variable_count: u32) -> CnfFormula {
        CnfFormula {
            variable_count,
            lits: Vec::new(),
            offsets: vec![0],
        }
    }

    pub fn with_capacity(variable_count: u32, clauses: usize, lits: usize) -> CnfFormula {
        let mut offsets = Vec::with_capacity(clauses + 1);
        offsets.push(0);
        CnfFormula {
            variable_count,
            lits: Vec::with_capacity(lits),
            offsets,
        }
    }

    pub fn variable_count(&self) -> u32 {
        self.variable_count
    }

    /// Raises the declared variable count; never lowers it.
    pub fn declare_variables(&mut self, n: u32) {
        self.variable_count = self.variable_count.max(n);
    }

    pub fn clause_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn literal_count(&self) -> usize {
        self.lits.len()
    }

    pub fn clause(&self, i: usize) -> &[Lit] {
        &self.lits[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = &[Lit]> + '_ {
        self.offsets
            .windows(2)
            .map(move |w| &self.lits[w[0] as usize..w[1] as usize])
    }

    /// Panics on an empty clause or a literal outside the declared range.
    pub fn push(&mut self, clause: &[Lit]) {
        assert!(!clause.is_empty(), "empty clause");
        for &l in clause {
            assert!(
                l != 0 && l.unsigned_abs() <= self.variable_count,
                "literal {l} outside 1..={}",
                self.variable_count
            );
        }
        self.lits.extend_from_slice(clause);
        let end = u32::try_from(self.lits.len()).expect("formula exceeds u32 literal offsets");
        self.offsets.push(end);
    }

    pub fn extend(&mut self, other: &CnfFormula) {
        self.declare_variables(other.variable_count);
        for c in other.clauses() {
            self.push(c);
        }
    }

    /// `None` if some clause has no true literal; `assignment[v]` is variable `v`.
    pub fn first_falsified(&self, assignment: &[bool]) -> Option<usize> {
        self.clauses().position(|c| {
            !c.iter().any(|&l| {
                let v = l.unsigned_abs() as usize;
                v < assignment.len() && assignment[v] == (l > 0)
            })
        })
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.first_falsified(assignment).is_none()
    }
}

/// Dense variable numbering: σ pairs first, then φ edge-major, then χ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarMap {
    vertices: Vec<VertexId>,
    vertex_index: HashMap<VertexId, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<Edge, usize>,
    pages: usize,
    /// `chi_rank[tri(i, j)]` is the 1-based rank of the independent pair `i < j`, or 0.
    chi_rank: Vec<u32>,
    chi_pairs: Vec<(u32, u32)>,
}

impl VarMap {
    pub fn new<G: GraphView + ?Sized>(g: &G, pages: usize) -> Result<VarMap, EncodeError> {
        Self::from_parts(g.vertex_list(), g.edge_list(), pages)
    }

    fn from_parts(
        mut vertices: Vec<VertexId>,
        mut edges: Vec<Edge>,
        pages: usize,
    ) -> Result<VarMap, EncodeError> {
        if pages == 0 {
            return Err(EncodeError::NoPages);
        }
        vertices.sort();
        vertices.dedup();
        edges.sort();
        edges.dedup();
        let vertex_index = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edge_index = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let m = edges.len();
        let mut chi_rank = vec![0u32; m * m.saturating_sub(1) / 2];
        let mut chi_pairs = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                if edges[i].is_independent(edges[j]) {
                    chi_pairs.push((i as u32, j as u32));
                    chi_rank[tri(m, i, j)] = chi_pairs.len() as u32;
                }
            }
        }
        let map = VarMap {
            vertices,
            vertex_index,
            edges,
            edge_index,
            pages,
            chi_rank,
            chi_pairs,
        };
        if map.variable_count() > i32::MAX as u64 {
            return Err(EncodeError::MalformedMap("too many variables".into()));
        }
        Ok(map)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn pages(&self) -> usize {
        self.pages
    }

    pub fn sigma_count(&self) -> usize {
        let n = self.vertices.len();
        n * n.saturating_sub(1) / 2
    }

    pub fn phi_count(&self) -> usize {
        self.pages * self.edges.len()
    }

    pub fn chi_count(&self) -> usize {
        self.chi_pairs.len()
    }

    pub fn variable_count(&self) -> u64 {
        (self.sigma_count() + self.phi_count() + self.chi_count()) as u64
    }

    /// Independent edge pairs in χ numbering order.
    pub fn independent_pairs(&self) -> impl Iterator<Item = (Edge, Edge)> + '_ {
        self.chi_pairs
            .iter()
            .map(|&(i, j)| (self.edges[i as usize], self.edges[j as usize]))
    }

    fn vidx(&self, v: VertexId) -> usize {
        *self
            .vertex_index
            .get(&v)
            .unwrap_or_else(|| panic!("vertex {v} not in the variable map"))
    }

    fn eidx(&self, e: Edge) -> usize {
        *self
            .edge_index
            .get(&e)
            .unwrap_or_else(|| panic!("edge {e} not in the variable map"))
    }

    fn sigma_var_idx(&self, i: usize, j: usize) -> u32 {
        debug_assert!(i < j);
        (tri(self.vertices.len(), i, j) + 1) as u32
    }

    /// Literal for "`u` is left of `v`". Panics if `u == v` or either is unknown.
    pub fn sigma(&self, u: VertexId, v: VertexId) -> Lit {
        assert_ne!(u, v, "σ needs two distinct vertices");
        let (i, j) = (self.vidx(u), self.vidx(v));
        if i < j {
            self.sigma_var_idx(i, j) as Lit
        } else {
            -(self.sigma_var_idx(j, i) as Lit)
        }
    }

    /// Literal for "`e` is on page `page`".
    pub fn phi(&self, page: usize, e: Edge) -> Lit {
        assert!(page < self.pages, "page {page} out of range");
        self.phi_idx(page, self.eidx(e))
    }

    fn phi_idx(&self, page: usize, e: usize) -> Lit {
        (self.sigma_count() + e * self.pages + page + 1) as Lit
    }

    /// Literal for "`e` and `f` share a page"; `None` unless independent.
    pub fn chi(&self, e: Edge, f: Edge) -> Option<Lit> {
        let (i, j) = (self.eidx(e), self.eidx(f));
        let (i, j) = (i.min(j), i.max(j));
        if i == j {
            return None;
        }
        self.chi_idx(i, j)
    }

    fn chi_idx(&self, i: usize, j: usize) -> Option<Lit> {
        match self.chi_rank[tri(self.edges.len(), i, j)] {
            0 => None,
            r => Some((self.sigma_count() + self.phi_count()) as Lit + r as Lit),
        }
    }

    /// Sidecar text: a `pages p` header, then `sigma u v var`, `phi page u v var`,
    /// `chi u1 v1 u2 v2 var`. A lone vertex that no σ line mentions gets a
    /// `vertex <id>` line.
    pub fn to_text(&self) -> String {
        let mut s = format!("pages {}\n", self.pages);
        if self.vertices.len() == 1 {
            s.push_str(&format!("vertex {}\n", self.vertices[0]));
        }
        let n = self.vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                s.push_str(&format!(
                    "sigma {} {} {}\n",
                    self.vertices[i],
                    self.vertices[j],
                    self.sigma_var_idx(i, j)
                ));
            }
        }
        for (ei, e) in self.edges.iter().enumerate() {
            for p in 0..self.pages {
                s.push_str(&format!("phi {} {} {} {}\n", p, e.u(), e.v(), self.phi_idx(p, ei)));
            }
        }
        for (r, &(i, j)) in self.chi_pairs.iter().enumerate() {
            let (e, f) = (self.edges[i as usize], self.edges[j as usize]);
            s.push_str(&format!(
                "chi {} {} {} {} {}\n",
                e.u(),
                e.v(),
                f.u(),
                f.v(),
                self.sigma_count() + self.phi_count() + r + 1
            ));
        }
        s
    }

    /// Rebuilds the map and checks every listed id against the canonical numbering.
    pub fn parse(text: &str) -> Result<VarMap, EncodeError> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut pages = 0usize;
        let mut declared_pages = None;
        let mut listed: Vec<(String, Vec<u32>, u64)> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let bad = |m: &str| EncodeError::MalformedMap(format!("line {}: {m}", ln + 1));
            let toks: Vec<&str> = line.split_whitespace().collect();
            let Some((&kind, rest)) = toks.split_first() else {
                continue;
            };
            let nums = rest
                .iter()
                .map(|t| t.parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad("expected integers"))?;
            let id = |x: u64| VertexId(x as u32);
            match (kind, nums.len()) {
                ("pages", 1) if listed.is_empty() && declared_pages.is_none() => {
                    declared_pages = Some(nums[0] as usize);
                    continue;
                }
                ("vertex", 1) => {
                    vertices.push(id(nums[0]));
                    listed.push((kind.to_string(), vec![nums[0] as u32], 0));
                    continue;
                }
                ("sigma", 3) => vertices.extend([id(nums[0]), id(nums[1])]),
                ("phi", 4) => {
                    pages = pages.max(nums[0] as usize + 1);
                    edges.push(Edge::new(id(nums[1]), id(nums[2])));
                    vertices.extend([id(nums[1]), id(nums[2])]);
                }
                ("chi", 5) => {}
                _ => return Err(bad("unknown or malformed record")),
            }
            let var = *nums.last().expect("non-empty");
            listed.push((
                kind.to_string(),
                nums[..nums.len() - 1].iter().map(|&x| x as u32).collect(),
                var,
            ));
        }
        let map = VarMap::from_parts(vertices, edges, declared_pages.unwrap_or(pages.max(1)))?;
        let expected = map.to_text();
        let mut canonical = expected.lines().skip(1);
        for (kind, args, var) in &listed {
            let mut line = kind.clone();
            for a in args {
                line.push_str(&format!(" {a}"));
            }
            if kind != "vertex" {
                line.push_str(&format!(" {var}"));
            }
            if canonical.next() != Some(line.as_str()) {
                return Err(EncodeError::MalformedMap(format!(
                    "record `{line}` does not match the canonical numbering"
                )));
            }
        }
        if canonical.next().is_some() {
            return Err(EncodeError::MalformedMap("map is missing records".into()));
        }
        Ok(map)
    }
}

#[inline]
fn tri(n: usize, i: usize, j: usize) -> usize {
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Terminal indices that must lie strictly between `A` and `B`, in this order;
/// every other terminal lies outside.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SubproblemSpec {
    pub between: Vec<usize>,
}

impl fmt::Display for SubproblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.between.is_empty() {
            return f.write_str("none");
        }
        let parts: Vec<String> = self.between.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for SubproblemSpec {
    type Err = String;

    /// `none` or a comma-separated list of terminal indices such as `0,3,1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(SubproblemSpec::default());
        }
        let between = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad terminal index `{t}`")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = between.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != between.len() {
            return Err("terminal listed twice".into());
        }
        Ok(SubproblemSpec { between })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetryRule {
    FirstVertex,
    TerminalOrder,
    Reversal,
    FirstEdgePage,
    SecondEdgePages,
    K4NotMonochromatic,
}

impl SymmetryRule {
    pub const ALL: [SymmetryRule; 6] = [
        SymmetryRule::FirstVertex,
        SymmetryRule::TerminalOrder,
        SymmetryRule::Reversal,
        SymmetryRule::FirstEdgePage,
        SymmetryRule::SecondEdgePages,
        SymmetryRule::K4NotMonochromatic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SymmetryRule::FirstVertex => "first-vertex",
            SymmetryRule::TerminalOrder => "terminal-order",
            SymmetryRule::Reversal => "reversal",
            SymmetryRule::FirstEdgePage => "first-edge-page",
            SymmetryRule::SecondEdgePages => "second-edge-pages",
            SymmetryRule::K4NotMonochromatic => "k4",
        }
    }
}

impl FromStr for SymmetryRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SymmetryRule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SymmetryRule::ALL.iter().map(|r| r.name()).collect();
                format!("unknown symmetry rule `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactProfile {
    Fact1,
    Fact2,
}

/// Which extra constraints to add on top of the plain embedding encoding,
/// plus the vertex identities they refer to.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RestrictionProfile {
    pub symmetry_first_vertex: bool,
    pub symmetry_terminal_order: bool,
    pub symmetry_reversal: bool,
    pub pin_first_edge_page: bool,
    pub pin_second_edge_two_pages: bool,
    pub k4_not_monochromatic: bool,
    pub fact1: bool,
    pub fact2: bool,
    /// Fact 1 with `A`, `B` adjacent in the linear order instead of first and last.
    pub fact1_linear_adjacent: bool,
    pub poles: Option<(VertexId, VertexId)>,
    pub terminals: Vec<VertexId>,
    pub subproblem: Option<SubproblemSpec>,
}

impl RestrictionProfile {
    pub fn none() -> RestrictionProfile {
        RestrictionProfile::default()
    }

    /// An empty profile that knows the gadget's poles and terminals.
    pub fn for_gadget(q: &GadgetGraph) -> RestrictionProfile {
        RestrictionProfile {
            poles: Some(q.poles),
            terminals: q.terminals.clone(),
            ..RestrictionProfile::default()
        }
    }

    pub fn with_rule(mut self, rule: SymmetryRule) -> RestrictionProfile {
        match rule {
            SymmetryRule::FirstVertex => self.symmetry_first_vertex = true,
            SymmetryRule::TerminalOrder => self.symmetry_terminal_order = true,
            SymmetryRule::Reversal => self.symmetry_reversal = true,
            SymmetryRule::FirstEdgePage => self.pin_first_edge_page = true,
            SymmetryRule::SecondEdgePages => self.pin_second_edge_two_pages = true,
            SymmetryRule::K4NotMonochromatic => self.k4_not_monochromatic = true,
        }
        self
    }

    pub fn with_all_symmetry(self) -> RestrictionProfile {
        SymmetryRule::ALL.into_iter().fold(self, |p, r| p.with_rule(r))
    }

    pub fn with_fact(mut self, which: FactProfile) -> RestrictionProfile {
        match which {
            FactProfile::Fact1 => self.fact1 = true,
            FactProfile::Fact2 => self.fact2 = true,
        }
        self
    }

    pub fn with_subproblem(mut self, spec: SubproblemSpec) -> RestrictionProfile {
        self.subproblem = Some(spec);
        self
    }

    fn poles(&self, what: &str) -> Result<(VertexId, VertexId), EncodeError> {
        self.poles
            .ok_or_else(|| EncodeError::ProfileRoleMismatch(format!("{what} needs poles A and B")))
    }

    fn terminals(&self, what: &str, at_least: usize) -> Result<&[VertexId], EncodeError> {
        if self.terminals.len() < at_least {
            return Err(EncodeError::ProfileRoleMismatch(format!(
                "{what} needs at least {at_least} terminals, profile has {}",
                self.terminals.len()
            )));
        }
        Ok(&self.terminals)
    }
}

/// Transitivity over every vertex triple: two clauses per unordered triple.
pub fn emit_order_axioms(vm: &VarMap, out: &mut CnfFormula) {
    let n = vm.vertices.len();
    for i in 0..n {
        for j in i + 1..n {
            let ij = vm.sigma_var_idx(i, j) as Lit;
            for k in j + 1..n {
                let jk = vm.sigma_var_idx(j, k) as Lit;
                let ik = vm.sigma_var_idx(i, k) as Lit;
                out.push(&[-ij, -jk, ik]);
                out.push(&[ij, jk, -ik]);
            }
        }
    }
}

/// At least one page per edge, and `φ_ρ(e) ∧ φ_ρ(f) → χ(e,f)` for every
/// independent pair and page.
pub fn emit_page_clauses(vm: &VarMap, out: &mut CnfFormula) {
    let p = vm.pages;
    let mut buf = Vec::with_capacity(p);
    for e in 0..vm.edges.len() {
        buf.clear();
        buf.extend((0..p).map(|r| vm.phi_idx(r, e)));
        out.push(&buf);
    }
    for (r, &(i, j)) in vm.chi_pairs.iter().enumerate() {
        let chi = (vm.sigma_count() + vm.phi_count() + r + 1) as Lit;
        for page in 0..p {
            out.push(&[-vm.phi_idx(page, i as usize), -vm.phi_idx(page, j as usize), chi]);
        }
    }
}

/// For every independent pair on one page, forbids all 8 interleavings.
pub fn emit_crossing_clauses(vm: &VarMap, out: &mut CnfFormula) {
    for (r, &(i, j)) in vm.chi_pairs.iter().enumerate() {
        let chi = (vm.sigma_count() + vm.phi_count() + r + 1) as Lit;
        let (e, f) = (vm.edges[i as usize], vm.edges[j as usize]);
        for [x1, x2, x3, x4] in interleavings(e, f) {
            out.push(&[-chi, -vm.sigma(x1, x2), -vm.sigma(x2, x3), -vm.sigma(x3, x4)]);
        }
    }
}

/// The 8 orders `x1 < x2 < x3 < x4` in which `e` and `f` alternate.
fn interleavings(e: Edge, f: Edge) -> [[VertexId; 4]; 8] {
    let (a, b, c, d) = (e.u(), e.v(), f.u(), f.v());
    [
        [a, c, b, d],
        [a, d, b, c],
        [b, c, a, d],
        [b, d, a, c],
        [c, a, d, b],
        [c, b, d, a],
        [d, a, c, b],
        [d, b, c, a],
    ]
}

fn require_edge<G: GraphView + ?Sized>(
    g: &G, u: VertexId, v: VertexId, what: &str) -> Result<Edge, EncodeError> {
    if g.contains_edge(u, v) {
        Ok(Edge::new(u, v))
    } else {
        Err(EncodeError::ProfileRoleMismatch(format!("{what} needs edge ({u},{v})")))
    }
}

/// The enabled symmetry-breaking rules, in a fixed order.
pub fn emit_symmetry_breaking<G: GraphView + ?Sized>(
    g: &G,
    vm: &VarMap,
    profile: &RestrictionProfile,
    out: &mut CnfFormula,
) -> Result<(), EncodeError> {
    if profile.symmetry_first_vertex {
        let (a, _) = profile.poles("first-vertex rule")?;
        for &v in vm.vertices.iter().filter(|&&v| v != a) {
            out.push(&[vm.sigma(a, v)]);
        }
    }
    if profile.symmetry_terminal_order {
        let ts = profile.terminals("terminal-order rule", 2)?;
        for &t in &ts[1..] {
            out.push(&[vm.sigma(ts[0], t)]);
        }
    }
    if profile.symmetry_reversal {
        let ts = profile.terminals("reversal rule", 3)?;
        out.push(&[vm.sigma(ts[1], ts[2])]);
    }
    if profile.pin_first_edge_page {
        let (a, _) = profile.poles("first-edge-page rule")?;
        let t0 = profile.terminals("first-edge-page rule", 1)?[0];
        out.push(&[vm.phi(0, require_edge(g, a, t0, "first-edge-page rule")?)]);
    }
    if profile.pin_second_edge_two_pages {
        let (_, b) = profile.poles("second-edge-pages rule")?;
        let t0 = profile.terminals("second-edge-pages rule", 1)?[0];
        let e = require_edge(g, b, t0, "second-edge-pages rule")?;
        if vm.pages >= 2 {
            out.push(&[vm.phi(0, e), vm.phi(1, e)]);
        } else {
            out.push(&[vm.phi(0, e)]);
        }
    }
    if profile.k4_not_monochromatic {
        for quad in g.k4_list() {
            let mut es = Vec::with_capacity(6);
            for x in 0..4 {
                for y in x + 1..4 {
                    es.push(Edge::new(quad[x], quad[y]));
                }
            }
            for page in 0..vm.pages {
                let clause: Vec<Lit> = es.iter().map(|&e| -vm.phi(page, e)).collect();
                out.push(&clause);
            }
        }
    }
    Ok(())
}

/// Fact 1: `A` first and `B` last (or merely adjacent), `A`-terminal edges on
/// Blue, `B`-terminal edges off Blue. Fact 2: all terminals on one side of
/// `(A,B)`, `A`-terminal edges on Blue, `B`-terminal edges on Red.
pub fn emit_fact_profile<G: GraphView + ?Sized>(
    g: &G,
    vm: &VarMap,
    profile: &RestrictionProfile,
    which: FactProfile,
    out: &mut CnfFormula,
) -> Result<(), EncodeError> {
    if vm.pages != 3 {
        return Err(EncodeError::WrongPageCount {
            expected: 3,
            actual: vm.pages,
        });
    }
    let (a, b) = profile.poles("fact profile")?;
    let ts = profile.terminals("fact profile", 1)?;
    match which {
        FactProfile::Fact1 => {
            if profile.fact1_linear_adjacent {
                for &v in vm.vertices.iter().filter(|&&v| v != a && v != b) {
                    out.push(&[-vm.sigma(a, v), -vm.sigma(v, b)]);
                    out.push(&[-vm.sigma(b, v), -vm.sigma(v, a)]);
                }
            } else {
                for &v in vm.vertices.iter().filter(|&&v| v != a) {
                    out.push(&[vm.sigma(a, v)]);
                }
                for &v in vm.vertices.iter().filter(|&&v| v != a && v != b) {
                    out.push(&[vm.sigma(v, b)]);
                }
            }
            for &t in ts {
                out.push(&[vm.phi(BLUE, require_edge(g, a, t, "fact profile")?)]);
            }
            for &t in ts {
                out.push(&[-vm.phi(BLUE, require_edge(g, b, t, "fact profile")?)]);
            }
        }
        FactProfile::Fact2 => {
            // inside(t) = σ(A,t) xor σ(B,t); equal parity for every pair.
            for (x, &ti) in ts.iter().enumerate() {
                for &tj in &ts[x + 1..] {
                    let vars = [vm.sigma(a, ti), vm.sigma(b, ti), vm.sigma(a, tj), vm.sigma(b, tj)];
                    for mask in 0u32..16 {
                        if mask.count_ones() % 2 == 1 {
                            let clause: Vec<Lit> = (0..4)
                                .map(|bit| if mask >> bit & 1 == 1 { -vars[bit] } else { vars[bit] })
                                .collect();
                            out.push(&clause);
                        }
                    }
                }
            }
            for &t in ts {
                out.push(&[vm.phi(BLUE, require_edge(g, a, t, "fact profile")?)]);
            }
            for &t in ts {
                out.push(&[vm.phi(RED, require_edge(g, b, t, "fact profile")?)]);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DedupPolicy {
    /// Every ordered tuple.
    #[default]
    None,
    /// Only tuples whose first entry is terminal 0, matching the rule that
    /// `t_0` precedes all other terminals when `A` is first.
    FirstTerminalLeads,
}

/// Ordered tuples of distinct terminal indices of length `0..=max_between`,
/// by length and then lexicographically.
pub fn enumerate_subproblems(
    q: &GadgetGraph,
    max_between: usize,
    policy: DedupPolicy,
) -> Vec<SubproblemSpec> {
    let k = q.terminals.len();
    let mut out = vec![SubproblemSpec::default()];
    let mut frontier = vec![Vec::<usize>::new()];
    for _ in 0..max_between.min(k) {
        let mut next = Vec::new();
        for prefix in &frontier {
            for t in (0..k).filter(|t| !prefix.contains(t)) {
                if policy == DedupPolicy::FirstTerminalLeads && prefix.is_empty() && t != 0 {
                    continue;
                }
                let mut tuple = prefix.clone();
                tuple.push(t);
                next.push(tuple);
            }
        }
        out.extend(next.iter().cloned().map(|between| SubproblemSpec { between }));
        frontier = next;
    }
    out
}

/// Units placing the listed terminals between `A` and `B` in the given order
/// and every other terminal after `B`. Assumes `A` is first on the spine.
pub fn pin_subproblem(
    spec: &SubproblemSpec,
    vm: &VarMap,
    profile: &RestrictionProfile,
    out: &mut CnfFormula,
) -> Result<(), EncodeError> {
    let (a, b) = profile.poles("subproblem")?;
    let ts = &profile.terminals;
    if let Some(&bad) = spec.between.iter().find(|&&i| i >= ts.len()) {
        return Err(EncodeError::ProfileRoleMismatch(format!(
            "subproblem names terminal {bad}, graph has {}",
            ts.len()
        )));
    }
    for &i in &spec.between {
        out.push(&[vm.sigma(a, ts[i])]);
        out.push(&[vm.sigma(ts[i], b)]);
    }
    for w in spec.between.windows(2) {
        out.push(&[vm.sigma(ts[w[0]], ts[w[1]])]);
    }
    for (j, &t) in ts.iter().enumerate() {
        if !spec.between.contains(&j) {
            out.push(&[vm.sigma(b, t)]);
        }
    }
    Ok(())
}

/// Clause count of the unrestricted encoding, for preallocation.
fn base_clause_estimate(vm: &VarMap) -> (usize, usize) {
    let n = vm.vertices.len();
    let triples = if n >= 3 { n * (n - 1) * (n - 2) / 6 } else { 0 };
    let pairs = vm.chi_count();
    let clauses = 2 * triples + vm.edges.len() + pairs * (vm.pages + 8);
    let lits = 6 * triples + vm.phi_count() + pairs * (3 * vm.pages + 32);
    (clauses, lits)
}

/// The full formula: order axioms, page clauses, crossing clauses, then the
/// profile's symmetry rules, fact constraints and subproblem pins.
pub fn encode<G: GraphView + ?Sized>(
    g: &G,
    pages: usize,
    profile: &RestrictionProfile,
) -> Result<(CnfFormula, VarMap), EncodeError> {
    let vm = VarMap::new(g, pages)?;
    for &v in profile.terminals.iter().chain(profile.poles.iter().flat_map(|(a, b)| [a, b])) {
        if !vm.vertex_index.contains_key(&v) {
            return Err(EncodeError::ProfileRoleMismatch(format!("vertex {v} is not in the graph")));
        }
    }
    if let Some((a, b)) = profile.poles {
        if a == b || profile.terminals.iter().any(|&t| t == a || t == b) {
            return Err(EncodeError::ProfileRoleMismatch("poles must be distinct from terminals".into()));
        }
    }
    let (clauses, lits) = base_clause_estimate(&vm);
    let mut cnf = CnfFormula::with_capacity(vm.variable_count() as u32, clauses, lits);
    emit_order_axioms(&vm, &mut cnf);
    emit_page_clauses(&vm, &mut cnf);
    emit_crossing_clauses(&vm, &mut cnf);
    emit_symmetry_breaking(g, &vm, profile, &mut cnf)?;
    if profile.fact1 {
        emit_fact_profile(g, &vm, profile, FactProfile::Fact1, &mut cnf)?;
    }
    if profile.fact2 {
        emit_fact_profile(g, &vm, profile, FactProfile::Fact2, &mut cnf)?;
    }
    if let Some(spec) = &profile.subproblem {
        pin_subproblem(spec, &vm, profile, &mut cnf)?;
    }
    log::debug!(
        "encoded {} vertices, {} edges, {} pages: {} variables, {} clauses",
        vm.vertices.len(),
        vm.edges.len(),
        pages,
        cnf.variable_count(),
        cnf.clause_count()
    );
    Ok((cnf, vm))
}

/// Order by σ rank, page = lowest true φ. `assignment[v]` is variable `v`
/// (index 0 unused); a short assignment reads missing variables as false.
pub fn decode_model(vm: &VarMap, assignment: &[bool]) -> Result<BookEmbedding, EncodeError> {
    let val = |l: Lit| {
        let v = l.unsigned_abs() as usize;
        (v < assignment.len() && assignment[v]) == (l > 0)
    };
    let n = vm.vertices.len();
    let mut rank = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if val(vm.sigma_var_idx(i, j) as Lit) {
                rank[j] += 1;
            } else {
                rank[i] += 1;
            }
        }
    }
    let mut order = vec![None; n];
    for (i, &r) in rank.iter().enumerate() {
        if order[r].replace(vm.vertices[i]).is_some() {
            return Err(EncodeError::InconsistentModel("σ assignment is cyclic".into()));
        }
    }
    let order: Vec<VertexId> = order.into_iter().map(|v| v.expect("ranks are a permutation")).collect();
    let mut pages = BTreeMap::new();
    for (ei, &e) in vm.edges.iter().enumerate() {
        let page = (0..vm.pages)
            .find(|&p| val(vm.phi_idx(p, ei)))
            .ok_or_else(|| EncodeError::InconsistentModel(format!("edge {e} has no page")))?;
        pages.insert(e, page);
    }
    BookEmbedding::new(order, pages, vm.pages)
        .map_err(|e| EncodeError::InconsistentModel(e.to_string()))
}

//! Combinatorial plane graphs stored as rotation systems.
//!
//! Every vertex keeps the cyclic order of its neighbours. Faces are not
//! stored; they are traced from the rotation: the dart `a -> b` is followed by
//! `b -> succ_b(a)`, where `succ_b` is the neighbour after `a` in `b`'s
//! rotation. Bounded faces built by [`PlaneGraph::from_faces`] keep the
//! orientation of their input walks.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected edge with endpoints stored in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(VertexId, VertexId);

impl Edge {
    pub fn new(a: VertexId, b: VertexId) -> Edge {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn u(self) -> VertexId {
        self.0
    }

    pub fn v(self) -> VertexId {
        self.1
    }

    pub fn contains(self, x: VertexId) -> bool {
        self.0 == x || self.1 == x
    }

    /// Two edges are independent when they share no endpoint.
    pub fn is_independent(self, other: Edge) -> bool {
        !self.contains(other.0) && !self.contains(other.1)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoleTag {
    Pole,
    Terminal(usize),
    SatelliteA(usize),
    SatelliteB(usize),
    /// Stellation vertex; 1 and 2 are the two full rounds, 3 and 4 the
    /// targeted stellations around the satellite segment.
    Stellation(u8),
    Plain,
}

impl fmt::Display for RoleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoleTag::Pole => write!(f, "pole"),
            RoleTag::Terminal(i) => write!(f, "terminal:{i}"),
            RoleTag::SatelliteA(i) => write!(f, "sat-a:{i}"),
            RoleTag::SatelliteB(i) => write!(f, "sat-b:{i}"),
            RoleTag::Stellation(r) => write!(f, "stellation:{r}"),
            RoleTag::Plain => write!(f, "plain"),
        }
    }
}

impl FromStr for RoleTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let index = || -> Result<usize, String> {
            arg.ok_or_else(|| format!("role `{s}` needs an index"))?
                .parse::<usize>()
                .map_err(|e| format!("bad role index in `{s}`: {e}"))
        };
        match head {
            "pole" if arg.is_none() => Ok(RoleTag::Pole),
            "plain" if arg.is_none() => Ok(RoleTag::Plain),
            "terminal" => Ok(RoleTag::Terminal(index()?)),
            "sat-a" => Ok(RoleTag::SatelliteA(index()?)),
            "sat-b" => Ok(RoleTag::SatelliteB(index()?)),
            "stellation" => {
                let r = index()?;
                u8::try_from(r)
                    .map(RoleTag::Stellation)
                    .map_err(|_| format!("stellation round out of range in `{s}`"))
            }
            _ => Err(format!("unknown role `{s}`")),
        }
    }
}

/// A face boundary walk, rotated to its lexicographically smallest form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    boundary: Vec<VertexId>,
}

impl Face {
    pub fn new(walk: Vec<VertexId>) -> Face {
        Face {
            boundary: canonical_rotation(walk),
        }
    }

    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.boundary.contains(&v)
    }

    pub fn darts(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        let n = self.boundary.len();
        (0..n).map(move |i| (self.boundary[i], self.boundary[(i + 1) % n]))
    }

    pub fn is_triangle(&self) -> bool {
        self.boundary.len() == 3
    }
}

fn canonical_rotation(walk: Vec<VertexId>) -> Vec<VertexId> {
    let n = walk.len();
    if n == 0 {
        return walk;
    }
    let best = (0..n)
        .min_by(|&a, &b| {
            (0..n)
                .map(|i| walk[(a + i) % n])
                .cmp((0..n).map(|i| walk[(b + i) % n]))
        })
        .unwrap_or(0);
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&walk[best..]);
    out.extend_from_slice(&walk[..best]);
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("Euler's formula violated: {vertices} - {edges} + {faces} != 2")]
    EulerViolation {
        vertices: usize,
        edges: usize,
        faces: usize,
    },
    #[error("graph is not simple: {0}")]
    NonSimple(String),
    #[error("inconsistent faces: {0}")]
    InconsistentFaces(String),
    #[error("the outer face cannot be stellated")]
    OuterFace,
    #[error("face is not a face of this graph")]
    UnknownFace,
    #[error("unknown edge {0}")]
    UnknownEdge(Edge),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("removing {0} would not merge two distinct faces")]
    BridgeViolation(Edge),
    #[error("poles are not on the outer face")]
    PolesNotOnOuterFace,
    #[error("poles are adjacent but their edge is not on the outer face")]
    NonConsecutivePoles,
    #[error("vertices {0} and {1} share no face")]
    NotCofacial(VertexId, VertexId),
    #[error("contracting adjacent vertices {0} and {1} creates a loop")]
    LoopCreated(VertexId, VertexId),
    #[error("graph has no edges")]
    Empty,
}

/// Embedded simple planar graph with role tags.
#[derive(Debug, Clone)]
pub struct PlaneGraph {
    name: String,
    roles: Vec<Option<RoleTag>>,
    rotation: Vec<Vec<VertexId>>,
    outer: (VertexId, VertexId),
    edge_count: usize,
}

impl PlaneGraph {
    /// Builds a graph from oriented face walks. `outer` indexes the outer face.
    pub fn from_faces(faces: &[Vec<VertexId>], outer: usize) -> Result<PlaneGraph, GraphError> {
        if faces.is_empty() {
            return Err(GraphError::Empty);
        }
        if outer >= faces.len() {
            return Err(GraphError::InconsistentFaces(format!(
                "outer face index {outer} out of range"
            )));
        }
        let max_id = faces
            .iter()
            .flatten()
            .map(|v| v.index())
            .max()
            .ok_or(GraphError::Empty)?;
        let mut darts: HashSet<(VertexId, VertexId)> = HashSet::new();
        let single_edge = faces.len() == 1 && faces[0].len() == 2;
        for walk in faces {
            if walk.len() < 2 || (walk.len() == 2 && !single_edge) {
                return Err(if walk.len() == 2 {
                    GraphError::NonSimple(format!("digon face {walk:?} implies parallel edges"))
                } else {
                    GraphError::InconsistentFaces(format!("face {walk:?} is too short"))
                });
            }
            for i in 0..walk.len() {
                let (a, b) = (walk[i], walk[(i + 1) % walk.len()]);
                if a == b {
                    return Err(GraphError::NonSimple(format!("loop at {a}")));
                }
                if !darts.insert((a, b)) {
                    return Err(GraphError::InconsistentFaces(format!(
                        "dart {a}->{b} appears on more than one face side"
                    )));
                }
            }
        }
        for &(a, b) in &darts {
            if !darts.contains(&(b, a)) {
                return Err(GraphError::InconsistentFaces(format!(
                    "edge ({a},{b}) borders only one face side"
                )));
            }
        }

        // succ_v(a) = b for every corner a -> v -> b.
        let mut succ: Vec<Vec<(VertexId, VertexId)>> = vec![Vec::new(); max_id + 1];
        for walk in faces {
            let n = walk.len();
            for i in 0..n {
                let a = walk[(i + n - 1) % n];
                let v = walk[i];
                let b = walk[(i + 1) % n];
                succ[v.index()].push((a, b));
            }
        }
        let mut roles = vec![None; max_id + 1];
        let mut rotation = vec![Vec::new(); max_id + 1];
        for (vi, pairs) in succ.iter_mut().enumerate() {
            if pairs.is_empty() {
                continue;
            }
            pairs.sort();
            let v = VertexId(vi as u32);
            let next = |a: VertexId| -> Option<VertexId> {
                pairs
                    .binary_search_by(|probe| probe.0.cmp(&a))
                    .ok()
                    .map(|i| pairs[i].1)
            };
            let start = pairs[0].0;
            let mut order = vec![start];
            let mut cur = next(start).ok_or_else(|| {
                GraphError::InconsistentFaces(format!("broken rotation at {v}"))
            })?;
            while cur != start {
                if order.len() > pairs.len() {
                    return Err(GraphError::InconsistentFaces(format!(
                        "rotation at {v} does not close"
                    )));
                }
                order.push(cur);
                cur = next(cur).ok_or_else(|| {
                    GraphError::InconsistentFaces(format!("broken rotation at {v}"))
                })?;
            }
            if order.len() != pairs.len() {
                return Err(GraphError::InconsistentFaces(format!(
                    "faces around {v} do not form a single disk"
                )));
            }
            roles[vi] = Some(RoleTag::Plain);
            rotation[vi] = order;
        }
        let outer_walk = &faces[outer];
        let g = PlaneGraph {
            name: "graph".to_string(),
            roles,
            rotation,
            outer: (outer_walk[0], outer_walk[1]),
            edge_count: darts.len() / 2,
        };
        g.check_euler()?;
        Ok(g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn vertex_count(&self) -> usize {
        self.roles.iter().filter(|r| r.is_some()).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// One past the largest vertex id ever allocated in this graph.
    pub fn id_bound(&self) -> usize {
        self.roles.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_some())
            .map(|(i, _)| VertexId(i as u32))
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.roles.get(v.index()).is_some_and(|r| r.is_some())
    }

    pub fn role(&self, v: VertexId) -> Option<RoleTag> {
        self.roles.get(v.index()).copied().flatten()
    }

    pub fn set_role(&mut self, v: VertexId, role: RoleTag) -> Result<(), GraphError> {
        match self.roles.get_mut(v.index()) {
            Some(slot @ Some(_)) => {
                *slot = Some(role);
                Ok(())
            }
            _ => Err(GraphError::UnknownVertex(v)),
        }
    }

    /// Vertices carrying a role of the same kind as `role` (the index is ignored), ascending.
    pub fn role_query(&self, role: RoleTag) -> Vec<VertexId> {
        let kind = std::mem::discriminant(&role);
        self.vertices()
            .filter(|&v| self.role(v).is_some_and(|r| std::mem::discriminant(&r) == kind))
            .collect()
    }

    /// Neighbours in rotation order.
    pub fn rotation(&self, v: VertexId) -> &[VertexId] {
        self.rotation.get(v.index()).map_or(&[], |r| r.as_slice())
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.rotation(v).len()
    }

    pub fn sorted_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut n = self.rotation(v).to_vec();
        n.sort_unstable();
        n
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        if !self.contains_vertex(a) || !self.contains_vertex(b) {
            return false;
        }
        let (x, y) = if self.degree(a) <= self.degree(b) { (a, b) } else { (b, a) };
        self.rotation(x).contains(&y)
    }

    /// All edges in ascending order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in self.vertices() {
            for &v in self.rotation(u) {
                if u < v {
                    out.push(Edge(u, v));
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn succ(&self, v: VertexId, a: VertexId) -> VertexId {
        let rot = &self.rotation[v.index()];
        let i = rot
            .iter()
            .position(|&x| x == a)
            .expect("rotation lookup on a non-neighbour");
        rot[(i + 1) % rot.len()]
    }

    /// Raw boundary walk of the face containing dart `a -> b`, starting at `a`.
    fn trace(&self, a: VertexId, b: VertexId) -> Vec<VertexId> {
        let mut walk = vec![a];
        let (mut x, mut y) = (a, b);
        loop {
            let z = self.succ(y, x);
            x = y;
            y = z;
            if (x, y) == (a, b) {
                break;
            }
            walk.push(x);
        }
        walk
    }

    /// The face containing dart `a -> b`.
    pub fn face_of(&self, a: VertexId, b: VertexId) -> Result<Face, GraphError> {
        if !self.has_edge(a, b) {
            return Err(GraphError::UnknownEdge(Edge::new(a, b)));
        }
        Ok(Face::new(self.trace(a, b)))
    }

    pub fn outer_face(&self) -> Face {
        Face::new(self.trace(self.outer.0, self.outer.1))
    }

    pub fn is_outer(&self, face: &Face) -> bool {
        self.outer_face() == *face
    }

    /// All faces, sorted by canonical boundary.
    pub fn faces(&self) -> Vec<Face> {
        let mut seen: Vec<Vec<bool>> = self.rotation.iter().map(|r| vec![false; r.len()]).collect();
        let mut out = Vec::new();
        for u in self.vertices() {
            for (i, &v) in self.rotation(u).iter().enumerate() {
                if seen[u.index()][i] {
                    continue;
                }
                let walk = self.trace(u, v);
                let n = walk.len();
                for j in 0..n {
                    let (x, y) = (walk[j], walk[(j + 1) % n]);
                    let pos = self.rotation[x.index()]
                        .iter()
                        .position(|&w| w == y)
                        .expect("traced dart exists");
                    seen[x.index()][pos] = true;
                }
                out.push(Face::new(walk));
            }
        }
        out.sort();
        out
    }

    pub fn face_count(&self) -> usize {
        self.faces().len()
    }

    /// Returns a dart lying on `face`, or `UnknownFace`.
    fn locate(&self, face: &Face) -> Result<(VertexId, VertexId), GraphError> {
        let b = face.boundary();
        if b.len() < 2 || !self.has_edge(b[0], b[1]) {
            return Err(GraphError::UnknownFace);
        }
        if Face::new(self.trace(b[0], b[1])) == *face {
            Ok((b[0], b[1]))
        } else {
            Err(GraphError::UnknownFace)
        }
    }

    /// Finds the triangular face with the given vertex set, if any.
    pub fn find_triangle(&self, a: VertexId, b: VertexId, c: VertexId) -> Option<Face> {
        if !self.has_edge(a, b) {
            return None;
        }
        [(a, b), (b, a)].into_iter().find_map(|(x, y)| {
            let f = Face::new(self.trace(x, y));
            (f.is_triangle() && f.contains(c)).then_some(f)
        })
    }

    fn check_euler(&self) -> Result<(), GraphError> {
        let (v, e, f) = (self.vertex_count(), self.edge_count(), self.face_count());
        if v + f != e + 2 {
            return Err(GraphError::EulerViolation {
                vertices: v,
                edges: e,
                faces: f,
            });
        }
        Ok(())
    }

    /// Full structural check: symmetric simple adjacency, Euler's formula,
    /// and every face walk long enough.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut darts = 0usize;
        for u in self.vertices() {
            let rot = self.rotation(u);
            let mut uniq: Vec<VertexId> = rot.to_vec();
            uniq.sort_unstable();
            uniq.dedup();
            if uniq.len() != rot.len() {
                return Err(GraphError::NonSimple(format!("parallel edges at {u}")));
            }
            for &v in rot {
                if v == u {
                    return Err(GraphError::NonSimple(format!("loop at {u}")));
                }
                if !self.contains_vertex(v) || !self.rotation(v).contains(&u) {
                    return Err(GraphError::InconsistentFaces(format!(
                        "asymmetric adjacency {u}-{v}"
                    )));
                }
            }
            darts += rot.len();
        }
        if darts != 2 * self.edge_count {
            return Err(GraphError::InconsistentFaces("edge count out of sync".into()));
        }
        if !self.has_edge(self.outer.0, self.outer.1) {
            return Err(GraphError::InconsistentFaces("outer dart missing".into()));
        }
        let faces = self.faces();
        if self.edge_count > 1 && faces.iter().any(|f| f.len() < 3) {
            return Err(GraphError::NonSimple("face of length < 3".into()));
        }
        self.check_euler()
    }

    fn alloc_vertex(&mut self, role: RoleTag) -> VertexId {
        let id = VertexId(self.roles.len() as u32);
        self.roles.push(Some(role));
        self.rotation.push(Vec::new());
        id
    }

    fn insert_after(&mut self, v: VertexId, anchor: VertexId, items: &[VertexId]) {
        let rot = &mut self.rotation[v.index()];
        let i = rot.iter().position(|&x| x == anchor).expect("anchor is a neighbour");
        rot.splice(i + 1..i + 1, items.iter().copied());
    }

    fn insert_before(&mut self, v: VertexId, anchor: VertexId, items: &[VertexId]) {
        let rot = &mut self.rotation[v.index()];
        let i = rot.iter().position(|&x| x == anchor).expect("anchor is a neighbour");
        rot.splice(i..i, items.iter().copied());
    }

    /// Adds a vertex inside a bounded face, adjacent to its whole boundary.
    pub fn stellate_face(&mut self, face: &Face) -> Result<VertexId, GraphError> {
        self.stellate_face_as(face, RoleTag::Plain)
    }

    /// As [`PlaneGraph::stellate_face`], tagging the new vertex with `role`.
    pub fn stellate_face_as(&mut self, face: &Face, role: RoleTag) -> Result<VertexId, GraphError> {
        let (a, b) = self.locate(face)?;
        if self.is_outer(face) {
            return Err(GraphError::OuterFace);
        }
        let walk = self.trace(a, b);
        let distinct: BTreeSet<VertexId> = walk.iter().copied().collect();
        if distinct.len() != walk.len() {
            return Err(GraphError::NonSimple(
                "stellating a face with a repeated boundary vertex".into(),
            ));
        }
        let n = walk.len();
        let x = self.alloc_vertex(role);
        for i in 0..n {
            let prev = walk[(i + n - 1) % n];
            self.insert_after(walk[i], prev, &[x]);
        }
        self.rotation[x.index()] = walk.iter().rev().copied().collect();
        self.edge_count += n;
        debug_assert!(self.validate().is_ok());
        Ok(x)
    }

    /// Stellates every bounded face present at call time, in canonical face order.
    pub fn stellate_all_bounded(&mut self) -> Vec<VertexId> {
        self.stellate_all_bounded_as(RoleTag::Plain)
    }

    pub fn stellate_all_bounded_as(&mut self, role: RoleTag) -> Vec<VertexId> {
        let outer = self.outer_face();
        let snapshot: Vec<Face> = self.faces().into_iter().filter(|f| *f != outer).collect();
        snapshot
            .iter()
            .map(|f| {
                self.stellate_face_as(f, role)
                    .expect("snapshot faces stay valid while stellating others")
            })
            .collect()
    }

    /// Inserts edge `(u, v)` through `face`, splitting it in two.
    pub fn insert_edge(&mut self, u: VertexId, v: VertexId, face: &Face) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::NonSimple(format!("loop at {u}")));
        }
        if self.has_edge(u, v) {
            return Err(GraphError::NonSimple(format!("edge ({u},{v}) already present")));
        }
        let (a, b) = self.locate(face)?;
        let walk = self.trace(a, b);
        let n = walk.len();
        let iu = walk.iter().position(|&x| x == u);
        let iv = walk.iter().position(|&x| x == v);
        let (Some(iu), Some(iv)) = (iu, iv) else {
            return Err(GraphError::NotCofacial(u, v));
        };
        let pu = walk[(iu + n - 1) % n];
        let pv = walk[(iv + n - 1) % n];
        self.insert_after(u, pu, &[v]);
        self.insert_after(v, pv, &[u]);
        self.edge_count += 1;
        debug_assert!(self.validate().is_ok());
        Ok(())
    }

    /// Removes an edge, merging the two faces on its sides.
    pub fn remove_edge(&mut self, e: Edge) -> Result<(), GraphError> {
        let (u, v) = (e.u(), e.v());
        if !self.has_edge(u, v) {
            return Err(GraphError::UnknownEdge(e));
        }
        let walk = self.trace(u, v);
        let n = walk.len();
        if (0..n).any(|i| walk[i] == v && walk[(i + 1) % n] == u) {
            return Err(GraphError::BridgeViolation(e));
        }
        let next = (walk[1], walk[2 % n]);
        if self.outer == (u, v) || self.outer == (v, u) {
            // The merged face contains the rest of this walk.
            self.outer = next;
        }
        self.rotation[u.index()].retain(|&x| x != v);
        self.rotation[v.index()].retain(|&x| x != u);
        self.edge_count -= 1;
        if !self.has_edge(self.outer.0, self.outer.1) {
            self.outer = next;
        }
        debug_assert!(self.validate().is_ok());
        Ok(())
    }

    /// Mirror image: reverses every rotation and therefore every face walk.
    pub fn reflect(&mut self) {
        for rot in &mut self.rotation {
            rot.reverse();
        }
        self.outer = (self.outer.1, self.outer.0);
    }

    /// Replaces edge `e = (u, v)` by a copy of `h`, identifying `a` with `e.u()`
    /// and `b` with `e.v()`. Returns the id each vertex of `h` received
    /// (indexed by `h`'s vertex ids).
    pub fn attach(
        &mut self,
        e: Edge,
        h: &PlaneGraph,
        a: VertexId,
        b: VertexId,
    ) -> Result<Vec<Option<VertexId>>, GraphError> {
        self.attach_oriented(e.u(), e.v(), h, a, b)
    }

    /// As [`PlaneGraph::attach`] with an explicit orientation: `a` goes to `u`, `b` to `v`.
    pub fn attach_oriented(
        &mut self,
        u: VertexId,
        v: VertexId,
        h: &PlaneGraph,
        a: VertexId,
        b: VertexId,
    ) -> Result<Vec<Option<VertexId>>, GraphError> {
        if !self.has_edge(u, v) {
            return Err(GraphError::UnknownEdge(Edge::new(u, v)));
        }
        for p in [a, b] {
            if !h.contains_vertex(p) {
                return Err(GraphError::UnknownVertex(p));
            }
        }
        if a == b {
            return Err(GraphError::NonConsecutivePoles);
        }
        let outer = h.outer_face();
        if !outer.contains(a) || !outer.contains(b) {
            return Err(GraphError::PolesNotOnOuterFace);
        }
        let mut h = h.clone();
        let drop_pole_edge = !h.has_edge(a, b);
        if drop_pole_edge {
            h.insert_edge(a, b, &outer)?;
        }
        let outer = h.outer_face();
        let has_dart = |f: &Face, x: VertexId, y: VertexId| f.darts().any(|d| d == (x, y));
        if !has_dart(&outer, a, b) {
            if has_dart(&outer, b, a) {
                h.reflect();
            } else {
                return Err(GraphError::NonConsecutivePoles);
            }
        }

        let mut map: Vec<Option<VertexId>> = vec![None; h.id_bound()];
        map[a.index()] = Some(u);
        map[b.index()] = Some(v);
        for x in h.vertices() {
            if x != a && x != b {
                let role = h.role(x).unwrap_or(RoleTag::Plain);
                map[x.index()] = Some(self.alloc_vertex(role));
            }
        }
        let m = |x: VertexId| map[x.index()].expect("mapped");
        for x in h.vertices() {
            if x != a && x != b {
                self.rotation[m(x).index()] = h.rotation(x).iter().map(|&y| m(y)).collect();
            }
        }
        let around_a = rotate_to(h.rotation(a), b);
        let around_b = rotate_to(h.rotation(b), a);
        let extra_u: Vec<VertexId> = around_a[1..].iter().map(|&y| m(y)).collect();
        let extra_v: Vec<VertexId> = around_b[1..].iter().map(|&y| m(y)).collect();
        self.insert_after(u, v, &extra_u);
        self.insert_before(v, u, &extra_v);
        self.edge_count += h.edge_count - 1;
        if self.outer == (v, u) {
            if let Some(&k1) = extra_v.first() {
                self.outer = (v, k1);
            }
        }
        if drop_pole_edge {
            self.remove_edge(Edge::new(u, v))?;
        }
        debug_assert!(self.validate().is_ok());
        Ok(map)
    }

    /// Identifies `v` with `u` through a face they share; `v` is deleted and
    /// parallel edges are merged.
    pub fn contract_pair(&mut self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        for x in [u, v] {
            if !self.contains_vertex(x) {
                return Err(GraphError::UnknownVertex(x));
            }
        }
        if u == v {
            return Err(GraphError::LoopCreated(u, v));
        }
        if self.has_edge(u, v) {
            return Err(GraphError::LoopCreated(u, v));
        }
        // A corner p -> u -> q whose face also passes through r -> v -> s.
        // The merged rotation of u runs q..p and then s..r.
        let mut found = None;
        for &q in self.rotation(u) {
            let walk = self.trace(u, q);
            if let Some(j) = walk.iter().position(|&x| x == v) {
                found = Some((q, walk[(j + 1) % walk.len()]));
                break;
            }
        }
        let Some((q, s)) = found else {
            return Err(GraphError::NotCofacial(u, v));
        };
        let old_outer = self.trace(self.outer.0, self.outer.1);

        let nu: BTreeSet<VertexId> = self.rotation(u).iter().copied().collect();
        let common: BTreeSet<VertexId> = self
            .rotation(v)
            .iter()
            .copied()
            .filter(|x| nu.contains(x))
            .collect();
        let mut merged = rotate_to(self.rotation(u), q);
        merged.extend(
            rotate_to(self.rotation(v), s)
                .into_iter()
                .filter(|x| !common.contains(x)),
        );
        let v_neighbors = std::mem::take(&mut self.rotation[v.index()]);
        for &x in &v_neighbors {
            let rot = &mut self.rotation[x.index()];
            if common.contains(&x) {
                rot.retain(|&y| y != v);
            } else {
                for y in rot.iter_mut() {
                    if *y == v {
                        *y = u;
                    }
                }
            }
        }
        self.rotation[u.index()] = merged;
        self.roles[v.index()] = None;
        self.edge_count -= common.len();

        let relabel = |x: VertexId| if x == v { u } else { x };
        let n = old_outer.len();
        let surviving = (0..n)
            .map(|i| (old_outer[i], old_outer[(i + 1) % n]))
            .filter(|&(x, y)| {
                // Darts of deleted copies (v, c) for common c are gone.
                !((x == v && common.contains(&y)) || (y == v && common.contains(&x)))
            })
            .map(|(x, y)| (relabel(x), relabel(y)))
            .find(|&(x, y)| self.has_edge(x, y));
        self.outer = surviving.unwrap_or_else(|| (u, self.rotation[u.index()][0]));
        debug_assert!(self.validate().is_ok());
        Ok(())
    }

    /// All triangles `(a, b, c)` with `a < b < c`, ascending.
    pub fn triangles(&self) -> Vec<[VertexId; 3]> {
        let adj = self.sorted_adjacency();
        let mut out = Vec::new();
        for a in self.vertices() {
            for &b in adj[a.index()].iter().filter(|&&b| b > a) {
                for c in sorted_intersection(&adj[a.index()], &adj[b.index()]) {
                    if c > b {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }

    /// All K4 subgraphs `(a, b, c, d)` with `a < b < c < d`, found by extending
    /// triangles with a common neighbour.
    pub fn k4_subgraphs(&self) -> Vec<[VertexId; 4]> {
        let adj = self.sorted_adjacency();
        let mut out = Vec::new();
        for [a, b, c] in self.triangles() {
            let ab = sorted_intersection(&adj[a.index()], &adj[b.index()]);
            for d in sorted_intersection(&ab, &adj[c.index()]) {
                if d > c {
                    out.push([a, b, c, d]);
                }
            }
        }
        out
    }

    fn sorted_adjacency(&self) -> Vec<Vec<VertexId>> {
        (0..self.id_bound())
            .map(|i| self.sorted_neighbors(VertexId(i as u32)))
            .collect()
    }

    pub fn is_maximal_planar(&self) -> bool {
        let n = self.vertex_count();
        n >= 3 && self.edge_count + 6 == 3 * n && self.faces().iter().all(|f| f.is_triangle())
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.vertices().next() else {
            return true;
        };
        self.bfs(start, &[]).iter().filter(|d| d.is_some()).count() == self.vertex_count()
    }

    /// Connected with no articulation point (iterative Hopcroft–Tarjan).
    pub fn is_biconnected(&self) -> bool {
        let n = self.vertex_count();
        if n < 3 {
            return self.is_connected();
        }
        if !self.is_connected() {
            return false;
        }
        let bound = self.id_bound();
        let mut disc = vec![usize::MAX; bound];
        let mut low = vec![0usize; bound];
        let root = self.vertices().next().expect("non-empty");
        let mut timer = 0;
        let mut root_children = 0;
        // (vertex, parent, next neighbour index)
        let mut stack: Vec<(VertexId, Option<VertexId>, usize)> = vec![(root, None, 0)];
        disc[root.index()] = timer;
        low[root.index()] = timer;
        timer += 1;
        while let Some(&mut (x, parent, ref mut idx)) = stack.last_mut() {
            let rot = self.rotation(x);
            if *idx < rot.len() {
                let y = rot[*idx];
                *idx += 1;
                if Some(y) == parent {
                    continue;
                }
                if disc[y.index()] == usize::MAX {
                    disc[y.index()] = timer;
                    low[y.index()] = timer;
                    timer += 1;
                    if x == root {
                        root_children += 1;
                    }
                    stack.push((y, Some(x), 0));
                } else {
                    low[x.index()] = low[x.index()].min(disc[y.index()]);
                }
            } else {
                stack.pop();
                if let Some(p) = parent {
                    low[p.index()] = low[p.index()].min(low[x.index()]);
                    if p != root && low[x.index()] >= disc[p.index()] {
                        return false;
                    }
                }
            }
        }
        root_children <= 1
    }

    /// Breadth-first distances from `start`, never entering `blocked`.
    pub fn bfs(&self, start: VertexId, blocked: &[VertexId]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.id_bound()];
        if !self.contains_vertex(start) || blocked.contains(&start) {
            return dist;
        }
        dist[start.index()] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x.index()].expect("queued vertices have distances");
            for &y in self.rotation(x) {
                if dist[y.index()].is_none() && !blocked.contains(&y) {
                    dist[y.index()] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Text form: header, `v`, `e` and `f` lines, each block sorted.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "graph {} vertices={} edges={}\n",
            self.name,
            self.vertex_count(),
            self.edge_count
        ));
        for v in self.vertices() {
            s.push_str(&format!("v {} {}\n", v, self.role(v).unwrap_or(RoleTag::Plain)));
        }
        for e in self.edges() {
            s.push_str(&format!("e {} {}\n", e.u(), e.v()));
        }
        let outer = self.outer_face();
        for f in self.faces() {
            s.push('f');
            for v in f.boundary() {
                s.push_str(&format!(" {v}"));
            }
            if f == outer {
                s.push_str(" outer");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<PlaneGraph, ParseError> {
        crate::graph::parse_graph(text)
    }
}

fn rotate_to(rot: &[VertexId], first: VertexId) -> Vec<VertexId> {
    let i = rot.iter().position(|&x| x == first).expect("rotation contains anchor");
    let mut out = Vec::with_capacity(rot.len());
    out.extend_from_slice(&rot[i..]);
    out.extend_from_slice(&rot[..i]);
    out
}

fn sorted_intersection(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl PartialEq for PlaneGraph {
    /// Same vertices, roles, rotation system (up to cyclic shift) and outer face.
    fn eq(&self, other: &Self) -> bool {
        let verts: Vec<VertexId> = self.vertices().collect();
        if verts != other.vertices().collect::<Vec<_>>() || self.edge_count != other.edge_count {
            return false;
        }
        verts.iter().all(|&v| {
            self.role(v) == other.role(v)
                && canonical_rotation(self.rotation(v).to_vec())
                    == canonical_rotation(other.rotation(v).to_vec())
        }) && self.outer_face() == other.outer_face()
    }
}

impl Eq for PlaneGraph {}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_id(tok: &str, line: usize) -> Result<VertexId, ParseError> {
    tok.parse::<u32>()
        .map(VertexId)
        .map_err(|_| syntax(line, format!("bad vertex id `{tok}`")))
}

fn parse_count(tok: Option<&str>, key: &str, line: usize) -> Result<usize, ParseError> {
    tok.and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| syntax(line, format!("header needs `{key}=<n>`")))
}

fn parse_graph(text: &str) -> Result<PlaneGraph, ParseError> {
    let mut header: Option<(String, usize, usize)> = None;
    let mut roles: Vec<(VertexId, RoleTag, usize)> = Vec::new();
    let mut edges: Vec<(Edge, usize)> = Vec::new();
    let mut faces: Vec<Vec<VertexId>> = Vec::new();
    let mut outer: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        let Some(kind) = toks.next() else { continue };
        match kind {
            "graph" => {
                if header.is_some() {
                    return Err(syntax(line, "duplicate header"));
                }
                let name = toks.next().ok_or_else(|| syntax(line, "missing graph name"))?;
                let n = parse_count(toks.next(), "vertices", line)?;
                let m = parse_count(toks.next(), "edges", line)?;
                header = Some((name.to_string(), n, m));
            }
            _ if header.is_none() => return Err(syntax(line, "expected `graph` header first")),
            "v" => {
                let id = parse_id(toks.next().ok_or_else(|| syntax(line, "missing id"))?, line)?;
                let role = toks
                    .next()
                    .ok_or_else(|| syntax(line, "missing role"))?
                    .parse::<RoleTag>()
                    .map_err(|e| syntax(line, e))?;
                roles.push((id, role, line));
            }
            "e" => {
                let a = parse_id(toks.next().ok_or_else(|| syntax(line, "missing endpoint"))?, line)?;
                let b = parse_id(toks.next().ok_or_else(|| syntax(line, "missing endpoint"))?, line)?;
                edges.push((Edge::new(a, b), line));
            }
            "f" => {
                let mut walk = Vec::new();
                for tok in toks.by_ref() {
                    if tok == "outer" {
                        if outer.is_some() {
                            return Err(syntax(line, "more than one outer face"));
                        }
                        outer = Some(faces.len());
                    } else {
                        walk.push(parse_id(tok, line)?);
                    }
                }
                faces.push(walk);
            }
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
        if toks.next().is_some() {
            return Err(syntax(line, "trailing fields"));
        }
    }
    let (name, n, m) = header.ok_or_else(|| syntax(1, "missing `graph` header"))?;
    let declared: BTreeSet<VertexId> = roles.iter().map(|r| r.0).collect();
    if declared.len() != roles.len() {
        return Err(syntax(1, "duplicate vertex declaration"));
    }
    for &(e, line) in &edges {
        for x in [e.u(), e.v()] {
            if !declared.contains(&x) {
                return Err(syntax(line, format!("edge references undeclared vertex {x}")));
            }
        }
    }
    let outer = outer.ok_or_else(|| syntax(1, "no face marked outer"))?;
    let mut g = PlaneGraph::from_faces(&faces, outer)?;
    g.name = name;
    for &(v, role, line) in &roles {
        g.set_role(v, role)
            .map_err(|_| syntax(line, format!("vertex {v} lies on no face")))?;
    }
    if g.vertex_count() != declared.len() || g.vertex_count() != n {
        return Err(syntax(1, "vertex count does not match header/declarations"));
    }
    let listed: BTreeSet<Edge> = edges.iter().map(|e| e.0).collect();
    if listed.len() != edges.len() || g.edges().into_iter().collect::<BTreeSet<_>>() != listed {
        return Err(syntax(1, "edge list does not match the face boundaries"));
    }
    if g.edge_count() != m {
        return Err(syntax(1, "edge count does not match header"));
    }
    Ok(g)
}

/// Read-only view shared by plane graphs and plain edge lists, so the encoder
/// and the validator also accept non-planar inputs such as `K_6`.
pub trait GraphView {
    fn vertex_list(&self) -> Vec<VertexId>;
    /// Sorted, without duplicates.
    fn edge_list(&self) -> Vec<Edge>;
    fn contains_edge(&self, u: VertexId, v: VertexId) -> bool;
    /// Every `K_4` subgraph as ascending vertex quadruples.
    fn k4_list(&self) -> Vec<[VertexId; 4]>;
}

impl GraphView for PlaneGraph {
    fn vertex_list(&self) -> Vec<VertexId> {
        self.vertices().collect()
    }

    fn edge_list(&self) -> Vec<Edge> {
        self.edges()
    }

    fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.has_edge(u, v)
    }

    fn k4_list(&self) -> Vec<[VertexId; 4]> {
        self.k4_subgraphs()
    }
}

/// A simple undirected graph with no embedding attached.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimpleGraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeSet<Edge>,
}

impl SimpleGraph {
    pub fn new(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<SimpleGraph, GraphError> {
        let mut g = SimpleGraph {
            vertices: vertices.into_iter().collect(),
            edges: BTreeSet::new(),
        };
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::NonSimple(format!("loop at {u}")));
            }
            g.vertices.insert(u);
            g.vertices.insert(v);
            if !g.edges.insert(Edge::new(u, v)) {
                return Err(GraphError::NonSimple(format!("edge {} repeated", Edge::new(u, v))));
            }
        }
        Ok(g)
    }

    /// `K_n` on vertices `0..n`.
    pub fn complete(n: u32) -> SimpleGraph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (VertexId(u), VertexId(v))));
        SimpleGraph::new((0..n).map(VertexId), edges).expect("complete graph is simple")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.iter().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for e in self.edges.iter().filter(|e| e.contains(x)) {
                let y = if e.u() == x { e.v() } else { e.u() };
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen.len() == self.vertices.len()
    }
}

impl From<&PlaneGraph> for SimpleGraph {
    fn from(g: &PlaneGraph) -> SimpleGraph {
        SimpleGraph {
            vertices: g.vertices().collect(),
            edges: g.edges().into_iter().collect(),
        }
    }
}

impl GraphView for SimpleGraph {
    fn vertex_list(&self) -> Vec<VertexId> {
        self.vertices.iter().copied().collect()
    }

    fn edge_list(&self) -> Vec<Edge> {
        self.edges.iter().copied().collect()
    }

    fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        u != v && self.edges.contains(&Edge::new(u, v))
    }

    fn k4_list(&self) -> Vec<[VertexId; 4]> {
        let vs = self.vertex_list();
        let adj = |a, b| self.contains_edge(a, b);
        let mut out = Vec::new();
        for (i, &a) in vs.iter().enumerate() {
            for (j, &b) in vs.iter().enumerate().skip(i + 1).filter(|&(_, &b)| adj(a, b)) {
                for (k, &c) in vs.iter().enumerate().skip(j + 1).filter(|&(_, &c)| adj(a, c) && adj(b, c)) {
                    for &d in vs[k + 1..].iter().filter(|&&d| adj(a, d) && adj(b, d) && adj(c, d)) {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
        out
    }
}

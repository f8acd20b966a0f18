//! Builders for the stellated gadget family `Q_k`, its contracted variant,
//! the shared-pole base graph and the final graph with attached copies.

use thiserror::Error;

use crate::graph::{Edge, GraphError, PlaneGraph, RoleTag, VertexId};

/// Default vertex cap for [`build_final_g`].
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("k must be at least {min}, got {k}")]
    InvalidK { k: usize, min: usize },
    #[error("N must be at least 1, got {0}")]
    InvalidN(usize),
    #[error("construction would have {vertices} vertices, above the cap of {cap}")]
    SizeLimitExceeded { vertices: usize, cap: usize },
    #[error("graph minus its poles is disconnected")]
    Disconnected,
    #[error("role tags do not describe a gadget: {0}")]
    MissingRoles(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SatelliteEdge {
    pub a: VertexId,
    pub b: VertexId,
    /// Which copy of the gadget the edge belongs to (0 for a single gadget).
    pub copy: usize,
    /// Segment index `i` within its copy: the edge sits between `t_i` and `t_{i+1}`.
    pub segment: usize,
}

impl SatelliteEdge {
    pub fn edge(&self) -> Edge {
        Edge::new(self.a, self.b)
    }
}

/// A plane graph together with its named vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetGraph {
    pub graph: PlaneGraph,
    pub poles: (VertexId, VertexId),
    pub terminals: Vec<VertexId>,
    pub satellite_edges: Vec<SatelliteEdge>,
}

impl GadgetGraph {
    pub fn role_query(&self, role: RoleTag) -> Vec<VertexId> {
        self.graph.role_query(role)
    }

    pub fn pole_a(&self) -> VertexId {
        self.poles.0
    }

    pub fn pole_b(&self) -> VertexId {
        self.poles.1
    }

    /// Recovers the named vertices of a graph read back from its text form.
    /// `A` is the pole with the smaller id; terminals are ordered by index.
    pub fn from_roles(graph: PlaneGraph) -> Result<GadgetGraph, FamilyError> {
        let mut poles = graph.role_query(RoleTag::Pole);
        poles.sort();
        let [pa, pb] = poles[..] else {
            return Err(FamilyError::MissingRoles(format!(
                "expected 2 poles, found {}",
                poles.len()
            )));
        };
        let mut terminals: Vec<(usize, VertexId)> = graph
            .role_query(RoleTag::Terminal(0))
            .into_iter()
            .map(|v| match graph.role(v) {
                Some(RoleTag::Terminal(i)) => (i, v),
                _ => unreachable!("role_query matched a terminal"),
            })
            .collect();
        terminals.sort();
        if terminals.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(FamilyError::MissingRoles("duplicate terminal index".into()));
        }
        let mut sat_a = std::collections::BTreeMap::new();
        for v in graph.role_query(RoleTag::SatelliteA(0)) {
            if let Some(RoleTag::SatelliteA(i)) = graph.role(v) {
                sat_a.insert(i, v);
            }
        }
        let mut satellite_edges = Vec::new();
        for v in graph.role_query(RoleTag::SatelliteB(0)) {
            if let Some(RoleTag::SatelliteB(i)) = graph.role(v) {
                let a = *sat_a.get(&i).ok_or_else(|| {
                    FamilyError::MissingRoles(format!("satellite {i} has no a-side"))
                })?;
                satellite_edges.push((i, a, v));
            }
        }
        satellite_edges.sort();
        // With N copies there are N*k terminals and N*(k-1) satellite edges.
        let copies = terminals.len().saturating_sub(satellite_edges.len());
        let per_copy = match copies {
            0 => None,
            n if terminals.len() % n == 0 && terminals.len() / n >= 2 => Some(terminals.len() / n - 1),
            _ => None,
        };
        let satellite_edges = satellite_edges
            .into_iter()
            .map(|(i, a, b)| {
                let (copy, segment) = per_copy.map_or((0, i), |s| (i / s, i % s));
                SatelliteEdge { a, b, copy, segment }
            })
            .collect();
        Ok(GadgetGraph {
            graph,
            poles: (pa, pb),
            terminals: terminals.into_iter().map(|(_, v)| v).collect(),
            satellite_edges,
        })
    }
}

/// Closed-form vertex count of `Q_k`: `k + 2` skeleton vertices plus 38 per segment.
pub fn qk_vertex_count(k: usize) -> usize {
    39 * k - 36
}

pub fn qk_edge_count(k: usize) -> usize {
    117 * k - 114
}

/// The unique vertex of stellation `round` adjacent to all of `face`.
fn stellation_vertex(g: &PlaneGraph, round: u8, face: [VertexId; 3]) -> VertexId {
    let hits: Vec<VertexId> = g
        .rotation(face[0])
        .iter()
        .copied()
        .filter(|&x| {
            g.role(x) == Some(RoleTag::Stellation(round))
                && g.has_edge(x, face[1])
                && g.has_edge(x, face[2])
        })
        .collect();
    assert_eq!(hits.len(), 1, "stellation vertex of {face:?} in round {round}");
    hits[0]
}

fn stellate_triangle(
    g: &mut PlaneGraph,
    tri: [VertexId; 3],
    role: RoleTag,
) -> Result<VertexId, GraphError> {
    let face = g
        .find_triangle(tri[0], tri[1], tri[2])
        .ok_or(GraphError::UnknownFace)?;
    g.stellate_face_as(&face, role)
}

/// Builds the gadget `Q_k`.
///
/// Vertex ids: `A = 0`, `B = 1`, `t_i = 2 + i`, then `a_i`, `b_i` per
/// segment, then stellation vertices in creation order.
pub fn build_qk(k: usize) -> Result<GadgetGraph, FamilyError> {
    if k < 2 {
        return Err(FamilyError::InvalidK { k, min: 2 });
    }
    let pa = VertexId(0);
    let pb = VertexId(1);
    let t = |i: usize| VertexId((2 + i) as u32);
    let sat_a = |i: usize| VertexId((2 + k + 2 * i) as u32);
    let sat_b = |i: usize| VertexId((2 + k + 2 * i + 1) as u32);

    // K_{2,k} with the path A - b_i - a_i - B inside every bounded face
    // F_i = <A, t_i, B, t_{i+1}>, both sides triangulated from the terminals.
    let mut faces = Vec::with_capacity(6 * (k - 1) + 1);
    for i in 0..k - 1 {
        let (ti, tn, a, b) = (t(i), t(i + 1), sat_a(i), sat_b(i));
        faces.push(vec![pa, ti, b]);
        faces.push(vec![ti, a, b]);
        faces.push(vec![ti, pb, a]);
        faces.push(vec![pa, b, tn]);
        faces.push(vec![b, a, tn]);
        faces.push(vec![a, pb, tn]);
    }
    faces.push(vec![t(0), pa, t(k - 1), pb]);
    let outer_index = faces.len() - 1;
    let mut g = PlaneGraph::from_faces(&faces, outer_index)?;
    g.set_role(pa, RoleTag::Pole)?;
    g.set_role(pb, RoleTag::Pole)?;
    for i in 0..k {
        g.set_role(t(i), RoleTag::Terminal(i))?;
    }
    for i in 0..k - 1 {
        g.set_role(sat_a(i), RoleTag::SatelliteA(i))?;
        g.set_role(sat_b(i), RoleTag::SatelliteB(i))?;
    }

    g.stellate_all_bounded_as(RoleTag::Stellation(1));
    g.stellate_all_bounded_as(RoleTag::Stellation(2));

    for i in 0..k - 1 {
        let (ti, tn, a, b) = (t(i), t(i + 1), sat_a(i), sat_b(i));
        let c = stellation_vertex(&g, 1, [pa, ti, b]);
        let d = stellation_vertex(&g, 1, [pa, b, tn]);
        let e = stellation_vertex(&g, 1, [pb, ti, a]);
        let f = stellation_vertex(&g, 1, [pb, a, tn]);
        let c2 = stellation_vertex(&g, 2, [c, ti, b]);
        let d2 = stellation_vertex(&g, 2, [d, b, tn]);
        let e2 = stellation_vertex(&g, 2, [e, ti, a]);
        let f2 = stellation_vertex(&g, 2, [f, a, tn]);
        for tri in [
            [c, c2, ti],
            [c, c2, b],
            [d, d2, b],
            [d, d2, tn],
            [e, e2, ti],
            [e, e2, a],
            [f, f2, a],
            [f, f2, tn],
        ] {
            stellate_triangle(&mut g, tri, RoleTag::Stellation(3))?;
        }

        // Each face on the satellite edge has two neighbours away from it.
        for side in [ti, tn] {
            let mid = stellation_vertex(&g, 1, [side, a, b]);
            let apex = stellation_vertex(&g, 2, [a, b, mid]);
            stellate_triangle(&mut g, [b, mid, apex], RoleTag::Stellation(4))?;
            stellate_triangle(&mut g, [mid, a, apex], RoleTag::Stellation(4))?;
        }
    }

    let outer = g.outer_face();
    g.insert_edge(pa, pb, &outer)?;
    g.set_name(format!("qk-k{k}"));
    g.validate()?;
    debug_assert_eq!(g.vertex_count(), qk_vertex_count(k));

    Ok(GadgetGraph {
        graph: g,
        poles: (pa, pb),
        terminals: (0..k).map(t).collect(),
        satellite_edges: (0..k - 1)
            .map(|i| SatelliteEdge {
                a: sat_a(i),
                b: sat_b(i),
                copy: 0,
                segment: i,
            })
            .collect(),
    })
}

/// `Q_k` without the pole edge and with `t_0` and `t_{k-1}` identified.
pub fn build_qk_contracted(k: usize) -> Result<GadgetGraph, FamilyError> {
    if k < 3 {
        return Err(FamilyError::InvalidK { k, min: 3 });
    }
    let mut q = build_qk(k)?;
    let (pa, pb) = q.poles;
    q.graph.remove_edge(Edge::new(pa, pb))?;
    let last = q.terminals.pop().expect("k >= 3 terminals");
    q.graph.contract_pair(q.terminals[0], last)?;
    q.graph.set_name(format!("qk-k{k}-contracted"));
    q.graph.validate()?;
    Ok(q)
}

/// `N` copies of `Q_k` sharing both poles and the pole edge.
///
/// Copy `c` numbers its terminals `c*k + i` and its satellites `c*(k-1) + i`.
pub fn build_base_gn(k: usize, n: usize) -> Result<GadgetGraph, FamilyError> {
    if n < 1 {
        return Err(FamilyError::InvalidN(n));
    }
    let q = build_qk(k)?;
    let (pa, pb) = q.poles;
    let mut base = q.clone();
    for copy in 1..n {
        let map = base.graph.attach_oriented(pa, pb, &q.graph, pa, pb)?;
        let m = |x: VertexId| map[x.index()].expect("gadget vertex mapped");
        for (i, &ti) in q.terminals.iter().enumerate() {
            base.graph.set_role(m(ti), RoleTag::Terminal(copy * k + i))?;
            base.terminals.push(m(ti));
        }
        for s in &q.satellite_edges {
            let idx = copy * (k - 1) + s.segment;
            base.graph.set_role(m(s.a), RoleTag::SatelliteA(idx))?;
            base.graph.set_role(m(s.b), RoleTag::SatelliteB(idx))?;
            base.satellite_edges.push(SatelliteEdge {
                a: m(s.a),
                b: m(s.b),
                copy,
                segment: s.segment,
            });
        }
    }
    base.graph.set_name(format!("gn-k{k}-n{n}"));
    base.graph.validate()?;
    Ok(base)
}

/// Predicted vertex count of [`build_final_g`].
pub fn final_g_vertex_count(k: usize, n: usize) -> usize {
    let base = n * (qk_vertex_count(k) - 2) + 2;
    let sites = n * (k - 1);
    base + sites * (base - 2)
}

/// The base graph with a copy of itself attached along every satellite edge.
pub fn build_final_g(k: usize, n: usize, cap: usize) -> Result<PlaneGraph, FamilyError> {
    if k < 2 {
        return Err(FamilyError::InvalidK { k, min: 2 });
    }
    if n < 1 {
        return Err(FamilyError::InvalidN(n));
    }
    let predicted = final_g_vertex_count(k, n);
    if predicted > cap {
        return Err(FamilyError::SizeLimitExceeded {
            vertices: predicted,
            cap,
        });
    }
    let base = build_base_gn(k, n)?;
    let (pa, pb) = base.poles;
    let mut g = base.graph.clone();
    for s in &base.satellite_edges {
        g.attach_oriented(s.a, s.b, &base.graph, pa, pb)?;
    }
    g.set_name(format!("final-k{k}-n{n}"));
    g.validate()?;
    Ok(g)
}

/// Largest distance, avoiding both poles, from a terminal to any non-pole vertex.
pub fn dq_distance(q: &GadgetGraph) -> Result<usize, FamilyError> {
    let blocked = [q.poles.0, q.poles.1];
    let mut best = 0;
    for &t in &q.terminals {
        let dist = q.graph.bfs(t, &blocked);
        for v in q.graph.vertices().filter(|v| !blocked.contains(v)) {
            best = best.max(dist[v.index()].ok_or(FamilyError::Disconnected)?);
        }
    }
    Ok(best)
}

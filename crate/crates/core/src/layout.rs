//! Book embeddings, crossing tests, the embedding validator, and the
//! rainbow / twist / necklace pattern machinery.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{Edge, GraphView, VertexId};

/// Page index conventions for three-page books.
pub const BLUE: usize = 0;
pub const RED: usize = 1;
pub const GREEN: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("edges {0} and {1} share an endpoint")]
    NotIndependent(Edge, Edge),
    #[error("vertex {0} appears in an edge and as a reference vertex")]
    SharedVertex(VertexId),
    #[error("vertex {0} is not in the order")]
    MissingVertex(VertexId),
    #[error("embedding does not cover the graph: {0}")]
    CoverageMismatch(String),
    #[error("expected {expected} pages, embedding has {actual}")]
    WrongPageCount { expected: usize, actual: usize },
    #[error("need at least {needed} pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("sequence of length {len} is too short for a={a}, b={b}")]
    TooShort { len: usize, a: usize, b: usize },
    #[error("sequence values must be distinct")]
    NotDistinct,
    #[error("malformed embedding: {0}")]
    Malformed(String),
}

/// Position of each vertex along the spine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpineOrder {
    order: Vec<VertexId>,
    pos: BTreeMap<VertexId, usize>,
}

impl SpineOrder {
    pub fn new(order: Vec<VertexId>) -> Result<SpineOrder, LayoutError> {
        let mut pos = BTreeMap::new();
        for (i, &v) in order.iter().enumerate() {
            if pos.insert(v, i).is_some() {
                return Err(LayoutError::Malformed(format!("vertex {v} repeated in order")));
            }
        }
        Ok(SpineOrder { order, pos })
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.order
    }

    pub fn position(&self, v: VertexId) -> Result<usize, LayoutError> {
        self.pos.get(&v).copied().ok_or(LayoutError::MissingVertex(v))
    }

    pub fn reversed(&self) -> SpineOrder {
        SpineOrder::new(self.order.iter().rev().copied().collect()).expect("still a permutation")
    }

    fn span(&self, e: Edge) -> Result<(usize, usize), LayoutError> {
        let (a, b) = (self.position(e.u())?, self.position(e.v())?);
        Ok((a.min(b), a.max(b)))
    }
}

/// `u` and `v` lie on opposite sides of `(x, y)` when exactly one of them is
/// strictly between `x` and `y`.
pub fn opposite_sides(
    order: &SpineOrder,
    u: VertexId,
    v: VertexId,
    e: Edge,
) -> Result<bool, LayoutError> {
    for w in [u, v] {
        if e.contains(w) {
            return Err(LayoutError::SharedVertex(w));
        }
    }
    if u == v {
        return Err(LayoutError::SharedVertex(u));
    }
    let (lo, hi) = order.span(e)?;
    let inside = |w: VertexId| -> Result<bool, LayoutError> {
        let p = order.position(w)?;
        Ok(lo < p && p < hi)
    };
    Ok(inside(u)? != inside(v)?)
}

/// Independent edges cross when their endpoints interleave.
pub fn edges_cross(order: &SpineOrder, e: Edge, f: Edge) -> Result<bool, LayoutError> {
    if !e.is_independent(f) {
        return Err(LayoutError::NotIndependent(e, f));
    }
    Ok(spans_cross(order.span(e)?, order.span(f)?))
}

#[inline]
fn spans_cross((a, b): (usize, usize), (c, d): (usize, usize)) -> bool {
    (a < c && c < b && b < d) || (c < a && a < d && d < b)
}

/// A vertex order plus an edge-to-page assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BookEmbedding {
    pub order: SpineOrder,
    pub pages: BTreeMap<Edge, usize>,
    pub page_count: usize,
}

impl BookEmbedding {
    pub fn new(
        order: Vec<VertexId>,
        pages: BTreeMap<Edge, usize>,
        page_count: usize,
    ) -> Result<BookEmbedding, LayoutError> {
        if page_count == 0 {
            return Err(LayoutError::Malformed("page count must be positive".into()));
        }
        if let Some((e, p)) = pages.iter().find(|(_, &p)| p >= page_count) {
            return Err(LayoutError::Malformed(format!("edge {e} on page {p} of {page_count}")));
        }
        let order = SpineOrder::new(order)?;
        for e in pages.keys() {
            order.span(*e)?;
        }
        Ok(BookEmbedding {
            order,
            pages,
            page_count,
        })
    }

    pub fn page(&self, e: Edge) -> Option<usize> {
        self.pages.get(&e).copied()
    }

    /// Text form: `embedding pages=<p>`, `order ...`, one `page <p> <u> <v>` per edge.
    pub fn serialize(&self) -> String {
        let mut s = format!("embedding pages={}\norder", self.page_count);
        for v in self.order.vertices() {
            s.push_str(&format!(" {v}"));
        }
        s.push('\n');
        for (e, p) in &self.pages {
            s.push_str(&format!("page {} {} {}\n", p, e.u(), e.v()));
        }
        s
    }

    pub fn parse(text: &str) -> Result<BookEmbedding, LayoutError> {
        let mut page_count = None;
        let mut order = None;
        let mut pages = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |m: &str| LayoutError::Malformed(format!("line {}: {m}", i + 1));
            let mut toks = line.split_whitespace();
            match toks.next() {
                None => continue,
                Some("embedding") => {
                    let p = toks
                        .next()
                        .and_then(|t| t.strip_prefix("pages="))
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| bad("expected pages=<p>"))?;
                    page_count = Some(p);
                }
                Some("order") => {
                    let vs = toks
                        .by_ref()
                        .map(|t| t.parse::<u32>().map(VertexId))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad vertex id"))?;
                    order = Some(vs);
                }
                Some("page") => {
                    let nums = toks
                        .by_ref()
                        .map(|t| t.parse::<u32>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad number"))?;
                    let [p, u, v] = nums[..] else {
                        return Err(bad("expected `page <p> <u> <v>`"));
                    };
                    if pages.insert(Edge::new(VertexId(u), VertexId(v)), p as usize).is_some() {
                        return Err(bad("edge listed twice"));
                    }
                }
                Some(other) => return Err(bad(&format!("unknown record `{other}`"))),
            }
            if toks.next().is_some() {
                return Err(bad("trailing fields"));
            }
        }
        let page_count =
            page_count.ok_or_else(|| LayoutError::Malformed("missing embedding header".into()))?;
        let order = order.ok_or_else(|| LayoutError::Malformed("missing order line".into()))?;
        BookEmbedding::new(order, pages, page_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    SamePageCrossing,
    FourTwist,
    CrossingPairTwoPages,
    EdgeCrossingThreePages,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::SamePageCrossing => "same-page-crossing",
            ViolationKind::FourTwist => "four-twist",
            ViolationKind::CrossingPairTwoPages => "crossing-pair-two-pages",
            ViolationKind::EdgeCrossingThreePages => "edge-crossing-three-pages",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationReport {
    pub kind: ViolationKind,
    pub witnesses: Vec<Edge>,
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for e in &self.witnesses {
            write!(f, " {e}")?;
        }
        Ok(())
    }
}

fn check_coverage<G: GraphView + ?Sized>(g: &G, emb: &BookEmbedding) -> Result<(), LayoutError> {
    let gv: BTreeSet<VertexId> = g.vertex_list().into_iter().collect();
    let ev: BTreeSet<VertexId> = emb.order.vertices().iter().copied().collect();
    if gv != ev {
        return Err(LayoutError::CoverageMismatch(format!(
            "order has {} vertices, graph has {}",
            ev.len(),
            gv.len()
        )));
    }
    let ge = g.edge_list();
    if ge.len() != emb.pages.len() || ge.iter().any(|e| !emb.pages.contains_key(e)) {
        return Err(LayoutError::CoverageMismatch(
            "page assignment does not match the edge set".into(),
        ));
    }
    Ok(())
}

/// Every same-page crossing pair; empty iff `emb` is a valid book embedding of `g`.
pub fn validate_embedding<G: GraphView + ?Sized>(
    g: &G,
    emb: &BookEmbedding,
) -> Result<Vec<ViolationReport>, LayoutError> {
    check_coverage(g, emb)?;
    let mut by_page: Vec<Vec<(Edge, (usize, usize))>> = vec![Vec::new(); emb.page_count];
    for (&e, &p) in &emb.pages {
        by_page[p].push((e, emb.order.span(e)?));
    }
    let mut out = Vec::new();
    for edges in &by_page {
        for (i, &(e, se)) in edges.iter().enumerate() {
            for &(f, sf) in &edges[i + 1..] {
                if e.is_independent(f) && spans_cross(se, sf) {
                    out.push(ViolationReport {
                        kind: ViolationKind::SamePageCrossing,
                        witnesses: vec![e, f],
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    Rainbow,
    Twist,
    Necklace,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternClass {
    pub kind: PatternKind,
    pub size: usize,
}

fn pair_spans(
    order: &SpineOrder,
    pairs: &[(VertexId, VertexId)],
) -> Result<Vec<(usize, usize)>, LayoutError> {
    let mut seen = BTreeSet::new();
    let mut spans = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        let e = Edge::new(s, t);
        if s == t || !seen.insert(s) || !seen.insert(t) {
            let clash = pairs
                .iter()
                .map(|&(a, b)| Edge::new(a, b))
                .find(|f| *f != e && !f.is_independent(e))
                .unwrap_or(e);
            return Err(LayoutError::NotIndependent(e, clash));
        }
        spans.push(order.span(e)?);
    }
    Ok(spans)
}

/// Exact classification of independent pairs as a rainbow, twist or necklace.
pub fn classify_pairs(
    order: &SpineOrder,
    pairs: &[(VertexId, VertexId)],
) -> Result<PatternClass, LayoutError> {
    if pairs.len() < 2 {
        return Err(LayoutError::TooFewPairs {
            needed: 2,
            got: pairs.len(),
        });
    }
    let mut spans = pair_spans(order, pairs)?;
    spans.sort_unstable();
    let k = spans.len();
    let rainbow = spans.windows(2).all(|w| w[1].1 < w[0].1) && spans[k - 1].0 < spans[k - 1].1;
    let twist = spans.windows(2).all(|w| w[0].1 < w[1].1) && spans[k - 1].0 < spans[0].1;
    let necklace = spans.windows(2).all(|w| w[0].1 < w[1].0);
    let kind = if rainbow {
        PatternKind::Rainbow
    } else if twist {
        PatternKind::Twist
    } else if necklace {
        PatternKind::Necklace
    } else {
        PatternKind::Mixed
    };
    Ok(PatternClass { kind, size: k })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Monotone {
    /// Indices into the input of a strictly increasing subsequence.
    Increasing(Vec<usize>),
    Decreasing(Vec<usize>),
}

impl Monotone {
    pub fn indices(&self) -> &[usize] {
        match self {
            Monotone::Increasing(v) | Monotone::Decreasing(v) => v,
        }
    }
}

/// Longest strictly monotone subsequence ending at each index, with back links.
fn longest_chains<T: PartialOrd>(seq: &[T], increasing: bool) -> (Vec<usize>, Vec<Option<usize>>) {
    let n = seq.len();
    let mut len = vec![1usize; n];
    let mut prev = vec![None; n];
    for j in 0..n {
        for i in 0..j {
            let ok = if increasing { seq[i] < seq[j] } else { seq[i] > seq[j] };
            if ok && len[i] + 1 > len[j] {
                len[j] = len[i] + 1;
                prev[j] = Some(i);
            }
        }
    }
    (len, prev)
}

fn chain_to(prev: &[Option<usize>], end: usize, want: usize) -> Vec<usize> {
    let mut out = vec![end];
    let mut cur = end;
    while let Some(p) = prev[cur] {
        out.push(p);
        cur = p;
    }
    out.reverse();
    // Keep the first `want` entries of the chain.
    out.truncate(want);
    out
}

/// Erdős–Szekeres: a sequence of `a*b + 1` distinct values has an increasing
/// subsequence of length `a + 1` or a decreasing one of length `b + 1`.
/// Returns the increasing witness when both exist.
pub fn monotone_subsequence<T: PartialOrd>(
    seq: &[T],
    a: usize,
    b: usize,
) -> Result<Monotone, LayoutError> {
    if seq.len() <= a * b {
        return Err(LayoutError::TooShort { len: seq.len(), a, b });
    }
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i].partial_cmp(&seq[j]).is_none_or(|o| o.is_eq()) {
                return Err(LayoutError::NotDistinct);
            }
        }
    }
    let (inc, inc_prev) = longest_chains(seq, true);
    if let Some(end) = (0..seq.len()).find(|&i| inc[i] > a) {
        return Ok(Monotone::Increasing(chain_to(&inc_prev, end, a + 1)));
    }
    let (dec, dec_prev) = longest_chains(seq, false);
    let end = (0..seq.len())
        .find(|&i| dec[i] > b)
        .expect("Erdős–Szekeres guarantees a long decreasing run");
    Ok(Monotone::Decreasing(chain_to(&dec_prev, end, b + 1)))
}

/// Picks `r` of the given independent pairs forming a pure `r`-rainbow,
/// `r`-twist or `r`-necklace. Needs at least `r^3` pairs.
///
/// Pairs are sorted by left endpoint and Erdős–Szekeres is applied to the
/// right endpoints with `a = r^2`, `b = r - 1`. A decreasing run is a rainbow.
/// In an increasing run any two pairs cross or are disjoint, and "disjoint and
/// to the left" is a partial order, so either a chain of length `r`
/// (necklace) exists or some level of the height function holds `r` pairwise
/// crossing pairs (twist). Returns indices into `pairs`.
pub fn extract_config(
    order: &SpineOrder,
    pairs: &[(VertexId, VertexId)],
    r: usize,
) -> Result<(PatternClass, Vec<usize>), LayoutError> {
    if r < 2 {
        return Err(LayoutError::TooFewPairs { needed: 2, got: r });
    }
    let needed = r * r * r;
    if pairs.len() < needed {
        return Err(LayoutError::TooFewPairs {
            needed,
            got: pairs.len(),
        });
    }
    let spans = pair_spans(order, pairs)?;
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.sort_by_key(|&i| spans[i].0);
    let rights: Vec<usize> = idx.iter().map(|&i| spans[i].1).collect();
    let run = monotone_subsequence(&rights, r * r, r - 1)?;
    let (kind, chosen) = match run {
        Monotone::Decreasing(ix) => (PatternKind::Rainbow, ix.iter().map(|&j| idx[j]).collect()),
        Monotone::Increasing(ix) => {
            let members: Vec<usize> = ix.iter().map(|&j| idx[j]).collect();
            // height[j] = longest chain of pairwise disjoint pairs ending at j.
            let m = members.len();
            let mut height = vec![1usize; m];
            let mut prev = vec![None; m];
            for j in 0..m {
                for i in 0..j {
                    if spans[members[i]].1 < spans[members[j]].0 && height[i] + 1 > height[j] {
                        height[j] = height[i] + 1;
                        prev[j] = Some(i);
                    }
                }
            }
            if let Some(end) = (0..m).find(|&j| height[j] >= r) {
                let chain = chain_to(&prev, end, r);
                (PatternKind::Necklace, chain.iter().map(|&j| members[j]).collect())
            } else {
                let level = (1..r)
                    .find(|&h| height.iter().filter(|&&x| x == h).count() >= r)
                    .expect("some height level holds r pairwise crossing pairs");
                let same: Vec<usize> = (0..m).filter(|&j| height[j] == level).take(r).collect();
                (PatternKind::Twist, same.iter().map(|&j| members[j]).collect())
            }
        }
    };
    Ok((PatternClass { kind, size: r }, chosen))
}

/// Scans a three-page embedding for the three configurations no valid
/// three-page embedding can contain: a 4-twist, a crossing pair that both
/// cross two edges on two different pages, and an edge crossing edges on all
/// three pages. Page assignments of the twist edges are ignored.
///
/// Reports every 4-twist, and one witness per offending crossing pair and
/// per offending edge for the other two kinds.
pub fn lemma1_scan<G: GraphView + ?Sized>(g: &G, emb: &BookEmbedding) -> Result<Vec<ViolationReport>, LayoutError> {
    if emb.page_count != 3 {
        return Err(LayoutError::WrongPageCount {
            expected: 3,
            actual: emb.page_count,
        });
    }
    check_coverage(g, emb)?;
    let edges: Vec<Edge> = emb.pages.keys().copied().collect();
    let spans: Vec<(usize, usize)> = edges
        .iter()
        .map(|&e| emb.order.span(e))
        .collect::<Result<_, _>>()?;
    let page: Vec<usize> = edges.iter().map(|e| emb.pages[e]).collect();
    let m = edges.len();
    // crossing[i] = sorted indices of edges crossing edge i.
    let mut crossing: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..m {
        for j in i + 1..m {
            if spans_cross(spans[i], spans[j]) {
                crossing[i].push(j);
                crossing[j].push(i);
            }
        }
    }
    let crosses = |i: usize, j: usize| crossing[i].binary_search(&j).is_ok();
    let mut out = Vec::new();

    for i in 0..m {
        for &j in crossing[i].iter().filter(|&&j| j > i) {
            let ij = sorted_common(&crossing[i], &crossing[j]);
            for (x, &k) in ij.iter().enumerate().filter(|(_, &k)| k > j) {
                for &l in ij[x + 1..].iter() {
                    if crosses(k, l) {
                        out.push(ViolationReport {
                            kind: ViolationKind::FourTwist,
                            witnesses: vec![edges[i], edges[j], edges[k], edges[l]],
                        });
                    }
                }
            }
        }
    }

    let mut near_misses = 0usize;
    for i in 0..m {
        for &j in crossing[i].iter().filter(|&&j| j > i) {
            let common = sorted_common(&crossing[i], &crossing[j]);
            let witness = common.iter().enumerate().find_map(|(x, &k)| {
                common[x + 1..]
                    .iter()
                    .find(|&&l| page[l] != page[k])
                    .map(|&l| (k, l))
            });
            match witness {
                Some((k, l)) => out.push(ViolationReport {
                    kind: ViolationKind::CrossingPairTwoPages,
                    witnesses: vec![edges[i], edges[j], edges[k], edges[l]],
                }),
                None if common.len() >= 2 => near_misses += 1,
                None => {}
            }
        }
    }
    if near_misses > 0 {
        log::debug!("lemma1_scan: {near_misses} crossing pairs share 2+ crossed edges, all on one page");
    }

    for i in 0..m {
        let mut first_on = [None; 3];
        for &j in &crossing[i] {
            if first_on[page[j]].is_none() {
                first_on[page[j]] = Some(j);
            }
        }
        if let [Some(a), Some(b), Some(c)] = first_on {
            out.push(ViolationReport {
                kind: ViolationKind::EdgeCrossingThreePages,
                witnesses: vec![edges[i], edges[a], edges[b], edges[c]],
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PatternSizes {
    pub rainbow: usize,
    pub twist: usize,
    pub necklace: usize,
}

/// Sizes of the largest rainbow, twist and necklace formed by the given edges.
pub fn largest_patterns(order: &SpineOrder, edges: &[Edge]) -> Result<PatternSizes, LayoutError> {
    let mut spans: Vec<(usize, usize)> = edges.iter().map(|&e| order.span(e)).collect::<Result<_, _>>()?;
    if spans.is_empty() {
        return Ok(PatternSizes::default());
    }

    // Strictly nested chains: sorted by left end, right ends strictly decreasing.
    spans.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut best = vec![1usize; spans.len()];
    for j in 0..spans.len() {
        for i in 0..j {
            if spans[i].0 < spans[j].0 && spans[j].1 < spans[i].1 {
                best[j] = best[j].max(best[i] + 1);
            }
        }
    }
    let rainbow = best.iter().copied().max().unwrap_or(0);

    let mut by_right = spans.clone();
    by_right.sort_by_key(|s| s.1);
    let mut necklace = 0;
    let mut last_right = None;
    for (l, r) in by_right {
        if last_right.is_none_or(|x| x < l) {
            necklace += 1;
            last_right = Some(r);
        }
    }

    // Pairwise crossing sets all straddle some cut between consecutive
    // positions; within a cut they are strictly increasing in both ends.
    let n = order.vertices().len();
    let mut twist = 1;
    for cut in 0..n.saturating_sub(1) {
        let mut straddling: Vec<(usize, usize)> =
            spans.iter().copied().filter(|&(l, r)| l <= cut && r > cut).collect();
        straddling.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        // Patience sorting on right ends; ties on the left end are ordered so
        // that they cannot extend each other.
        let mut tails: Vec<usize> = Vec::new();
        for (_, r) in straddling {
            match tails.binary_search(&r) {
                Ok(_) => {}
                Err(p) if p == tails.len() => tails.push(r),
                Err(p) => tails[p] = r,
            }
        }
        twist = twist.max(tails.len());
    }
    Ok(PatternSizes { rainbow, twist, necklace })
}

fn sorted_common(a: &[usize], b: &[usize]) -> Vec<usize> {
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

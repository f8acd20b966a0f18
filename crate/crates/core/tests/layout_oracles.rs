use std::collections::BTreeMap;

use bookembed::graph::{GraphView, SimpleGraph};
use bookembed::layout::{
    classify_pairs, edges_cross, extract_config, largest_patterns, lemma1_scan, monotone_subsequence,
    opposite_sides, validate_embedding, Monotone, PatternKind, SpineOrder, ViolationKind,
};
use bookembed::{BookEmbedding, Edge, VertexId};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn v(i: u32) -> VertexId {
    VertexId(i)
}

fn order_of(xs: &[u32]) -> SpineOrder {
    SpineOrder::new(xs.iter().map(|&x| v(x)).collect()).unwrap()
}

/// Position-array oracle: two edges cross iff exactly one endpoint of `f`
/// lies strictly inside `e`.
fn oracle_cross(pos: &[usize], e: (u32, u32), f: (u32, u32)) -> bool {
    let (a, b) = (pos[e.0 as usize].min(pos[e.1 as usize]), pos[e.0 as usize].max(pos[e.1 as usize]));
    let inside = |x: u32| a < pos[x as usize] && pos[x as usize] < b;
    let shared = e.0 == f.0 || e.0 == f.1 || e.1 == f.0 || e.1 == f.1;
    !shared && (inside(f.0) != inside(f.1))
}

fn random_instance(seed: u64) -> (SimpleGraph, Vec<u32>, BTreeMap<Edge, usize>, usize) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(2..=8u32);
    let p = rng.random_range(1..=3usize);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.5) {
                edges.push((v(a), v(b)));
            }
        }
    }
    let g = SimpleGraph::new((0..n).map(v), edges).unwrap();
    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(&mut rng);
    let pages = g.edge_list().into_iter().map(|e| (e, rng.random_range(0..p))).collect();
    (g, order, pages, p)
}

#[test]
fn validator_matches_brute_force_on_random_graphs() {
    for seed in 0..400 {
        let (g, order, pages, p) = random_instance(seed);
        let mut pos = vec![0; order.len()];
        for (i, &x) in order.iter().enumerate() {
            pos[x as usize] = i;
        }
        let edges: Vec<(Edge, usize)> = pages.iter().map(|(&e, &pg)| (e, pg)).collect();
        let mut expected = 0;
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                let (e, f) = (edges[i].0, edges[j].0);
                if edges[i].1 == edges[j].1 && oracle_cross(&pos, (e.u().0, e.v().0), (f.u().0, f.v().0)) {
                    expected += 1;
                }
            }
        }
        let emb = BookEmbedding::new(order.iter().map(|&x| v(x)).collect(), pages, p).unwrap();
        let found = validate_embedding(&g, &emb).unwrap();
        assert_eq!(found.len(), expected, "seed {seed}");
        for r in &found {
            assert_eq!(r.kind, ViolationKind::SamePageCrossing);
            assert!(edges_cross(&emb.order, r.witnesses[0], r.witnesses[1]).unwrap());
            assert_eq!(emb.page(r.witnesses[0]), emb.page(r.witnesses[1]));
        }
    }
}

#[test]
fn c4_outerplanar_and_k4_single_page() {
    let c4 = SimpleGraph::new((1..=4).map(v), [(1, 2), (2, 3), (3, 4), (1, 4)].map(|(a, b)| (v(a), v(b)))).unwrap();
    let pages = c4.edge_list().into_iter().map(|e| (e, 0)).collect();
    let emb = BookEmbedding::new((1..=4).map(v).collect(), pages, 1).unwrap();
    assert!(validate_embedding(&c4, &emb).unwrap().is_empty());

    let k4 = SimpleGraph::complete(4);
    for perm in permutations(4) {
        let pages = k4.edge_list().into_iter().map(|e| (e, 0)).collect();
        let emb = BookEmbedding::new(perm.iter().map(|&x| v(x)).collect(), pages, 1).unwrap();
        assert!(!validate_embedding(&k4, &emb).unwrap().is_empty());
    }
}

#[test]
fn coverage_mismatch_is_an_error() {
    let k4 = SimpleGraph::complete(4);
    let pages: BTreeMap<Edge, usize> = k4.edge_list().into_iter().skip(1).map(|e| (e, 0)).collect();
    let emb = BookEmbedding::new((0..4).map(v).collect(), pages, 1).unwrap();
    assert!(validate_embedding(&k4, &emb).is_err());
}

fn permutations(n: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn lemma1_planted_configurations() {
    // a..h = 0..7, edges (a,e)(b,f)(c,g)(d,h) form a 4-twist.
    let edges = [(0, 4), (1, 5), (2, 6), (3, 7)];
    let g = SimpleGraph::new((0..8).map(v), edges.map(|(a, b)| (v(a), v(b)))).unwrap();
    for pages in [[0, 0, 0, 0], [0, 1, 2, 0], [2, 1, 0, 1]] {
        let map = edges.iter().zip(pages).map(|(&(a, b), p)| (Edge::new(v(a), v(b)), p)).collect();
        let emb = BookEmbedding::new((0..8).map(v).collect(), map, 3).unwrap();
        let r = lemma1_scan(&g, &emb).unwrap();
        assert!(r.iter().any(|x| x.kind == ViolationKind::FourTwist), "pages {pages:?}");
    }

    // Edge (0,7) crossing (1,8), (2,9), (3,10) pinned to pages 0, 1, 2.
    let edges = [(0, 7, 0), (1, 8, 0), (2, 9, 1), (3, 10, 2)];
    let g = SimpleGraph::new((0..11).map(v), edges.map(|(a, b, _)| (v(a), v(b)))).unwrap();
    let map = edges.iter().map(|&(a, b, p)| (Edge::new(v(a), v(b)), p)).collect();
    let emb = BookEmbedding::new((0..11).map(v).collect(), map, 3).unwrap();
    let r = lemma1_scan(&g, &emb).unwrap();
    assert!(r.iter().any(|x| x.kind == ViolationKind::EdgeCrossingThreePages));

    let two_page = BookEmbedding::new((0..11).map(v).collect(), BTreeMap::new(), 2).unwrap();
    assert!(lemma1_scan(&g, &two_page).is_err());
}

#[test]
fn lemma1_crossing_pair_on_two_pages() {
    // e=(1,5) and f=(4,9) cross and both cross g=(2,6) and h=(2,7). g and h
    // share vertex 2, so no 4-twist forms; g, h sit on pages 2 and 0.
    let edges = [(1, 5, 0), (4, 9, 1), (2, 6, 2), (2, 7, 0)];
    let g = SimpleGraph::new((0..10).map(v), edges.map(|(a, b, _)| (v(a), v(b)))).unwrap();
    let map = edges.iter().map(|&(a, b, p)| (Edge::new(v(a), v(b)), p)).collect();
    let emb = BookEmbedding::new((0..10).map(v).collect(), map, 3).unwrap();
    let r = lemma1_scan(&g, &emb).unwrap();
    assert!(r.iter().any(|x| x.kind == ViolationKind::CrossingPairTwoPages), "{r:?}");
    assert!(!r.iter().any(|x| x.kind == ViolationKind::FourTwist));
}

#[test]
fn opposite_sides_errors_on_shared_vertex() {
    let e = Edge::new(v(0), v(1));
    assert!(opposite_sides(&order_of(&[0, 1, 2, 3]), v(1), v(2), e).is_err());
    assert!(opposite_sides(&order_of(&[0, 2, 1, 3]), v(2), v(3), e).unwrap());
}

/// Indices strictly increase and values are strictly monotone.
fn is_monotone(seq: &[i64], idx: &[usize], increasing: bool) -> bool {
    idx.windows(2).all(|w| w[0] < w[1] && if increasing { seq[w[0]] < seq[w[1]] } else { seq[w[0]] > seq[w[1]] })
}

#[test]
fn erdos_szekeres_witnesses_on_random_inputs() {
    let mut rng = StdRng::seed_from_u64(7);
    for (a, b) in [(1, 1), (2, 2), (3, 2), (2, 4), (4, 4), (5, 3)] {
        for _ in 0..500 {
            let len = a * b + 1;
            let mut seq: Vec<i64> = (0..len as i64).collect();
            seq.shuffle(&mut rng);
            match monotone_subsequence(&seq, a, b).unwrap() {
                Monotone::Increasing(ix) => assert!(ix.len() == a + 1 && is_monotone(&seq, &ix, true)),
                Monotone::Decreasing(ix) => assert!(ix.len() == b + 1 && is_monotone(&seq, &ix, false)),
            }
        }
    }
}

fn random_pairs(rng: &mut StdRng, k: usize) -> (SpineOrder, Vec<(VertexId, VertexId)>) {
    let mut ids: Vec<u32> = (0..2 * k as u32).collect();
    ids.shuffle(rng);
    let pairs = (0..k).map(|i| (v(2 * i as u32), v(2 * i as u32 + 1))).collect();
    (order_of(&ids), pairs)
}

fn brute_classify(order: &SpineOrder, pairs: &[(VertexId, VertexId)]) -> PatternKind {
    let span = |p: (VertexId, VertexId)| {
        let (a, b) = (order.position(p.0).unwrap(), order.position(p.1).unwrap());
        (a.min(b), a.max(b))
    };
    let spans: Vec<_> = pairs.iter().map(|&p| span(p)).collect();
    let all = |f: &dyn Fn((usize, usize), (usize, usize)) -> bool| {
        (0..spans.len()).all(|i| (0..spans.len()).all(|j| i == j || f(spans[i], spans[j])))
    };
    let nested = |x: (usize, usize), y: (usize, usize)| (x.0 < y.0 && y.1 < x.1) || (y.0 < x.0 && x.1 < y.1);
    let crossing = |x: (usize, usize), y: (usize, usize)| (x.0 < y.0 && y.0 < x.1 && x.1 < y.1) || (y.0 < x.0 && x.0 < y.1 && y.1 < x.1);
    let disjoint = |x: (usize, usize), y: (usize, usize)| x.1 < y.0 || y.1 < x.0;
    if all(&nested) {
        PatternKind::Rainbow
    } else if all(&crossing) {
        PatternKind::Twist
    } else if all(&disjoint) {
        PatternKind::Necklace
    } else {
        PatternKind::Mixed
    }
}

#[test]
fn classify_matches_pairwise_definition() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..2000 {
        let k = rng.random_range(2..=4);
        let (order, pairs) = random_pairs(&mut rng, k);
        let got = classify_pairs(&order, &pairs).unwrap();
        assert_eq!(got.kind, brute_classify(&order, &pairs));
        assert_eq!(got.size, k);
        let rev = classify_pairs(&order.reversed(), &pairs).unwrap();
        assert_eq!(rev.kind, got.kind, "reversal invariance");
        let flipped: Vec<_> = pairs.iter().rev().map(|&(s, t)| (t, s)).collect();
        assert_eq!(classify_pairs(&order.reversed(), &flipped).unwrap().kind, got.kind);
    }
}

#[test]
fn classify_rejects_shared_endpoints() {
    let pairs = [(v(0), v(1)), (v(1), v(2))];
    assert!(classify_pairs(&order_of(&[0, 1, 2]), &pairs).is_err());
}

#[test]
fn extract_config_on_random_pairs_reclassifies() {
    let mut rng = StdRng::seed_from_u64(13);
    for r in [2usize, 3, 4] {
        for _ in 0..200 {
            let (order, pairs) = random_pairs(&mut rng, r * r * r);
            let (class, chosen) = extract_config(&order, &pairs, r).unwrap();
            assert_eq!(class.size, r);
            assert_eq!(chosen.len(), r);
            let picked: Vec<_> = chosen.iter().map(|&i| pairs[i]).collect();
            let again = classify_pairs(&order, &picked).unwrap();
            assert_eq!(again.kind, class.kind);
            assert_ne!(class.kind, PatternKind::Mixed);
            assert_eq!(brute_classify(&order, &picked), class.kind);
            assert_eq!(extract_config(&order, &pairs, r).unwrap(), (class, chosen), "deterministic");
        }
    }
}

#[test]
fn r3_on_27_pairs_has_a_pure_triple_by_exhaustion() {
    let mut rng = StdRng::seed_from_u64(17);
    for _ in 0..20 {
        let (order, pairs) = random_pairs(&mut rng, 27);
        let mut pure = 0;
        for a in 0..27 {
            for b in a + 1..27 {
                for c in b + 1..27 {
                    if brute_classify(&order, &[pairs[a], pairs[b], pairs[c]]) != PatternKind::Mixed {
                        pure += 1;
                    }
                }
            }
        }
        assert!(pure > 0);
        let (class, _) = extract_config(&order, &pairs, 3).unwrap();
        assert_ne!(class.kind, PatternKind::Mixed);
    }
}

#[test]
fn largest_patterns_match_brute_force() {
    let mut rng = StdRng::seed_from_u64(19);
    for _ in 0..300 {
        let k = rng.random_range(2..=6);
        let (order, pairs) = random_pairs(&mut rng, k);
        let edges: Vec<Edge> = pairs.iter().map(|&(a, b)| Edge::new(a, b)).collect();
        let got = largest_patterns(&order, &edges).unwrap();
        let mut best = [1usize; 3];
        for mask in 1u32..(1 << k) {
            let sub: Vec<_> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
            if sub.len() < 2 {
                continue;
            }
            match brute_classify(&order, &sub) {
                PatternKind::Rainbow => best[0] = best[0].max(sub.len()),
                PatternKind::Twist => best[1] = best[1].max(sub.len()),
                PatternKind::Necklace => best[2] = best[2].max(sub.len()),
                PatternKind::Mixed => {}
            }
        }
        assert_eq!([got.rainbow, got.twist, got.necklace], best);
    }
}

proptest! {
    #[test]
    fn crossing_is_symmetric(perm in Just((0u32..6).collect::<Vec<_>>()).prop_shuffle()) {
        let order = order_of(&perm);
        let e = Edge::new(v(0), v(1));
        let f = Edge::new(v(2), v(3));
        prop_assert_eq!(edges_cross(&order, e, f).unwrap(), edges_cross(&order, f, e).unwrap());
        let mut pos = vec![0; 6];
        for (i, &x) in perm.iter().enumerate() { pos[x as usize] = i; }
        prop_assert_eq!(edges_cross(&order, e, f).unwrap(), oracle_cross(&pos, (0, 1), (2, 3)));
    }

    #[test]
    fn monotone_witness_is_valid(seq in proptest::collection::hash_set(-1000i64..1000, 10..=10)) {
        let seq: Vec<i64> = seq.into_iter().collect();
        match monotone_subsequence(&seq, 3, 3).unwrap() {
            Monotone::Increasing(ix) => prop_assert!(ix.len() == 4 && is_monotone(&seq, &ix, true)),
            Monotone::Decreasing(ix) => prop_assert!(ix.len() == 4 && is_monotone(&seq, &ix, false)),
        }
    }

    #[test]
    fn embedding_text_round_trips(seed in 0u64..10_000) {
        let (_, order, pages, p) = random_instance(seed);
        let emb = BookEmbedding::new(order.iter().map(|&x| v(x)).collect(), pages, p).unwrap();
        prop_assert_eq!(BookEmbedding::parse(&emb.serialize()).unwrap(), emb);
    }
}

use std::collections::BTreeMap;

use bookembed::encoder::{
    emit_symmetry_breaking, enumerate_subproblems, pin_subproblem, DedupPolicy, SymmetryRule,
};
use bookembed::graph::{GraphView, SimpleGraph};
use bookembed::layout::{edges_cross, validate_embedding, SpineOrder};
use bookembed::solver::write_dimacs;
use bookembed::{
    build_qk, build_qk_contracted, encode, BookEmbedding, CnfFormula, Edge, RestrictionProfile,
    SubproblemSpec, VarMap, VertexId,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn random_graph(rng: &mut StdRng, n: u32, density: f64) -> SimpleGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(density) {
                edges.push((VertexId(u), VertexId(v)));
            }
        }
    }
    SimpleGraph::new((0..n).map(VertexId), edges).unwrap()
}

fn independent_pairs(edges: &[Edge]) -> usize {
    let mut count = 0;
    for (i, e) in edges.iter().enumerate() {
        for f in &edges[i + 1..] {
            if ![e.u(), e.v()].contains(&f.u()) && ![e.u(), e.v()].contains(&f.v()) {
                count += 1;
            }
        }
    }
    count
}

/// Plain DPLL with unit propagation; returns a model indexed from 1.
fn dpll(cnf: &CnfFormula) -> Option<Vec<bool>> {
    let clauses: Vec<Vec<i32>> = cnf.clauses().map(|c| c.to_vec()).collect();
    let mut assign = vec![0i8; cnf.variable_count() as usize + 1];
    if search(&clauses, &mut assign) {
        Some(assign.iter().map(|&a| a > 0).collect())
    } else {
        None
    }
}

fn value(assign: &[i8], l: i32) -> i8 {
    let a = assign[l.unsigned_abs() as usize];
    if l > 0 {
        a
    } else {
        -a
    }
}

fn search(clauses: &[Vec<i32>], assign: &mut Vec<i8>) -> bool {
    let saved = assign.clone();
    loop {
        let mut changed = false;
        for c in clauses {
            let mut open = None;
            let mut open_count = 0;
            let mut satisfied = false;
            for &l in c {
                match value(assign, l) {
                    1 => {
                        satisfied = true;
                        break;
                    }
                    0 => {
                        open_count += 1;
                        open = Some(l);
                    }
                    _ => {}
                }
            }
            if satisfied {
                continue;
            }
            match (open_count, open) {
                (0, _) => {
                    *assign = saved;
                    return false;
                }
                (1, Some(l)) => {
                    assign[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    let Some(var) = (1..assign.len()).find(|&v| assign[v] == 0) else {
        return true;
    };
    for val in [1, -1] {
        assign[var] = val;
        if search(clauses, assign) {
            return true;
        }
        assign[var] = 0;
    }
    *assign = saved;
    false
}

fn permutations(items: &[VertexId]) -> Vec<Vec<VertexId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn colourable(adj: &[Vec<usize>], colours: &mut Vec<usize>, i: usize, p: usize) -> bool {
    if i == adj.len() {
        return true;
    }
    for c in 0..p {
        if adj[i].iter().all(|&j| j >= i || colours[j] != c) {
            colours[i] = c;
            if colourable(adj, colours, i + 1, p) {
                return true;
            }
        }
    }
    false
}

/// Exists an order whose crossing graph is `p`-colourable.
fn embeddable(g: &SimpleGraph, p: usize) -> bool {
    let edges = g.edge_list();
    permutations(&g.vertex_list()).into_iter().any(|perm| {
        let pos: BTreeMap<VertexId, usize> = perm.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let span = |e: &Edge| {
            let (a, b) = (pos[&e.u()], pos[&e.v()]);
            (a.min(b), a.max(b))
        };
        let mut adj = vec![Vec::new(); edges.len()];
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                let ((a, b), (c, d)) = (span(&edges[i]), span(&edges[j]));
                if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        colourable(&adj, &mut vec![0; edges.len()], 0, p)
    })
}

fn assignment_of(vm: &VarMap, emb: &BookEmbedding) -> Vec<bool> {
    let mut a = vec![false; vm.variable_count() as usize + 1];
    let mut set = |l: i32, truth: bool| a[l.unsigned_abs() as usize] = truth == (l > 0);
    let vs = vm.vertices().to_vec();
    for (i, &u) in vs.iter().enumerate() {
        for &v in &vs[i + 1..] {
            set(vm.sigma(u, v), emb.order.position(u).unwrap() < emb.order.position(v).unwrap());
        }
    }
    for &e in vm.edges() {
        for p in 0..vm.pages() {
            set(vm.phi(p, e), emb.page(e) == Some(p));
        }
    }
    for (e, f) in vm.independent_pairs().collect::<Vec<_>>() {
        set(vm.chi(e, f).unwrap(), emb.page(e) == emb.page(f));
    }
    a
}

#[test]
fn variable_and_clause_counts_match_closed_form() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..60 {
        let n = rng.random_range(1..=9);
        let g = random_graph(&mut rng, n, 0.5);
        let p = rng.random_range(1..=4);
        let m = g.edge_count();
        let n = n as usize;
        let pairs = independent_pairs(&g.edge_list());
        let (cnf, vm) = encode(&g, p, &RestrictionProfile::none()).unwrap();
        assert_eq!(vm.variable_count() as usize, n * (n - 1) / 2 + p * m + pairs);
        assert_eq!(cnf.variable_count() as u64, vm.variable_count());
        let triples = if n >= 3 { n * (n - 1) * (n - 2) / 6 } else { 0 };
        assert_eq!(cnf.clause_count(), 2 * triples + m + pairs * (p + 8));
    }
}

#[test]
fn k4_on_two_pages_uses_21_variables() {
    let (cnf, vm) = encode(&SimpleGraph::complete(4), 2, &RestrictionProfile::none()).unwrap();
    assert_eq!(cnf.variable_count(), 21);
    assert_eq!(vm.chi_count(), 3);
}

#[test]
fn dimacs_output_is_deterministic() {
    let q = build_qk(3).unwrap();
    let profile = RestrictionProfile::for_gadget(&q).with_all_symmetry();
    let render = || {
        let (cnf, _) = encode(&q.graph, 3, &profile).unwrap();
        let mut out = Vec::new();
        write_dimacs(&cnf, &mut out).unwrap();
        out
    };
    assert_eq!(render(), render());
}

#[test]
fn satisfiable_exactly_when_embeddable() {
    let mut rng = StdRng::seed_from_u64(5);
    for round in 0..70 {
        let n = rng.random_range(3..=6);
        let g = random_graph(&mut rng, n, 0.65);
        let p = if round % 3 == 0 { 1 } else { 2 };
        let (cnf, vm) = encode(&g, p, &RestrictionProfile::none()).unwrap();
        let model = dpll(&cnf);
        assert_eq!(model.is_some(), embeddable(&g, p), "round {round}: {:?} p={p}", g.edge_list());
        if let Some(m) = model {
            let emb = bookembed::encoder::decode_model(&vm, &m).unwrap();
            assert!(validate_embedding(&g, &emb).unwrap().is_empty());
        }
    }
}

#[test]
fn complete_graphs_page_thresholds() {
    for (n, p, sat) in [(4, 1, false), (4, 2, true), (5, 2, false), (5, 3, true)] {
        let (cnf, _) = encode(&SimpleGraph::complete(n), p, &RestrictionProfile::none()).unwrap();
        assert_eq!(dpll(&cnf).is_some(), sat, "K{n} on {p} pages");
    }
}

#[test]
fn intended_assignment_satisfies_iff_layout_is_valid() {
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..300 {
        let n = rng.random_range(2..=8);
        let g = random_graph(&mut rng, n, 0.5);
        let p = rng.random_range(1..=3);
        let mut order = g.vertex_list();
        order.shuffle(&mut rng);
        let pages: BTreeMap<Edge, usize> =
            g.edge_list().into_iter().map(|e| (e, rng.random_range(0..p))).collect();
        let emb = BookEmbedding::new(order.clone(), pages.clone(), p).unwrap();
        let spine = SpineOrder::new(order).unwrap();
        let edges = g.edge_list();
        let clean = edges.iter().enumerate().all(|(i, &e)| {
            edges[i + 1..].iter().all(|&f| {
                pages[&e] != pages[&f] || !e.is_independent(f) || !edges_cross(&spine, e, f).unwrap()
            })
        });

        let (cnf, vm) = encode(&g, p, &RestrictionProfile::none()).unwrap();
        let a = assignment_of(&vm, &emb);
        assert_eq!(cnf.is_satisfied_by(&a), clean);
        let back = bookembed::encoder::decode_model(&vm, &a).unwrap();
        assert_eq!(back, emb);
    }
}

#[test]
fn first_vertex_rule_emits_n_minus_one_units() {
    let q = build_qk(2).unwrap();
    let vm = VarMap::new(&q.graph, 3).unwrap();
    let profile = RestrictionProfile::for_gadget(&q).with_rule(SymmetryRule::FirstVertex);
    let mut out = CnfFormula::new(vm.variable_count() as u32);
    emit_symmetry_breaking(&q.graph, &vm, &profile, &mut out).unwrap();
    let a = q.pole_a();
    let expected: Vec<Vec<i32>> =
        q.graph.vertices().filter(|&v| v != a).map(|v| vec![vm.sigma(a, v)]).collect();
    let got: Vec<Vec<i32>> = out.clauses().map(|c| c.to_vec()).collect();
    assert_eq!(got.len(), q.graph.vertex_count() - 1);
    assert_eq!(got, expected);
}

fn falling(k: usize, l: usize) -> usize {
    (0..l).map(|i| k - i).product()
}

#[test]
fn subproblem_enumeration_counts() {
    let q = build_qk_contracted(8).unwrap();
    let k = q.terminals.len();
    assert_eq!(k, 7);
    assert_eq!(enumerate_subproblems(&q, 0, DedupPolicy::None), vec![SubproblemSpec::default()]);
    assert_eq!(enumerate_subproblems(&q, 1, DedupPolicy::None).len(), 1 + k);

    let all = enumerate_subproblems(&q, 3, DedupPolicy::None);
    assert_eq!(all.len(), (0..=3).map(|l| falling(k, l)).sum::<usize>());
    assert_eq!(all.len(), 260);
    let mut sorted = all.clone();
    sorted.sort_by(|a, b| (a.between.len(), &a.between).cmp(&(b.between.len(), &b.between)));
    assert_eq!(sorted, all);

    let led = enumerate_subproblems(&q, 3, DedupPolicy::FirstTerminalLeads);
    assert_eq!(led.len(), 1 + 1 + (k - 1) + (k - 1) * (k - 2));
    assert_eq!(led.len(), 38);
    assert!(led.iter().skip(1).all(|s| s.between[0] == 0));
}

#[test]
fn pinning_one_terminal() {
    let q = build_qk_contracted(8).unwrap();
    let vm = VarMap::new(&q.graph, 3).unwrap();
    let profile = RestrictionProfile::for_gadget(&q);
    let spec: SubproblemSpec = "2".parse().unwrap();
    let mut out = CnfFormula::new(vm.variable_count() as u32);
    pin_subproblem(&spec, &vm, &profile, &mut out).unwrap();
    let (a, b) = q.poles;
    let t = &q.terminals;
    let mut expected = vec![vec![vm.sigma(a, t[2])], vec![vm.sigma(t[2], b)]];
    expected.extend(t.iter().enumerate().filter(|&(j, _)| j != 2).map(|(_, &tj)| vec![vm.sigma(b, tj)]));
    assert_eq!(out.clauses().map(|c| c.to_vec()).collect::<Vec<_>>(), expected);

    let bad: SubproblemSpec = "9".parse().unwrap();
    assert!(pin_subproblem(&bad, &vm, &profile, &mut out).is_err());
    assert!("1,1".parse::<SubproblemSpec>().is_err());
    assert_eq!("0,3,1".parse::<SubproblemSpec>().unwrap().to_string(), "0,3,1");
}

#[test]
fn var_map_text_round_trip() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..40 {
        let n = rng.random_range(1..=7);
        let g = random_graph(&mut rng, n, 0.4);
        let vm = VarMap::new(&g, rng.random_range(1..=3)).unwrap();
        assert_eq!(VarMap::parse(&vm.to_text()).unwrap(), vm);
    }
    let vm = VarMap::new(&build_qk(2).unwrap().graph, 3).unwrap();
    assert_eq!(VarMap::parse(&vm.to_text()).unwrap(), vm);
}

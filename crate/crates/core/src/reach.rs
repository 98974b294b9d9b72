//! Reachability constraints in CNF.
//!
//! Three encodings of "vertex v is reachable from the source":
//!
//! * [`encode_dag`]: reachable vertices are justified by selected edges whose
//!   orientation is kept acyclic by a transitive-closure relation. Models may
//!   leave reachable vertices unmarked, so it is sound but not exact.
//! * [`encode_path`]: grid-only; builds one simple path between source and
//!   target out of per-cell membership and neighbour-degree constraints.
//! * [`encode_spanning_tree`]: a tree of ancestor relations rooted at the
//!   source spans the whole connected component, so the reach literals are
//!   fixed to exactly the component in every model.
//!
//! All three accept a [`Gate`] (per-vertex "free" signal; blocked vertices
//! cannot be traversed) and a [`Source`] that is either a fixed vertex or a
//! one-hot selector over vertices. Selector sources are how the planner roots
//! reachability at the agent, whose position is itself a variable.
//!
//! Variable names follow `r[v,scope]`, `tree[v,w,scope]`, `edge[v,w,scope]`,
//! `ord[v,w,scope]` and `path[v,scope]`.

use std::collections::VecDeque;

use thiserror::Error;

use crate::cnf::{CnfError, Formula, Lit, Signal};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReachError {
    #[error("vertex {0} out of range")]
    BadVertex(usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("spanning-tree encoding needs an undirected graph")]
    Directed,
    #[error("path encoding needs grid metadata")]
    NotAGrid,
    #[error("per-vertex signal list has length {got}, graph has {want} vertices")]
    SignalLength { got: usize, want: usize },
    #[error(transparent)]
    Cnf(#[from] CnfError),
}

/// Grid provenance of a graph: which grid cell each vertex stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMeta {
    pub rows: usize,
    pub cols: usize,
    pub cell_of: Vec<usize>,
    pub vertex_of: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    directed: bool,
    /// Undirected: each edge once with `a < b`. Directed: arcs as given.
    edges: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
    grid: Option<GridMeta>,
}

impl Graph {
    pub fn undirected(n: usize, edges: &[(usize, usize)]) -> Result<Self, ReachError> {
        let mut g = Graph::empty(n, false);
        for &(a, b) in edges {
            g.check_edge(a, b)?;
            let (a, b) = (a.min(b), a.max(b));
            if g.out[a].contains(&b) {
                continue;
            }
            g.edges.push((a, b));
            g.out[a].push(b);
            g.out[b].push(a);
            g.inc[a].push(b);
            g.inc[b].push(a);
        }
        Ok(g)
    }

    pub fn directed(n: usize, arcs: &[(usize, usize)]) -> Result<Self, ReachError> {
        let mut g = Graph::empty(n, true);
        for &(a, b) in arcs {
            g.check_edge(a, b)?;
            if g.out[a].contains(&b) {
                continue;
            }
            g.edges.push((a, b));
            g.out[a].push(b);
            g.inc[b].push(a);
        }
        Ok(g)
    }

    /// Undirected 4-neighbour grid over the cells with `open[cell]` set.
    pub fn grid(rows: usize, cols: usize, open: &[bool]) -> Self {
        assert_eq!(open.len(), rows * cols);
        let mut vertex_of = vec![None; rows * cols];
        let mut cell_of = Vec::new();
        for (cell, &o) in open.iter().enumerate() {
            if o {
                vertex_of[cell] = Some(cell_of.len());
                cell_of.push(cell);
            }
        }
        let mut edges = Vec::new();
        for (v, &cell) in cell_of.iter().enumerate() {
            let (r, c) = (cell / cols, cell % cols);
            if c + 1 < cols {
                if let Some(w) = vertex_of[cell + 1] {
                    edges.push((v, w));
                }
            }
            if r + 1 < rows {
                if let Some(w) = vertex_of[cell + cols] {
                    edges.push((v, w));
                }
            }
        }
        let mut g = Graph::undirected(cell_of.len(), &edges).expect("grid edges are valid");
        g.grid = Some(GridMeta { rows, cols, cell_of, vertex_of });
        g
    }

    fn empty(n: usize, directed: bool) -> Self {
        Graph { n, directed, edges: Vec::new(), out: vec![Vec::new(); n], inc: vec![Vec::new(); n], grid: None }
    }

    fn check_edge(&self, a: usize, b: usize) -> Result<(), ReachError> {
        for v in [a, b] {
            if v >= self.n {
                return Err(ReachError::BadVertex(v));
            }
        }
        if a == b {
            return Err(ReachError::SelfLoop(a));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn grid_meta(&self) -> Option<&GridMeta> {
        self.grid.as_ref()
    }

    /// Out-neighbours (all neighbours when undirected).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.inc[v]
    }

    /// Both orientations of every edge when undirected, the arcs otherwise.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        if self.directed {
            self.edges.clone()
        } else {
            self.edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect()
        }
    }
}

/// Where reachability starts.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    Vertex(usize),
    /// One signal per vertex; the caller guarantees exactly one is true.
    Select(&'a [Signal]),
}

/// Which vertices may be traversed.
#[derive(Clone, Copy, Debug)]
pub enum Gate<'a> {
    Open,
    Free(&'a [Signal]),
}

/// Output of an encoder: one reach literal per vertex plus bookkeeping.
#[derive(Clone, Debug)]
pub struct ReachFragment {
    pub reach: Vec<Lit>,
    pub vars_added: usize,
    pub clauses_added: usize,
}

fn one_hot(n: usize, source: Source<'_>) -> Result<Vec<Signal>, ReachError> {
    match source {
        Source::Vertex(s) if s >= n => Err(ReachError::BadVertex(s)),
        Source::Vertex(s) => Ok((0..n).map(|v| Signal::Const(v == s)).collect()),
        Source::Select(sel) if sel.len() != n => Err(ReachError::SignalLength { got: sel.len(), want: n }),
        Source::Select(sel) => Ok(sel.to_vec()),
    }
}

fn gate_signals(n: usize, gate: Gate<'_>) -> Result<Vec<Signal>, ReachError> {
    match gate {
        Gate::Open => Ok(vec![Signal::TRUE; n]),
        Gate::Free(f) if f.len() != n => Err(ReachError::SignalLength { got: f.len(), want: n }),
        Gate::Free(f) => Ok(f.to_vec()),
    }
}

fn reach_vars(f: &mut Formula, n: usize, prefix: &str, scope: &str) -> Result<Vec<Lit>, ReachError> {
    (0..n)
        .map(|v| Ok(f.fresh_var(format!("{prefix}[{v},{scope}]"))?.pos()))
        .collect()
}

/// Lazily allocated pair relation `name[v,w,scope]`.
struct PairVars {
    n: usize,
    name: &'static str,
    vars: Vec<Option<Lit>>,
}

impl PairVars {
    fn new(n: usize, name: &'static str) -> Self {
        PairVars { n, name, vars: vec![None; n * n] }
    }

    fn get(&mut self, f: &mut Formula, v: usize, w: usize, scope: &str) -> Result<Lit, ReachError> {
        let slot = &mut self.vars[v * self.n + w];
        if let Some(l) = *slot {
            return Ok(l);
        }
        let l = f.fresh_var(format!("{}[{v},{w},{scope}]", self.name))?.pos();
        *slot = Some(l);
        Ok(l)
    }
}

fn finish(f: &Formula, reach: Vec<Lit>, vars0: usize, clauses0: usize) -> ReachFragment {
    ReachFragment { reach, vars_added: f.num_vars() - vars0, clauses_added: f.num_clauses() - clauses0 }
}

/// Reachability justified by an acyclic set of selected edges. Undirected
/// graphs are treated as the symmetric directed graph.
pub fn encode_dag(
    f: &mut Formula,
    graph: &Graph,
    source: Source<'_>,
    gate: Gate<'_>,
    scope: &str,
) -> Result<ReachFragment, ReachError> {
    let (vars0, clauses0) = (f.num_vars(), f.num_clauses());
    let n = graph.vertex_count();
    let src = one_hot(n, source)?;
    let free = gate_signals(n, gate)?;
    let r = reach_vars(f, n, "r", scope)?;
    let arcs = graph.arcs();
    let mut edge = vec![None; n * n];
    for &(v, w) in &arcs {
        edge[v * n + w] = Some(f.fresh_var(format!("edge[{v},{w},{scope}]"))?.pos());
    }
    let mut ord = PairVars::new(n, "ord");

    for v in 0..n {
        let rv: Signal = r[v].into();
        f.implies(&[src[v]], &[rv]);
        f.implies(&[src[v]], &[free[v]]);
        f.implies(&[rv], &[free[v]]);
        let mut justify = vec![!rv, src[v]];
        for &u in incoming(graph, v) {
            justify.push(edge[u * n + v].expect("arc var").into());
        }
        f.add_signals(&justify);
    }
    for &(v, w) in &arcs {
        let e: Signal = edge[v * n + w].expect("arc var").into();
        let t_vw = ord.get(f, v, w, scope)?;
        let t_wv = ord.get(f, w, v, scope)?;
        f.implies(&[e], &[r[v].into()]);
        f.implies(&[e], &[free[w]]);
        f.implies(&[e], &[t_vw.into()]);
        f.implies(&[e], &[(!t_wv).into()]);
        for x in 0..n {
            if x == v || x == w {
                continue;
            }
            let t_wx = ord.get(f, w, x, scope)?;
            let t_vx = ord.get(f, v, x, scope)?;
            f.implies(&[e, t_wx.into()], &[t_vx.into()]);
        }
    }
    Ok(finish(f, r, vars0, clauses0))
}

fn incoming(graph: &Graph, v: usize) -> &[usize] {
    if graph.is_directed() {
        graph.in_neighbors(v)
    } else {
        graph.neighbors(v)
    }
}

/// Path between source and target on a grid graph.
pub fn encode_path(
    f: &mut Formula,
    graph: &Graph,
    source: Source<'_>,
    target: Source<'_>,
    gate: Gate<'_>,
    scope: &str,
) -> Result<ReachFragment, ReachError> {
    encode_path_enabled(f, graph, source, target, gate, Signal::TRUE, scope)
}

/// [`encode_path`] switched by `enable`: when `enable` is false every
/// membership literal is forced false and no path is required.
pub fn encode_path_enabled(
    f: &mut Formula,
    graph: &Graph,
    source: Source<'_>,
    target: Source<'_>,
    gate: Gate<'_>,
    enable: Signal,
    scope: &str,
) -> Result<ReachFragment, ReachError> {
    if graph.grid_meta().is_none() {
        return Err(ReachError::NotAGrid);
    }
    let (vars0, clauses0) = (f.num_vars(), f.num_clauses());
    let n = graph.vertex_count();
    let src = one_hot(n, source)?;
    let tgt = one_hot(n, target)?;
    let free = gate_signals(n, gate)?;
    let p = reach_vars(f, n, "path", scope)?;

    for v in 0..n {
        let (s, t, pv) = (src[v], tgt[v], Signal::from(p[v]));
        f.implies(&[enable, s], &[pv]);
        f.implies(&[enable, t], &[pv]);
        f.implies(&[pv], &[enable]);
        f.implies(&[pv], &[free[v]]);
        let nb: Vec<Signal> = graph.neighbors(v).iter().map(|&u| p[u].into()).collect();

        // Endpoint of a non-trivial path: exactly one path neighbour.
        for prefix in [[!enable, !s, t], [!enable, !t, s]] {
            let mut alo = prefix.to_vec();
            alo.extend(&nb);
            f.add_signals(&alo);
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    let mut c = prefix.to_vec();
                    c.extend([!a, !b]);
                    f.add_signals(&c);
                }
            }
        }

        // Interior path cell: exactly two path neighbours.
        let prefix = [!pv, s, t];
        if nb.len() < 2 {
            f.add_signals(&prefix);
            continue;
        }
        for skip in 0..nb.len() {
            let mut c = prefix.to_vec();
            c.extend(nb.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x));
            f.add_signals(&c);
        }
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                for k in j + 1..nb.len() {
                    let mut c = prefix.to_vec();
                    c.extend([!nb[i], !nb[j], !nb[k]]);
                    f.add_signals(&c);
                }
            }
        }
    }
    Ok(finish(f, p, vars0, clauses0))
}

/// Spanning tree of the source's connected component. In every model the
/// reach literals equal the set of vertices reachable through free vertices.
pub fn encode_spanning_tree(
    f: &mut Formula,
    graph: &Graph,
    source: Source<'_>,
    gate: Gate<'_>,
    scope: &str,
) -> Result<ReachFragment, ReachError> {
    if graph.is_directed() {
        return Err(ReachError::Directed);
    }
    let (vars0, clauses0) = (f.num_vars(), f.num_clauses());
    let n = graph.vertex_count();
    let src = one_hot(n, source)?;
    let free = gate_signals(n, gate)?;
    let r = reach_vars(f, n, "r", scope)?;
    let mut tree = PairVars::new(n, "tree");

    for v in 0..n {
        let rv: Signal = r[v].into();
        // root
        f.implies(&[src[v]], &[rv]);
        f.implies(&[src[v]], &[free[v]]);
        f.implies(&[rv], &[free[v]]);

        let parents: Vec<Lit> = graph
            .neighbors(v)
            .iter()
            .map(|&u| tree.get(f, u, v, scope))
            .collect::<Result<_, _>>()?;
        // every reachable non-root vertex has a parent ...
        let mut ingoing = vec![!rv, src[v]];
        ingoing.extend(parents.iter().map(|&l| Signal::from(l)));
        f.add_signals(&ingoing);
        // ... and at most one; the root has none
        for (i, &a) in parents.iter().enumerate() {
            for &b in &parents[i + 1..] {
                f.add_clause([!a, !b]);
            }
            f.implies(&[src[v]], &[(!a).into()]);
        }
    }

    for &(a, b) in graph.edges() {
        let t_ab = tree.get(f, a, b, scope)?;
        let t_ba = tree.get(f, b, a, scope)?;
        f.add_clause([!t_ab, !t_ba]);
        for (v, w, t_vw) in [(a, b, t_ab), (b, a, t_ba)] {
            // propagation through free neighbours
            f.implies(&[r[v].into(), free[w]], &[r[w].into()]);
            // the root's free neighbours hang directly below it
            f.implies(&[src[v], free[w]], &[t_vw.into()]);
            f.implies(&[t_vw.into()], &[free[w]]);
            // anything on a tree path is reachable
            f.implies(&[t_vw.into()], &[r[v].into()]);
            f.implies(&[t_vw.into()], &[r[w].into()]);
            // transitivity and antisymmetry along the first hop
            for x in 0..n {
                if x == v || x == w {
                    continue;
                }
                let t_wx = tree.get(f, w, x, scope)?;
                let t_vx = tree.get(f, v, x, scope)?;
                let t_xv = tree.get(f, x, v, scope)?;
                f.add_clause([!t_vw, !t_wx, t_vx]);
                f.add_clause([!t_vw, !t_wx, !t_xv]);
            }
        }
    }
    Ok(finish(f, r, vars0, clauses0))
}

/// Vertices reachable from `source` through vertices with `free` set.
pub fn bfs_reachable(graph: &Graph, source: usize, free: &[bool]) -> Vec<bool> {
    let mut seen = vec![false; graph.vertex_count()];
    let mut queue = VecDeque::from([source]);
    seen[source] = true;
    while let Some(v) = queue.pop_front() {
        for &w in graph.neighbors(v) {
            if free[w] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Model;
    use crate::solver::{solve, SolveStatus};
    use std::time::Duration;

    /// All models, by exhaustive enumeration of every variable.
    fn all_models(f: &Formula) -> Vec<Model> {
        let n = f.num_vars();
        assert!(n <= 22, "{n} variables is too many to enumerate");
        (0u32..(1 << n))
            .map(|bits| Model::new((0..n).map(|i| bits >> i & 1 == 1).collect()))
            .filter(|m| f.first_violated(m).is_none())
            .collect()
    }

    fn sat(f: &Formula) -> bool {
        solve(f, Duration::from_secs(10)).unwrap().status == SolveStatus::Sat
    }

    fn var(f: &Formula, name: &str) -> Lit {
        f.lookup(name).unwrap_or_else(|| panic!("no var {name}")).pos()
    }

    #[test]
    fn dag_isolated_target_is_unsat() {
        let g = Graph::directed(2, &[]).unwrap();
        let mut f = Formula::new();
        let frag = encode_dag(&mut f, &g, Source::Vertex(0), Gate::Open, "0").unwrap();
        f.add_clause([frag.reach[1]]);
        assert!(all_models(&f).is_empty());
    }

    #[test]
    fn dag_chain_models() {
        let g = Graph::directed(3, &[(0, 1), (1, 2)]).unwrap();
        let mut f = Formula::new();
        let frag = encode_dag(&mut f, &g, Source::Vertex(0), Gate::Open, "0").unwrap();
        f.add_clause([frag.reach[2]]);
        let models = all_models(&f);
        assert!(!models.is_empty());
        for m in &models {
            for name in ["r[0,0]", "r[1,0]", "edge[0,1,0]", "edge[1,2,0]"] {
                assert!(m.lit(var(&f, name)), "{name}");
            }
        }
    }

    #[test]
    fn dag_detached_cycle_is_unsat() {
        // s=0 alone, c=1 <-> d=2
        let g = Graph::directed(3, &[(1, 2), (2, 1)]).unwrap();
        let mut f = Formula::new();
        let frag = encode_dag(&mut f, &g, Source::Vertex(0), Gate::Open, "0").unwrap();
        f.add_clause([frag.reach[1]]);
        assert!(all_models(&f).is_empty());
    }

    #[test]
    fn path_trivial_and_corridor() {
        let g = Graph::grid(1, 3, &[true; 3]);
        let mut f = Formula::new();
        encode_path(&mut f, &g, Source::Vertex(1), Source::Vertex(1), Gate::Open, "0").unwrap();
        assert!(sat(&f));

        let mut f = Formula::new();
        let frag = encode_path(&mut f, &g, Source::Vertex(0), Source::Vertex(2), Gate::Open, "0").unwrap();
        let models = all_models(&f);
        assert_eq!(models.len(), 1);
        assert!(frag.reach.iter().all(|&l| models[0].lit(l)));
    }

    #[test]
    fn path_blocked_by_gate() {
        let g = Graph::grid(3, 3, &[true; 9]);
        let mut f = Formula::new();
        let free: Vec<Signal> = (0..9).map(|c| Signal::Const(c % 3 != 1)).collect();
        encode_path(&mut f, &g, Source::Vertex(3), Source::Vertex(5), Gate::Free(&free), "0").unwrap();
        assert!(!sat(&f));
    }

    #[test]
    fn path_needs_grid() {
        let g = Graph::undirected(2, &[(0, 1)]).unwrap();
        let err = encode_path(&mut Formula::new(), &g, Source::Vertex(0), Source::Vertex(1), Gate::Open, "0");
        assert_eq!(err.unwrap_err(), ReachError::NotAGrid);
    }

    #[test]
    fn tree_single_vertex() {
        let g = Graph::undirected(1, &[]).unwrap();
        let mut f = Formula::new();
        encode_spanning_tree(&mut f, &g, Source::Vertex(0), Gate::Open, "0").unwrap();
        assert_eq!(f.clauses(), &[vec![var(&f, "r[0,0]")]]);
        assert_eq!(all_models(&f).len(), 1);
    }

    #[test]
    fn tree_chain_is_forced() {
        let g = Graph::undirected(3, &[(0, 1), (1, 2)]).unwrap();
        let mut f = Formula::new();
        encode_spanning_tree(&mut f, &g, Source::Vertex(0), Gate::Open, "0").unwrap();
        let models = all_models(&f);
        assert!(!models.is_empty());
        for m in &models {
            for name in ["r[0,0]", "r[1,0]", "r[2,0]", "tree[0,1,0]", "tree[1,2,0]"] {
                assert!(m.lit(var(&f, name)), "{name}");
            }
        }
    }

    #[test]
    fn tree_other_component_unreachable() {
        let g = Graph::undirected(4, &[(0, 1), (2, 3)]).unwrap();
        let mut f = Formula::new();
        let frag = encode_spanning_tree(&mut f, &g, Source::Vertex(0), Gate::Open, "0").unwrap();
        let models = all_models(&f);
        assert!(!models.is_empty());
        for m in &models {
            assert!(!m.lit(frag.reach[2]) && !m.lit(frag.reach[3]));
        }
    }

    #[test]
    fn tree_rejects_directed() {
        let g = Graph::directed(2, &[(0, 1)]).unwrap();
        let err = encode_spanning_tree(&mut Formula::new(), &g, Source::Vertex(0), Gate::Open, "0");
        assert_eq!(err.unwrap_err(), ReachError::Directed);
    }

    #[test]
    fn graph_validation() {
        assert_eq!(Graph::undirected(2, &[(0, 0)]).unwrap_err(), ReachError::SelfLoop(0));
        assert_eq!(Graph::undirected(2, &[(0, 2)]).unwrap_err(), ReachError::BadVertex(2));
        let g = Graph::grid(1, 3, &[true; 3]);
        assert_eq!((g.vertex_count(), g.edge_count()), (3, 2));
        let g = Graph::grid(3, 3, &[false; 9]);
        assert_eq!(g.vertex_count(), 0);
    }

    #[test]
    fn bfs_basics() {
        let g = Graph::undirected(1, &[]).unwrap();
        assert_eq!(bfs_reachable(&g, 0, &[true]), vec![true]);
        let g = Graph::grid(1, 3, &[true; 3]);
        assert_eq!(bfs_reachable(&g, 0, &[true; 3]), vec![true; 3]);
        assert_eq!(bfs_reachable(&g, 0, &[true, false, true]), vec![true, false, false]);
    }
}

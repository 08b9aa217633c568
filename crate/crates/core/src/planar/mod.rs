//! Combinatorial side: validated triangulations, separating triangles and
//! the decomposition into 4-connected pieces.

mod generate;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use generate::{gen_four_connected, gen_stacked, gen_stacked_traced, gen_triangulation};

pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanarError {
    #[error("a triangulation needs at least 4 vertices, got {0}")]
    TooSmall(usize),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("self loop at vertex {0}")]
    Loop(usize),
    #[error("repeated edge {0}-{1}")]
    MultiEdge(usize, usize),
    #[error("outer vertices must be three distinct vertices, got {0:?}")]
    BadOuter([usize; 3]),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph is not planar: {0}")]
    NonPlanar(String),
    #[error("graph is not a triangulation: {edges} edges, a triangulation on these vertices has {expected}")]
    NotMaximal { edges: usize, expected: usize },
    #[error("outer triple {0:?} is not a face")]
    OuterNotFace([usize; 3]),
    #[error("{0:?} is not a separating triangle")]
    NotSeparating([usize; 3]),
    #[error("no 4-connected triangulation has {0} vertices")]
    NoFourConnected(usize),
    #[error("generator gave up after {0} attempts")]
    GeneratorExhausted(usize),
}

/// Graph JSON: `{"n": int, "outer": [a, b, c], "edges": [[u, v], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphInput {
    pub n: usize,
    pub outer: [usize; 3],
    pub edges: Vec<[usize; 2]>,
}

/// A planar triangulation with a distinguished outer face `(a, b, c)`.
///
/// Faces are stored oriented as boundary walks with the face on the left,
/// for the embedding in which `(a, b, c)` runs counterclockwise. The outer
/// face is `faces()[0]` and reads `(a, c, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangulation {
    n: usize,
    adj: Vec<Vec<Vertex>>,
    outer: [Vertex; 3],
    faces: Vec<[Vertex; 3]>,
    rotation: Vec<Vec<Vertex>>,
}

pub fn sorted3(t: [Vertex; 3]) -> [Vertex; 3] {
    let mut t = t;
    t.sort_unstable();
    t
}

fn ordered(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Checks the input and builds the combinatorial embedding.
///
/// Planarity is decided through the face structure: in a maximal planar
/// graph the faces are exactly the triangles whose removal leaves the graph
/// connected, and conversely if those triangles close up into a surface
/// where every edge has two sides and every vertex a single cycle of
/// faces, Euler's formula makes that surface a sphere.
pub fn validate(input: &GraphInput) -> Result<Triangulation, PlanarError> {
    let n = input.n;
    if n < 4 {
        return Err(PlanarError::TooSmall(n));
    }
    let [a, b, c] = input.outer;
    if a == b || b == c || a == c {
        return Err(PlanarError::BadOuter(input.outer));
    }
    for &v in &input.outer {
        if v >= n {
            return Err(PlanarError::VertexOutOfRange(v));
        }
    }
    let mut seen = HashSet::new();
    let mut adj: Vec<BTreeSet<Vertex>> = vec![BTreeSet::new(); n];
    for &[u, v] in &input.edges {
        if u >= n {
            return Err(PlanarError::VertexOutOfRange(u));
        }
        if v >= n {
            return Err(PlanarError::VertexOutOfRange(v));
        }
        if u == v {
            return Err(PlanarError::Loop(u));
        }
        if !seen.insert(ordered(u, v)) {
            let (p, q) = ordered(u, v);
            return Err(PlanarError::MultiEdge(p, q));
        }
        adj[u].insert(v);
        adj[v].insert(u);
    }
    let m = seen.len();
    let expected = 3 * n - 6;
    if m > expected {
        return Err(PlanarError::NonPlanar(format!(
            "{m} edges exceed the planar bound 3n-6 = {expected}"
        )));
    }
    if m < expected {
        return Err(PlanarError::NotMaximal { edges: m, expected });
    }
    let adj: Vec<Vec<Vertex>> = adj.into_iter().map(|s| s.into_iter().collect()).collect();
    if !connected_without(&adj, &[]) {
        return Err(PlanarError::Disconnected);
    }

    let face_set: Vec<[Vertex; 3]> = triangles(&adj)
        .into_iter()
        .filter(|t| connected_without(&adj, t))
        .collect();
    if face_set.len() != 2 * n - 4 {
        return Err(PlanarError::NonPlanar(format!(
            "{} non-separating triangles, a planar triangulation has {}",
            face_set.len(),
            2 * n - 4
        )));
    }
    let mut edge_faces: HashMap<(Vertex, Vertex), Vec<usize>> = HashMap::new();
    for (i, f) in face_set.iter().enumerate() {
        for (p, q) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
            edge_faces.entry((p, q)).or_default().push(i);
        }
    }
    for &(u, v) in &seen {
        let k = edge_faces.get(&(u, v)).map_or(0, Vec::len);
        if k != 2 {
            return Err(PlanarError::NonPlanar(format!(
                "edge {u}-{v} borders {k} faces"
            )));
        }
    }

    let outer_sorted = sorted3(input.outer);
    let Some(outer_idx) = face_set.iter().position(|f| *f == outer_sorted) else {
        return Err(PlanarError::OuterNotFace(input.outer));
    };

    // orient every face consistently, starting from the outer walk (a, c, b)
    let mut oriented: Vec<Option<[Vertex; 3]>> = vec![None; face_set.len()];
    oriented[outer_idx] = Some([a, c, b]);
    let mut queue = VecDeque::from([outer_idx]);
    while let Some(fi) = queue.pop_front() {
        let f = oriented[fi].unwrap();
        for k in 0..3 {
            let (p, q) = (f[k], f[(k + 1) % 3]);
            for &gi in &edge_faces[&ordered(p, q)] {
                if gi == fi {
                    continue;
                }
                let g = face_set[gi];
                let r = g.iter().copied().find(|&x| x != p && x != q).unwrap();
                let want = [q, p, r];
                match oriented[gi] {
                    None => {
                        oriented[gi] = Some(want);
                        queue.push_back(gi);
                    }
                    Some(have) => {
                        if !same_cycle(have, want) {
                            return Err(PlanarError::NonPlanar("faces are not orientable".into()));
                        }
                    }
                }
            }
        }
    }
    let mut faces: Vec<[Vertex; 3]> = Vec::with_capacity(face_set.len());
    faces.push(oriented[outer_idx].unwrap());
    for (i, f) in oriented.iter().enumerate() {
        if i != outer_idx {
            faces.push(f.expect("faces are connected through edges"));
        }
    }

    // rotation system: successor of each neighbor around every vertex
    let mut next: Vec<HashMap<Vertex, Vertex>> = vec![HashMap::new(); n];
    for f in &faces {
        for k in 0..3 {
            let v = f[k];
            let p = f[(k + 1) % 3];
            let q = f[(k + 2) % 3];
            if next[v].insert(p, q).is_some() {
                return Err(PlanarError::NonPlanar(format!("vertex {v} is pinched")));
            }
        }
    }
    let mut rotation = Vec::with_capacity(n);
    for v in 0..n {
        let start = adj[v][0];
        let mut cycle = vec![start];
        let mut cur = next[v][&start];
        while cur != start {
            if cycle.len() > adj[v].len() {
                break;
            }
            cycle.push(cur);
            cur = next[v][&cur];
        }
        if cycle.len() != adj[v].len() {
            return Err(PlanarError::NonPlanar(format!(
                "faces around vertex {v} do not form a single cycle"
            )));
        }
        rotation.push(cycle);
    }

    Ok(Triangulation {
        n,
        adj,
        outer: input.outer,
        faces,
        rotation,
    })
}

fn same_cycle(a: [Vertex; 3], b: [Vertex; 3]) -> bool {
    (0..3).any(|k| a == [b[k], b[(k + 1) % 3], b[(k + 2) % 3]])
}

/// All 3-cliques as sorted triples, in lexicographic order.
fn triangles(adj: &[Vec<Vertex>]) -> Vec<[Vertex; 3]> {
    let mut out = Vec::new();
    for u in 0..adj.len() {
        for &v in adj[u].iter().filter(|&&v| v > u) {
            for &w in adj[v].iter().filter(|&&w| w > v) {
                if adj[u].binary_search(&w).is_ok() {
                    out.push([u, v, w]);
                }
            }
        }
    }
    out
}

fn connected_without(adj: &[Vec<Vertex>], removed: &[Vertex]) -> bool {
    components_without(adj, removed).len() <= 1
}

fn components_without(adj: &[Vec<Vertex>], removed: &[Vertex]) -> Vec<Vec<Vertex>> {
    let n = adj.len();
    let mut mark = vec![usize::MAX; n];
    for &r in removed {
        mark[r] = usize::MAX - 1;
    }
    let mut comps: Vec<Vec<Vertex>> = Vec::new();
    for s in 0..n {
        if mark[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut comp = vec![s];
        mark[s] = id;
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            i += 1;
            for &w in &adj[v] {
                if mark[w] == usize::MAX {
                    mark[w] = id;
                    comp.push(w);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

impl Triangulation {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn outer(&self) -> [Vertex; 3] {
        self.outer
    }

    pub fn is_outer(&self, v: Vertex) -> bool {
        self.outer.contains(&v)
    }

    pub fn inner_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n).filter(|v| !self.is_outer(*v))
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::with_capacity(3 * self.n - 6);
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if v > u {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// All faces, the outer one first.
    pub fn faces(&self) -> &[[Vertex; 3]] {
        &self.faces
    }

    pub fn inner_faces(&self) -> &[[Vertex; 3]] {
        &self.faces[1..]
    }

    pub fn is_face(&self, tri: [Vertex; 3]) -> bool {
        let t = sorted3(tri);
        self.faces.iter().any(|f| sorted3(*f) == t)
    }

    /// Counterclockwise cyclic order of the neighbors of `v`.
    pub fn rotation(&self, v: Vertex) -> &[Vertex] {
        &self.rotation[v]
    }

    pub fn to_input(&self) -> GraphInput {
        GraphInput {
            n: self.n,
            outer: self.outer,
            edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }

    /// All 3-cycles, as sorted triples.
    pub fn triangles(&self) -> Vec<[Vertex; 3]> {
        triangles(&self.adj)
    }

    /// Vertices strictly inside the 3-cycle `tri` (empty for a face).
    pub fn inside_of(&self, tri: [Vertex; 3]) -> Vec<Vertex> {
        let comps = components_without(&self.adj, &tri);
        if comps.len() < 2 {
            return Vec::new();
        }
        let mut inside: Vec<Vertex> = comps
            .into_iter()
            .filter(|c| !c.iter().any(|v| self.is_outer(*v)))
            .flatten()
            .collect();
        inside.sort_unstable();
        inside
    }
}

/// Triangles of `t` that are not faces, as sorted triples.
pub fn separating_triangles(t: &Triangulation) -> Vec<[Vertex; 3]> {
    let faces: HashSet<[Vertex; 3]> = t.faces.iter().map(|f| sorted3(*f)).collect();
    t.triangles()
        .into_iter()
        .filter(|tri| !faces.contains(tri))
        .collect()
}

/// A triangulation together with the labels of its vertices in some
/// enclosing triangulation (`labels[local] = enclosing id`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubTriangulation {
    pub graph: Triangulation,
    pub labels: Vec<Vertex>,
}

impl SubTriangulation {
    pub fn whole(t: &Triangulation) -> Self {
        SubTriangulation {
            graph: t.clone(),
            labels: (0..t.n()).collect(),
        }
    }

    pub fn label(&self, local: Vertex) -> Vertex {
        self.labels[local]
    }

    pub fn local(&self, label: Vertex) -> Option<Vertex> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Re-express labels through an outer labelling.
    fn relabel(mut self, outer: &[Vertex]) -> Self {
        for l in &mut self.labels {
            *l = outer[*l];
        }
        self
    }
}

/// Splits along a separating triangle into the part on or outside it and
/// the part on or inside it. The inner part's outer face is `tri`, oriented
/// as that triangle appears among the faces of the outer part.
pub fn split(
    t: &Triangulation,
    tri: [Vertex; 3],
) -> Result<(SubTriangulation, SubTriangulation), PlanarError> {
    let key = sorted3(tri);
    let is_triangle = tri.iter().all(|&v| v < t.n)
        && t.has_edge(key[0], key[1])
        && t.has_edge(key[1], key[2])
        && t.has_edge(key[0], key[2]);
    if !is_triangle || t.is_face(key) {
        return Err(PlanarError::NotSeparating(tri));
    }
    let comps = components_without(&t.adj, &key);
    if comps.len() != 2 {
        return Err(PlanarError::NotSeparating(tri));
    }
    let (outside, inside) = if comps[0].iter().any(|v| t.is_outer(*v)) {
        (&comps[0], &comps[1])
    } else {
        (&comps[1], &comps[0])
    };

    let mut out_vs: Vec<Vertex> = outside.iter().chain(key.iter()).copied().collect();
    out_vs.sort_unstable();
    let out_part = induced(t, &out_vs, t.outer)?;

    let face = out_part
        .graph
        .faces()
        .iter()
        .find(|f| sorted3(f.map(|v| out_part.labels[v])) == key)
        .map(|f| f.map(|v| out_part.labels[v]))
        .ok_or(PlanarError::NotSeparating(tri))?;

    let mut in_vs: Vec<Vertex> = inside.iter().chain(key.iter()).copied().collect();
    in_vs.sort_unstable();
    let in_part = induced(t, &in_vs, face)?;
    Ok((out_part, in_part))
}

fn induced(
    t: &Triangulation,
    vs: &[Vertex],
    outer: [Vertex; 3],
) -> Result<SubTriangulation, PlanarError> {
    let index: HashMap<Vertex, Vertex> = vs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut edges = Vec::new();
    for (i, &v) in vs.iter().enumerate() {
        for w in &t.adj[v] {
            if let Some(&j) = index.get(w) {
                if j > i {
                    edges.push([i, j]);
                }
            }
        }
    }
    let input = GraphInput {
        n: vs.len(),
        outer: outer.map(|v| index[&v]),
        edges,
    };
    Ok(SubTriangulation {
        graph: validate(&input)?,
        labels: vs.to_vec(),
    })
}

/// One 4-connected piece of the decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Piece with labels in the decomposed triangulation.
    pub piece: SubTriangulation,
    pub parent: Option<usize>,
    /// Separating triangle shared with the parent (labels of the decomposed
    /// triangulation), oriented as the piece's outer face.
    pub separator: Option<[Vertex; 3]>,
    pub children: Vec<usize>,
}

/// Pieces without separating triangles, linked along the separating
/// triangles they share. Nodes are stored parents first; node 0 is the
/// root and carries the outer face of the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationTree {
    pub nodes: Vec<TreeNode>,
}

impl SeparationTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Union of the pieces' edges, in the decomposed triangulation's labels.
    pub fn reglue(&self) -> BTreeSet<(Vertex, Vertex)> {
        let mut edges = BTreeSet::new();
        for node in &self.nodes {
            for (u, v) in node.piece.graph.edges() {
                edges.insert(ordered(node.piece.label(u), node.piece.label(v)));
            }
        }
        edges
    }
}

/// Splits repeatedly, always at a separating triangle with the fewest
/// vertices inside (ties by sorted triple), until no piece has one.
pub fn decompose(t: &Triangulation) -> SeparationTree {
    let mut current = SubTriangulation::whole(t);
    // split-off pieces and their separators, in split order
    let mut split_off: Vec<(SubTriangulation, [Vertex; 3])> = Vec::new();
    loop {
        let seps = separating_triangles(&current.graph);
        let Some(best) = seps
            .into_iter()
            .map(|tri| {
                (
                    current.graph.inside_of(tri).len(),
                    sorted3(tri.map(|v| current.label(v))),
                    tri,
                )
            })
            .min()
        else {
            break;
        };
        let tri = best.2;
        let (out_part, in_part) = split(&current.graph, tri).expect("separating triangle splits");
        let in_part = in_part.relabel(&current.labels);
        let sep = in_part.graph.outer().map(|v| in_part.label(v));
        split_off.push((in_part, sep));
        current = out_part.relabel(&current.labels);
    }

    // the remaining piece is the root; every split-off piece hangs below the
    // later piece that has its separator as an inner face
    let mut pieces: Vec<(SubTriangulation, Option<[Vertex; 3]>)> = vec![(current, None)];
    pieces.extend(split_off.into_iter().rev().map(|(p, s)| (p, Some(s))));
    let mut parent: Vec<Option<usize>> = vec![None; pieces.len()];
    for i in 1..pieces.len() {
        let sep = sorted3(pieces[i].1.unwrap());
        let owner = (0..i).find(|&j| {
            let piece = &pieces[j].0;
            piece
                .graph
                .inner_faces()
                .iter()
                .any(|f| sorted3(f.map(|v| piece.label(v))) == sep)
        });
        parent[i] = Some(owner.expect("separator is an inner face of an earlier piece"));
    }
    let mut nodes: Vec<TreeNode> = pieces
        .into_iter()
        .zip(&parent)
        .map(|((piece, separator), &parent)| TreeNode {
            piece,
            parent,
            separator,
            children: Vec::new(),
        })
        .collect();
    for (i, p) in parent.iter().enumerate().skip(1) {
        nodes[p.unwrap()].children.push(i);
    }
    SeparationTree { nodes }
}

/// Insertion order `(vertex, face)` rebuilding `t` from its outer face by
/// degree-3 insertions, or `None` when `t` is not stacked.
pub fn stacking_order(t: &Triangulation) -> Option<Vec<(Vertex, [Vertex; 3])>> {
    let mut adj: Vec<BTreeSet<Vertex>> =
        t.adj.iter().map(|a| a.iter().copied().collect()).collect();
    let mut alive: BTreeSet<Vertex> = t.inner_vertices().collect();
    let mut removed = Vec::new();
    while !alive.is_empty() {
        let v = *alive.iter().find(|&&v| adj[v].len() == 3)?;
        let nb: Vec<Vertex> = adj[v].iter().copied().collect();
        let face = [nb[0], nb[1], nb[2]];
        for &w in &nb {
            adj[w].remove(&v);
        }
        adj[v].clear();
        alive.remove(&v);
        removed.push((v, face));
    }
    removed.reverse();
    Some(removed)
}

pub fn is_stacked(t: &Triangulation) -> bool {
    stacking_order(t).is_some()
}

//! Seeded random triangulations.

use std::collections::{BTreeSet, HashSet};

use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sorted3, validate, GraphInput, PlanarError, Triangulation, Vertex};

/// Mutable triangulation used while generating: adjacency plus the set of
/// faces as sorted triples.
struct Builder {
    adj: Vec<BTreeSet<Vertex>>,
    faces: BTreeSet<[Vertex; 3]>,
    outer: [Vertex; 3],
}

impl Builder {
    fn k4() -> Self {
        let mut adj = vec![BTreeSet::new(); 4];
        for (u, nbrs) in adj.iter_mut().enumerate() {
            nbrs.extend((0..4).filter(|&v| v != u));
        }
        let faces = BTreeSet::from([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]);
        Builder {
            adj,
            faces,
            outer: [0, 1, 2],
        }
    }

    fn stack(&mut self, face: [Vertex; 3]) -> Vertex {
        let v = self.adj.len();
        self.adj.push(face.iter().copied().collect());
        for &w in &face {
            self.adj[w].insert(v);
        }
        self.faces.remove(&face);
        let [a, b, c] = face;
        self.faces.insert(sorted3([a, b, v]));
        self.faces.insert(sorted3([a, c, v]));
        self.faces.insert(sorted3([b, c, v]));
        v
    }

    fn inner_faces(&self) -> impl Iterator<Item = &[Vertex; 3]> {
        let outer = sorted3(self.outer);
        self.faces.iter().filter(move |f| **f != outer)
    }

    /// The two faces on edge `u-v`, as their third vertices.
    fn opposite(&self, u: Vertex, v: Vertex) -> Vec<Vertex> {
        self.adj[u]
            .intersection(&self.adj[v])
            .copied()
            .filter(|&w| self.faces.contains(&sorted3([u, v, w])))
            .collect()
    }

    /// Replaces edge `u-v` by the other diagonal of its two faces, when that
    /// keeps the graph simple and leaves the outer face alone.
    fn flip(&mut self, u: Vertex, v: Vertex) -> Option<(Vertex, Vertex)> {
        let outer = sorted3(self.outer);
        let opp = self.opposite(u, v);
        if opp.len() != 2 {
            return None;
        }
        let (x, y) = (opp[0], opp[1]);
        if sorted3([u, v, x]) == outer || sorted3([u, v, y]) == outer {
            return None;
        }
        if self.adj[u].len() <= 3 || self.adj[v].len() <= 3 || self.adj[x].contains(&y) {
            return None;
        }
        self.adj[u].remove(&v);
        self.adj[v].remove(&u);
        self.adj[x].insert(y);
        self.adj[y].insert(x);
        self.faces.remove(&sorted3([u, v, x]));
        self.faces.remove(&sorted3([u, v, y]));
        self.faces.insert(sorted3([x, y, u]));
        self.faces.insert(sorted3([x, y, v]));
        Some((x, y))
    }

    fn separating_count(&self) -> usize {
        let mut count = 0;
        for u in 0..self.adj.len() {
            for &v in self.adj[u].range(u + 1..) {
                for &w in self.adj[v].range(v + 1..) {
                    if self.adj[u].contains(&w) && !self.faces.contains(&[u, v, w]) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    fn separating(&self) -> Vec<[Vertex; 3]> {
        let mut out = Vec::new();
        for u in 0..self.adj.len() {
            for &v in self.adj[u].range(u + 1..) {
                for &w in self.adj[v].range(v + 1..) {
                    if self.adj[u].contains(&w) && !self.faces.contains(&[u, v, w]) {
                        out.push([u, v, w]);
                    }
                }
            }
        }
        out
    }

    fn finish(&self) -> Result<Triangulation, PlanarError> {
        let mut edges = Vec::new();
        for u in 0..self.adj.len() {
            for &v in self.adj[u].range(u + 1..) {
                edges.push([u, v]);
            }
        }
        validate(&GraphInput {
            n: self.adj.len(),
            outer: self.outer,
            edges,
        })
    }
}

fn check_n(n: usize) -> Result<(), PlanarError> {
    if n < 4 {
        Err(PlanarError::TooSmall(n))
    } else {
        Ok(())
    }
}

fn stacked_builder(n: usize, rng: &mut ChaCha8Rng) -> (Builder, Vec<[Vertex; 3]>) {
    let mut b = Builder::k4();
    let mut history = vec![[0, 1, 2]];
    while b.adj.len() < n {
        let face = *b
            .inner_faces()
            .choose(rng)
            .expect("a triangulation has inner faces");
        b.stack(face);
        history.push(face);
    }
    (b, history)
}

/// Random stacked triangulation on `n` vertices with outer face `(0, 1, 2)`:
/// starting from K4, each new vertex goes into a uniformly chosen inner face.
pub fn gen_stacked(n: usize, seed: u64) -> Result<Triangulation, PlanarError> {
    gen_stacked_traced(n, seed).map(|(t, _)| t)
}

/// Like [`gen_stacked`], also returning the face each vertex `3..n` was
/// inserted into (as a sorted triple; vertex 3 goes into `(0, 1, 2)`).
pub fn gen_stacked_traced(
    n: usize,
    seed: u64,
) -> Result<(Triangulation, Vec<[Vertex; 3]>), PlanarError> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, history) = stacked_builder(n, &mut rng);
    Ok((b.finish()?, history))
}

/// Random triangulation: a stacked one mixed by random edge flips.
pub fn gen_triangulation(n: usize, seed: u64) -> Result<Triangulation, PlanarError> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut b, _) = stacked_builder(n, &mut rng);
    for _ in 0..4 * n {
        let u = rng.gen_range(0..n);
        let Some(&v) = b.adj[u].iter().choose(&mut rng) else {
            continue;
        };
        b.flip(u, v);
    }
    b.finish()
}

/// Random triangulation without separating triangles. Flips edges of
/// separating triangles, keeping a flip unless it adds separating
/// triangles; restarts from a fresh seed when stuck.
pub fn gen_four_connected(n: usize, seed: u64) -> Result<Triangulation, PlanarError> {
    check_n(n)?;
    if n == 5 {
        return Err(PlanarError::NoFourConnected(n));
    }
    if n == 4 {
        return Builder::k4().finish();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const ATTEMPTS: usize = 50;
    for _ in 0..ATTEMPTS {
        let (mut b, _) = stacked_builder(n, &mut rng);
        for _ in 0..4 * n {
            let u = rng.gen_range(0..n);
            let Some(&v) = b.adj[u].iter().choose(&mut rng) else {
                continue;
            };
            b.flip(u, v);
        }
        let mut count = b.separating_count();
        let mut tried: HashSet<(Vertex, Vertex)> = HashSet::new();
        for _ in 0..200 * n {
            if count == 0 {
                return b.finish();
            }
            let seps = b.separating();
            let tri = seps[rng.gen_range(0..seps.len())];
            let k = rng.gen_range(0..3);
            let (u, v) = (tri[k], tri[(k + 1) % 3]);
            if tried.len() > 8 * n {
                break;
            }
            let Some((x, y)) = b.flip(u, v) else {
                tried.insert((u, v));
                continue;
            };
            let after = b.separating_count();
            if after > count && !rng.gen_bool(0.05) {
                // undo
                b.flip(x, y).expect("reverse flip is always legal");
                tried.insert((u, v));
            } else {
                count = after;
                tried.clear();
            }
        }
    }
    Err(PlanarError::GeneratorExhausted(ATTEMPTS))
}

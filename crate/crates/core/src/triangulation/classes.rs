use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{slot_vertices, validate::match_faces, EdgeClass, FaceGluing, TriangulationError};
use crate::geometry::slot_index;

/// Partner gluing per face, indexed `tet * 4 + face`; the gluing's source is
/// that face.
pub(crate) type Partners = [Option<FaceGluing>];

/// Edge classes of a set of face gluings, in first-encounter order. Faces
/// left unglued simply end an orbit.
pub fn compute_edge_classes(num_tets: usize, gluings: &[FaceGluing]) -> Result<Vec<EdgeClass>, TriangulationError> {
    let (partners, violations) = match_faces(num_tets, gluings);
    if let Some(v) = violations.into_iter().next() {
        return Err(v.error);
    }
    Ok(orbits(num_tets, &partners).into_iter().map(|members| EdgeClass { members }).collect())
}

fn orbits(num_tets: usize, partners: &Partners) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![[false; 6]; num_tets];
    let mut out = Vec::new();
    for t in 0..num_tets {
        for slot in 0..6 {
            if seen[t][slot] {
                continue;
            }
            let mut members = Vec::new();
            let mut queue = VecDeque::from([(t, slot)]);
            seen[t][slot] = true;
            while let Some((tet, s)) = queue.pop_front() {
                members.push((tet, s));
                let (a, b) = slot_vertices(s);
                for f in (0..4u8).filter(|&f| f != a && f != b) {
                    let Some(g) = partners[tet * 4 + f as usize] else { continue };
                    let m = g.tet_map();
                    let next = (g.target.tet, slot_index(m[a as usize] as usize, m[b as usize] as usize));
                    if !seen[next.0][next.1] {
                        seen[next.0][next.1] = true;
                        queue.push_back(next);
                    }
                }
            }
            out.push(members);
        }
    }
    out
}

/// Edge class label of every `(tet, slot)`.
pub(crate) fn slot_classes(num_tets: usize, partners: &Partners) -> Vec<[usize; 6]> {
    let mut slot_class = vec![[usize::MAX; 6]; num_tets];
    for (label, members) in orbits(num_tets, partners).into_iter().enumerate() {
        for (t, s) in members {
            slot_class[t][s] = label;
        }
    }
    slot_class
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// A connected boundary surface, triangulated by the vertex triangles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryComponent {
    /// Vertex triangles `(tet, vertex)` making up the surface.
    pub triangles: Vec<(usize, u8)>,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub chi: i64,
    /// Number of triangle corners meeting at each surface vertex.
    pub vertex_degrees: Vec<usize>,
}

/// Boundary surfaces from the vertex links of a fully matched gluing.
///
/// Triangle `(t, v)` has a corner `(t, v, w)` on each edge `vw` and a side
/// `(t, v, f)` in each face `f != v`. Gluing face `f` identifies sides and
/// corners through the face's vertex map.
pub(crate) fn boundary_components(num_tets: usize, partners: &Partners) -> Vec<BoundaryComponent> {
    let idx = |t: usize, v: u8, w: u8| t * 16 + v as usize * 4 + w as usize;
    let mut corners = UnionFind::new(num_tets * 16);
    let mut sides = UnionFind::new(num_tets * 16);
    let mut tris = UnionFind::new(num_tets * 4);
    for t in 0..num_tets {
        for f in 0..4u8 {
            let g = partners[t * 4 + f as usize].expect("every face is matched");
            let m = g.tet_map();
            let t2 = g.target.tet;
            for v in g.source.vertices() {
                let v2 = m[v as usize];
                tris.union(t * 4 + v as usize, t2 * 4 + v2 as usize);
                sides.union(idx(t, v, f), idx(t2, v2, g.target.face));
                for w in g.source.vertices() {
                    if w != v {
                        corners.union(idx(t, v, w), idx(t2, v2, m[w as usize]));
                    }
                }
            }
        }
    }

    let mut roots: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<(usize, u8)>> = Vec::new();
    for t in 0..num_tets {
        for v in 0..4u8 {
            let r = tris.find(t * 4 + v as usize);
            match roots.iter().position(|&x| x == r) {
                Some(k) => comps[k].push((t, v)),
                None => {
                    roots.push(r);
                    comps.push(vec![(t, v)]);
                }
            }
        }
    }

    comps
        .into_iter()
        .map(|triangles| {
            let mut side_roots = Vec::new();
            let mut corner_roots: Vec<(usize, usize)> = Vec::new();
            for &(t, v) in &triangles {
                for w in (0..4u8).filter(|&w| w != v) {
                    side_roots.push(sides.find(idx(t, v, w)));
                    let c = corners.find(idx(t, v, w));
                    match corner_roots.iter_mut().find(|(r, _)| *r == c) {
                        Some(entry) => entry.1 += 1,
                        None => corner_roots.push((c, 1)),
                    }
                }
            }
            side_roots.sort_unstable();
            side_roots.dedup();
            let (vertices, edges, faces) = (corner_roots.len(), side_roots.len(), triangles.len());
            BoundaryComponent {
                vertices,
                edges,
                faces,
                chi: vertices as i64 - edges as i64 + faces as i64,
                vertex_degrees: corner_roots.into_iter().map(|(_, d)| d).collect(),
                triangles,
            }
        })
        .collect()
}

//! Ideal triangulations: tetrahedra glued along faces, or given directly as
//! edge-class incidence.
//!
//! Faces are named by their opposite vertex. A gluing sends the ascending
//! vertex triple of the source face to an ordered triple of vertices of the
//! target face; extending by `source face -> target face` gives a bijection
//! of tetrahedron vertices.

mod classes;
mod parse;
mod validate;

pub use classes::{compute_edge_classes, BoundaryComponent};
pub use parse::{detect_format, parse, parse_gluing, parse_incidence, read_gluing_file, GluingFile};
pub use validate::{validate, validate_gluings, ValidationReport, Violation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::SLOTS;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TriangulationError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: dangling reference: {message}")]
    Dangling { line: usize, message: String },
    #[error("unmatched face: tet {tet} face {face}")]
    UnmatchedFace { tet: usize, face: u8 },
    #[error("non-involutive gluing at tet {tet} face {face}")]
    NonInvolutive { tet: usize, face: u8 },
    #[error("face glued to itself by the identity: tet {tet} face {face}")]
    SelfGluing { tet: usize, face: u8 },
    #[error("line {line}: duplicate tetrahedron {tet}")]
    DuplicateTet { line: usize, tet: usize },
    #[error("missing tetrahedron {0}")]
    MissingTet(usize),
    #[error("edge label gap: label {0} is never used")]
    LabelGap(usize),
    #[error("boundary Euler characteristic is only available for the gluing format")]
    UnsupportedFormat,
    #[error("empty triangulation")]
    Empty,
    #[error("invalid serialized triangulation: {0}")]
    Serialized(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceRef {
    pub tet: usize,
    /// Opposite vertex, `0..4`.
    pub face: u8,
}

impl FaceRef {
    pub fn new(tet: usize, face: u8) -> Self {
        Self { tet, face }
    }

    /// Vertices of this face in ascending order.
    pub fn vertices(&self) -> [u8; 3] {
        face_vertices(self.face)
    }
}

pub fn face_vertices(face: u8) -> [u8; 3] {
    let mut out = [0u8; 3];
    let mut n = 0;
    for v in 0..4u8 {
        if v != face {
            out[n] = v;
            n += 1;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaceGluing {
    pub source: FaceRef,
    pub target: FaceRef,
    /// Images of the ascending source-face vertices.
    pub vertex_map: [u8; 3],
}

impl FaceGluing {
    pub fn new(source: FaceRef, target: FaceRef, vertex_map: [u8; 3]) -> Self {
        Self { source, target, vertex_map }
    }

    /// True when `vertex_map` is a bijection onto the target face vertices.
    pub fn is_well_formed(&self) -> bool {
        let mut seen = [false; 4];
        for &v in &self.vertex_map {
            if v > 3 || v == self.target.face || seen[v as usize] {
                return false;
            }
            seen[v as usize] = true;
        }
        self.source.face < 4 && self.target.face < 4
    }

    /// Full vertex permutation `source tet -> target tet`.
    pub fn tet_map(&self) -> [u8; 4] {
        let mut m = [0u8; 4];
        m[self.source.face as usize] = self.target.face;
        for (v, &img) in self.source.vertices().iter().zip(&self.vertex_map) {
            m[*v as usize] = img;
        }
        m
    }

    pub fn inverse(&self) -> FaceGluing {
        let m = self.tet_map();
        let mut inv = [0u8; 4];
        for (v, &w) in m.iter().enumerate() {
            inv[w as usize] = v as u8;
        }
        let vertex_map = self.target.vertices().map(|v| inv[v as usize]);
        FaceGluing { source: self.target, target: self.source, vertex_map }
    }

    pub fn is_identity_self_gluing(&self) -> bool {
        self.source == self.target && self.tet_map() == [0, 1, 2, 3]
    }
}

/// Which input dialect a triangulation came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Gluing,
    Incidence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeClass {
    /// `(tet, slot)` pairs in traversal order.
    pub members: Vec<(usize, usize)>,
}

impl EdgeClass {
    pub fn degree(&self) -> usize {
        self.members.len()
    }
}

/// An immutable triangulation with its edge classes.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    num_tets: usize,
    format: Format,
    /// One gluing per matched face pair, source face smaller than target.
    gluings: Vec<FaceGluing>,
    slot_class: Vec<[usize; 6]>,
    edge_classes: Vec<EdgeClass>,
    boundary: Vec<BoundaryComponent>,
}

impl Triangulation {
    /// Build from face gluings. Each face pair may be listed once or in both
    /// directions, provided the two directions are mutual inverses.
    pub fn from_gluings(num_tets: usize, gluings: &[FaceGluing]) -> Result<Self, TriangulationError> {
        if num_tets == 0 {
            return Err(TriangulationError::Empty);
        }
        let partners = validate::pair_faces(num_tets, gluings).map_err(|v| v.into_iter().next().unwrap().error)?;
        let canonical: Vec<FaceGluing> = partners.iter().filter_map(|g| g.filter(|g| g.source <= g.target)).collect();
        let slot_class = classes::slot_classes(num_tets, &partners);
        let edge_classes = classes_from_slots(&slot_class);
        let boundary = classes::boundary_components(num_tets, &partners);
        Ok(Self { num_tets, format: Format::Gluing, gluings: canonical, slot_class, edge_classes, boundary })
    }

    /// Build from per-tetrahedron edge labels (slot order). Labels must be
    /// exactly `0..num_edges`, each used at least once.
    pub fn from_incidence(num_edges: usize, labels: &[[usize; 6]]) -> Result<Self, TriangulationError> {
        if labels.is_empty() {
            return Err(TriangulationError::Empty);
        }
        let mut used = vec![false; num_edges];
        for row in labels {
            for &e in row {
                if e >= num_edges {
                    return Err(TriangulationError::Serialized(format!(
                        "edge label {e} out of range (edges {num_edges})"
                    )));
                }
                used[e] = true;
            }
        }
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(TriangulationError::LabelGap(gap));
        }
        let slot_class = labels.to_vec();
        let edge_classes = classes_from_slots(&slot_class);
        Ok(Self {
            num_tets: labels.len(),
            format: Format::Incidence,
            gluings: Vec::new(),
            slot_class,
            edge_classes,
            boundary: Vec::new(),
        })
    }

    pub fn num_tets(&self) -> usize {
        self.num_tets
    }

    pub fn num_edges(&self) -> usize {
        self.edge_classes.len()
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn gluings(&self) -> &[FaceGluing] {
        &self.gluings
    }

    pub fn edge_classes(&self) -> &[EdgeClass] {
        &self.edge_classes
    }

    /// Edge class of each slot of `tet`.
    pub fn tet_classes(&self, tet: usize) -> &[usize; 6] {
        &self.slot_class[tet]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.edge_classes.iter().map(EdgeClass::degree).collect()
    }

    /// Boundary surfaces (vertex links); gluing format only.
    pub fn boundary(&self) -> Result<&[BoundaryComponent], TriangulationError> {
        match self.format {
            Format::Gluing => Ok(&self.boundary),
            Format::Incidence => Err(TriangulationError::UnsupportedFormat),
        }
    }

    /// Euler characteristic of each boundary component.
    pub fn boundary_euler_characteristics(&self) -> Result<Vec<i64>, TriangulationError> {
        Ok(self.boundary()?.iter().map(|c| c.chi).collect())
    }

    /// Same triangulation with tetrahedron `t` renamed `perm[t]`.
    pub fn relabel_tets(&self, perm: &[usize]) -> Result<Self, TriangulationError> {
        match self.format {
            Format::Gluing => {
                let gl: Vec<FaceGluing> = self
                    .gluings
                    .iter()
                    .map(|g| {
                        FaceGluing::new(
                            FaceRef::new(perm[g.source.tet], g.source.face),
                            FaceRef::new(perm[g.target.tet], g.target.face),
                            g.vertex_map,
                        )
                    })
                    .collect();
                Self::from_gluings(self.num_tets, &gl)
            }
            Format::Incidence => {
                let mut labels = vec![[0usize; 6]; self.num_tets];
                for (t, row) in self.slot_class.iter().enumerate() {
                    labels[perm[t]] = *row;
                }
                Self::from_incidence(self.num_edges(), &labels)
            }
        }
    }

    /// Text in the triangulation's own dialect; reparses to the same object.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.format {
            Format::Gluing => {
                out.push_str(&format!("tets {}\n", self.num_tets));
                for g in &self.gluings {
                    out.push_str(&format!(
                        "glue {} {} -> {} {} : {} {} {}\n",
                        g.source.tet,
                        g.source.face,
                        g.target.tet,
                        g.target.face,
                        g.vertex_map[0],
                        g.vertex_map[1],
                        g.vertex_map[2]
                    ));
                }
            }
            Format::Incidence => {
                out.push_str(&format!("edges {}\n", self.num_edges()));
                for (t, row) in self.slot_class.iter().enumerate() {
                    let labels: Vec<String> = row.iter().map(|e| format!("e{e}")).collect();
                    out.push_str(&format!("tet {t}: {}\n", labels.join(" ")));
                }
            }
        }
        out
    }

    pub fn to_serialized(&self) -> SerializedTriangulation {
        SerializedTriangulation {
            format: self.format,
            num_tets: self.num_tets,
            gluings: (self.format == Format::Gluing).then(|| self.gluings.clone()),
            incidence: self.slot_class.clone(),
            edge_classes: self
                .edge_classes
                .iter()
                .enumerate()
                .map(|(label, c)| SerializedEdgeClass { label, degree: c.degree(), members: c.members.clone() })
                .collect(),
            boundary_chi: (self.format == Format::Gluing).then(|| self.boundary.iter().map(|c| c.chi).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_serialized()).expect("triangulation serializes")
    }

    /// Rebuild from the JSON form. Derived fields are recomputed, not trusted.
    pub fn from_json(text: &str) -> Result<Self, TriangulationError> {
        let s: SerializedTriangulation =
            serde_json::from_str(text).map_err(|e| TriangulationError::Serialized(e.to_string()))?;
        match s.format {
            Format::Gluing => {
                let gl = s.gluings.ok_or_else(|| TriangulationError::Serialized("missing gluings".into()))?;
                Self::from_gluings(s.num_tets, &gl)
            }
            Format::Incidence => {
                let m = s.incidence.iter().flatten().max().map_or(0, |&e| e + 1);
                Self::from_incidence(m, &s.incidence)
            }
        }
    }
}

fn classes_from_slots(slot_class: &[[usize; 6]]) -> Vec<EdgeClass> {
    let n = slot_class.iter().flatten().max().map_or(0, |&e| e + 1);
    let mut classes = vec![EdgeClass { members: Vec::new() }; n];
    for (t, row) in slot_class.iter().enumerate() {
        for (slot, &e) in row.iter().enumerate() {
            classes[e].members.push((t, slot));
        }
    }
    classes
}

/// Machine-exchange form of a [`Triangulation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerializedTriangulation {
    pub format: Format,
    pub num_tets: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gluings: Option<Vec<FaceGluing>>,
    /// Edge class per `(tet, slot)`.
    pub incidence: Vec<[usize; 6]>,
    pub edge_classes: Vec<SerializedEdgeClass>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boundary_chi: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerializedEdgeClass {
    pub label: usize,
    pub degree: usize,
    pub members: Vec<(usize, usize)>,
}

/// Vertex pair of a slot as `u8`s.
pub(crate) fn slot_vertices(slot: usize) -> (u8, u8) {
    let (i, j) = SLOTS[slot];
    (i as u8, j as u8)
}

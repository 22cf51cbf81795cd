use std::collections::BTreeMap;

use serde::Serialize;

use super::{FaceGluing, Format, Triangulation, TriangulationError};

/// One failed rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub rule: String,
    pub detail: String,
    #[serde(skip)]
    pub error: TriangulationError,
}

impl Violation {
    fn new(rule: &str, error: TriangulationError) -> Self {
        Self { rule: rule.to_string(), detail: error.to_string(), error }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ChiReport {
    Values(Vec<i64>),
    Unavailable(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub advisories: Vec<String>,
    /// Edge degree -> number of edge classes with that degree.
    pub degrees: BTreeMap<usize, usize>,
    pub chi: ChiReport,
}

impl ValidationReport {
    /// Report for input rejected while it was being read.
    pub fn rejected(error: TriangulationError) -> Self {
        let rule = match error {
            TriangulationError::Syntax { .. } => "syntax",
            TriangulationError::Dangling { .. } => "dangling-reference",
            TriangulationError::UnmatchedFace { .. } => "unmatched-face",
            TriangulationError::NonInvolutive { .. } => "non-involutive-gluing",
            TriangulationError::SelfGluing { .. } => "self-gluing",
            TriangulationError::DuplicateTet { .. } => "duplicate-tetrahedron",
            TriangulationError::MissingTet(_) => "missing-tetrahedron",
            TriangulationError::LabelGap(_) => "label-gap",
            TriangulationError::UnsupportedFormat => "unsupported-format",
            TriangulationError::Empty => "empty",
            TriangulationError::Serialized(_) => "serialized",
        };
        ValidationReport {
            ok: false,
            violations: vec![Violation::new(rule, error)],
            advisories: Vec::new(),
            degrees: BTreeMap::new(),
            chi: ChiReport::Unavailable("unavailable (input rejected)".into()),
        }
    }
}

/// Match faces with their partners; unmatched faces are left as `None`.
pub(crate) fn match_faces(num_tets: usize, gluings: &[FaceGluing]) -> (Vec<Option<FaceGluing>>, Vec<Violation>) {
    let mut partners: Vec<Option<FaceGluing>> = vec![None; num_tets * 4];
    let mut violations = Vec::new();
    for g in gluings {
        if g.source.tet >= num_tets || g.target.tet >= num_tets || !g.is_well_formed() {
            violations.push(Violation::new(
                "dangling-reference",
                TriangulationError::Dangling { line: 0, message: format!("{g:?}") },
            ));
            continue;
        }
        if g.is_identity_self_gluing() {
            violations.push(Violation::new(
                "self-gluing",
                TriangulationError::SelfGluing { tet: g.source.tet, face: g.source.face },
            ));
            continue;
        }
        for side in [*g, g.inverse()] {
            let slot = &mut partners[side.source.tet * 4 + side.source.face as usize];
            match slot {
                None => *slot = Some(side),
                Some(existing) if *existing == side => {}
                Some(_) => violations.push(Violation::new(
                    "non-involutive-gluing",
                    TriangulationError::NonInvolutive { tet: side.source.tet, face: side.source.face },
                )),
            }
        }
    }
    violations.dedup();
    (partners, violations)
}

/// Match every face with its partner, collecting every rule violation.
pub(crate) fn pair_faces(num_tets: usize, gluings: &[FaceGluing]) -> Result<Vec<Option<FaceGluing>>, Vec<Violation>> {
    let (partners, mut violations) = match_faces(num_tets, gluings);
    for (idx, p) in partners.iter().enumerate() {
        if p.is_none() {
            violations.push(Violation::new(
                "unmatched-face",
                TriangulationError::UnmatchedFace { tet: idx / 4, face: (idx % 4) as u8 },
            ));
        }
    }
    if violations.is_empty() {
        Ok(partners)
    } else {
        Err(violations)
    }
}

fn degree_histogram(degrees: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &d in degrees {
        *h.entry(d).or_insert(0) += 1;
    }
    h
}

/// Check a built triangulation. In strict mode every boundary component of
/// a gluing-format input must have negative Euler characteristic.
pub fn validate(tri: &Triangulation, strict: bool) -> ValidationReport {
    let mut violations = Vec::new();
    let mut advisories = Vec::new();
    let degrees = tri.degrees();

    let mut count = vec![[0usize; 6]; tri.num_tets()];
    for class in tri.edge_classes() {
        for &(t, s) in &class.members {
            count[t][s] += 1;
        }
    }
    let total: usize = degrees.iter().sum();
    if total != 6 * tri.num_tets() || count.iter().flatten().any(|&c| c != 1) {
        violations.push(Violation {
            rule: "partition".into(),
            detail: format!("edge classes cover {total} slots, expected {}", 6 * tri.num_tets()),
            error: TriangulationError::Serialized("edge classes do not partition the slots".into()),
        });
    }

    if degrees.iter().all(|&d| d <= 6) {
        advisories.push(
            "every edge has degree <= 6: no hyper-ideal polyhedral metric with zero curvature exists".to_string(),
        );
    }

    let chi = match tri.format() {
        Format::Incidence => ChiReport::Unavailable("unavailable (incidence format)".into()),
        Format::Gluing => {
            if let Err(vs) = pair_faces(tri.num_tets(), tri.gluings()) {
                violations.extend(vs);
            }
            let comps = tri.boundary().expect("gluing format");
            for (k, c) in comps.iter().enumerate() {
                if c.chi >= 0 {
                    let msg = format!("χ(S) < 0 required: boundary component {k} has χ = {}", c.chi);
                    if strict {
                        violations.push(Violation {
                            rule: "boundary-chi".into(),
                            detail: msg,
                            error: TriangulationError::Serialized("boundary Euler characteristic".into()),
                        });
                    } else {
                        advisories.push(msg);
                    }
                }
                if c.vertex_degrees.iter().all(|&d| d <= 6) {
                    advisories.push(format!(
                        "boundary component {k} has all vertex degrees <= 6: no zero-curvature metric exists"
                    ));
                }
            }
            ChiReport::Values(comps.iter().map(|c| c.chi).collect())
        }
    };

    ValidationReport { ok: violations.is_empty(), violations, advisories, degrees: degree_histogram(&degrees), chi }
}

/// Validate raw gluings that may not form a perfect matching.
pub fn validate_gluings(num_tets: usize, gluings: &[FaceGluing], strict: bool) -> ValidationReport {
    match Triangulation::from_gluings(num_tets, gluings) {
        Ok(tri) => validate(&tri, strict),
        Err(_) => {
            let violations = match pair_faces(num_tets, gluings) {
                Err(vs) => vs,
                Ok(_) => vec![Violation::new("empty", TriangulationError::Empty)],
            };
            ValidationReport {
                ok: false,
                violations,
                advisories: Vec::new(),
                degrees: BTreeMap::new(),
                chi: ChiReport::Unavailable("unavailable (invalid gluing)".into()),
            }
        }
    }
}

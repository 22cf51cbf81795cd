//! Line-oriented text dialects.
//!
//! Gluing dialect:
//!
//! ```text
//! tets 2
//! glue 0 0 -> 0 1 : 2 0 3
//! ```
//!
//! Incidence dialect (labels in slot order `01 02 03 12 13 23`):
//!
//! ```text
//! edges 1
//! tet 0: e0 e0 e0 e0 e0 e0
//! ```
//!
//! `#` starts a comment; blank lines are ignored.

use super::{FaceGluing, FaceRef, Format, Triangulation, TriangulationError};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn syntax(line: usize, message: impl Into<String>) -> TriangulationError {
    TriangulationError::Syntax { line, message: message.into() }
}

fn number<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T, TriangulationError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("expected {what}")))?;
    tok.parse().map_err(|_| syntax(line, format!("expected {what}, found `{tok}`")))
}

/// Header-based dialect detection: `tets` for gluings, `edges` for incidence.
pub fn detect_format(text: &str) -> Result<Format, TriangulationError> {
    let (line, first) = content_lines(text).next().ok_or_else(|| syntax(0, "empty input"))?;
    match first.split_whitespace().next() {
        Some("tets") => Ok(Format::Gluing),
        Some("edges") => Ok(Format::Incidence),
        _ => Err(syntax(line, "expected header `tets N` or `edges M`")),
    }
}

/// Syntactically valid gluing file; structural checks come later.
#[derive(Clone, Debug, PartialEq)]
pub struct GluingFile {
    pub num_tets: usize,
    pub gluings: Vec<FaceGluing>,
}

/// Read a gluing file without checking that faces are matched.
pub fn read_gluing_file(text: &str) -> Result<GluingFile, TriangulationError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| syntax(0, "empty input"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("tets") {
        return Err(syntax(hline, "expected header `tets N`"));
    }
    let num_tets: usize = number(hline, toks.next(), "tetrahedron count")?;
    if toks.next().is_some() {
        return Err(syntax(hline, "trailing tokens after header"));
    }
    if num_tets == 0 {
        return Err(syntax(hline, "tetrahedron count must be positive"));
    }
    let mut gluings = Vec::new();
    for (line, text) in lines {
        let normalized = text.replace("->", " -> ").replace(':', " : ");
        let toks: Vec<&str> = normalized.split_whitespace().collect();
        if toks.len() != 10 || toks[0] != "glue" || toks[3] != "->" || toks[6] != ":" {
            return Err(syntax(line, "expected `glue t f -> t' f' : p q r`"));
        }
        let t: usize = number(line, Some(toks[1]), "tetrahedron index")?;
        let f: u8 = number(line, Some(toks[2]), "face index")?;
        let t2: usize = number(line, Some(toks[4]), "tetrahedron index")?;
        let f2: u8 = number(line, Some(toks[5]), "face index")?;
        let mut map = [0u8; 3];
        for (k, m) in map.iter_mut().enumerate() {
            *m = number(line, Some(toks[7 + k]), "vertex index")?;
        }
        for (tet, face) in [(t, f), (t2, f2)] {
            if tet >= num_tets {
                return Err(TriangulationError::Dangling {
                    line,
                    message: format!("tetrahedron {tet} (tets {num_tets})"),
                });
            }
            if face > 3 {
                return Err(TriangulationError::Dangling {
                    line,
                    message: format!("face {face} of tetrahedron {tet}"),
                });
            }
        }
        let g = FaceGluing::new(FaceRef::new(t, f), FaceRef::new(t2, f2), map);
        if !g.is_well_formed() {
            return Err(syntax(line, format!("vertex map {map:?} is not a bijection onto the vertices of face {f2}")));
        }
        gluings.push(g);
    }
    Ok(GluingFile { num_tets, gluings })
}

/// Parse the gluing dialect into a fully checked triangulation.
pub fn parse_gluing(text: &str) -> Result<Triangulation, TriangulationError> {
    let file = read_gluing_file(text)?;
    Triangulation::from_gluings(file.num_tets, &file.gluings)
}

fn edge_label(line: usize, tok: &str) -> Result<usize, TriangulationError> {
    let digits = tok.strip_prefix('e').unwrap_or(tok);
    digits.parse().map_err(|_| syntax(line, format!("expected edge label, found `{tok}`")))
}

/// Parse the incidence dialect.
pub fn parse_incidence(text: &str) -> Result<Triangulation, TriangulationError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| syntax(0, "empty input"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("edges") {
        return Err(syntax(hline, "expected header `edges M`"));
    }
    let num_edges: usize = number(hline, toks.next(), "edge count")?;
    if toks.next().is_some() {
        return Err(syntax(hline, "trailing tokens after header"));
    }
    let mut rows: Vec<Option<[usize; 6]>> = Vec::new();
    for (line, text) in lines {
        let (head, rest) = text.split_once(':').ok_or_else(|| syntax(line, "expected `tet i: e_a ... e_f`"))?;
        let mut head_toks = head.split_whitespace();
        if head_toks.next() != Some("tet") {
            return Err(syntax(line, "expected `tet i: e_a ... e_f`"));
        }
        let tet: usize = number(line, head_toks.next(), "tetrahedron index")?;
        if head_toks.next().is_some() {
            return Err(syntax(line, "unexpected tokens before `:`"));
        }
        let labels: Vec<usize> = rest.split_whitespace().map(|tok| edge_label(line, tok)).collect::<Result<_, _>>()?;
        if labels.len() != 6 {
            return Err(syntax(line, format!("expected 6 edge labels, found {}", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&e| e >= num_edges) {
            return Err(syntax(line, format!("edge label {bad} out of range (edges {num_edges})")));
        }
        if rows.len() <= tet {
            rows.resize(tet + 1, None);
        }
        if rows[tet].is_some() {
            return Err(TriangulationError::DuplicateTet { line, tet });
        }
        rows[tet] = Some([labels[0], labels[1], labels[2], labels[3], labels[4], labels[5]]);
    }
    let labels: Vec<[usize; 6]> = rows
        .into_iter()
        .enumerate()
        .map(|(t, r)| r.ok_or(TriangulationError::MissingTet(t)))
        .collect::<Result<_, _>>()?;
    Triangulation::from_incidence(num_edges, &labels)
}

/// Parse with an explicit dialect, or detect it from the header.
pub fn parse(text: &str, format: Option<Format>) -> Result<Triangulation, TriangulationError> {
    match format.map_or_else(|| detect_format(text), Ok)? {
        Format::Gluing => parse_gluing(text),
        Format::Incidence => parse_incidence(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incidence_examples() {
        let t = parse_incidence("edges 1\ntet 0: e0 e0 e0 e0 e0 e0\ntet 1: e0 e0 e0 e0 e0 e0\n").unwrap();
        assert_eq!((t.num_tets(), t.num_edges(), t.degrees()), (2, 1, vec![12]));
        let t = parse_incidence("edges 6\ntet 0: e0 e1 e2 e3 e4 e5").unwrap();
        assert_eq!(t.degrees(), vec![1; 6]);
    }

    #[test]
    fn incidence_errors() {
        let dup = parse_incidence("edges 1\ntet 0: e0 e0 e0 e0 e0 e0\ntet 0: e0 e0 e0 e0 e0 e0\n");
        assert_eq!(dup, Err(TriangulationError::DuplicateTet { line: 3, tet: 0 }));
        assert!(dup.unwrap_err().to_string().contains("duplicate tetrahedron"));
        assert_eq!(parse_incidence("edges 7\ntet 0: e0 e1 e2 e3 e4 e5"), Err(TriangulationError::LabelGap(6)));
        assert_eq!(parse_incidence("edges 6\ntet 1: e0 e1 e2 e3 e4 e5"), Err(TriangulationError::MissingTet(0)));
        assert!(matches!(parse_incidence("edges 6\ntet 0: e0 e1 e2"), Err(TriangulationError::Syntax { line: 2, .. })));
        assert!(matches!(
            parse_incidence("edges 6\ntet 0: e0 e1 e2 e3 e4 x5"),
            Err(TriangulationError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn gluing_syntax_errors_carry_line_numbers() {
        let err = parse_gluing("tets 1\n# comment\nglue 0 0 -> 0 1 2 3 0\n").unwrap_err();
        assert!(matches!(err, TriangulationError::Syntax { line: 3, .. }), "{err}");
        let err = parse_gluing("tets 1\nglue 0 0 -> 3 1 : 0 2 3\n").unwrap_err();
        assert!(matches!(err, TriangulationError::Dangling { line: 2, .. }), "{err}");
        let err = parse_gluing("tets 1\nglue 0 0 -> 0 1 : 0 2 2\n").unwrap_err();
        assert!(matches!(err, TriangulationError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn unmatched_face() {
        let err = parse_gluing("tets 1\nglue 0 0 -> 0 1 : 0 2 3\n").unwrap_err();
        assert!(err.to_string().contains("unmatched face"), "{err}");
    }

    #[test]
    fn detection() {
        assert_eq!(detect_format("# x\n\ntets 3\n").unwrap(), Format::Gluing);
        assert_eq!(detect_format("edges 3\n").unwrap(), Format::Incidence);
        assert!(detect_format("foo\n").is_err());
        assert!(detect_format("").is_err());
    }
}

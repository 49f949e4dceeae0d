//! Barycentric affinity map: groups sit on the vertices of a regular
//! polygon inscribed in the unit circle, and each voter is placed at the
//! convex combination of the vertices weighted by their affinity vector.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;

use crate::error::{Error, Result};
use crate::gmm::DnaVector;

/// Marker styles cycled by group index: (fill color, shape).
pub const PALETTE: [(&str, MarkerShape); 10] = [
    ("#1f77b4", MarkerShape::Circle),
    ("#ff7f0e", MarkerShape::Square),
    ("#2ca02c", MarkerShape::TriangleUp),
    ("#d62728", MarkerShape::Diamond),
    ("#9467bd", MarkerShape::Plus),
    ("#8c564b", MarkerShape::Cross),
    ("#e377c2", MarkerShape::Circle),
    ("#7f7f7f", MarkerShape::Square),
    ("#bcbd22", MarkerShape::TriangleUp),
    ("#17becf", MarkerShape::Diamond),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerShape {
    Circle,
    Square,
    TriangleUp,
    Diamond,
    Plus,
    Cross,
}

/// Vertices of the regular polygon, one per group, in vertex order.
/// Vertex 0 sits at angle 90 degrees; the rest follow counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeLayout {
    vertices: Vec<[f64; 2]>,
    groups: Vec<String>,
}

impl PolytopeLayout {
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Group ids in vertex order.
    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn vertex_of(&self, group: &str) -> Option<[f64; 2]> {
        self.groups
            .iter()
            .position(|g| g == group)
            .map(|i| self.vertices[i])
    }
}

/// One voter placed on the map.
#[derive(Debug, Clone, PartialEq)]
pub struct PoliticalMapPoint {
    pub voter_id: String,
    pub gamma: [f64; 2],
    pub nominal_group: String,
    /// Palette slot; cycles [`PALETTE`] by group index.
    pub marker_class: usize,
}

/// Place groups on the polygon. The default order preserves the given group
/// list; an explicit order must be a permutation of it.
pub fn layout_groups(groups: &[String], order: Option<&[String]>) -> Result<PolytopeLayout> {
    if groups.is_empty() {
        return Err(Error::InvalidParameter {
            reason: "no groups to lay out".into(),
        });
    }
    let arranged: Vec<String> = match order {
        None => groups.to_vec(),
        Some(o) => {
            if o.len() != groups.len() {
                return Err(Error::InvalidPermutation {
                    reason: format!(
                        "order names {} groups, dataset has {}",
                        o.len(),
                        groups.len()
                    ),
                });
            }
            let mut seen = Vec::with_capacity(o.len());
            for g in o {
                if !groups.contains(g) {
                    return Err(Error::InvalidPermutation {
                        reason: format!("unknown group {g:?}"),
                    });
                }
                if seen.contains(&g) {
                    return Err(Error::InvalidPermutation {
                        reason: format!("group {g:?} listed twice"),
                    });
                }
                seen.push(g);
            }
            o.to_vec()
        }
    };
    let n = arranged.len();
    let vertices = (0..n)
        .map(|i| {
            let theta =
                std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [theta.cos(), theta.sin()]
        })
        .collect();
    Ok(PolytopeLayout {
        vertices,
        groups: arranged,
    })
}

/// Barycentric placement of one voter: gamma = sum_l pi_l a_l, aligning the
/// affinity entries (in `dna_groups` order) with the layout's vertices by
/// group id.
pub fn map_point(
    layout: &PolytopeLayout,
    dna_groups: &[String],
    dna: &DnaVector,
    nominal_group: &str,
) -> Result<PoliticalMapPoint> {
    if dna.probs.len() != dna_groups.len() || dna_groups.len() != layout.n_groups() {
        return Err(Error::OrderMismatch {
            reason: format!(
                "affinity vector has {} entries over {} groups, layout has {}",
                dna.probs.len(),
                dna_groups.len(),
                layout.n_groups()
            ),
        });
    }
    let mut gamma = [0.0f64; 2];
    for (g, &pi) in dna_groups.iter().zip(&dna.probs) {
        let vertex = layout.vertex_of(g).ok_or_else(|| Error::OrderMismatch {
            reason: format!("group {g:?} missing from the layout"),
        })?;
        gamma[0] += pi * vertex[0];
        gamma[1] += pi * vertex[1];
    }
    let marker_class = dna_groups
        .iter()
        .position(|g| g == nominal_group)
        .ok_or_else(|| Error::OrderMismatch {
            reason: format!("nominal group {nominal_group:?} not among the model groups"),
        })?;
    Ok(PoliticalMapPoint {
        voter_id: dna.voter_id.clone(),
        gamma,
        nominal_group: nominal_group.to_string(),
        marker_class,
    })
}

const SVG_SIZE: f64 = 640.0;
const SVG_SCALE: f64 = 240.0;
const SVG_CX: f64 = 320.0;
const SVG_CY: f64 = 300.0;

fn to_px(p: [f64; 2]) -> (f64, f64) {
    // SVG y grows downward.
    (SVG_CX + SVG_SCALE * p[0], SVG_CY - SVG_SCALE * p[1])
}

fn marker_svg(shape: MarkerShape, x: f64, y: f64, color: &str) -> String {
    let r = 4.0;
    match shape {
        MarkerShape::Circle => {
            format!(r##"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}"/>"##)
        }
        MarkerShape::Square => format!(
            r##"<rect x="{:.2}" y="{:.2}" width="{}" height="{}" fill="{color}"/>"##,
            x - r,
            y - r,
            2.0 * r,
            2.0 * r
        ),
        MarkerShape::TriangleUp => format!(
            r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"##,
            x,
            y - r,
            x - r,
            y + r,
            x + r,
            y + r
        ),
        MarkerShape::Diamond => format!(
            r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"##,
            x,
            y - r,
            x + r,
            y,
            x,
            y + r,
            x - r,
            y
        ),
        MarkerShape::Plus => format!(
            r##"<path d="M {x:.2} {:.2} V {:.2} M {:.2} {y:.2} H {:.2}" stroke="{color}" stroke-width="2" fill="none"/>"##,
            y - r,
            y + r,
            x - r,
            x + r
        ),
        MarkerShape::Cross => format!(
            r##"<path d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="{color}" stroke-width="2" fill="none"/>"##,
            x - r,
            y - r,
            x + r,
            y + r,
            x - r,
            y + r,
            x + r,
            y - r
        ),
    }
}

/// Render the map as a standalone SVG document. The caption line carries
/// the method parameters and expressed variance for the run.
pub fn render_map_svg(
    points: &[PoliticalMapPoint],
    layout: &PolytopeLayout,
    caption: &str,
) -> Result<String> {
    if points.is_empty() {
        return Err(Error::InvalidParameter {
            reason: "no points to render".into(),
        });
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"##,
        SVG_SIZE
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{0}" height="{0}" fill="white"/>"##,
        SVG_SIZE
    );

    // Polygon outline (skip for a single vertex).
    if layout.n_groups() > 1 {
        let pts: Vec<String> = layout
            .vertices()
            .iter()
            .map(|&v| {
                let (x, y) = to_px(v);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r##"<polygon points="{}" fill="none" stroke="#cccccc" stroke-width="1"/>"##,
            pts.join(" ")
        );
    }

    // Vertex markers and labels.
    for (g, &v) in layout.groups().iter().zip(layout.vertices()) {
        let (x, y) = to_px(v);
        let _ = writeln!(
            svg,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="#333333"/>"##
        );
        // Push the label outward from the centre.
        let (lx, ly) = (SVG_CX + (x - SVG_CX) * 1.1, SVG_CY + (y - SVG_CY) * 1.1);
        let _ = writeln!(
            svg,
            r##"<text x="{lx:.2}" y="{ly:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"##,
            xml_escape(g)
        );
    }

    for p in points {
        let (x, y) = to_px(p.gamma);
        let (color, shape) = PALETTE[p.marker_class % PALETTE.len()];
        let _ = writeln!(svg, "{}", marker_svg(shape, x, y, color));
    }

    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"##,
        SVG_CX,
        SVG_SIZE - 24.0,
        xml_escape(caption)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Render the map as CSV with columns voter_id, gamma_x, gamma_y,
/// nominal_group. When the full affinity matrix is supplied, one extra
/// `dna_<group>` column per group is appended so no information is lost in
/// the 2-D projection.
pub fn render_map_csv(
    points: &[PoliticalMapPoint],
    dna: Option<(&[String], &[DnaVector])>,
) -> Result<String> {
    if points.is_empty() {
        return Err(Error::InvalidParameter {
            reason: "no points to render".into(),
        });
    }
    let mut by_voter: HashMap<&str, &DnaVector> = HashMap::new();
    if let Some((_, rows)) = dna {
        for row in rows {
            by_voter.insert(row.voter_id.as_str(), row);
        }
    }
    let mut out = String::from("voter_id,gamma_x,gamma_y,nominal_group");
    if let Some((groups, _)) = dna {
        for g in groups {
            let _ = write!(out, ",dna_{g}");
        }
    }
    out.push('\n');
    for p in points {
        let _ = write!(
            out,
            "{},{:.12},{:.12},{}",
            p.voter_id, p.gamma[0], p.gamma[1], p.nominal_group
        );
        if let Some((groups, _)) = dna {
            let row = by_voter
                .get(p.voter_id.as_str())
                .ok_or_else(|| Error::VoterNotFound {
                    voter: p.voter_id.clone(),
                })?;
            debug_assert_eq!(row.probs.len(), groups.len());
            for pr in &row.probs {
                let _ = write!(out, ",{pr:.6}");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse the four core columns written by [`render_map_csv`]. Marker
/// classes are reassigned by first appearance of each nominal group, which
/// matches how they were assigned when the rows follow voter order.
pub fn parse_map_csv(reader: impl Read) -> Result<Vec<PoliticalMapPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MalformedRecord {
                context: "map csv".into(),
                reason: format!("missing column {name:?}"),
            })
    };
    let (vi, xi, yi, gi) = (
        idx("voter_id")?,
        idx("gamma_x")?,
        idx("gamma_y")?,
        idx("nominal_group")?,
    );
    let mut group_order: Vec<String> = Vec::new();
    let mut points = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| {
            rec.get(i).ok_or_else(|| Error::MalformedRecord {
                context: format!("map csv row {}", row + 2),
                reason: "missing field".into(),
            })
        };
        let parse_f = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::MalformedRecord {
                context: format!("map csv row {}", row + 2),
                reason: format!("bad float {s:?}: {e}"),
            })
        };
        let nominal = field(gi)?.to_string();
        let marker_class = match group_order.iter().position(|g| *g == nominal) {
            Some(i) => i,
            None => {
                group_order.push(nominal.clone());
                group_order.len() - 1
            }
        };
        points.push(PoliticalMapPoint {
            voter_id: field(vi)?.to_string(),
            gamma: [parse_f(field(xi)?)?, parse_f(field(yi)?)?],
            nominal_group: nominal,
            marker_class,
        });
    }
    Ok(points)
}

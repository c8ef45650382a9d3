//! Deterministic SVG drawing of an instance and, optionally, a competitor.
//!
//! Coordinates are printed with two decimals inside a fixed viewBox. Edge
//! widths are proportional to the multiplicity, and every scenario gets its own
//! `<g id="scenario-i">` layer holding its damaged edges (dashed) and its flow
//! arrows.

use std::fmt::Write;

use thiserror::Error;

use crate::energy::multiplicities;
use crate::model::{Competitor, Instance};

pub const VIEW_SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;
const MAX_WIDTH: f64 = 12.0;
const BASE_WIDTH: f64 = 0.75;
const ATOM_RADIUS: f64 = 5.0;
const SCENARIO_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("cannot render a {0}-dimensional instance, only the plane is supported")]
    Unsupported(usize),
    #[error("competitor does not fit the instance: {0}")]
    Shape(String),
}

struct Frame {
    min: [f64; 2],
    scale: f64,
    offset: [f64; 2],
}

impl Frame {
    fn new(inst: &Instance) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for v in inst.graph.vertices() {
            for k in 0..2 {
                min[k] = min[k].min(v.pos[k]);
                max[k] = max[k].max(v.pos[k]);
            }
        }
        if inst.graph.num_vertices() == 0 {
            min = [0.0; 2];
            max = [1.0; 2];
        }
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-12);
        let scale = (VIEW_SIZE - 2.0 * MARGIN) / span;
        let offset = [
            MARGIN + (VIEW_SIZE - 2.0 * MARGIN - (max[0] - min[0]) * scale) / 2.0,
            MARGIN + (VIEW_SIZE - 2.0 * MARGIN - (max[1] - min[1]) * scale) / 2.0,
        ];
        Frame { min, scale, offset }
    }

    /// Screen point; the y axis points up in the instance and down in SVG.
    fn map(&self, p: &[f64]) -> (f64, f64) {
        (
            self.offset[0] + (p[0] - self.min[0]) * self.scale,
            VIEW_SIZE - self.offset[1] - (p[1] - self.min[1]) * self.scale,
        )
    }
}

/// Two decimals, with `-0.00` folded into `0.00`.
fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Multiplicity per edge and signed flow per scenario and edge.
fn loads(
    inst: &Instance,
    competitor: Option<&Competitor>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), RenderError> {
    let g = &inst.graph;
    let m = g.num_edges();
    let s = inst.num_scenarios();
    match competitor {
        None => Ok((vec![0.0; m], vec![vec![0.0; m]; s])),
        Some(Competitor::Eulerian(c)) => {
            c.check_shape(inst)
                .map_err(|e| RenderError::Shape(e.to_string()))?;
            Ok((c.theta.clone(), c.flows.clone()))
        }
        Some(Competitor::Lagrangian(c)) => {
            c.check_shape(inst)
                .map_err(|e| RenderError::Shape(e.to_string()))?;
            let theta = multiplicities(g, c.paths());
            let mut flows = vec![vec![0.0; m]; s];
            for p in &c.plan {
                for (e, sign) in p.path.signed_edges(g) {
                    for (i, w) in p.sub_weights.iter().enumerate() {
                        flows[i][e] += sign * w;
                    }
                }
            }
            Ok((theta, flows))
        }
    }
}

fn damaged_edges(inst: &Instance, scenario: usize) -> Vec<usize> {
    let sc = &inst.scenarios[scenario];
    let g = &inst.graph;
    if let Ok(eff) = sc.efficiencies(g) {
        return (0..g.num_edges()).filter(|&e| eff.edge[e] < 1.0).collect();
    }
    match &sc.edge_mask {
        Some(mask) => (0..g.num_edges()).filter(|&e| !mask[e]).collect(),
        None => Vec::new(),
    }
}

pub fn render_svg(inst: &Instance, competitor: Option<&Competitor>) -> Result<String, RenderError> {
    let dim = inst.graph.dimension();
    if dim != 2 {
        return Err(RenderError::Unsupported(dim));
    }
    let g = &inst.graph;
    let frame = Frame::new(inst);
    let (theta, flows) = loads(inst, competitor)?;
    let max_theta = theta.iter().copied().fold(0.0, f64::max);
    let width = |t: f64| {
        if max_theta > 0.0 {
            MAX_WIDTH * t / max_theta
        } else {
            0.0
        }
    };
    let ends = |e: usize| {
        let edge = g.edge(e);
        (frame.map(g.position(edge.u)), frame.map(g.position(edge.v)))
    };

    let mut out = String::new();
    let size = num(VIEW_SIZE);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" width="{size}" height="{size}">"#
    )
    .unwrap();
    out.push_str("<defs>\n");
    for (i, _) in inst.scenarios.iter().enumerate() {
        let color = SCENARIO_COLORS[i % SCENARIO_COLORS.len()];
        writeln!(
            out,
            r#"<marker id="arrow-{i}" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z" fill="{color}"/></marker>"#
        )
        .unwrap();
    }
    out.push_str("</defs>\n");

    // axes through the origin when it is in view, else along the frame
    let (ox, oy) = frame.map(&[0.0, 0.0]);
    let ax = ox.clamp(MARGIN / 2.0, VIEW_SIZE - MARGIN / 2.0);
    let ay = oy.clamp(MARGIN / 2.0, VIEW_SIZE - MARGIN / 2.0);
    out.push_str(r##"<g id="axes" stroke="#bbbbbb" stroke-width="1">"##);
    out.push('\n');
    writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        num(MARGIN / 2.0),
        num(ay),
        num(VIEW_SIZE - MARGIN / 2.0),
        num(ay)
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        num(ax),
        num(MARGIN / 2.0),
        num(ax),
        num(VIEW_SIZE - MARGIN / 2.0)
    )
    .unwrap();
    out.push_str("</g>\n");

    out.push_str(r##"<g id="graph" stroke="#999999" fill="none">"##);
    out.push('\n');
    for e in 0..g.num_edges() {
        let ((x1, y1), (x2, y2)) = ends(e);
        writeln!(
            out,
            r#"<line id="edge-{e}" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}"/>"#,
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            num(BASE_WIDTH)
        )
        .unwrap();
    }
    out.push_str("</g>\n");

    if max_theta > 0.0 {
        out.push_str(r##"<g id="network" stroke="#333333" stroke-linecap="round" fill="none">"##);
        out.push('\n');
        for (e, &t) in theta.iter().enumerate().filter(|(_, &t)| t > 0.0) {
            let ((x1, y1), (x2, y2)) = ends(e);
            writeln!(
                out,
                r#"<line id="theta-{e}" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}"/>"#,
                num(x1),
                num(y1),
                num(x2),
                num(y2),
                num(width(t))
            )
            .unwrap();
        }
        out.push_str("</g>\n");
    }

    for (i, flow) in flows.iter().enumerate() {
        let color = SCENARIO_COLORS[i % SCENARIO_COLORS.len()];
        writeln!(out, r#"<g id="scenario-{i}" stroke="{color}" fill="none">"#).unwrap();
        for e in damaged_edges(inst, i) {
            let ((x1, y1), (x2, y2)) = ends(e);
            writeln!(
                out,
                r#"<line class="damaged" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="1.50" stroke-dasharray="6 4" opacity="0.6"/>"#,
                num(x1),
                num(y1),
                num(x2),
                num(y2)
            )
            .unwrap();
        }
        for (e, &f) in flow.iter().enumerate().filter(|(_, &f)| f != 0.0) {
            let ((mut x1, mut y1), (mut x2, mut y2)) = ends(e);
            if f < 0.0 {
                std::mem::swap(&mut x1, &mut x2);
                std::mem::swap(&mut y1, &mut y2);
            }
            writeln!(
                out,
                r#"<line class="flow" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}" marker-end="url(#arrow-{i})" opacity="0.8"/>"#,
                num(x1),
                num(y1),
                num(x2),
                num(y2),
                num(width(f.abs()).max(1.0))
            )
            .unwrap();
        }
        out.push_str("</g>\n");
    }

    out.push_str(r#"<g id="atoms">"#);
    out.push('\n');
    for (v, &a) in inst
        .boundary
        .atoms()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0.0)
    {
        let (x, y) = frame.map(g.position(v));
        // sources red, targets blue
        let color = if a < 0.0 { "#c0392b" } else { "#2471a3" };
        writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{color}"><title>{}</title></circle>"#,
            num(x),
            num(y),
            num(ATOM_RADIUS),
            a
        )
        .unwrap();
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        BoundaryMeasure, CostSpec, DamageScenario, EulerianCompetitor, GeometricGraph, PayoffSpec,
    };

    fn segment(dim: usize) -> Instance {
        let pos = vec![vec![0.0; dim], {
            let mut p = vec![0.0; dim];
            p[0] = 1.0;
            p
        }];
        let g = GeometricGraph::new(dim, pos, vec![(0, 1, None)]).unwrap();
        Instance::new(
            g,
            BoundaryMeasure::new(vec![-1.0, 1.0]),
            CostSpec::sqrt(),
            vec![
                DamageScenario::with_mask(0, 0.5, vec![true]),
                DamageScenario::with_mask(1, 0.5, vec![false]),
            ],
            PayoffSpec::Constant { value: 2.0 },
        )
        .unwrap()
    }

    #[test]
    fn empty_network_has_axes_and_atoms_only() {
        let svg = render_svg(&segment(2), None).unwrap();
        assert!(svg.contains(r#"<g id="axes""#));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("class=\"flow\""));
        assert!(!svg.contains("id=\"network\""));
        assert!(svg.contains(r#"<g id="scenario-1""#));
    }

    #[test]
    fn flows_and_damage_are_drawn_per_scenario() {
        let inst = segment(2);
        let c = Competitor::Eulerian(EulerianCompetitor {
            theta: vec![1.0],
            flows: vec![vec![1.0], vec![0.0]],
        });
        let svg = render_svg(&inst, Some(&c)).unwrap();
        assert!(svg.contains(r#"stroke-width="12.00""#));
        assert_eq!(svg.matches("class=\"flow\"").count(), 1);
        assert_eq!(svg.matches("class=\"damaged\"").count(), 1);
        let layer1 = svg.split(r#"<g id="scenario-1""#).nth(1).unwrap();
        assert!(layer1.split("</g>").next().unwrap().contains("damaged"));
        assert_eq!(svg, render_svg(&inst, Some(&c)).unwrap());
    }

    #[test]
    fn other_dimensions_are_rejected() {
        assert_eq!(
            render_svg(&segment(3), None),
            Err(RenderError::Unsupported(3))
        );
    }

    #[test]
    fn negative_zero_prints_as_zero() {
        assert_eq!(num(-0.001), "0.00");
        assert_eq!(num(12.345), "12.35");
    }
}

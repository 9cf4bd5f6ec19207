//! SVG rendering of planar workspaces.
//!
//! Undetected obstacles are light gray, detected ones dark gray. Start is a
//! red diamond, target a red circle, graph edges blue, paths red. Every robot
//! of a stacked configuration is drawn in the same picture.

use std::fmt::Write as _;

use fp_planner::fpe::{Lattice, Region};
use fp_planner::{Configuration, SearchGraph};

use crate::scenario::{ObstacleSpec, Scenario};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 10.0;
pub const UNDETECTED: &str = "#d3d3d3";
pub const DETECTED: &str = "#696969";
const REGION: &str = "#a9a9a9";
const GRAPH: &str = "#1f3fff";
const PATH: &str = "#e00000";

pub struct Canvas {
    lo: [f64; 2],
    hi: [f64; 2],
    scale: f64,
    body: String,
}

impl Canvas {
    /// `None` unless the workspace is planar.
    pub fn for_scenario(scn: &Scenario) -> Option<Self> {
        if scn.workspace_dim() != 2 {
            return None;
        }
        let lo = [scn.workspace_min[0], scn.workspace_min[1]];
        let hi = [scn.workspace_max[0], scn.workspace_max[1]];
        let scale = (SIZE - 2.0 * MARGIN) / (hi[0] - lo[0]).max(hi[1] - lo[1]);
        Some(Self {
            lo,
            hi,
            scale,
            body: String::new(),
        })
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.lo[0]) * self.scale
    }

    /// Flipped so that y grows upwards.
    fn y(&self, v: f64) -> f64 {
        MARGIN + (self.hi[1] - v) * self.scale
    }

    fn width(&self) -> f64 {
        2.0 * MARGIN + (self.hi[0] - self.lo[0]) * self.scale
    }

    fn height(&self) -> f64 {
        2.0 * MARGIN + (self.hi[1] - self.lo[1]) * self.scale
    }

    fn rect(&mut self, min: [f64; 2], max: [f64; 2], style: &str) {
        let (x, y) = (self.x(min[0]), self.y(max[1]));
        let (w, h) = (
            (max[0] - min[0]) * self.scale,
            (max[1] - min[1]) * self.scale,
        );
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" {style}/>"#
        );
    }

    pub fn obstacles(&mut self, scn: &Scenario, detected: &[usize]) {
        for (id, o) in scn.obstacles.iter().enumerate() {
            let fill = if detected.contains(&id) {
                DETECTED
            } else {
                UNDETECTED
            };
            match o {
                ObstacleSpec::Box { min, max, .. } => {
                    self.rect(
                        [min[0], min[1]],
                        [max[0], max[1]],
                        &format!(r#"fill="{fill}""#),
                    );
                }
                ObstacleSpec::Disk { center, radius, .. } => {
                    let (cx, cy, r) = (self.x(center[0]), self.y(center[1]), radius * self.scale);
                    let _ = writeln!(
                        self.body,
                        r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}"/>"#
                    );
                }
            }
        }
    }

    pub fn region(&mut self, lat: &Lattice, region: &Region) {
        let h = region.half_width();
        for c in region.centers(lat) {
            self.rect(
                [c[0] - h, c[1] - h],
                [c[0] + h, c[1] + h],
                &format!(r#"fill="{REGION}" fill-opacity="0.5" stroke="none""#),
            );
        }
    }

    fn line(&mut self, a: &[f64], b: &[f64], colour: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}" stroke-width="{width}"/>"#,
            self.x(a[0]),
            self.y(a[1]),
            self.x(b[0]),
            self.y(b[1])
        );
    }

    pub fn graph(&mut self, g: &SearchGraph) {
        for (child, parent) in g.edges() {
            let (a, b) = (&g.vertex(child).config, &g.vertex(parent).config);
            for (pa, pb) in a.robots(2).zip(b.robots(2)) {
                self.line(pa, pb, GRAPH, 0.8);
            }
        }
    }

    /// One red polyline per robot.
    pub fn path(&mut self, configs: &[Configuration]) {
        let Some(first) = configs.first() else { return };
        for r in 0..first.dim() / 2 {
            let pts: Vec<String> = configs
                .iter()
                .map(|c| {
                    let p = c.robot(r, 2);
                    format!("{:.2},{:.2}", self.x(p[0]), self.y(p[1]))
                })
                .collect();
            let _ = writeln!(
                self.body,
                r#"<polyline points="{}" fill="none" stroke="{PATH}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
    }

    pub fn start(&mut self, c: &[f64]) {
        let s = 6.0;
        for p in c.chunks_exact(2) {
            let (x, y) = (self.x(p[0]), self.y(p[1]));
            let _ = writeln!(
                self.body,
                r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{PATH}"/>"#,
                x,
                y - s,
                x + s,
                y,
                x,
                y + s,
                x - s,
                y
            );
        }
    }

    pub fn target(&mut self, c: &[f64]) {
        for p in c.chunks_exact(2) {
            let _ = writeln!(
                self.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="6" fill="{PATH}"/>"#,
                self.x(p[0]),
                self.y(p[1])
            );
        }
    }

    pub fn finish(self) -> String {
        let (w, h) = (self.width(), self.height());
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
        );
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{w:.2}" height="{h:.2}" fill="white"/>"#
        );
        let (x0, y0) = (self.x(self.lo[0]), self.y(self.hi[1]));
        let (ww, hh) = (
            (self.hi[0] - self.lo[0]) * self.scale,
            (self.hi[1] - self.lo[1]) * self.scale,
        );
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{ww:.2}" height="{hh:.2}" fill="none" stroke="black"/>"#
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn scn() -> Scenario {
        parse_scenario(
            "dim 2\nstart 0.1 0.1\ntarget 0.9 0.9\nsensing_radius 0.1\nstep 0.05\n\
             obstacle box 0.4 0.3 0.45 0.7 known\nobstacle disk 0.7 0.2 0.05\n",
        )
        .unwrap()
    }

    #[test]
    fn colours_follow_detection() {
        let s = scn();
        let mut c = Canvas::for_scenario(&s).unwrap();
        c.obstacles(&s, &[0]);
        c.start(&s.start);
        c.target(&s.target);
        let svg = c.finish();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches(DETECTED).count(), 1);
        assert_eq!(svg.matches(UNDETECTED).count(), 1);
        assert!(svg.contains("<polygon"));
        // box 0.4..0.45 x 0.3..0.7 at 580 px per unit, y flipped
        assert!(svg.contains(r#"<rect x="242.00" y="184.00" width="29.00" height="232.00""#));
    }

    #[test]
    fn non_planar_workspace_has_no_canvas() {
        let s = parse_scenario(
            "dim 3\nstart 0.1 0.1 0.1\ntarget 0.9 0.9 0.9\nsensing_radius 0.1\nstep 0.05\n",
        )
        .unwrap();
        assert!(Canvas::for_scenario(&s).is_none());
    }
}

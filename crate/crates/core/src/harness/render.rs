//! Deterministic SVG rendering of a scenario, a plan and an optional
//! trajectory.

use std::fmt::Write as _;

use crate::connect::{PlanResult, TreeRole};
use crate::error::Result;
use crate::rrt::Tree;
use crate::tracking::Trajectory;
use crate::world::{
    discretize_outline, select_interest_points, ObstacleKind, Point2, Scenario,
    DEFAULT_OUTLINE_SPACING,
};

const PIXELS_PER_METER: f64 = 20.0;
const MARGIN: f64 = 1.0;

struct Canvas<'a> {
    scenario: &'a Scenario,
    out: String,
}

impl Canvas<'_> {
    fn x(&self, x: f64) -> f64 {
        (x - self.scenario.bounds.xmin + MARGIN) * PIXELS_PER_METER
    }

    fn y(&self, y: f64) -> f64 {
        (self.scenario.bounds.ymax - y + MARGIN) * PIXELS_PER_METER
    }

    fn coords(&self, p: Point2) -> String {
        format!("{:.2},{:.2}", self.x(p.x), self.y(p.y))
    }

    fn polyline(&mut self, points: &[Point2], attrs: &str) {
        if points.is_empty() {
            return;
        }
        let pts: Vec<String> = points.iter().map(|&p| self.coords(p)).collect();
        let _ = writeln!(
            self.out,
            r#"<polyline points="{}" {attrs}/>"#,
            pts.join(" ")
        );
    }

    fn polygon(&mut self, points: &[Point2], attrs: &str) {
        let pts: Vec<String> = points.iter().map(|&p| self.coords(p)).collect();
        let _ = writeln!(self.out, r#"<polygon points="{}" {attrs}/>"#, pts.join(" "));
    }

    fn circle(&mut self, c: Point2, r_meters: f64, attrs: &str) {
        let _ = writeln!(
            self.out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" {attrs}/>"#,
            self.x(c.x),
            self.y(c.y),
            r_meters * PIXELS_PER_METER
        );
    }

    fn dot(&mut self, c: Point2, r_px: f64, attrs: &str) {
        let _ = writeln!(
            self.out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r_px:.2}" {attrs}/>"#,
            self.x(c.x),
            self.y(c.y)
        );
    }

    fn tree(&mut self, tree: &Tree, class: &str, stroke: &str) {
        let _ = writeln!(
            self.out,
            r#"<g class="{class}" stroke="{stroke}" stroke-width="0.6" fill="none">"#
        );
        for (a, b) in tree.edges() {
            let _ = writeln!(
                self.out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                self.x(a.x),
                self.y(a.y),
                self.x(b.x),
                self.y(b.y)
            );
        }
        self.out.push_str("</g>\n");
    }
}

/// Renders the scenario with any plan and trajectory layers. Output depends
/// only on the inputs.
pub fn render_svg(
    scenario: &Scenario,
    plan: Option<&PlanResult>,
    trajectory: Option<&Trajectory>,
) -> Result<String> {
    let b = scenario.bounds;
    let width = (b.width() + 2.0 * MARGIN) * PIXELS_PER_METER;
    let height = (b.height() + 2.0 * MARGIN) * PIXELS_PER_METER;
    let mut c = Canvas {
        scenario,
        out: String::new(),
    };
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(c.out, "<title>{}</title>", escape(&scenario.name));
    c.out
        .push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    c.out.push('\n');

    c.out.push_str("<g class=\"bounds\">\n");
    let corners = [
        Point2::new(b.xmin, b.ymin),
        Point2::new(b.xmax, b.ymin),
        Point2::new(b.xmax, b.ymax),
        Point2::new(b.xmin, b.ymax),
    ];
    c.polygon(
        &corners,
        r##"fill="#f4f4f4" stroke="black" stroke-width="1""##,
    );
    c.out.push_str("</g>\n<g class=\"lanes\">\n");
    for lane in &scenario.lanes {
        c.polyline(
            lane,
            r##"fill="none" stroke="#999" stroke-width="1" stroke-dasharray="6 4""##,
        );
    }
    c.out.push_str("</g>\n<g class=\"obstacles\">\n");
    for o in &scenario.obstacles {
        let fill = match o.kind {
            ObstacleKind::Vehicle => "#5b7fb5",
            ObstacleKind::Pothole => "#7a5230",
            ObstacleKind::Other => "#888",
        };
        c.polygon(
            o.outline(),
            &format!(
                r#"class="obstacle" data-id="{}" fill="{fill}" stroke="black" stroke-width="0.5""#,
                o.id
            ),
        );
    }
    c.out.push_str("</g>\n");

    if let Some(plan) = plan {
        let hw = scenario.ego.half_width();
        c.out.push_str("<g class=\"interest-points\">\n");
        let mut circles = Vec::new();
        for id in &plan.hindering_ids {
            let Some(o) = scenario.obstacle(*id) else {
                continue;
            };
            let outline = discretize_outline(o, DEFAULT_OUTLINE_SPACING)?;
            for &p in &outline {
                c.dot(p, 1.0, r##"class="outline-point" fill="#333""##);
            }
            for p in select_interest_points(&outline, hw) {
                c.dot(p, 2.0, r##"class="interest-point" fill="#d62728""##);
                circles.push(p);
            }
        }
        c.out.push_str("</g>\n<g class=\"safety-circles\">\n");
        for p in circles {
            c.circle(p, scenario.ego.width, r##"class="safety-circle" fill="none" stroke="#d62728" stroke-width="0.5" stroke-dasharray="2 2""##);
        }
        c.out.push_str("</g>\n");

        for t in &plan.trees {
            match t.role {
                TreeRole::Initial => c.tree(&t.tree, "tree initial", "#2ca02c"),
                _ => c.tree(&t.tree, "tree partial", "#ff7f0e"),
            }
        }
        c.out.push_str("<g class=\"intermediate-goals\">\n");
        for &g in &plan.goals_used {
            c.dot(
                g,
                4.0,
                r##"class="intermediate-goal" fill="#9467bd" stroke="black""##,
            );
        }
        c.out.push_str("</g>\n<g class=\"path\">\n");
        c.polyline(
            &plan.path,
            r##"class="smoothed-path" fill="none" stroke="#1f77b4" stroke-width="2""##,
        );
        c.out.push_str("</g>\n");
    }

    if let Some(traj) = trajectory {
        c.out.push_str("<g class=\"trajectory\">\n");
        c.polyline(
            &traj.positions(),
            r##"class="trajectory" fill="none" stroke="#e377c2" stroke-width="1.5""##,
        );
        c.out.push_str("</g>\n");
    }

    c.out.push_str("<g class=\"endpoints\">\n");
    c.dot(
        scenario.start.position(),
        4.0,
        r#"class="start" fill="green""#,
    );
    c.circle(
        scenario.goal,
        scenario.ego.goal_radius,
        r#"class="goal" fill="none" stroke="red" stroke-width="1""#,
    );
    c.out.push_str("</g>\n</svg>\n");
    Ok(c.out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

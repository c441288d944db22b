//! Scene schematics as standalone SVG: a top view (x, y) and a side view
//! (x, z) with obstacles, route, transition cuboids and trajectories.
//!
//! Output depends only on the task, the parameters and the trajectory rows,
//! so re-plotting a saved CSV reproduces the same files byte for byte.

use std::fmt::Write as _;

use reachgrid_core::model::compute_scope;
use reachgrid_core::scenario::mode_towards;
use reachgrid_core::{Box3, GameParams, GridVec, HybridState, StateVec, Task};

use crate::export::CsvRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    Top,
    Side,
}

impl View {
    pub fn name(self) -> &'static str {
        match self {
            View::Top => "top",
            View::Side => "side",
        }
    }

    /// Horizontal and vertical plot axes.
    fn axes(self, p: GridVec) -> (i32, i32) {
        match self {
            View::Top => (p.x, p.y),
            View::Side => (p.x, p.z),
        }
    }
}

/// Transition cuboids of a nominal run: one per modal game, as position boxes.
pub fn transition_cuboids(task: &Task, params: &GameParams) -> Vec<Box3> {
    let route = task.route();
    (2..=route.len() as u32)
        .filter_map(|i| {
            let from = route[i as usize - 2];
            let s = HybridState::new(mode_towards(i, task), StateVec::new(from, GridVec::ZERO, i));
            compute_scope(&s, task, params).ok().map(|sc| sc.bounds.p)
        })
        .collect()
}

struct Canvas {
    cell: f64,
    h: f64,
    margin: f64,
    out: String,
}

impl Canvas {
    fn x(&self, a: f64) -> f64 {
        self.margin + a * self.cell
    }

    // SVG y grows downwards; flip so that y and z point up.
    fn y(&self, b: f64) -> f64 {
        self.margin + (self.h - b) * self.cell
    }

    fn rect(&mut self, lo: (i32, i32), hi: (i32, i32), style: &str) {
        let (x0, y1) = (self.x(lo.0 as f64), self.y(lo.1 as f64));
        let (x1, y0) = (self.x(hi.0 as f64 + 1.0), self.y(hi.1 as f64 + 1.0));
        let _ = writeln!(
            self.out,
            r#"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" {style}/>"#,
            x1 - x0,
            y1 - y0
        );
    }

    fn polyline(&mut self, pts: &[(i32, i32)], style: &str) {
        if pts.is_empty() {
            return;
        }
        let mut s = String::new();
        for &(a, b) in pts {
            let _ = write!(s, "{:.1},{:.1} ", self.x(a as f64 + 0.5), self.y(b as f64 + 0.5));
        }
        let _ = writeln!(self.out, r#"<polyline points="{}" fill="none" {style}/>"#, s.trim_end());
    }

    fn circle(&mut self, (a, b): (i32, i32), r: f64, style: &str) {
        let _ = writeln!(
            self.out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{r:.1}" {style}/>"#,
            self.x(a as f64 + 0.5),
            self.y(b as f64 + 0.5)
        );
    }
}

/// Renders one view. `reference` is drawn solid blue, `played` dashed red.
pub fn render(view: View, task: &Task, params: &GameParams, reference: Option<&[CsvRow]>, played: &[CsvRow]) -> String {
    let [nx, ny, nz] = task.grid().dims();
    let (w, h) = match view {
        View::Top => (nx, ny),
        View::Side => (nx, nz),
    };
    let cell = (900.0 / w.max(h) as f64).clamp(1.0, 24.0);
    let margin = 10.0;
    let mut c = Canvas {
        cell,
        h: h as f64 - 1.0,
        margin,
        out: String::new(),
    };
    let width = 2.0 * margin + w as f64 * cell;
    let height = 2.0 * margin + h as f64 * cell;
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(c.out, "<title>{} view</title>", view.name());
    c.rect((0, 0), (w as i32 - 1, h as i32 - 1), r##"fill="#ffffff" stroke="#000000" stroke-width="1""##);

    // Obstacles projected along the depth axis, merged into runs.
    let mut occupied = vec![false; (w * h) as usize];
    for o in task.obstacles() {
        let (a, b) = view.axes(o);
        occupied[(b as u32 * w + a as u32) as usize] = true;
    }
    for b in 0..h as i32 {
        let mut a = 0;
        while a < w as i32 {
            if occupied[(b as u32 * w + a as u32) as usize] {
                let start = a;
                while a < w as i32 && occupied[(b as u32 * w + a as u32) as usize] {
                    a += 1;
                }
                c.rect((start, b), (a - 1, b), r##"fill="#7f7f7f""##);
            } else {
                a += 1;
            }
        }
    }

    for bx in transition_cuboids(task, params) {
        let (lo, hi) = (view.axes(bx.lo), view.axes(bx.hi));
        c.rect(lo, hi, r##"fill="none" stroke="#2ca02c" stroke-width="1" stroke-dasharray="4 2""##);
    }

    let route: Vec<(i32, i32)> = task.route().iter().map(|&p| view.axes(p)).collect();
    c.polyline(&route, r##"stroke="#000000" stroke-width="1""##);
    for &p in &route {
        c.circle(p, 3.0, r##"fill="#000000""##);
    }

    let project = |rows: &[CsvRow]| -> Vec<(i32, i32)> { rows.iter().map(|r| view.axes(r.position())).collect() };
    if let Some(reference) = reference {
        c.polyline(&project(reference), r##"stroke="#1f77b4" stroke-width="2""##);
    }
    c.polyline(&project(played), r##"stroke="#d62728" stroke-width="2" stroke-dasharray="6 3""##);
    if let Some(first) = played.first() {
        c.circle(view.axes(first.position()), 4.0, r##"fill="#d62728""##);
    }
    c.out.push_str("</svg>\n");
    c.out
}

/// Largest Chebyshev distance from a played position to the nearest
/// reference position.
pub fn reference_deviation(reference: &[CsvRow], played: &[CsvRow]) -> Option<i32> {
    if reference.is_empty() {
        return None;
    }
    played
        .iter()
        .map(|r| {
            reference
                .iter()
                .map(|q| (r.position() - q.position()).chebyshev())
                .min()
                .unwrap_or(0)
        })
        .max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use reachgrid_core::scenario::builtin_scenario;

    fn csv_row(p: [i32; 3]) -> CsvRow {
        CsvRow {
            step: 0,
            mode: "cruise".into(),
            k: 1,
            p_x: p[0],
            p_y: p[1],
            p_z: p[2],
            v_x: 0,
            v_y: 0,
            v_z: 0,
            i: 3,
            u_x: None,
            u_y: None,
            u_z: None,
            d_x: None,
            d_y: None,
            d_z: None,
            event: String::new(),
        }
    }

    #[test]
    fn renders_both_styles_and_is_deterministic() {
        let s = builtin_scenario("mini-yard").unwrap();
        let reference = vec![csv_row([5, 5, 0]), csv_row([5, 5, 3])];
        let played = vec![csv_row([5, 5, 0]), csv_row([6, 5, 3])];
        let a = render(View::Top, &s.task, &s.params, Some(&reference), &played);
        let b = render(View::Top, &s.task, &s.params, Some(&reference), &played);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("#1f77b4") && a.contains("#d62728"));
        let side = render(View::Side, &s.task, &s.params, None, &played);
        assert!(!side.contains("#1f77b4"));
    }

    #[test]
    fn one_cuboid_per_modal_game() {
        let s = builtin_scenario("mini-yard").unwrap();
        assert_eq!(transition_cuboids(&s.task, &s.params).len(), s.task.route().len() - 1);
    }

    #[test]
    fn deviation_is_chebyshev_to_nearest() {
        let reference = vec![csv_row([0, 0, 0]), csv_row([5, 0, 0])];
        let played = vec![csv_row([1, 1, 0]), csv_row([5, 3, 0])];
        assert_eq!(reference_deviation(&reference, &played), Some(3));
        assert_eq!(reference_deviation(&[], &played), None);
    }
}

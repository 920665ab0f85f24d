//! CSV and SVG output for potentials and landscapes.

use std::fmt::Write;

use super::{neighborhood, potential, reversible_measure, SampledFunction, StableLandscape};
use crate::environment::Environment;

/// `x,V,theta,log_theta` rows over the environment window.
pub fn potential_csv(env: &Environment) -> String {
    let v = potential(env);
    let theta = reversible_measure(env);
    let mut out = String::from("x,V,theta,log_theta\n");
    for (i, (&x, &vx)) in v.positions().iter().zip(v.values()).enumerate() {
        let lt = theta.log_theta[i];
        let _ = writeln!(out, "{},{},{},{}", x as i64, vx, lt.exp(), lt);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    pub title: Option<String>,
    /// Shade `N_a(m±)` for this `a` when a landscape is drawn.
    pub neighborhood_radius: Option<f64>,
    /// Restrict the plot to this position range.
    pub x_range: Option<(f64, f64)>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { width: 960.0, height: 420.0, title: None, neighborhood_radius: None, x_range: None }
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
    pad: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.pad + (x - self.x0) / (self.x1 - self.x0).max(f64::MIN_POSITIVE) * (self.w - 2.0 * self.pad)
    }

    fn py(&self, y: f64) -> f64 {
        self.h - self.pad - (y - self.y0) / (self.y1 - self.y0).max(f64::MIN_POSITIVE) * (self.h - 2.0 * self.pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plot of `f` with stable points, peaks, wells and neighborhoods marked.
pub fn landscape_svg(f: &SampledFunction, landscape: Option<&StableLandscape>, opts: &SvgOptions) -> String {
    let (lo, hi) = opts.x_range.unwrap_or((f.position(0), f.position(f.len() - 1)));
    let (i0, i1) = f.index_range(lo, hi).unwrap_or((0, f.len() - 1));
    let vals = &f.values()[i0..=i1];
    let (ymin, ymax) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let fr = Frame {
        x0: f.position(i0),
        x1: f.position(i1),
        y0: ymin - 0.05 * (ymax - ymin).max(1.0),
        y1: ymax + 0.05 * (ymax - ymin).max(1.0),
        w: opts.width,
        h: opts.height,
        pad: 40.0,
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = opts.width,
        h = opts.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(title) = &opts.title {
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, opts.width / 2.0, escape(title));
    }

    if let Some(ls) = landscape {
        for well in &ls.wells {
            let (a, b) = well.interval;
            if b < fr.x0 || a > fr.x1 {
                continue;
            }
            let (xa, xb) = (fr.px(a.max(fr.x0)), fr.px(b.min(fr.x1)));
            let _ = writeln!(
                s,
                r##"<rect x="{xa:.2}" y="{}" width="{:.2}" height="{}" fill="#4a7bd0" fill-opacity="0.06"/>"##,
                fr.pad,
                xb - xa,
                fr.h - 2.0 * fr.pad
            );
        }
        if let Some(a) = opts.neighborhood_radius {
            for side in super::WellSide::BOTH {
                let well = ls.side_well(side);
                if let Ok(n) = neighborhood(f, well.bottom, a.min(well.depth_value), well.interval) {
                    let (xa, xb) = (fr.px(n.interval.0), fr.px(n.interval.1));
                    let _ = writeln!(
                        s,
                        r##"<rect x="{xa:.2}" y="{}" width="{:.2}" height="{}" fill="#e0a020" fill-opacity="0.25"/>"##,
                        fr.pad,
                        (xb - xa).max(1.0),
                        fr.h - 2.0 * fr.pad
                    );
                }
            }
        }
    }

    let _ = writeln!(
        s,
        r##"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        fr.px(0.0f64.clamp(fr.x0, fr.x1)),
        fr.pad,
        fr.h - fr.pad
    );
    let mut d = String::new();
    for i in i0..=i1 {
        let _ = write!(d, "{}{:.2},{:.2} ", if i == i0 { "M" } else { "L" }, fr.px(f.position(i)), fr.py(f.value(i)));
    }
    let _ = writeln!(s, r##"<path d="{}" fill="none" stroke="#222" stroke-width="1"/>"##, d.trim_end());

    if let Some(ls) = landscape {
        let mark = |s: &mut String, xs: &[f64], color: &str| {
            for &x in xs {
                if let Some(y) = f.at(x).filter(|_| x >= fr.x0 && x <= fr.x1) {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, fr.px(x), fr.py(y));
                }
            }
        };
        mark(&mut s, &ls.stable_points, "#1a56c4");
        mark(&mut s, &ls.peaks, "#c41a1a");
        let lm = &ls.landmarks;
        for (label, x) in [
            ("m⁻", lm.m_minus),
            ("m⁺", lm.m_plus),
            ("h⁻", lm.h_minus),
            ("h⁺", lm.h_plus),
            ("m_t", ls.m_t),
        ] {
            if let Some(y) = f.at(x).filter(|_| x >= fr.x0 && x <= fr.x1) {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                    fr.px(x),
                    fr.py(y) + if label.starts_with('h') { -8.0 } else { 16.0 }
                );
            }
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="start">{}</text><text x="{}" y="{}" text-anchor="end">{}</text>"#,
        fr.pad,
        fr.h - 12.0,
        fr.x0,
        fr.w - fr.pad,
        fr.h - 12.0,
        fr.x1
    );
    s.push_str("</svg>\n");
    s
}

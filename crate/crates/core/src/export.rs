//! Output formats: GeoJSON plan documents, CSV tables and static SVG plots.
//!
//! Every floating-point value written here is rounded to 9 significant
//! digits, except the echoed mission config, which must reproduce the run
//! exactly.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::mission::{MissionSpec, StageTimings};
use crate::pathplan::Plan;
use crate::sim::{waypoint_etas, MetricsReport, SweepTable};

pub const SIG_DIGITS: usize = 9;

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal form of `x` rounded to 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(round_sig(f)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

pub fn version_string() -> String {
    format!("scopp {}", env!("CARGO_PKG_VERSION"))
}

/// GeoJSON feature collection with one feature per robot. The mission is
/// echoed verbatim under `config`, metrics under `metrics`.
pub fn plan_document(
    strategy: &str,
    mission: &MissionSpec,
    plan: &Plan,
    metrics: &MetricsReport,
) -> Value {
    let v = mission.uav.velocity_mps;
    let features: Vec<Value> = plan
        .waypoints_by_robot
        .iter()
        .zip(&plan.waypoints_geo)
        .enumerate()
        .map(|(r, (cart, geo))| {
            let etas = waypoint_etas(cart, v);
            let legs: Vec<f64> = etas.windows(2).map(|w| w[1] - w[0]).collect();
            let coords: Vec<Value> = geo.iter().map(|g| json!([g.lon, g.lat])).collect();
            let geometry = if coords.len() >= 2 {
                json!({"type": "LineString", "coordinates": coords})
            } else {
                json!({"type": "Point", "coordinates": coords[0]})
            };
            round_value(json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": {
                    "robot": r,
                    "n_cells": plan.assigned_cells[r].len(),
                    "cells": plan.assigned_cells[r],
                    "travel_time_s": etas.last().copied().unwrap_or(0.0),
                    "leg_times_s": legs,
                    "eta_s": etas,
                },
            }))
        })
        .collect();

    let mut doc = Map::new();
    doc.insert("type".into(), json!("FeatureCollection"));
    doc.insert("version".into(), json!(version_string()));
    doc.insert("strategy".into(), json!(strategy));
    doc.insert(
        "config".into(),
        serde_json::to_value(mission).expect("mission serializes"),
    );
    doc.insert(
        "metrics".into(),
        round_value(serde_json::to_value(metrics).expect("metrics serialize")),
    );
    doc.insert("features".into(), Value::Array(features));
    Value::Object(doc)
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

/// Recovers the echoed mission from a plan document.
pub fn config_from_document(text: &str) -> Result<MissionSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let config = v
        .get("config")
        .ok_or_else(|| Error::InvalidInput("document has no config".into()))?;
    MissionSpec::from_json(&config.to_string())
}

/// `robot,seq,lat,lon,eta_s` per waypoint; `seq` 0 is the launch point.
pub fn plan_csv(plan: &Plan, velocity_mps: f64) -> String {
    let mut out = String::from("robot,seq,lat,lon,eta_s\n");
    for (r, (cart, geo)) in plan
        .waypoints_by_robot
        .iter()
        .zip(&plan.waypoints_geo)
        .enumerate()
    {
        for (k, (g, t)) in geo
            .iter()
            .zip(waypoint_etas(cart, velocity_mps))
            .enumerate()
        {
            let _ = writeln!(
                out,
                "{r},{k},{},{},{}",
                fmt_num(g.lat),
                fmt_num(g.lon),
                fmt_num(t)
            );
        }
    }
    out
}

/// Deterministic part of a scalability sweep: per-run mission times followed
/// by one aggregate row per team size.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("n_robots,seed,mission_time_s,mission_time_std_s\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},",
            r.n_robots,
            r.seed,
            fmt_num(r.mission_time_s)
        );
    }
    for s in &table.summary {
        let _ = writeln!(
            out,
            "{},mean,{},{}",
            s.n_robots,
            fmt_num(s.mission_time_mean),
            fmt_num(s.mission_time_std)
        );
    }
    out
}

/// Wall-clock computing times of a sweep, same row layout as [`sweep_csv`].
pub fn sweep_timing_csv(table: &SweepTable) -> String {
    let mut out = String::from("n_robots,seed,computing_time_s,computing_time_std_s\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},",
            r.n_robots,
            r.seed,
            fmt_num(r.computing_time_s)
        );
    }
    for s in &table.summary {
        let _ = writeln!(
            out,
            "{},mean,{},{}",
            s.n_robots,
            fmt_num(s.computing_time_mean),
            fmt_num(s.computing_time_std)
        );
    }
    out
}

/// Four stage rows plus the total.
pub fn profile_csv(t: &StageTimings) -> String {
    let mut out = String::from("stage,seconds\n");
    for (name, d) in t.stages() {
        let _ = writeln!(out, "{name},{}", fmt_num(d.as_secs_f64()));
    }
    let _ = writeln!(out, "Total,{}", fmt_num(t.total.as_secs_f64()));
    out
}

/// One line of a line chart: `(x, y, y_err)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        let d = lo.abs().max(1.0) * 0.1;
        return (lo - d, hi + d);
    }
    let d = (hi - lo) * 0.05;
    (lo - d, hi + d)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x.0) / (self.x.1 - self.x.0) * (W - ML - MR)
    }
    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y.0) / (self.y.1 - self.y.0) * (H - MT - MB)
    }
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn svg_axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let (x0, x1, y0, y1) = (ML, W - MR, H - MB, MT);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = f.y.0 + (f.y.1 - f.y.0) * i as f64 / 4.0;
        let y = f.py(v);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
        if x_ticks {
            let v = f.x.0 + (f.x.1 - f.x.0) * i as f64 / 4.0;
            let x = f.px(v);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{y0}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#,
                y0 + 4.0,
                y0 + 18.0,
                fmt_tick(v)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        fmt_num((v * 1000.0).round() / 1000.0)
    }
}

/// Line chart with a shaded `y ± err` band per series.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut xl, mut xh, mut yl, mut yh) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y, e) in all {
        xl = xl.min(x);
        xh = xh.max(x);
        yl = yl.min(y - e.abs());
        yh = yh.max(y + e.abs());
    }
    let f = Frame {
        x: padded(xl, xh),
        y: padded(yl, yh),
    };
    let mut out = String::new();
    svg_open(&mut out, title);
    svg_axes(&mut out, &f, x_label, y_label, true);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.points.iter().any(|p| p.2 != 0.0) && s.points.len() > 1 {
            let upper = s
                .points
                .iter()
                .map(|&(x, y, e)| format!("{:.2},{:.2}", f.px(x), f.py(y + e.abs())));
            let lower = s
                .points
                .iter()
                .rev()
                .map(|&(x, y, e)| format!("{:.2},{:.2}", f.px(x), f.py(y - e.abs())));
            let pts: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                pts.join(" ")
            );
        }
        let line: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y, _)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        if line.len() > 1 {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                line.join(" ")
            );
        }
        if s.points.len() <= 60 {
            for &(x, y, e) in &s.points {
                let (cx, cy) = (f.px(x), f.py(y));
                if e != 0.0 {
                    let _ = writeln!(
                        out,
                        r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
                        f.py(y + e.abs()),
                        f.py(y - e.abs())
                    );
                }
                let _ = writeln!(
                    out,
                    r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{color}"/>"#
                );
            }
        }
        let ly = MT + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="4" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            W - MR - 150.0,
            ly - 4.0,
            W - MR - 134.0,
            ly,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Grouped bar chart: one cluster of bars per category, one bar per group.
pub fn bar_chart_svg(
    title: &str,
    y_label: &str,
    categories: &[&str],
    groups: &[(String, Vec<f64>)],
) -> String {
    let max = groups
        .iter()
        .flat_map(|g| g.1.iter().copied())
        .fold(0.0f64, f64::max);
    let f = Frame {
        x: (0.0, categories.len().max(1) as f64),
        y: (0.0, if max > 0.0 { max * 1.1 } else { 1.0 }),
    };
    let mut out = String::new();
    svg_open(&mut out, title);
    svg_axes(&mut out, &f, "", y_label, false);
    let slot = (W - ML - MR) / categories.len().max(1) as f64;
    let bar = slot * 0.8 / groups.len().max(1) as f64;
    for (c, name) in categories.iter().enumerate() {
        let x0 = ML + slot * c as f64 + slot * 0.1;
        for (g, (_, values)) in groups.iter().enumerate() {
            let v = values.get(c).copied().unwrap_or(0.0);
            let (top, base) = (f.py(v), f.py(0.0));
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}</title></rect>"#,
                x0 + bar * g as f64,
                bar,
                (base - top).max(0.0),
                PALETTE[g % PALETTE.len()],
                fmt_num(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + slot * 0.4,
            H - MB + 18.0,
            escape(name)
        );
    }
    for (g, (label, _)) in groups.iter().enumerate() {
        let ly = MT + 14.0 + 16.0 * g as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            W - MR - 150.0,
            ly - 9.0,
            PALETTE[g % PALETTE.len()],
            W - MR - 134.0,
            ly,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn coverage_svg(metrics: &MetricsReport) -> String {
    let s = Series {
        label: "covered area".into(),
        points: metrics
            .coverage_curve
            .iter()
            .map(|&(t, a)| (t, a, 0.0))
            .collect(),
    };
    line_chart_svg("Coverage over time", "time (s)", "area covered (m^2)", &[s])
}

pub fn sweep_svgs(table: &SweepTable) -> (String, String) {
    let mission = Series {
        label: "mission time".into(),
        points: table
            .summary
            .iter()
            .map(|s| (s.n_robots as f64, s.mission_time_mean, s.mission_time_std))
            .collect(),
    };
    let compute = Series {
        label: "computing time".into(),
        points: table
            .summary
            .iter()
            .map(|s| {
                (
                    s.n_robots as f64,
                    s.computing_time_mean,
                    s.computing_time_std,
                )
            })
            .collect(),
    };
    (
        line_chart_svg(
            "Mission time vs team size",
            "robots",
            "mission time (s)",
            &[mission],
        ),
        line_chart_svg(
            "Computing time vs team size",
            "robots",
            "computing time (s)",
            &[compute],
        ),
    )
}

pub fn profile_svg(runs: &[(String, StageTimings)]) -> String {
    let groups: Vec<(String, Vec<f64>)> = runs
        .iter()
        .map(|(label, t)| {
            (
                label.clone(),
                t.stages().iter().map(|s| s.1.as_secs_f64()).collect(),
            )
        })
        .collect();
    bar_chart_svg(
        "Computing time per stage",
        "seconds",
        &StageTimings::STAGE_NAMES,
        &groups,
    )
}

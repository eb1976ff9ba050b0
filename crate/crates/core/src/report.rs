//! Text tables and static SVG plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::Metrics;
use crate::error::{Error, Result};

/// Fixed-width table with one row per model: Acc. Prec. Rec. F1 as
/// percentages, then raw counts and the unknown rate.
pub fn metrics_table(rows: &[(String, Metrics)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}",
        "model", "Acc.", "Prec.", "Rec.", "F1", "TP", "FP", "FN", "TN", "unknown"
    );
    for (name, m) in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>6.2}  {:>6.2}  {:>6.2}  {:>6.2}  {:>7}  {:>7}  {:>7}  {:>7}  {:>6.2}%",
            name,
            100.0 * m.accuracy,
            100.0 * m.precision,
            100.0 * m.recall,
            100.0 * m.f1,
            m.tp,
            m.fp,
            m.fn_,
            m.tn,
            100.0 * m.unknown_rate
        );
    }
    s
}

/// Two-column CSV, `index_name` counting from 1.
pub fn write_loss_table<W: Write>(out: W, index_name: &str, losses: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([index_name, "loss"])?;
    for (i, l) in losses.iter().enumerate() {
        w.write_record([(i + 1).to_string(), l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<loss table>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsPoint {
    pub t_obs: usize,
    pub t_pred: usize,
    pub n_p: usize,
    pub mcs: f64,
}

pub fn write_mcs_table<W: Write>(out: W, points: &[McsPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<mcs table>", e))?;
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line plot of MCS against `n_p`, one series per `(t_obs, t_pred)`.
pub fn mcs_plot_svg(points: &[McsPoint]) -> String {
    let (w, h) = (560.0, 360.0);
    let (left, right, top, bottom) = (60.0, 150.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let mut series: BTreeMap<(usize, usize), Vec<&McsPoint>> = BTreeMap::new();
    for p in points {
        series.entry((p.t_obs, p.t_pred)).or_default().push(p);
    }
    let x_max = points.iter().map(|p| p.n_p).max().unwrap_or(1).max(1) as f64;
    let x_min = points.iter().map(|p| p.n_p).min().unwrap_or(1).min(x_max as usize) as f64;
    let finite = points.iter().map(|p| p.mcs).filter(|m| m.is_finite());
    let y_lo = finite.clone().fold(1.0_f64, f64::min).min(0.5);
    let y_lo = (y_lo * 10.0).floor() / 10.0;
    let y_hi = 1.0;
    let sx = |x: f64| {
        if x_max > x_min {
            left + (x - x_min) / (x_max - x_min) * pw
        } else {
            left + pw / 2.0
        }
    };
    let sy = |y: f64| top + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + ph);
    let mut ticks: Vec<usize> = points.iter().map(|p| p.n_p).collect();
    ticks.sort_unstable();
    ticks.dedup();
    for t in ticks {
        let x = sx(t as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#,
            top + ph + 16.0
        );
    }
    let steps = ((y_hi - y_lo) / 0.1).round() as usize;
    for k in 0..=steps {
        let y = y_lo + k as f64 * 0.1;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.1}</text>"#,
            left - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n_p</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">MCS</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, ((t_obs, t_pred), mut pts)) in series.into_iter().enumerate() {
        pts.sort_by_key(|p| p.n_p);
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .filter(|p| p.mcs.is_finite())
            .map(|p| format!("{:.1},{:.1}", sx(p.n_p as f64), sy(p.mcs)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for c in &coords {
            let (x, y) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let ly = top + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}">t_obs={t_obs}, t_pred={t_pred}</text>"#,
            left + pw + 12.0
        );
    }
    s.push_str("</svg>\n");
    s
}

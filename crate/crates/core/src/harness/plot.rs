//! Standalone SVG line charts and phase maps.

use std::fmt::Write as _;

use super::sweep::Manifest;
use crate::io::{NumericTable, ParseError};
use crate::stefan::Timeline;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        esc(title)
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300_f64.max(1e-12 * hi.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

impl Chart {
    pub fn render(&self) -> String {
        let ty = |y: f64| if self.log_y { y.max(1e-300).log10() } else { y };
        let (x0, x1) = range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let (y0, y1) = range(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().filter(|p| !self.log_y || p.1 > 0.0).map(|p| ty(p.1))),
        );
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (ty(y) - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        header(&mut out, &self.title);
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let ylabel = if self.log_y { format!("1e{yv:.1}") } else { format!("{yv:.3}") };
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"#,
                LEFT + f * pw,
                H - BOTTOM + 18.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{ylabel}</text>"#,
                LEFT - 6.0,
                TOP + ph - f * ph + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 10.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_y || p.1 > 0.0))
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                s.color,
                pts.join(" ")
            );
            let ly = TOP + 14.0 + 16.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}"{dash}/>"#,
                W - RIGHT - 110.0,
                W - RIGHT - 90.0,
                s.color
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                W - RIGHT - 85.0,
                ly + 4.0,
                esc(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// h(t), with the critical length as a dashed guideline when known.
pub fn front_chart(timeline: &Timeline, l0: Option<f64>) -> String {
    let mut series = vec![Series {
        label: "h(t)".into(),
        color: "#1f77b4",
        dashed: false,
        points: timeline.records.iter().map(|r| (r.t, r.h)).collect(),
    }];
    if let (Some(l0), Some(first), Some(last)) = (l0, timeline.records.first(), timeline.last()) {
        series.push(Series {
            label: "l0".into(),
            color: "#d62728",
            dashed: true,
            points: vec![(first.t, l0), (last.t, l0)],
        });
    }
    Chart {
        title: "free boundary".into(),
        x_label: "t".into(),
        y_label: "h".into(),
        log_y: false,
        series,
    }
    .render()
}

pub fn norm_chart(timeline: &Timeline) -> String {
    Chart {
        title: "sup-norm".into(),
        x_label: "t".into(),
        y_label: "sup u + sup v".into(),
        log_y: true,
        series: vec![Series {
            label: "|u|+|v|".into(),
            color: "#2ca02c",
            dashed: false,
            points: timeline.records.iter().map(|r| (r.t, r.norm())).collect(),
        }],
    }
    .render()
}

/// Final profiles from a `y,x,u,v` snapshot.
pub fn profile_chart(snapshot: &str) -> Result<String, ParseError> {
    let table = NumericTable::parse(snapshot)?;
    let col = |name: &str| {
        table.column(name).ok_or_else(|| ParseError {
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (x, u, v) = (col("x")?, col("u")?, col("v")?);
    if x.is_empty() {
        return Err(ParseError {
            line: 2,
            message: "snapshot has no rows".into(),
        });
    }
    Ok(Chart {
        title: "final profiles".into(),
        x_label: "x".into(),
        y_label: "concentration".into(),
        log_y: false,
        series: vec![
            Series {
                label: "u".into(),
                color: "#1f77b4",
                dashed: false,
                points: x.iter().copied().zip(u).collect(),
            },
            Series {
                label: "v".into(),
                color: "#ff7f0e",
                dashed: false,
                points: x.into_iter().zip(v).collect(),
            },
        ],
    }
    .render())
}

fn class_color(class: &str) -> &'static str {
    match class {
        "Spreading" => "#d62728",
        "Vanishing" => "#1f77b4",
        "Undetermined" => "#bbbbbb",
        _ => "#000000",
    }
}

/// Class heat grid over the two axes of a 2-axis sweep manifest.
pub fn phase_map(manifest: &Manifest) -> Result<String, ParseError> {
    if manifest.axes.len() != 2 {
        return Err(ParseError {
            line: 1,
            message: format!("phase map needs exactly 2 axes, manifest has {}", manifest.axes.len()),
        });
    }
    let uniq = |k: usize| {
        let mut v: Vec<f64> = manifest.rows.iter().map(|r| r.values[k]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (xs, ys) = (uniq(0), uniq(1));
    if xs.is_empty() {
        return Err(ParseError {
            line: 2,
            message: "manifest has no rows".into(),
        });
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let cw = pw / xs.len() as f64;
    let ch = ph / ys.len() as f64;
    let mut out = String::new();
    header(&mut out, "phase map");
    for r in &manifest.rows {
        let i = xs.iter().position(|&x| x == r.values[0]).expect("value present");
        let j = ys.iter().position(|&y| y == r.values[1]).expect("value present");
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}" stroke="white"><title>{} {}</title></rect>"#,
            LEFT + i as f64 * cw,
            TOP + ph - (j + 1) as f64 * ch,
            class_color(&r.class),
            esc(&r.run_id),
            esc(&r.class)
        );
    }
    for (i, x) in xs.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.3}</text>"#,
            LEFT + (i as f64 + 0.5) * cw,
            H - BOTTOM + 18.0
        );
    }
    for (j, y) in ys.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#,
            LEFT - 6.0,
            TOP + ph - (j as f64 + 0.5) * ch + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 10.0,
        esc(&manifest.axes[0])
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(&manifest.axes[1])
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::ManifestRow;
    use crate::stefan::TimelineRecord;

    fn timeline() -> Timeline {
        Timeline {
            records: (0..10)
                .map(|k| TimelineRecord {
                    t: k as f64,
                    h: 1.0 + 0.5 * k as f64,
                    h_prime: 0.5,
                    sup_u: (-(k as f64)).exp(),
                    sup_v: 0.0,
                    mass_u: 0.0,
                    mass_v: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn front_chart_has_dashed_guideline() {
        let svg = front_chart(&timeline(), Some(3.0));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn log_norm_is_straight_for_exponential_decay() {
        let svg = norm_chart(&timeline());
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts: Vec<(f64, f64)> = line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .trim_end_matches("\"/>")
            .split(' ')
            .map(|p| {
                let (a, b) = p.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        let slope = |i: usize| (pts[i + 1].1 - pts[i].1) / (pts[i + 1].0 - pts[i].0);
        for i in 0..pts.len() - 1 {
            assert!((slope(i) - slope(0)).abs() < 1e-2);
        }
    }

    #[test]
    fn profile_chart_rejects_bad_rows() {
        assert!(profile_chart("y,x,u,v\n0,0,0,0\n1,2,0,0\n").is_ok());
        assert_eq!(profile_chart("y,x,u,v\n0,0,0\n").unwrap_err().line, 2);
        assert!(profile_chart("y,x,u,v\n").is_err());
    }

    #[test]
    fn phase_map_cells() {
        let rows = (0..4)
            .map(|k| ManifestRow {
                run_id: format!("r{k:05}"),
                values: vec![(k / 2) as f64, (k % 2) as f64],
                class: if k == 3 { "Spreading" } else { "Vanishing" }.into(),
                h_final: 1.0,
            })
            .collect();
        let m = Manifest {
            axes: vec!["mu1".into(), "tau".into()],
            rows,
        };
        let svg = phase_map(&m).unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 4);
        let one = Manifest {
            axes: vec!["mu1".into()],
            rows: vec![],
        };
        assert!(phase_map(&one).is_err());
    }
}

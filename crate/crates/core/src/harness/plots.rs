use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::metrics::EvalMatrix;
use crate::continual::TrainMethod;
use crate::error::{Error, Result};

/// Per-method curves and baseline levels to plot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotData {
    /// `(method, B_k per task, max deviation per task)`.
    pub methods: Vec<(String, Vec<f64>, Vec<f64>)>,
    /// `(controller, max deviation)` of the non-learning baselines.
    pub baselines: Vec<(String, f64)>,
}

impl PlotData {
    /// Rebuild from the metric files of a results directory.
    pub fn load(root: &Path) -> Result<Self> {
        let read = |rel: String| {
            let p = root.join(rel);
            fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
        };
        let mut data = PlotData::default();
        for m in TrainMethod::ALL {
            let Ok(eval) = read(format!("metrics/eval_matrix_{m}.csv")) else {
                continue;
            };
            let matrix = EvalMatrix::from_csv(&eval)?;
            let max_dev = column(&read(format!("metrics/rollouts_{m}.csv"))?, "max_dev")?
                .into_iter()
                .map(|(_, v)| v)
                .collect();
            data.methods.push((m.to_string(), matrix.big_b, max_dev));
        }
        if let Ok(text) = read("metrics/baselines.csv".into()) {
            data.baselines = column(&text, "max_dev")?;
        }
        Ok(data)
    }
}

/// `(first field, named numeric column)` for each row of a CSV.
fn column(text: &str, name: &str) -> Result<Vec<(String, f64)>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == name)
        .ok_or_else(|| Error::parse("metrics csv", format!("no `{name}` column")))?;
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let v = f
                .get(idx)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::parse("metrics csv", format!("bad row `{l}`")))?;
            Ok((f[0].to_string(), v))
        })
        .collect()
}

/// Plot files as `(relative path, contents)`: a long-format CSV
/// `method,task,metric,value`, a baseline CSV and two SVG charts.
pub fn emit_plots(data: &PlotData) -> Vec<(String, String)> {
    let mut csv = String::from("method,task,metric,value\n");
    for (m, big_b, max_dev) in &data.methods {
        for (k, v) in big_b.iter().enumerate() {
            let _ = writeln!(csv, "{m},{},B_k,{v}", k + 1);
        }
        for (k, v) in max_dev.iter().enumerate() {
            let _ = writeln!(csv, "{m},{},max_dev,{v}", k + 1);
        }
    }
    let mut base = String::from("controller,metric,value\n");
    for (id, v) in &data.baselines {
        let _ = writeln!(base, "{id},max_dev,{v}");
    }
    let bk: Vec<Series> = data
        .methods
        .iter()
        .map(|(m, b, _)| Series { name: m, values: b })
        .collect();
    let dev: Vec<Series> = data
        .methods
        .iter()
        .map(|(m, _, d)| Series { name: m, values: d })
        .collect();
    vec![
        ("plots/metrics.csv".into(), csv),
        ("plots/baselines.csv".into(), base),
        ("plots/b_k.svg".into(), line_chart("Average test MSE B_k", "B_k", &bk, &[])),
        (
            "plots/max_dev.svg".into(),
            line_chart("Max lateral deviation on the test section", "max deviation (m)", &dev, &data.baselines),
        ),
    ]
}

struct Series<'a> {
    name: &'a str,
    values: &'a [f64],
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn line_chart(title: &str, y_label: &str, series: &[Series], levels: &[(String, f64)]) -> String {
    let finite = |v: &&f64| v.is_finite();
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.values.iter())
        .chain(levels.iter().map(|(_, v)| v))
        .filter(finite)
        .copied()
        .collect();
    let y_max = ys.iter().copied().fold(0.0, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let x_max = n.max(2) as f64;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |k: f64| LEFT + (k - 1.0) / (x_max - 1.0) * pw;
    let py = |v: f64| TOP + ph - v / y_max * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let step = (n / 10).max(1);
    for k in (1..=n).step_by(step) {
        let x = px(k as f64);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{k}</text>"#, TOP + ph + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">task</text>"#, LEFT + pw / 2.0, H - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(y_label)
    );
    let mut legend_y = TOP + 10.0;
    let mut legend = |s: &mut String, name: &str, color: &str, dashed: bool| {
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let x = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 24.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 30.0, legend_y + 4.0, escape(name));
        legend_y += 18.0;
    };
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, v)| format!("{:.2},{:.2}", px(k as f64 + 1.0), py(*v)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
        legend(&mut s, ser.name, color, false);
    }
    for (i, (name, v)) in levels.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        let color = COLORS[(series.len() + i) % COLORS.len()];
        let y = py(*v);
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="{color}" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
            LEFT + pw
        );
        legend(&mut s, name, color, true);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PlotData {
        PlotData {
            methods: vec![
                ("non_ll".into(), vec![0.3, 0.5, 0.6], vec![0.2, 0.4, f64::NAN]),
                ("ll_me".into(), vec![0.3, 0.2, 0.1], vec![0.2, 0.1, 0.1]),
            ],
            baselines: vec![("pp".into(), 0.25), ("mpc".into(), 0.05)],
        }
    }

    fn file<'a>(out: &'a [(String, String)], name: &str) -> &'a str {
        &out.iter().find(|(p, _)| p == name).unwrap().1
    }

    #[test]
    fn empty_results_give_headers_and_axes() {
        let out = emit_plots(&PlotData::default());
        assert_eq!(file(&out, "plots/metrics.csv"), "method,task,metric,value\n");
        for svg in ["plots/b_k.svg", "plots/max_dev.svg"] {
            let text = file(&out, svg);
            let doc = roxmltree::Document::parse(text).unwrap();
            assert!(doc.descendants().any(|n| n.has_tag_name("path")));
            assert!(!doc.descendants().any(|n| n.has_tag_name("polyline")));
        }
    }

    #[test]
    fn csv_rows_and_svg_shape() {
        let out = emit_plots(&sample());
        assert_eq!(file(&out, "plots/metrics.csv").lines().count(), 1 + 2 * 3 * 2);
        assert_eq!(file(&out, "plots/baselines.csv").lines().count(), 3);
        let doc = roxmltree::Document::parse(file(&out, "plots/max_dev.svg")).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 2);
        assert_eq!(
            doc.descendants().filter(|n| n.attribute("stroke-dasharray").is_some()).count(),
            4
        );
    }
}

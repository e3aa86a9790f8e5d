//! CSV and SVG output for sweeps, and text records for CHSH runs.
//!
//! CSV files always carry the header
//! `theta,E_analytic,E_mc,stderr,n,protocol,delta,seed`, use `\n` line
//! endings and write reals with 17 significant digits so that they read back
//! bit-exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::analytics::{eval_quantum, CorrelationLaw};
use crate::bell::{ChshResult, ALGEBRAIC_BOUND, LOCAL_BOUND, TSIRELSON_BOUND};
use crate::math::SeparationAngle;
use crate::montecarlo::CurveSweep;
use crate::protocols::ProtocolSpec;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "theta",
    "E_analytic",
    "E_mc",
    "stderr",
    "n",
    "protocol",
    "delta",
    "seed",
];

pub const SVG_WIDTH: u32 = 800;
pub const SVG_HEIGHT: u32 = 500;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one row per grid point.
pub fn write_curve_csv<W: Write>(sweep: &CurveSweep, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    let analytic = sweep.analytic_values()?;
    let delta = sweep.protocol.delta().map(real).unwrap_or_default();
    let seed = sweep.seed.to_string();
    for ((t, e), reference) in sweep.grid.iter().zip(&sweep.estimates).zip(analytic) {
        w.write_record([
            real(t.value()),
            reference.map(real).unwrap_or_default(),
            real(e.mean),
            real(e.stderr),
            e.n.to_string(),
            sweep.protocol.name().to_string(),
            delta.clone(),
            seed.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn curve_csv_string(sweep: &CurveSweep) -> Result<String> {
    let mut buf = Vec::new();
    write_curve_csv(sweep, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// One parsed row of a curve CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub theta: f64,
    pub e_analytic: Option<f64>,
    pub e_mc: f64,
    pub stderr: f64,
    pub n: u64,
    pub protocol: String,
    pub delta: Option<f64>,
    pub seed: u64,
}

fn parse_real(field: &str, name: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("column {name}: cannot parse {field:?}")))
}

fn parse_opt(field: &str, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_real(field, name).map(Some)
    }
}

pub fn read_curve_csv<R: Read>(input: R) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let get = |i: usize| rec.get(i).unwrap_or("");
            Ok(CurveRow {
                theta: parse_real(get(0), "theta")?,
                e_analytic: parse_opt(get(1), "E_analytic")?,
                e_mc: parse_real(get(2), "E_mc")?,
                stderr: parse_real(get(3), "stderr")?,
                n: get(4)
                    .parse()
                    .map_err(|_| Error::Parse(format!("column n: {:?}", get(4))))?,
                protocol: get(5).to_owned(),
                delta: parse_opt(get(6), "delta")?,
                seed: get(7)
                    .parse()
                    .map_err(|_| Error::Parse(format!("column seed: {:?}", get(7))))?,
            })
        })
        .collect()
}

/// Largest `|E_mc - E_analytic|` over rows that carry an analytic value.
pub fn rows_max_abs_deviation(rows: &[CurveRow]) -> Result<f64> {
    let mut any = false;
    let mut worst = 0.0f64;
    for row in rows {
        if let Some(e) = row.e_analytic {
            any = true;
            worst = worst.max((row.e_mc - e).abs());
        }
    }
    if any {
        Ok(worst)
    } else {
        Err(Error::Usage("no analytic column to compare against".into()))
    }
}

// SVG

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const Y_RANGE: f64 = 1.05;
const DENSE_POINTS: usize = 361;

struct Frame {
    w: f64,
    h: f64,
}

impl Frame {
    fn x(&self, theta: f64) -> f64 {
        MARGIN_LEFT + theta / PI * (self.w - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, e: f64) -> f64 {
        let plot_h = self.h - MARGIN_TOP - MARGIN_BOTTOM;
        MARGIN_TOP + (Y_RANGE - e) / (2.0 * Y_RANGE) * plot_h
    }

    fn points(&self, series: &[(f64, f64)]) -> String {
        series
            .iter()
            .map(|&(t, e)| format!("{:.2},{:.2}", self.x(t), self.y(e)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn dense<F: Fn(SeparationAngle) -> Option<f64>>(f: F) -> Vec<(f64, f64)> {
    SeparationAngle::uniform_grid(DENSE_POINTS)
        .expect("grid size is a constant above 2")
        .into_iter()
        .filter_map(|t| f(t).map(|e| (t.value(), e)))
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

// label, stroke colour, dash pattern, points
type Series<'a> = (String, &'a str, &'a str, Vec<(f64, f64)>);

/// Line plot of a sweep: Monte Carlo estimates, the matching closed-form law
/// (when there is one) and the `-cos θ` reference, one polyline each.
pub fn render_curve_svg(sweep: &CurveSweep) -> String {
    let frame = Frame {
        w: f64::from(SVG_WIDTH),
        h: f64::from(SVG_HEIGHT),
    };
    let mut series: Vec<Series> = Vec::new();

    let mc: Vec<(f64, f64)> = sweep
        .grid
        .iter()
        .zip(&sweep.estimates)
        .map(|(t, e)| (t.value(), e.mean))
        .collect();
    series.push((
        format!("Monte Carlo: {}", sweep.protocol),
        "#1f77b4",
        "",
        mc,
    ));

    if let Some(law) = sweep.analytic_reference {
        if law != CorrelationLaw::QuantumCosine {
            let pts = dense(|t| law.eval(t).ok());
            series.push((format!("closed form: {law}"), "#d62728", "", pts));
        }
    }
    let q = dense(|t| Some(eval_quantum(t)));
    series.push(("-cos θ".to_string(), "#7f7f7f", "6,4", q));

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    );

    // Axes and ticks.
    let (x0, x1) = (frame.x(0.0), frame.x(PI));
    let (y0, y1) = (frame.y(-Y_RANGE), frame.y(Y_RANGE));
    let _ = writeln!(
        svg,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for (frac, label) in [
        (0.0, "0"),
        (0.25, "π/4"),
        (0.5, "π/2"),
        (0.75, "3π/4"),
        (1.0, "π"),
    ] {
        let x = frame.x(frac * PI);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">{label}</text>"#,
            y0 + 20.0
        );
    }
    for e in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let y = frame.y(e);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{e}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">θ</text>"#,
        0.5 * (x0 + x1),
        f64::from(SVG_HEIGHT) - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.2})">E(θ)</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1)
    );

    for (i, (label, color, dash, pts)) in series.iter().enumerate() {
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{}"/>"#,
            frame.points(pts)
        );
        let ly = MARGIN_TOP + 20.0 * i as f64 + 10.0;
        let lx = x1 + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash_attr}/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// `protocol,s,abs_s,classification,stderr_s,seed`
pub fn chsh_record_line(protocol: &ProtocolSpec, result: &ChshResult, seed: u64) -> String {
    format!(
        "{},{},{},{},{},{}",
        protocol.name(),
        real(result.s),
        real(result.abs_s),
        result.classification,
        result.stderr_s.map(real).unwrap_or_default(),
        seed
    )
}

pub fn chsh_summary(protocol: &ProtocolSpec, result: &ChshResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "protocol        {protocol}");
    let _ = writeln!(
        out,
        "correlations    E(a,b)={:.6}  E(a,b')={:.6}  E(a',b)={:.6}  E(a',b')={:.6}",
        result.e_ab, result.e_abp, result.e_apb, result.e_apbp
    );
    match result.stderr_s {
        Some(se) => {
            let _ = writeln!(out, "S               {:.6} ± {:.6}", result.s, se);
        }
        None => {
            let _ = writeln!(out, "S               {:.6}", result.s);
        }
    }
    let _ = writeln!(
        out,
        "|S|             {:.6}  ({})",
        result.abs_s, result.classification
    );
    let _ = writeln!(out, "local bound     {LOCAL_BOUND}");
    let _ = writeln!(out, "Tsirelson bound {TSIRELSON_BOUND:.6}");
    let _ = write!(out, "algebraic bound {ALGEBRAIC_BOUND}");
    out
}

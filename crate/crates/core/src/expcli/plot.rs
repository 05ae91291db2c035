//! Deterministic SVG plots of an aggregate CSV.

use std::fmt::Write as _;
use std::io::Read;

use crate::montecarlo::AGGREGATE_COLUMNS;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct PlotError(pub String);

/// The plotted columns of one aggregate row.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub n: u64,
    pub replications: u32,
    pub trimmed: [f64; 5],
    pub truncated: [f64; 5],
    pub untrimmed_max: [f64; 5],
}

pub fn read_aggregate_csv<R: Read>(r: R) -> Result<Vec<PlotRow>, PlotError> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| PlotError(format!("reading header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PlotError(format!("missing column `{name}`")))
    };
    let idx: Vec<usize> = AGGREGATE_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| PlotError(format!("line {line}: {e}")))?;
        let field = |k: usize| -> Result<&str, PlotError> {
            rec.get(idx[k]).ok_or_else(|| {
                PlotError(format!("line {line}: missing `{}`", AGGREGATE_COLUMNS[k]))
            })
        };
        let float = |k: usize| -> Result<f64, PlotError> {
            let s = field(k)?;
            s.parse::<f64>().map_err(|_| {
                PlotError(format!(
                    "line {line}: `{}` = {s:?} is not a number",
                    AGGREGATE_COLUMNS[k]
                ))
            })
        };
        let five = |start: usize| -> Result<[f64; 5], PlotError> {
            let mut q = [0.0; 5];
            for (j, v) in q.iter_mut().enumerate() {
                *v = float(start + j)?;
            }
            Ok(q)
        };
        let n: u64 = field(0)?
            .parse()
            .map_err(|_| PlotError(format!("line {line}: `n` is not a positive integer")))?;
        let replications: u32 = field(1)?
            .parse()
            .map_err(|_| PlotError(format!("line {line}: `replications` is not an integer")))?;
        if n == 0 || replications == 0 {
            return Err(PlotError(format!(
                "line {line}: n and replications must be positive"
            )));
        }
        if rows.last().is_some_and(|p: &PlotRow| p.n >= n) {
            return Err(PlotError(format!(
                "line {line}: n must be strictly increasing"
            )));
        }
        rows.push(PlotRow {
            n,
            replications,
            trimmed: five(2)?,
            truncated: five(7)?,
            untrimmed_max: five(17)?,
        });
    }
    if rows.is_empty() {
        return Err(PlotError("aggregate CSV has no data rows".into()));
    }
    Ok(rows)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut x0, mut x1) = bounds(xs);
        let (mut y0, mut y1) = bounds(ys);
        if x1 - x0 < 1e-9 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-9 {
            let pad = y0.abs().max(1.0) * 0.1;
            y0 -= pad;
            y1 += pad;
        }
        let pad = (y1 - y0) * 0.05;
        Self {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        })
}

struct Series<'a> {
    label: &'a str,
    colour: &'a str,
    /// (log10 n, 5/25/50/75/95 % quantiles)
    points: Vec<(f64, [f64; 5])>,
}

fn header(s: &mut String, title: &str, ylabel: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">log10 n</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{ylabel}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
}

fn axes(s: &mut String, f: &Frame) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for i in 0..=5 {
        let x = f.x0 + (f.x1 - f.x0) * i as f64 / 5.0;
        let px = f.px(x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.2}</text>"#,
            b + 5.0,
            b + 18.0
        );
        let y = f.y0 + (f.y1 - f.y0) * i as f64 / 5.0;
        let py = f.py(y);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{l:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 5.0,
            l - 8.0,
            py + 4.0,
            tick(y)
        );
    }
}

fn tick(y: f64) -> String {
    if y != 0.0 && (y.abs() >= 1e4 || y.abs() < 1e-2) {
        format!("{y:.1e}")
    } else {
        format!("{y:.3}")
    }
}

fn polyline(f: &Frame, pts: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = String::new();
    for (x, y) in pts.filter(|p| p.1.is_finite()) {
        if !out.is_empty() {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", f.px(x), f.py(y));
    }
    out
}

fn draw(s: &mut String, f: &Frame, series: &[Series], band: bool) {
    for (k, ser) in series.iter().enumerate() {
        if band {
            for (lo, hi, opacity) in [(0, 4, 0.15), (1, 3, 0.3)] {
                let upper = ser.points.iter().map(|(x, q)| (*x, q[hi]));
                let lower = ser.points.iter().rev().map(|(x, q)| (*x, q[lo]));
                let _ = writeln!(
                    s,
                    r#"<polygon points="{}" fill="{}" fill-opacity="{opacity}" stroke="none"/>"#,
                    polyline(f, upper.chain(lower)),
                    ser.colour
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            polyline(f, ser.points.iter().map(|(x, q)| (*x, q[2]))),
            ser.colour
        );
        let ly = TOP + 16.0 + 16.0 * k as f64;
        let lx = LEFT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            ser.colour,
            lx + 26.0,
            ly + 4.0,
            ser.label
        );
    }
}

fn has_band(rows: &[PlotRow]) -> bool {
    rows.iter().any(|r| r.replications > 1)
}

/// Median trimmed and truncated ratios with 50 % and 90 % bands (bands are
/// omitted for a single replication) and the reference line at one.
pub fn ratio_band_svg(rows: &[PlotRow]) -> String {
    let xs = rows.iter().map(|r| (r.n as f64).log10());
    let series = [
        Series {
            label: "trimmed S_n^b / d_n",
            colour: "#1f77b4",
            points: rows
                .iter()
                .map(|r| ((r.n as f64).log10(), r.trimmed))
                .collect(),
        },
        Series {
            label: "truncated T_n^t / d_n",
            colour: "#d62728",
            points: rows
                .iter()
                .map(|r| ((r.n as f64).log10(), r.truncated))
                .collect(),
        },
    ];
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().flat_map(|p| p.1))
        .chain([1.0]);
    let f = Frame::new(xs, ys);
    let mut s = String::new();
    header(&mut s, "Trimmed and truncated ratios", "ratio to d_n");
    axes(&mut s, &f);
    let y1 = f.py(1.0);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.2}" y1="{y1:.2}" x2="{:.2}" y2="{y1:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        WIDTH - RIGHT
    );
    draw(&mut s, &f, &series, has_band(rows));
    s.push_str("</svg>\n");
    s
}

/// Running maximum of the untrimmed ratio S_n / d_n on a log scale.
pub fn untrimmed_max_svg(rows: &[PlotRow]) -> String {
    let log = |v: f64| if v > 0.0 { v.log10() } else { f64::NAN };
    let series = [Series {
        label: "running max of S_n / d_n",
        colour: "#2ca02c",
        points: rows
            .iter()
            .map(|r| ((r.n as f64).log10(), r.untrimmed_max.map(log)))
            .collect(),
    }];
    let xs = rows.iter().map(|r| (r.n as f64).log10());
    let ys = series[0].points.iter().flat_map(|p| p.1);
    let f = Frame::new(xs, ys);
    let mut s = String::new();
    header(&mut s, "Untrimmed ratio, running maximum", "log10 ratio");
    axes(&mut s, &f);
    draw(&mut s, &f, &series, has_band(rows));
    s.push_str("</svg>\n");
    s
}

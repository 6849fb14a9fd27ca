//! Hand-rolled SVG convergence charts. Rendering is pure string building
//! from the aggregate rows, so the same input produces byte-identical files
//! on every machine and thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use mco_ce::bench::AggregateRow;

/// Chart flavors produced by the `plot` command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Linear axes: per-algorithm mean best value with a ±95% CI band.
    MeanCi,
    /// Log-scale value axis: median best value with min/max whiskers.
    SemilogMedian,
}

impl PlotKind {
    /// File-name fragment for this kind.
    pub fn slug(&self) -> &'static str {
        match self {
            PlotKind::MeanCi => "mean-ci",
            PlotKind::SemilogMedian => "semilog-median",
        }
    }
}

/// Values at or below zero cannot be drawn on a log axis; they are floored
/// here and the chart gains a footnote saying so.
pub const LOG_FLOOR: f64 = 1e-16;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 168.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 58.0;

/// Line colors, assigned to algorithms in alphabetical order.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Fixed-precision coordinate: two decimals is ~0.01 px, far below visible,
/// and keeps the output platform-independent.
fn c(v: f64) -> String {
    format!("{v:.2}")
}

/// Short human-readable tick label.
fn fmt_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e5 || a < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(d0: f64, d1: f64, p0: f64, p1: f64) -> Self {
        let (d0, d1) = if d1 > d0 { (d0, d1) } else { (d0 - 1.0, d0 + 1.0) };
        Self { d0, d1, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.d0 + (self.d1 - self.d0) * i as f64 / (n - 1) as f64).collect()
    }
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { 1.0 };
    (lo - pad, hi + pad)
}

/// One algorithm's points in drawing order.
struct Series<'a> {
    name: &'a str,
    color: &'static str,
    rows: Vec<&'a AggregateRow<f64>>,
}

fn group<'a>(rows: &'a [AggregateRow<f64>]) -> Vec<Series<'a>> {
    let mut by_alg: BTreeMap<&str, Vec<&AggregateRow<f64>>> = BTreeMap::new();
    for r in rows {
        by_alg.entry(r.algorithm.as_str()).or_default().push(r);
    }
    by_alg
        .into_iter()
        .enumerate()
        .map(|(i, (name, mut rows))| {
            rows.sort_by_key(|r| r.evals);
            Series { name, color: PALETTE[i % PALETTE.len()], rows }
        })
        .collect()
}

/// Renders one chart for one problem's aggregate rows. With `empirical` the
/// log chart subtracts the smallest observed value first (useful when the
/// optimum is unknown and the raw values share a large offset).
pub fn render_plot(
    problem: &str,
    rows: &[AggregateRow<f64>],
    kind: PlotKind,
    empirical: bool,
) -> String {
    let mut out = String::new();
    let title_suffix = match kind {
        PlotKind::MeanCi => "mean best value with 95% CI",
        PlotKind::SemilogMedian => "median best value, log scale",
    };
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<title>{problem}: {title_suffix}</title>\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
        w = c(WIDTH),
        h = c(HEIGHT),
    );
    if rows.is_empty() {
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
             text-anchor=\"middle\">no data</text>\n</svg>\n",
            c(WIDTH / 2.0),
            c(HEIGHT / 2.0),
        );
        return out;
    }

    let series = group(rows);

    // Shift for the log chart: the smallest observed value when requested.
    let shift = if kind == PlotKind::SemilogMedian && empirical {
        rows.iter().map(|r| r.min).fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let tlog = |v: f64| (v - shift).max(LOG_FLOOR).log10();
    let mut floored = false;
    if kind == PlotKind::SemilogMedian {
        floored = rows.iter().any(|r| {
            r.median - shift <= LOG_FLOOR || r.min - shift <= LOG_FLOOR || r.max - shift <= LOG_FLOOR
        });
    }

    // Data ranges.
    let x_lo = rows.iter().map(|r| r.evals).min().expect("nonempty") as f64;
    let x_hi = rows.iter().map(|r| r.evals).max().expect("nonempty") as f64;
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        let (lo, hi) = match kind {
            PlotKind::MeanCi => (r.mean - r.ci95, r.mean + r.ci95),
            PlotKind::SemilogMedian => (tlog(r.min), tlog(r.max)),
        };
        if lo.is_finite() {
            y_lo = y_lo.min(lo);
        }
        if hi.is_finite() {
            y_hi = y_hi.max(hi);
        }
    }
    let (y_lo, y_hi) = pad_range(y_lo, y_hi);

    let sx = Scale::new(x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let sy = Scale::new(y_lo, y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    // Grid and tick labels.
    for tx in sx.ticks(5) {
        let px = sx.map(tx);
        let _ = write!(
            out,
            "<line x1=\"{x}\" y1=\"{y1}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"#dddddd\" \
             stroke-width=\"1\"/>\n<text x=\"{x}\" y=\"{ly}\" font-family=\"sans-serif\" \
             font-size=\"11\" text-anchor=\"middle\">{label}</text>\n",
            x = c(px),
            y1 = c(MARGIN_TOP),
            y2 = c(HEIGHT - MARGIN_BOTTOM),
            ly = c(HEIGHT - MARGIN_BOTTOM + 18.0),
            label = fmt_label(tx),
        );
    }
    for ty in sy.ticks(5) {
        let py = sy.map(ty);
        let _ = write!(
            out,
            "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#dddddd\" \
             stroke-width=\"1\"/>\n<text x=\"{lx}\" y=\"{ly}\" font-family=\"sans-serif\" \
             font-size=\"11\" text-anchor=\"end\">{label}</text>\n",
            x1 = c(MARGIN_LEFT),
            x2 = c(WIDTH - MARGIN_RIGHT),
            y = c(py),
            lx = c(MARGIN_LEFT - 8.0),
            ly = c(py + 4.0),
            label = fmt_label(ty),
        );
    }

    // Axes frame.
    let _ = write!(
        out,
        "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" fill=\"none\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n",
        x = c(MARGIN_LEFT),
        y = c(MARGIN_TOP),
        w = c(WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
        h = c(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM),
    );

    // Series.
    for s in &series {
        match kind {
            PlotKind::MeanCi => {
                if s.rows.len() > 1 {
                    let mut pts = String::new();
                    for r in &s.rows {
                        let _ = write!(
                            pts,
                            "{},{} ",
                            c(sx.map(r.evals as f64)),
                            c(sy.map(r.mean + r.ci95))
                        );
                    }
                    for r in s.rows.iter().rev() {
                        let _ = write!(
                            pts,
                            "{},{} ",
                            c(sx.map(r.evals as f64)),
                            c(sy.map(r.mean - r.ci95))
                        );
                    }
                    let _ = write!(
                        out,
                        "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.15\" \
                         stroke=\"none\"/>\n",
                        pts.trim_end(),
                        s.color,
                    );
                }
                let mut pts = String::new();
                for r in &s.rows {
                    let _ = write!(pts, "{},{} ", c(sx.map(r.evals as f64)), c(sy.map(r.mean)));
                }
                let _ = write!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" \
                     stroke-width=\"1.5\"/>\n",
                    pts.trim_end(),
                    s.color,
                );
                for r in &s.rows {
                    let _ = write!(
                        out,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"2.2\" fill=\"{}\"/>\n",
                        c(sx.map(r.evals as f64)),
                        c(sy.map(r.mean)),
                        s.color,
                    );
                }
            }
            PlotKind::SemilogMedian => {
                for r in &s.rows {
                    let _ = write!(
                        out,
                        "<line x1=\"{x}\" y1=\"{y1}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"{col}\" \
                         stroke-width=\"1\" opacity=\"0.6\"/>\n",
                        x = c(sx.map(r.evals as f64)),
                        y1 = c(sy.map(tlog(r.min))),
                        y2 = c(sy.map(tlog(r.max))),
                        col = s.color,
                    );
                }
                let mut pts = String::new();
                for r in &s.rows {
                    let _ =
                        write!(pts, "{},{} ", c(sx.map(r.evals as f64)), c(sy.map(tlog(r.median))));
                }
                let _ = write!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" \
                     stroke-width=\"1.5\"/>\n",
                    pts.trim_end(),
                    s.color,
                );
                for r in &s.rows {
                    let _ = write!(
                        out,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"2.2\" fill=\"{}\"/>\n",
                        c(sx.map(r.evals as f64)),
                        c(sy.map(tlog(r.median))),
                        s.color,
                    );
                }
            }
        }
    }

    // Legend.
    let legend_x = WIDTH - MARGIN_RIGHT + 16.0;
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 22.0 * i as f64;
        let _ = write!(
            out,
            "<rect x=\"{rx}\" y=\"{ry}\" width=\"12\" height=\"12\" fill=\"{col}\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>\n",
            rx = c(legend_x),
            ry = c(y),
            col = s.color,
            tx = c(legend_x + 18.0),
            ty = c(y + 10.0),
            name = s.name,
        );
    }

    // Title and axis labels.
    let _ = write!(
        out,
        "<text x=\"{tx}\" y=\"26\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\" font-weight=\"bold\">{problem}: {title_suffix}</text>\n\
         <text x=\"{tx}\" y=\"{bx}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">objective evaluations</text>\n\
         <text x=\"18\" y=\"{my}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {my})\">{ylabel}</text>\n",
        tx = c((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        bx = c(HEIGHT - 14.0),
        my = c((MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0),
        ylabel = match kind {
            PlotKind::MeanCi => "mean best value",
            PlotKind::SemilogMedian => "log10 of best value",
        },
    );
    let mut notes: Vec<String> = Vec::new();
    if kind == PlotKind::SemilogMedian && empirical && shift != 0.0 {
        notes.push(format!("shifted by empirical best {}", fmt_label(shift)));
    }
    if floored {
        notes.push(format!("values floored at {LOG_FLOOR:e} before log"));
    }
    if !notes.is_empty() {
        let _ = write!(
            out,
            "<text x=\"{x}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"10\" \
             fill=\"#666666\">{note}</text>\n",
            x = c(MARGIN_LEFT),
            y = c(HEIGHT - 4.0),
            note = notes.join("; "),
        );
    }
    out.push_str("</svg>\n");
    out
}

//! CSV tables, the JSON metadata sidecar and minimal SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use crosskerr_core::experiments::{SweepInputs, SweepRecord, ValidationReport};
use serde::Serialize;

use crate::CliError;

/// A table as written to CSV: header plus pre-formatted string cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn fixed(v: f64, digits: usize) -> String {
    if v.is_finite() {
        format!("{v:.digits$}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| fixed(x, digits)).unwrap_or_default()
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn gate_table(records: &[SweepRecord]) -> Table {
    let rows = records
        .iter()
        .map(|r| {
            vec![
                fixed(r.params.delta_b_ghz, 6),
                fixed(r.params.mu_mhz, 6),
                fixed(r.derived.lambda_mhz, 6),
                fixed(r.derived.chi_mhz, 6),
                fixed(r.t_final_ns, 6),
                opt(r.fidelity_lossless, 10),
                opt(r.fidelity_lossy, 10),
                fixed(r.diagnostics.max_excited_pop, 10),
                r.status.label(),
            ]
        })
        .collect();
    Table {
        header: vec![
            "delta_b_ghz",
            "mu_mhz",
            "lambda_mhz",
            "chi_mhz",
            "t_gate_ns",
            "fidelity_lossless",
            "fidelity_lossy",
            "max_excited_pop",
            "status",
        ],
        rows,
    }
}

pub fn heatmap_table(records: &[SweepRecord]) -> Table {
    let rows = records
        .iter()
        .map(|r| {
            let (g, e) = match r.inputs {
                SweepInputs::Decoherence { gamma_us, eta_us } => (gamma_us, eta_us),
                _ => (f64::NAN, f64::NAN),
            };
            vec![fixed(g, 6), fixed(e, 6), opt(r.fidelity_lossy, 10), r.status.label()]
        })
        .collect();
    Table {
        header: vec!["gamma_us", "eta_us", "fidelity", "status"],
        rows,
    }
}

pub fn cat_table(records: &[SweepRecord]) -> Table {
    let rows = records
        .iter()
        .map(|r| {
            let (d, m) = match r.inputs {
                SweepInputs::Cat { d_ratio, m } => (d_ratio, m),
                _ => (f64::NAN, 0),
            };
            vec![
                fixed(d, 6),
                fixed(r.params.delta_b_ghz, 6),
                fixed(r.derived.chi_mhz, 6),
                fixed(r.t_final_ns * 1e-3, 6),
                m.to_string(),
                opt(r.fidelity_lossy, 10),
                sci(r.diagnostics.leakage),
                r.status.label(),
            ]
        })
        .collect();
    Table {
        header: vec![
            "d_ratio",
            "delta_b_ghz",
            "chi_mhz",
            "t_cat_us",
            "m",
            "fidelity",
            "leakage",
            "status",
        ],
        rows,
    }
}

pub fn validation_table(report: &ValidationReport) -> Table {
    let rows = report
        .entries
        .iter()
        .map(|e| {
            vec![
                e.pair.reference.to_string(),
                e.pair.approximation.to_string(),
                fixed(e.scale, 3),
                sci(e.deficit),
            ]
        })
        .collect();
    Table {
        header: vec!["reference", "approximation", "scale", "deficit"],
        rows,
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io(e.into()))?;
    w.write_record(&table.header).map_err(|e| io(e.into()))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

#[derive(Serialize)]
pub struct Metadata<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub wall_seconds: f64,
    pub results: &'a R,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(dir.to_path_buf())
}

// ---------------------------------------------------------------------------
// SVG

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn frame(title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n\
         <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{ylabel}</text>\n",
        W / 2.0,
        W - 2.0 * PAD,
        H - 2.0 * PAD,
        W / 2.0,
        H - 16.0,
        H / 2.0,
        H / 2.0,
    );
    for (i, (v, pos)) in [(x.0, PAD), (x.1, W - PAD)].iter().enumerate() {
        let anchor = if i == 0 { "start" } else { "end" };
        s += &format!(
            "<text x=\"{pos}\" y=\"{}\" text-anchor=\"{anchor}\">{v:.4}</text>\n",
            H - PAD + 16.0
        );
    }
    for (v, pos) in [(y.0, H - PAD), (y.1, PAD + 10.0)] {
        s += &format!("<text x=\"{}\" y=\"{pos}\" text-anchor=\"end\">{v:.4}</text>\n", PAD - 4.0);
    }
    s
}

/// Line plot of several named series sharing an x axis.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xr = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let yr = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let px = |x: f64| PAD + (x - xr.0) / (xr.1 - xr.0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * PAD);
    let mut s = frame(title, xlabel, ylabel, xr, yr);
    for (k, (name, pts)) in series.iter().enumerate() {
        let c = COLOURS[k % COLOURS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        s += &format!(
            "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        );
        for p in &path {
            let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
            s += &format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"2.5\" fill=\"{c}\"/>\n");
        }
        s += &format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{c}\">{name}</text>\n",
            W - PAD - 90.0,
            PAD + 16.0 * (k + 1) as f64
        );
    }
    s + "</svg>\n"
}

/// Scatter heatmap: one square per `(x, y, value)` coloured on a blue-red ramp.
pub fn heatmap_plot(title: &str, xlabel: &str, ylabel: &str, cells: &[(f64, f64, f64)]) -> String {
    let xr = range(cells.iter().map(|c| c.0));
    let yr = range(cells.iter().map(|c| c.1));
    let vr = range(cells.iter().map(|c| c.2));
    let px = |x: f64| PAD + (x - xr.0) / (xr.1 - xr.0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * PAD);
    let mut s = frame(title, xlabel, ylabel, xr, yr);
    for &(x, y, v) in cells {
        let f = if v.is_finite() { (v - vr.0) / (vr.1 - vr.0) } else { 0.0 };
        let (r, b) = ((255.0 * f) as u8, (255.0 * (1.0 - f)) as u8);
        s += &format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"14\" height=\"14\" fill=\"rgb({r},60,{b})\"><title>{v:.4}</title></rect>\n",
            px(x) - 7.0,
            py(y) - 7.0
        );
    }
    s += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">range {:.4} to {:.4}</text>\n",
        W - PAD,
        PAD - 8.0,
        vr.0,
        vr.1
    );
    s + "</svg>\n"
}

//! Deterministic experiment artifacts: manifest, CSV tables, optional SVG.
//!
//! Two runs with the same config and seed must produce byte-identical
//! files, so nothing here may depend on time, environment, the output
//! path, or iteration order of anything unordered.  Floats are always
//! written with [`fnum`] (17 significant digits, round-trip exact).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::errors::Result;

/// Round-trip float formatting used in every CSV and manifest value.
pub fn fnum(x: f64) -> String {
    format!("{x:.16e}")
}

// ── Report directory ────────────────────────────────────────────────────────

/// One experiment's output directory and its manifest under construction.
pub struct Report {
    dir: PathBuf,
    lines: Vec<(String, String)>,
}

impl Report {
    /// Creates the output directory (parents included) and starts the
    /// manifest with the tool/version/command/seed preamble.
    pub fn new(dir: &Path, command: &str, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut r = Report { dir: dir.to_path_buf(), lines: Vec::new() };
        r.put("tool", "linstab");
        r.put("version", env!("CARGO_PKG_VERSION"));
        r.put("core", linstab::VERSION);
        r.put("command", command);
        r.put("seed", &seed.to_string());
        Ok(r)
    }

    /// Appends a manifest line.  Call order fixes file order.
    pub fn put(&mut self, key: &str, value: &str) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn put_num(&mut self, key: &str, value: f64) {
        self.put(key, &fnum(value));
    }

    /// Echoes the full parameter map (already sorted by [`Params::echo`]).
    pub fn echo_params(&mut self, pairs: &[(String, String)]) {
        for (k, v) in pairs {
            self.put(&format!("param.{k}"), v);
        }
    }

    /// Writes a CSV table.  Rows are preformatted strings; the writer only
    /// joins them, so every formatting decision stays at the call site.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len(), "csv row width in {name}");
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let mut f = fs::File::create(self.dir.join(name))?;
        f.write_all(text.as_bytes())?;
        Ok(())
    }

    /// Writes the manifest.  Call last, after all derived values are in.
    pub fn finish(&self) -> Result<()> {
        let mut text = String::new();
        for (k, v) in &self.lines {
            text.push_str(k);
            text.push('=');
            text.push_str(v);
            text.push('\n');
        }
        let mut f = fs::File::create(self.dir.join("manifest.txt"))?;
        f.write_all(text.as_bytes())?;
        Ok(())
    }

    /// Writes a line plot.  Purely cosmetic: CSV stays the source of truth.
    pub fn svg(&self, name: &str, title: &str, series: &[Series]) -> Result<()> {
        let text = render_svg(title, series);
        let mut f = fs::File::create(self.dir.join(name))?;
        f.write_all(text.as_bytes())?;
        Ok(())
    }
}

// ── SVG rendering ───────────────────────────────────────────────────────────

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] =
    ["#1f6fb4", "#c8401f", "#2c8f4c", "#8450a8", "#b07818", "#4d4d4d"];

fn render_svg(title: &str, series: &[Series]) -> String {
    let (w, h) = (800.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 30.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    let span = |v: &[f64]| -> (f64, f64) {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-300 {
            (lo - 1.0, hi + 1.0)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "  <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        w / 2.0,
        escape(title)
    ));
    // axes
    out.push_str(&format!(
        "  <line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph,
        ml + pw,
        mt + ph
    ));
    out.push_str(&format!(
        "  <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph
    ));
    // ticks
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let xp = px(xv);
        let yp = py(yv);
        out.push_str(&format!(
            "  <line x1=\"{xp}\" y1=\"{}\" x2=\"{xp}\" y2=\"{}\" stroke=\"black\"/>\n",
            mt + ph,
            mt + ph + 5.0
        ));
        out.push_str(&format!(
            "  <text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            mt + ph + 20.0,
            tick(xv)
        ));
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{yp}\" x2=\"{ml}\" y2=\"{yp}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            ml - 9.0,
            yp + 4.0,
            tick(yv)
        ));
    }
    // series
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if path.is_empty() {
            continue;
        }
        out.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        let ly = mt + 16.0 * i as f64 + 8.0;
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            ml + pw - 150.0,
            ml + pw - 130.0
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\">{}</text>\n",
            ml + pw - 124.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.0, 1.0, -1.0 / 3.0, 6.02e23, 1e-300, f64::MIN_POSITIVE] {
            let s = fnum(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn report_writes_manifest_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new(dir.path(), "bounds beta", 7).unwrap();
        r.put_num("beta", -0.5);
        r.csv("t.csv", &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        r.finish().unwrap();
        let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.starts_with("tool=linstab\n"));
        assert!(manifest.contains("command=bounds beta\n"));
        assert!(manifest.contains("seed=7\n"));
        let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(csv, "a,b\n1,2\n");
    }

    #[test]
    fn svg_embeds_every_series() {
        let dir = tempfile::tempdir().unwrap();
        let r = Report::new(dir.path(), "x", 0).unwrap();
        let s = vec![
            Series { label: "one".into(), points: vec![(0.0, 0.0), (1.0, 1.0)] },
            Series { label: "two".into(), points: vec![(0.0, 1.0), (1.0, 0.0)] },
        ];
        r.svg("p.svg", "title", &s).unwrap();
        let svg = std::fs::read_to_string(dir.path().join("p.svg")).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("one") && svg.contains("two"));
    }
}

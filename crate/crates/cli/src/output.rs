//! Atomic file output, CSV encoding and minimal SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

fn out_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

/// Output directory plus the list of files written so far.
pub struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| out_err(&dir, e))?;
        Ok(Self {
            dir,
            written: vec![],
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes through a sibling temporary file and a rename.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp{}", std::process::id()));
        let result = fs::File::create(&tmp)
            .and_then(|mut f| {
                f.write_all(bytes)?;
                f.sync_all()
            })
            .and_then(|()| fs::rename(&tmp, &path));
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(out_err(&path, e));
        }
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn csv_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(vec![]);
        for r in rows {
            w.serialize(r)
                .map_err(|e| CliError::Output(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Output(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn csv_records(
        &mut self,
        name: &str,
        header: &[String],
        records: &[Vec<String>],
    ) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(vec![]);
        let err = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(header).map_err(err)?;
        for r in records {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Output(e.to_string()))?;
        self.write(name, &bytes)
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

fn frame(title: &str, body: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn scale(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi > lo {
        out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
    } else {
        0.5 * (out_lo + out_hi)
    }
}

/// Counting function `#{λ_k ≤ λ}` of ascending eigenvalues.
pub fn staircase_svg(title: &str, sorted: &[f64]) -> String {
    let lo = sorted.first().copied().unwrap_or(0.0).min(0.0);
    let hi = sorted.last().copied().unwrap_or(1.0);
    let count = sorted.len().max(1) as f64;
    let x = |v: f64| scale(v, lo, hi, MARGIN, WIDTH - MARGIN);
    let y = |k: f64| scale(k, 0.0, count, HEIGHT - MARGIN, MARGIN);
    let mut d = format!("M{:.2} {:.2}", x(lo), y(0.0));
    for (k, &v) in sorted.iter().enumerate() {
        let _ = write!(d, " H{:.2} V{:.2}", x(v), y(k as f64 + 1.0));
    }
    let _ = write!(d, " H{:.2}", x(hi));
    frame(
        title,
        &format!("<path d=\"{d}\" stroke=\"steelblue\" fill=\"none\"/>\n"),
    )
}

/// One polyline per series on log-log axes; nonpositive points are skipped.
pub fn loglog_svg(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, p)| p.iter().copied())
        .filter(|&(a, b)| a > 0.0 && b > 0.0)
        .map(|(a, b)| (a.log10(), b.log10()))
        .collect();
    let (x0, x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0), b.max(p.0))
        });
    let (y0, y1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.1), b.max(p.1))
        });
    let colors = ["steelblue", "firebrick", "seagreen", "darkorange", "purple"];
    let mut body = String::new();
    for (k, (label, p)) in series.iter().enumerate() {
        let coords: Vec<String> = p
            .iter()
            .filter(|&&(a, b)| a > 0.0 && b > 0.0)
            .map(|&(a, b)| {
                format!(
                    "{:.2},{:.2}",
                    scale(a.log10(), x0, x1, MARGIN, WIDTH - MARGIN),
                    scale(b.log10(), y0, y1, HEIGHT - MARGIN, MARGIN)
                )
            })
            .collect();
        let color = colors[k % colors.len()];
        let _ = writeln!(
            body,
            r#"<polyline points="{}" stroke="{color}" fill="none"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            body,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 90.0,
            MARGIN + 14.0 * k as f64,
            escape(label)
        );
    }
    frame(title, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_has_one_step_per_value() {
        let svg = staircase_svg("s", &[0.0, 2.0, 2.0, 4.0]);
        let data = svg.lines().find(|l| l.contains("steelblue")).unwrap();
        assert_eq!(data.matches(" V").count(), 4);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn titles_are_escaped() {
        assert!(staircase_svg("a<b", &[1.0]).contains("a&lt;b"));
    }
}

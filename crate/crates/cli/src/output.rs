//! Output plumbing: every artifact embeds the seed, a hash of the effective
//! configuration, and the library version, so runs are reproducible from the
//! file alone.

use std::fs;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
    pub notes: Vec<String>,
}

impl RunMeta {
    pub fn new(seed: u64, config: &str) -> RunMeta {
        RunMeta {
            seed,
            config_hash: format!("{:016x}", fnv1a(config.as_bytes())),
            version: env!("CARGO_PKG_VERSION").to_string(),
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, s: impl Into<String>) -> RunMeta {
        self.notes.push(s.into());
        self
    }
}

#[derive(Serialize)]
pub struct Envelope<T: Serialize> {
    pub meta: RunMeta,
    pub result: T,
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, json + "\n")
}

/// One polyline per series over shared x ticks; tiny hand-rolled SVG plot.
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

impl LinePlot {
    pub fn render(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 440.0;
        const ML: f64 = 70.0;
        const MR: f64 = 30.0;
        const MT: f64 = 50.0;
        const MB: f64 = 60.0;
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|(_, p)| p.iter().copied())
            .collect();
        let (xmin, xmax) = min_max(pts.iter().map(|p| p.0));
        let (ymin, ymax) = min_max(pts.iter().map(|p| p.1));
        let ymin = ymin.min(0.0);
        let xspan = (xmax - xmin).max(1e-9);
        let yspan = (ymax - ymin).max(1e-9);
        let sx = |x: f64| ML + (x - xmin) / xspan * (W - ML - MR);
        let sy = |y: f64| H - MB - (y - ymin) / yspan * (H - MT - MB);

        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
        ));
        s.push_str(&format!(
            "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            W / 2.0,
            xml_escape(&self.title)
        ));
        // axes
        s.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB,
            W - MR,
            H - MB
        ));
        s.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            (ML + W - MR) / 2.0,
            H - 16.0,
            xml_escape(&self.x_label)
        ));
        s.push_str(&format!(
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            (MT + H - MB) / 2.0,
            (MT + H - MB) / 2.0,
            xml_escape(&self.y_label)
        ));
        // ticks
        for i in 0..=4 {
            let xv = xmin + xspan * i as f64 / 4.0;
            let yv = ymin + yspan * i as f64 / 4.0;
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{:.3}</text>\n",
                sx(xv),
                H - MB + 18.0,
                xv
            ));
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{:.3}</text>\n",
                ML - 6.0,
                sy(yv) + 4.0,
                yv
            ));
            s.push_str(&format!(
                "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
                sy(yv),
                W - MR,
                sy(yv)
            ));
        }
        for (idx, (name, points)) in self.series.iter().enumerate() {
            let color = colors[idx % colors.len()];
            let path: Vec<String> = points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
                path.join(" ")
            ));
            for &(x, y) in points {
                s.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                    sx(x),
                    sy(y)
                ));
            }
            let ly = MT + 16.0 * idx as f64;
            s.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"3\" fill=\"{color}\"/>\n",
                W - MR - 150.0,
                ly - 4.0
            ));
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
                W - MR - 132.0,
                ly,
                xml_escape(name)
            ));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn min_max(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo.is_infinite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

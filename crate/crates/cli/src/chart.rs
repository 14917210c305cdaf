//! Static HTML pages with inline SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn page(title: &str, svg: &str, note: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{t}</title>\
         <style>body{{font-family:sans-serif;margin:2em}}svg text{{font-size:11px}}</style></head>\n\
         <body><h1>{t}</h1>\n{svg}\n<p>{n}</p></body></html>\n",
        t = escape(title),
        n = escape(note)
    )
}

fn frame(out: &mut String, x_label: &str, y_label: &str, y_max: f64) {
    let _ = write!(
        out,
        "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\
         <text x=\"{cx}\" y=\"{xl}\" text-anchor=\"middle\">{xlab}</text>\
         <text x=\"12\" y=\"{cy}\" transform=\"rotate(-90 12 {cy})\" text-anchor=\"middle\">{ylab}</text>\
         <text x=\"{tx}\" y=\"{PAD}\" text-anchor=\"end\">{y_max:.3}</text>\
         <text x=\"{tx}\" y=\"{b}\" text-anchor=\"end\">0</text>",
        b = H - PAD,
        r = W - PAD / 2.0,
        cx = W / 2.0,
        xl = H - 12.0,
        cy = H / 2.0,
        tx = PAD - 4.0,
        xlab = escape(x_label),
        ylab = escape(y_label),
    );
}

/// Vertical bars, one per label.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)], note: &str) -> String {
    let y_max = bars.iter().map(|b| b.1).fold(0.0f64, f64::max).max(1e-12);
    let mut svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\">");
    frame(&mut svg, x_label, y_label, y_max);
    let slot = (W - 1.5 * PAD) / bars.len().max(1) as f64;
    for (i, (label, v)) in bars.iter().enumerate() {
        let h = (H - 2.0 * PAD) * v / y_max;
        let x = PAD + slot * i as f64 + slot * 0.15;
        let _ = write!(
            svg,
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"#4a78a8\"/>\
             <text x=\"{lx:.1}\" y=\"{ly}\" text-anchor=\"middle\">{l}</text>\
             <text x=\"{lx:.1}\" y=\"{vy:.1}\" text-anchor=\"middle\">{v:.3}</text>",
            y = H - PAD - h,
            w = slot * 0.7,
            lx = x + slot * 0.35,
            ly = H - PAD + 14.0,
            vy = H - PAD - h - 3.0,
            l = escape(label),
        );
    }
    svg.push_str("</svg>");
    page(title, &svg, note)
}

/// A curve with a shaded band, e.g. predictions with confidence limits.
pub fn band_chart(title: &str, x_label: &str, y_label: &str, x: &[f64], y: &[f64], lo: &[f64], hi: &[f64], note: &str) -> String {
    let finite = |v: &f64| v.is_finite();
    let x_min = x.iter().copied().filter(finite).fold(f64::INFINITY, f64::min);
    let x_max = x.iter().copied().filter(finite).fold(f64::NEG_INFINITY, f64::max);
    let y_max = hi.iter().chain(y).copied().filter(finite).fold(0.0f64, f64::max).max(1e-12);
    let span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let px = |v: f64| PAD + (W - 1.5 * PAD) * (v - x_min) / span;
    let py = |v: f64| H - PAD - (H - 2.0 * PAD) * v.max(0.0) / y_max;
    let mut svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\">");
    frame(&mut svg, x_label, y_label, y_max);
    let mut band = String::new();
    for (xi, h) in x.iter().zip(hi) {
        let _ = write!(band, "{:.1},{:.1} ", px(*xi), py(*h));
    }
    for (xi, l) in x.iter().zip(lo).rev() {
        let _ = write!(band, "{:.1},{:.1} ", px(*xi), py(*l));
    }
    let line: String = x.iter().zip(y).map(|(a, b)| format!("{:.1},{:.1} ", px(*a), py(*b))).collect();
    let _ = write!(
        svg,
        "<polygon points=\"{band}\" fill=\"#b8cde3\"/><polyline points=\"{line}\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"2\"/>\
         <text x=\"{PAD}\" y=\"{ly}\" text-anchor=\"middle\">{x_min:.3}</text>\
         <text x=\"{rx}\" y=\"{ly}\" text-anchor=\"middle\">{x_max:.3}</text></svg>",
        ly = H - PAD + 14.0,
        rx = W - PAD / 2.0,
    );
    page(title, &svg, note)
}

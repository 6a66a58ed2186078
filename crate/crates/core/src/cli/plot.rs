//! Minimal SVG charts for `--emit-plots`.

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn frame(title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"{M}\" y=\"{}\">{:.3}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text><text x=\"{}\" y=\"{M}\" text-anchor=\"end\">{:.3}</text>\n",
        W / 2.0,
        esc(title),
        H - M,
        W - M,
        H - M,
        H - M,
        W / 2.0,
        H - 15.0,
        esc(xlabel),
        H / 2.0,
        H / 2.0,
        esc(ylabel),
        H - M + 15.0,
        x.0,
        W - M,
        H - M + 15.0,
        x.1,
        M - 4.0,
        H - M,
        y.0,
        M - 4.0,
        y.1
    )
}

/// Line chart with one polyline per named series.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xb = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let yb = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let sx = |x: f64| M + (x - xb.0) / (xb.1 - xb.0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - yb.0) / (yb.1 - yb.0) * (H - 2.0 * M);
    let mut s = frame(title, xlabel, ylabel, xb, yb);
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
            .collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{c}\">{}</text>\n",
            W - M + 5.0,
            M + 15.0 * i as f64,
            esc(name)
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Vertical bars, one per label.
pub fn bar_chart(title: &str, ylabel: &str, bars: &[(String, f64)]) -> String {
    let yb = (0.0f64.min(bars.iter().map(|b| b.1).fold(0.0, f64::min)), bars.iter().map(|b| b.1).fold(1.0, f64::max));
    let mut s = frame(title, "", ylabel, (0.0, bars.len() as f64), yb);
    let bw = (W - 2.0 * M) / bars.len().max(1) as f64;
    let sy = |y: f64| H - M - (y - yb.0) / (yb.1 - yb.0) * (H - 2.0 * M);
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = M + bw * i as f64 + 0.1 * bw;
        let top = sy(v.max(yb.0));
        s.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
            0.8 * bw,
            (sy(yb.0) - top).max(0.0),
            COLORS[0]
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n",
            x + 0.4 * bw,
            H - M + 28.0,
            esc(label)
        ));
    }
    s.push_str("</svg>\n");
    s
}

//! Deterministic scatter-plot SVG emission.
//!
//! The output is a pure function of the input points and styling — no
//! timestamps, no randomness, fixed number formatting — so identical input
//! yields byte-identical files, which makes the plots usable as golden
//! files in tests.  Exactly one `<circle>` element is emitted per finite
//! input point.

/// Titles and axis labels for one scatter plot.
pub struct SvgStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Draw the y = x reference line (quantile–quantile plots).
    pub diagonal: bool,
}

impl SvgStyle {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        SvgStyle {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            diagonal: false,
        }
    }

    pub fn with_diagonal(mut self) -> Self {
        self.diagonal = true;
        self
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

/// Padded data range; collapses to `center ± 1` when the data are a single
/// value (or empty), so a one-point plot still has a well-defined frame.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Round a raw step up to the next "nice" step 1/2/2.5/5 × 10^k.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let factor = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 2.5 {
        2.5
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    factor * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step((hi - lo) / 4.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 0.5 * step * 1e-9 && out.len() < 16 {
        // Snap values that are zero up to rounding noise.
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    let s = if (1e-4..1e6).contains(&a) {
        format!("{v:.6}")
    } else {
        return format!("{v:.2e}");
    };
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Render a scatter plot of `points` as a standalone SVG document.
///
/// Non-finite points are skipped.  Output is byte-deterministic.
pub fn emit_svg_scatter(points: &[(f64, f64)], style: &SvgStyle) -> String {
    let finite: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();

    let (x_lo, x_hi) = padded_range(finite.iter().map(|p| p.0));
    let (y_lo, y_hi) = padded_range(finite.iter().map(|p| p.1));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>\n",
        fmt_coord(WIDTH / 2.0),
        xml_escape(&style.title)
    ));

    // Plot frame.
    svg.push_str(&format!(
        "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\" stroke-width=\"1\"/>\n",
        fmt_coord(MARGIN_L),
        fmt_coord(MARGIN_T),
        fmt_coord(plot_w),
        fmt_coord(plot_h)
    ));

    // Axis ticks and labels.
    for t in ticks(x_lo, x_hi) {
        let x = sx(t);
        svg.push_str(&format!(
            "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\" \
             stroke-width=\"1\"/>\n",
            x0 = fmt_coord(x),
            y0 = fmt_coord(MARGIN_T + plot_h),
            y1 = fmt_coord(MARGIN_T + plot_h + 5.0)
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>\n",
            fmt_coord(x),
            fmt_coord(MARGIN_T + plot_h + 18.0),
            xml_escape(&tick_label(t))
        ));
    }
    for t in ticks(y_lo, y_hi) {
        let y = sy(t);
        svg.push_str(&format!(
            "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\" \
             stroke-width=\"1\"/>\n",
            x0 = fmt_coord(MARGIN_L - 5.0),
            x1 = fmt_coord(MARGIN_L),
            y0 = fmt_coord(y)
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>\n",
            fmt_coord(MARGIN_L - 8.0),
            fmt_coord(y + 4.0),
            xml_escape(&tick_label(t))
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">{}</text>\n",
        fmt_coord(MARGIN_L + plot_w / 2.0),
        fmt_coord(HEIGHT - 12.0),
        xml_escape(&style.x_label)
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{y}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" transform=\"rotate(-90 16 {y})\">{}</text>\n",
        xml_escape(&style.y_label),
        y = fmt_coord(MARGIN_T + plot_h / 2.0)
    ));

    if style.diagonal {
        // y = x clipped to the frame.
        let lo = x_lo.max(y_lo);
        let hi = x_hi.min(y_hi);
        if hi > lo {
            svg.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" \
                 stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n",
                fmt_coord(sx(lo)),
                fmt_coord(sy(lo)),
                fmt_coord(sx(hi)),
                fmt_coord(sy(hi))
            ));
        }
    }

    for (x, y) in &finite {
        svg.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"#1f6feb\" fill-opacity=\"0.7\"/>\n",
            fmt_coord(sx(*x)),
            fmt_coord(sy(*y))
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(hay: &str, needle: &str) -> usize {
        hay.matches(needle).count()
    }

    #[test]
    fn one_point_at_the_origin_yields_exactly_one_marker() {
        let svg = emit_svg_scatter(&[(0.0, 0.0)], &SvgStyle::new("t", "x", "y"));
        assert_eq!(count(&svg, "<circle"), 1);
        // The degenerate range pads to ±1, putting the marker at the frame
        // center.
        assert!(svg.contains("<svg "));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn identical_input_produces_identical_bytes() {
        let pts: Vec<(f64, f64)> = (0..250)
            .map(|i| {
                let t = i as f64 / 25.0;
                (t.sin() * 3.0, (1.7 * t).cos() - 0.4)
            })
            .collect();
        let style = SvgStyle::new("scatter", "S1", "S2");
        let a = emit_svg_scatter(&pts, &style);
        let b = emit_svg_scatter(&pts, &style);
        assert_eq!(a, b);
        assert_eq!(a.as_bytes(), b.as_bytes());
    }

    #[test]
    fn ten_thousand_points_stay_inside_finite_coordinates() {
        // Deterministic pseudo-random points over several orders of
        // magnitude; every emitted coordinate must parse as a finite number
        // inside the canvas.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let pts: Vec<(f64, f64)> = (0..10_000)
            .map(|_| (1e6 * (next() - 0.5), 1e-6 * (next() - 0.5)))
            .collect();
        let svg = emit_svg_scatter(&pts, &SvgStyle::new("big", "x", "y"));
        assert_eq!(count(&svg, "<circle"), 10_000);
        for part in svg.split("cx=\"").skip(1) {
            let x: f64 = part.split('"').next().unwrap().parse().unwrap();
            assert!(x.is_finite() && (0.0..=720.0).contains(&x), "{x}");
        }
        for part in svg.split("cy=\"").skip(1) {
            let y: f64 = part.split('"').next().unwrap().parse().unwrap();
            assert!(y.is_finite() && (0.0..=480.0).contains(&y), "{y}");
        }
    }

    #[test]
    fn non_finite_points_are_skipped_not_emitted() {
        let svg = emit_svg_scatter(
            &[(0.0, 1.0), (f64::NAN, 0.0), (f64::INFINITY, 2.0), (1.0, 0.5)],
            &SvgStyle::new("t", "x", "y"),
        );
        assert_eq!(count(&svg, "<circle"), 2);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn labels_are_xml_escaped_and_diagonal_is_optional() {
        let style = SvgStyle::new("a < b & \"c\"", "x", "y").with_diagonal();
        let svg = emit_svg_scatter(&[(0.0, 0.0), (1.0, 1.0)], &style);
        assert!(svg.contains("a &lt; b &amp; &quot;c&quot;"));
        assert_eq!(count(&svg, "stroke-dasharray"), 1);
        let plain = emit_svg_scatter(&[(0.0, 0.0), (1.0, 1.0)], &SvgStyle::new("t", "x", "y"));
        assert_eq!(count(&plain, "stroke-dasharray"), 0);
    }

    #[test]
    fn tick_labels_are_short_and_stable() {
        assert_eq!(tick_label(0.0), "0");
        assert_eq!(tick_label(0.5), "0.5");
        assert_eq!(tick_label(-2.0), "-2");
        assert_eq!(tick_label(2.5e7), "2.50e7");
        let ts = ticks(-1.05, 1.05);
        assert!(ts.len() >= 3 && ts.len() <= 8, "{ts:?}");
        assert!(ts.contains(&0.0), "{ts:?}");
    }
}

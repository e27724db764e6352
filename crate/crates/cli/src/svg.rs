//! Minimal SVG polyline plots for report data. Deterministic output:
//! fixed-precision coordinates, no timestamps.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

/// A single polyline over (x, y) samples with axis labels.
pub fn polyline_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let finite: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .cloned()
        .collect();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &finite {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if !x_lo.is_finite() {
        x_lo = 0.0;
        x_hi = 1.0;
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if (x_hi - x_lo).abs() < 1e-300 {
        x_hi = x_lo + 1.0;
    }
    if (y_hi - y_lo).abs() < 1e-300 {
        y_hi = y_lo + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut path = String::new();
    for (i, &(x, y)) in finite.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        path.push_str(&format!("{cmd}{:.3} {:.3} ", sx(x), sy(y)));
    }

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        MARGIN,
        escape(title)
    ));
    // Axes.
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN,
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\">{} in [{:.6}, {:.6}]</text>\n",
        MARGIN,
        HEIGHT - 12.0,
        escape(x_label),
        x_lo,
        x_hi
    ));
    out.push_str(&format!(
        "<text x=\"6\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\">{} in [{:.6}, {:.6}]</text>\n",
        MARGIN - 12.0,
        escape(y_label),
        y_lo,
        y_hi
    ));
    out.push_str(&format!(
        "<path d=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
        path.trim_end()
    ));
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_deterministic_and_well_formed() {
        let pts = vec![(0.0, 0.5), (1.0, 0.25), (2.0, 0.125)];
        let a = polyline_plot("decay", "n", "value", &pts);
        let b = polyline_plot("decay", "n", "value", &pts);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn degenerate_input_does_not_panic() {
        let one = polyline_plot("p", "x", "y", &[(3.0, 3.0)]);
        assert!(one.contains("<path"));
        let empty = polyline_plot("p", "x", "y", &[]);
        assert!(empty.contains("<svg"));
    }
}

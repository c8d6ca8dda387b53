//! Self-contained SVG charts and a PCA projection for run outputs.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Top-2 principal components of the rows of `x`, as an `N x 2` score
/// matrix. Uses orthogonal iteration on the sample covariance, applied
/// implicitly as `X^T (X v) / (N - 1)`, from a fixed start so the result is
/// deterministic. Component signs are fixed so the largest loading is
/// positive.
pub fn pca_2d(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (n, d) = x.dim();
    if n < 2 || d == 0 {
        return Err(Error::invalid("PCA needs at least two samples and one feature"));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let xc = &x - &mean;
    let q = d.min(2);
    let mut basis = Array2::<f64>::zeros((d, q));
    for i in 0..d {
        basis[[i, 0]] = 1.0;
        if q > 1 {
            basis[[i, 1]] = ((i + 1) as f64).sin();
        }
    }
    orthonormalize(&mut basis);
    let scale = 1.0 / (n - 1) as f64;
    for _ in 0..1000 {
        let mut next = xc.t().dot(&xc.dot(&basis)) * scale;
        orthonormalize(&mut next);
        let delta = (&next - &basis).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        basis = next;
        if delta < 1e-12 {
            break;
        }
    }
    for mut col in basis.columns_mut() {
        let lead = col.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if lead < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
    let scores = xc.dot(&basis);
    if q == 2 {
        Ok(scores)
    } else {
        let mut out = Array2::zeros((n, 2));
        out.column_mut(0).assign(&scores.column(0));
        Ok(out)
    }
}

/// Modified Gram-Schmidt on the columns. A column that collapses to zero is
/// replaced by a unit vector orthogonal to the previous ones.
fn orthonormalize(m: &mut Array2<f64>) {
    let cols = m.ncols();
    for j in 0..cols {
        for i in 0..j {
            let prev: Array1<f64> = m.column(i).to_owned();
            let proj = prev.dot(&m.column(j));
            m.column_mut(j).scaled_add(-proj, &prev);
        }
        let norm = m.column(j).dot(&m.column(j)).sqrt();
        if norm > 1e-300 {
            m.column_mut(j).mapv_inplace(|v| v / norm);
        } else {
            m.column_mut(j).fill(0.0);
            let slot = (0..m.nrows()).find(|&r| (0..j).all(|i| m[[r, i]].abs() < 0.5)).unwrap_or(0);
            m[[slot, j]] = 1.0;
        }
    }
}

struct Frame {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn standard() -> Self {
        Frame {
            width: 720.0,
            height: 420.0,
            left: 60.0,
            right: 160.0,
            top: 40.0,
            bottom: 50.0,
        }
    }

    fn plot_w(&self) -> f64 {
        self.width - self.left - self.right
    }

    fn plot_h(&self) -> f64 {
        self.height - self.top - self.bottom
    }

    fn open(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            self.left + self.plot_w() / 2.0,
            escape(title)
        );
        s
    }

    fn axes(&self, s: &mut String, x_label: &str, y_label: &str) {
        let (x0, y0) = (self.left, self.top + self.plot_h());
        let _ = writeln!(
            s,
            r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#,
            x0 + self.plot_w()
        );
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{}" x2="{x0}" y2="{y0}" stroke="black"/>"#, self.top);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + self.plot_w() / 2.0,
            self.height - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
            escape(y_label),
            y = self.top + self.plot_h() / 2.0
        );
    }

    fn y_ticks(&self, s: &mut String, lo: f64, hi: f64) {
        for i in 0..=4 {
            let v = lo + (hi - lo) * i as f64 / 4.0;
            let y = self.top + self.plot_h() * (1.0 - i as f64 / 4.0);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                self.left - 6.0,
                y + 4.0,
                format_tick(v)
            );
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/>"##,
                self.left,
                self.left + self.plot_w()
            );
        }
    }

    fn legend(&self, s: &mut String, names: &[String]) {
        let x = self.width - self.right + 16.0;
        for (i, name) in names.iter().enumerate() {
            let y = self.top + 18.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="12" height="12" fill="{}"/>"#, color(i));
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 18.0, y + 10.0, escape(name));
        }
    }
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Grouped bar chart: one group per category, one bar per series.
/// `values[s][c]` is series `s` in category `c`; values are drawn on [0, 1].
pub fn grouped_bar_chart(title: &str, categories: &[String], series: &[String], values: &[Vec<f64>]) -> Result<String> {
    if series.len() != values.len() || values.iter().any(|v| v.len() != categories.len()) {
        return Err(Error::invalid("bar chart values do not match categories and series"));
    }
    let f = Frame::standard();
    let mut s = f.open(title);
    let hi = values.iter().flatten().copied().fold(1.0f64, f64::max);
    f.y_ticks(&mut s, 0.0, hi);
    let group_w = f.plot_w() / categories.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (c, cat) in categories.iter().enumerate() {
        let gx = f.left + group_w * c as f64 + group_w * 0.1;
        for (k, vals) in values.iter().enumerate() {
            let v = vals[c].max(0.0);
            let h = f.plot_h() * v / hi;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}: {:.4}</title></rect>"#,
                gx + bar_w * k as f64,
                f.top + f.plot_h() - h,
                bar_w,
                h,
                color(k),
                escape(&series[k]),
                v
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.4,
            f.top + f.plot_h() + 16.0,
            escape(cat)
        );
    }
    f.axes(&mut s, "", "score");
    f.legend(&mut s, series);
    s.push_str("</svg>\n");
    Ok(s)
}

/// One line per series over a shared x axis.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> Result<String> {
    if series.iter().all(|(_, pts)| pts.is_empty()) {
        return Err(Error::invalid("line chart has no points"));
    }
    let f = Frame::standard();
    let mut s = f.open(title);
    let (x_lo, x_hi) = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let (y_lo, y_hi) = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    f.y_ticks(&mut s, y_lo, y_hi);
    let px = |x: f64| f.left + f.plot_w() * (x - x_lo) / (x_hi - x_lo);
    let py = |y: f64| f.top + f.plot_h() * (1.0 - (y - y_lo) / (y_hi - y_lo));
    for (k, (_, pts)) in series.iter().enumerate() {
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            path.join(" "),
            color(k)
        );
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, px(x), py(y), color(k));
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        f.left,
        f.top + f.plot_h() + 16.0,
        format_tick(x_lo)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        f.left + f.plot_w(),
        f.top + f.plot_h() + 16.0,
        format_tick(x_hi)
    );
    f.axes(&mut s, x_label, y_label);
    let names: Vec<String> = series.iter().map(|(n, _)| n.clone()).collect();
    f.legend(&mut s, &names);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Scatter of 2-D points, colored by `groups`.
pub fn scatter(title: &str, points: ArrayView2<'_, f64>, groups: &[usize]) -> Result<String> {
    if points.ncols() != 2 || points.nrows() != groups.len() {
        return Err(Error::invalid("scatter needs N x 2 points and N group labels"));
    }
    let f = Frame::standard();
    let mut s = f.open(title);
    let (x_lo, x_hi) = range(points.column(0).iter().copied());
    let (y_lo, y_hi) = range(points.column(1).iter().copied());
    for (p, &g) in points.outer_iter().zip(groups) {
        let cx = f.left + f.plot_w() * (p[0] - x_lo) / (x_hi - x_lo);
        let cy = f.top + f.plot_h() * (1.0 - (p[1] - y_lo) / (y_hi - y_lo));
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{}" fill-opacity="0.75"/>"#,
            color(g)
        );
    }
    f.axes(&mut s, "PC1", "PC2");
    let k = groups.iter().max().map_or(0, |&m| m + 1);
    let names: Vec<String> = (0..k.min(PALETTE.len())).map(|g| format!("group {g}")).collect();
    f.legend(&mut s, &names);
    s.push_str("</svg>\n");
    Ok(s)
}

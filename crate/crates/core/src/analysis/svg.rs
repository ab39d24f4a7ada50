use std::fmt::Write;

use super::PaletteLayout;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Static SVG of a palette layout: one stacked column per respondent, each
/// raised by its origin, plus a legend.
pub fn render_palette_svg(layout: &PaletteLayout, width: f64, height: f64) -> String {
    let legend_h = 18.0 * layout.groups.len() as f64 + 10.0;
    let plot_h = height;
    let lo = layout.origins.iter().cloned().fold(0.0, f64::min);
    let hi = layout
        .origins
        .iter()
        .map(|o| o + 1.0)
        .fold(1.0, f64::max);
    let span = (hi - lo).max(1.0);
    let n = layout.columns.len().max(1) as f64;
    let col_w = width / n;
    let y_of = |value: f64| plot_h - (value - lo) / span * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = width,
        h = plot_h + legend_h
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for (j, (col, origin)) in layout.columns.iter().zip(&layout.origins).enumerate() {
        let x = j as f64 * col_w;
        let mut base = *origin;
        for (k, &p) in col.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let top = y_of(base + p);
            let bottom = y_of(base);
            let group = &layout.groups[k];
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{c}"><title>{id}: {name} {p:.3}</title></rect>"#,
                x = x,
                y = top,
                w = col_w,
                h = bottom - top,
                c = group.color,
                id = escape(&layout.order[j]),
                name = escape(&group.name),
            );
            base += p;
        }
    }
    for (k, g) in layout.groups.iter().enumerate() {
        let y = plot_h + 10.0 + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="4" y="{y:.1}" width="12" height="12" fill="{c}"/><text x="22" y="{ty:.1}" font-family="sans-serif" font-size="12">{name}</text>"#,
            c = g.color,
            ty = y + 10.0,
            name = escape(&g.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::PaletteGroup;

    #[test]
    fn renders_one_rect_per_nonzero_band() {
        let layout = PaletteLayout {
            order: vec!["r0".into(), "r1".into()],
            groups: vec![
                PaletteGroup { index: 0, name: "a & b".into(), color: "#000000".into() },
                PaletteGroup { index: 1, name: "c".into(), color: "#ffffff".into() },
            ],
            columns: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            origins: vec![0.0, 0.5],
            objective: 1.0,
        };
        let svg = render_palette_svg(&layout, 200.0, 100.0);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<title>").count(), 3);
        assert!(svg.contains("a &amp; b"));
        // deterministic output
        assert_eq!(svg, render_palette_svg(&layout, 200.0, 100.0));
    }
}

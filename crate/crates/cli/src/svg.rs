//! SVG rendering of nested two-dimensional partitions.

use std::collections::HashSet;
use std::fmt::Write as _;

use pelab::CubeId;

pub const SIZE: f64 = 1024.0;

/// Grey luminance per layer, light to dark.
pub fn greys(layers: usize) -> Vec<f64> {
    match layers {
        0 => Vec::new(),
        1 => vec![0.55],
        3 => vec![0.85, 0.55, 0.1],
        k => (0..k)
            .map(|i| 0.85 - 0.75 * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

fn fmt_px(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Layers are drawn in order; each layer only adds the cubes the previous one
/// lacks, so darker refinements overlay lighter coarse cubes.
pub fn render(layers: &[Vec<CubeId>]) -> Result<String, String> {
    if let Some(q) = layers.iter().flatten().find(|q| q.dim() != 2) {
        return Err(format!(
            "only two-dimensional partitions can be rendered (got d={})",
            q.dim()
        ));
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}" shape-rendering="crispEdges">"#,
        SIZE
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{0}" height="{0}" fill="white"/>"#,
        SIZE
    );
    let mut prev: HashSet<&CubeId> = HashSet::new();
    for (layer, grey) in layers.iter().zip(greys(layers.len())) {
        let v = (grey * 255.0).round() as u8;
        let _ = writeln!(
            s,
            r##"<g fill="#{v:02x}{v:02x}{v:02x}" stroke="black" stroke-width="0.5">"##
        );
        for q in layer.iter().filter(|q| !prev.contains(q)) {
            let side = SIZE / 2f64.powi(q.level as i32);
            let x = q.coords[0] as f64 * side;
            // The second coordinate points up.
            let y = SIZE - (q.coords[1] as f64 + 1.0) * side;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                fmt_px(x),
                fmt_px(y),
                fmt_px(side),
                fmt_px(side)
            );
        }
        let _ = writeln!(s, "</g>");
        prev = layer.iter().collect();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

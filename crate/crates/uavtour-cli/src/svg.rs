use uavtour::instance::{Instance, Point};
use uavtour::tour::Tour;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Renders an instance and its tour as a standalone SVG: cluster nodes as
/// dots inside a dashed bounding box, chosen heads ringed, the depot as a
/// black square, and the tour as a closed polyline. Coordinates are in
/// meters; the y axis is flipped so north is up.
pub fn render(instance: &Instance, tour: &Tour) -> String {
    let a = instance.area;
    let flip = |p: Point| (p.0, a - p.1);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {a} {a}\" width=\"640\" height=\"640\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{a}\" height=\"{a}\" fill=\"white\" stroke=\"#444\" stroke-width=\"{:.3}\"/>\n",
        a / 640.0
    ));

    let dot = a / 320.0;
    for (ci, cluster) in instance.clusters.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in cluster {
            x0 = x0.min(p.0);
            y0 = y0.min(p.1);
            x1 = x1.max(p.0);
            y1 = y1.max(p.1);
        }
        let pad = dot * 2.0;
        out.push_str(&format!(
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{:.3}\" stroke-dasharray=\"{:.3} {:.3}\"/>\n",
            x0 - pad,
            a - y1 - pad,
            x1 - x0 + 2.0 * pad,
            y1 - y0 + 2.0 * pad,
            dot / 2.0,
            dot,
            dot
        ));
        for p in cluster {
            let (x, y) = flip(*p);
            out.push_str(&format!(
                "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{dot:.3}\" fill=\"{color}\"/>\n"
            ));
        }
    }

    // Ring each chosen head in its cluster color.
    for stop in &tour.stops {
        let (x, y) = flip(instance.node(stop.cluster, stop.node));
        let color = PALETTE[stop.cluster % PALETTE.len()];
        out.push_str(&format!(
            "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{:.3}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{:.3}\"/>\n",
            dot * 2.5,
            dot * 0.8
        ));
    }

    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(tour.stops.len() + 2);
    pts.push(flip(instance.depot));
    for stop in &tour.stops {
        pts.push(flip(instance.node(stop.cluster, stop.node)));
    }
    pts.push(flip(instance.depot));
    let path: Vec<String> = pts
        .iter()
        .map(|(x, y)| format!("{x:.3},{y:.3}"))
        .collect();
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#111\" stroke-width=\"{:.3}\"/>\n",
        path.join(" "),
        dot * 0.6
    ));

    let (dx, dy) = flip(instance.depot);
    out.push_str(&format!(
        "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"black\"/>\n",
        dx - dot * 1.5,
        dy - dot * 1.5,
        dot * 3.0,
        dot * 3.0
    ));
    out.push_str("</svg>\n");
    out
}

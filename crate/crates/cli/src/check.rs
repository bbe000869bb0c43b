//! `check`: reloads a drawing and re-verifies every property the library
//! promises about it. Each failed property is reported by name.

use std::path::Path;

use crosslab::bounds::{
    dense_ball2_subgraph, disk_genus_check, embedded_disk_check, metric_ball_dense, SimpleGraph,
};
use crosslab::drawing::{congestion, count_crossings, count_crossings_naive, Drawing};
use crosslab::surface::{load_surface, tile, CombinatorialSurface};

use crate::{read, Fail, Outcome};

const PATH_TOL: f64 = 1e-8;

fn parse(text: &str, surface_text: Option<String>) -> Result<(CombinatorialSurface, Drawing), Fail> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Fail::Violation(format!("invariant document: {e}")))?;
    let (table, drawing) = match (surface_text, doc.get("drawing")) {
        (Some(t), _) => (t, doc.get("drawing").unwrap_or(&doc).to_string()),
        (None, Some(d)) => {
            let t = doc
                .get("surface")
                .ok_or_else(|| Fail::Violation("invariant document: no embedded surface".into()))?;
            (t.to_string(), d.to_string())
        }
        (None, None) => {
            return Err(Fail::Violation(
                "invariant document: no embedded surface; pass --surface".into(),
            ))
        }
    };
    let surface = load_surface(&table).map_err(|e| Fail::Violation(format!("invariant surface: {e}")))?;
    let drawing =
        Drawing::from_json(&drawing).map_err(|e| Fail::Violation(format!("invariant document: {e}")))?;
    Ok((surface, drawing))
}

pub fn run(path: &Path, surface: Option<&Path>) -> Outcome {
    let surface_text = surface.map(read).transpose()?;
    let (surface, drawing) = parse(&read(path)?, surface_text)?;
    let mut violations: Vec<String> = Vec::new();
    let mut verdict = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "ok" } else { "VIOLATION" });
        if !ok {
            violations.push(name.to_string());
        }
    };

    verdict(
        "face-count",
        drawing.faces == surface.faces(),
        format!("drawing {} surface {}", drawing.faces, surface.faces()),
    );
    if drawing.faces != surface.faces() {
        return Err(Fail::Violation("invariant face-count".into()));
    }
    let bad_vertex = drawing
        .vertices
        .iter()
        .position(|p| !p.is_valid() || !tile().contains(p.pos(), 1e-12));
    verdict(
        "vertex-position",
        bad_vertex.is_none(),
        format!("first bad vertex {bad_vertex:?}"),
    );

    let worst = drawing
        .edges
        .iter()
        .map(|e| e.path.continuity_residual(&surface))
        .fold(0.0, f64::max);
    verdict(
        "path-continuity",
        worst <= PATH_TOL,
        format!("max residual {worst:e}"),
    );
    let bent = drawing.edges.iter().filter(|e| !e.path.locally_geodesic).count();
    println!("info non-geodesic paths: {bent}");

    let fast = count_crossings(&surface, &drawing);
    let (slow, degenerate) = count_crossings_naive(&drawing);
    verdict(
        "oracle-equivalence",
        fast.total == slow,
        format!(
            "bucketed {} naive {} degenerate {} / {}",
            fast.total, slow, fast.degenerate_events, degenerate
        ),
    );

    let con = congestion(&drawing);
    let bound = con.max * con.max * drawing.faces as u64;
    verdict(
        "congestion-bound",
        fast.total <= con.pair_bound && con.pair_bound <= bound,
        format!(
            "crossings {} ≤ Σ C(con, 2) {} ≤ con_max²·F {}",
            fast.total, con.pair_bound, bound
        ),
    );

    let n = drawing.vertices.len();
    let pairs: Vec<(usize, usize)> = drawing.edges.iter().map(|e| (e.u, e.v)).collect();
    match SimpleGraph::new(n, &pairs) {
        Ok(g) => {
            if let Some(b) = dense_ball2_subgraph(&g) {
                verdict(
                    "ball2-density",
                    b.edge_count as f64 >= b.bound,
                    format!("{} edges ≥ {:.3}", b.edge_count, b.bound),
                );
            }
        }
        Err(e) => verdict("simple-graph", false, e.to_string()),
    }
    if let Some(r) = metric_ball_dense(&drawing) {
        verdict(
            "metric-ball-density",
            r.inside as f64 >= r.bound,
            format!(
                "{} edges inside radius {:.4} ≥ {:.3}",
                r.inside, r.radius, r.bound
            ),
        );
    }

    if let Some(&center) = drawing.vertices.first() {
        let e = embedded_disk_check(&surface, center);
        verdict(
            "embedded-disk",
            e.pass,
            format!("radius {:.2} ≤ {:.4}", e.radius, e.limit),
        );
        let r = (surface.genus() as f64).ln();
        let d = disk_genus_check(&surface, center, r);
        verdict(
            "disk-genus",
            d.pass,
            format!("ball genus {} ≤ {:.4} at radius {r:.4}", d.ball.genus, d.limit),
        );
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(Fail::Violation(format!("invariant {}", violations.join(", "))))
    }
}

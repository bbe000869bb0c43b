//! The gluing tables and triangulation under `data/` load, validate and are
//! exactly what the generator produces.

use crosslab::circlepack::{thurston_pack, Triangulation};
use crosslab::surface::{generate_surface, load_surface};

fn data(rel: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn shipped_surfaces() {
    for (genus, faces) in [(2, 16), (3, 32), (5, 64)] {
        let text = data(&format!("surfaces/genus{genus}.json"));
        let s = load_surface(&text).unwrap();
        assert_eq!(s.faces(), faces);
        assert_eq!(s.genus(), genus);
        assert_eq!(s.vertex_count(), 3 * faces / 8);
        assert_eq!(s.edge_count(), 3 * faces / 2);
        assert_eq!(s.euler_characteristic(), 2 - 2 * genus as i64);
        // Canonical form, and reproducible from the generator.
        assert_eq!(s.table().serialize(), text);
        assert_eq!(generate_surface(faces, 1).unwrap().table().serialize(), text);
    }
}

#[test]
fn shipped_triangulation() {
    let tri = Triangulation::from_json(&data("triangulations/genus2.json")).unwrap();
    assert_eq!(tri.genus(), 2);
    assert!(tri.degrees().iter().all(|&d| d == 8));
    let s = load_surface(&data("surfaces/genus2.json")).unwrap();
    assert_eq!(tri, Triangulation::from_surface(&s));
    assert!(thurston_pack(&tri, 1e-10, 1000).unwrap().residual < 1e-10);
}

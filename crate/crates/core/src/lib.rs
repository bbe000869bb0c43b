pub mod bounds;
pub mod circlepack;
pub mod drawing;
pub mod geodesic;
pub mod hyp;
pub mod oracles;
pub mod router;
pub mod surface;

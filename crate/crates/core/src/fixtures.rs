//! Small real-world graphs bundled with the crate.

use crate::gsp::Graph;
use crate::random_graph::parse_edge_list;

const ZACHARY: &str = include_str!("../fixtures/zachary_karate_club.txt");
const FLORENTINE: &str = include_str!("../fixtures/florentine_families.txt");

/// Zachary's karate club: 34 members, 78 unweighted friendship ties.
pub fn zachary_karate_club() -> Graph {
    parse_edge_list(ZACHARY).expect("bundled edge list is valid")
}

/// Marriage ties between 15 Florentine families (the isolated Pucci family is
/// left out).
pub fn florentine_families() -> Graph {
    parse_edge_list(FLORENTINE).expect("bundled edge list is valid")
}

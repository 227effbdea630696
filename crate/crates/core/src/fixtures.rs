//! Small named inputs with known answers, shared by tests and the CLI.

use crate::bdgmap::{build_map, PlanarMap};
use crate::mobile::{Mobile, PTree, NO_PARENT};
use crate::{Error, Result};

pub const FIXTURE_NAMES: [&str; 4] = ["hex-mobile", "n1p2-a", "n1p2-b", "cycle4"];

#[derive(Debug, Clone)]
pub enum Fixture {
    Mobile(Mobile),
    Map(PlanarMap),
}

impl Fixture {
    pub fn to_json(&self) -> Result<String> {
        Ok(match self {
            Fixture::Mobile(m) => serde_json::to_string_pretty(m)?,
            Fixture::Map(m) => serde_json::to_string_pretty(m)?,
        })
    }
}

pub fn fixture(name: &str) -> Result<Fixture> {
    match name {
        "hex-mobile" => Ok(Fixture::Mobile(hexangulation_mobile())),
        "n1p2-a" => Ok(Fixture::Mobile(single_face_mobile(1))),
        "n1p2-b" => Ok(Fixture::Mobile(single_face_mobile(2))),
        "cycle4" => Ok(Fixture::Map(cycle4())),
        other => Err(Error::Parameter(format!(
            "unknown fixture {other:?}; known fixtures: {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

/// A 3-mobile with 5 black vertices, coding a rooted 6-angulation with 5
/// faces (12 vertices, 15 edges).
pub fn hexangulation_mobile() -> Mobile {
    let parents = [-1i64, 0, 1, 2, 3, 4, 5, 5, 3, 8, 9, 9, 1, 0, 13, 13];
    let parents = parents
        .iter()
        .map(|&x| if x < 0 { NO_PARENT } else { x as u32 })
        .collect();
    let tree = PTree::from_parents(3, parents).expect("valid 3-tree");
    Mobile::new(tree, vec![1, 3, 4, 3, 2, 3, 2, 1, 2, 1, 2]).expect("valid labels")
}

/// The quadrangulation mobile with one face: root, one black vertex and a
/// white child with label 1 or 2.
pub fn single_face_mobile(child_label: i32) -> Mobile {
    let tree = PTree::from_parents(2, vec![NO_PARENT, 0, 1]).expect("valid 2-tree");
    Mobile::new(tree, vec![1, child_label]).expect("child label must be 1 or 2")
}

/// The 4-cycle as a quadrangulation with 2 faces, with vertex 2 opposite ∂.
pub fn cycle4() -> PlanarMap {
    let tree = PTree::from_parents(2, vec![NO_PARENT, 0, 1, 2, 3]).expect("valid 2-tree");
    build_map(&Mobile::new(tree, vec![1, 2, 1]).expect("valid labels"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdgmap::validate;
    use crate::geodesy::{bfs, geodesic_spread};

    #[test]
    fn hexangulation_counts() {
        let m = hexangulation_mobile();
        let map = build_map(&m);
        assert_eq!(map.vertex_count(), 12);
        assert_eq!(map.edge_count(), 15);
        assert!(validate(&map, &m).is_ok());
    }

    #[test]
    fn cycle4_is_a_cycle() {
        let map = cycle4();
        assert_eq!(map.edges(), &[[1, 0], [2, 3], [3, 0], [2, 1]]);
        let f0 = bfs(&map, 0);
        assert_eq!(f0.dist, vec![0, 1, 2, 1]);
        assert_eq!(geodesic_spread(&map, 2, &f0, &bfs(&map, 2)), 2);
    }

    #[test]
    fn names() {
        for name in FIXTURE_NAMES {
            fixture(name).unwrap().to_json().unwrap();
        }
        assert!(fixture("nope").is_err());
        match fixture("n1p2-a").unwrap() {
            Fixture::Mobile(m) => assert_eq!(m.labels(), &[1, 1]),
            Fixture::Map(_) => panic!(),
        }
    }
}

// SPDX-License-Identifier: Apache-2.0

//! XY routing on the tile mesh and inter-tile transfer instances.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::model::{HopConvention, TileIdx};

/// Directed router-to-router link, identified by its end positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub from: (u32, u32),
    pub to: (u32, u32),
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})->({},{})", self.from.0, self.from.1, self.to.0, self.to.1)
    }
}

impl Serialize for Link {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Links traversed from `src` to `dst`, first along X then along Y.
pub fn xy_route(src: (u32, u32), dst: (u32, u32), mesh: (u32, u32)) -> Vec<Link> {
    assert!(src.0 < mesh.0 && src.1 < mesh.1 && dst.0 < mesh.0 && dst.1 < mesh.1);
    assert_ne!(src, dst, "intra-tile transfers are not routed");
    let mut links = Vec::new();
    let mut cur = src;
    while cur.0 != dst.0 {
        let next = if dst.0 > cur.0 { (cur.0 + 1, cur.1) } else { (cur.0 - 1, cur.1) };
        links.push(Link { from: cur, to: next });
        cur = next;
    }
    while cur.1 != dst.1 {
        let next = if dst.1 > cur.1 { (cur.0, cur.1 + 1) } else { (cur.0, cur.1 - 1) };
        links.push(Link { from: cur, to: next });
        cur = next;
    }
    links
}

/// Route length `|rho|` under the configured convention.
pub fn route_hops(links: usize, convention: HopConvention) -> u64 {
    match convention {
        HopConvention::Routers => links as u64 + 1,
        HopConvention::Links => links as u64,
    }
}

/// One routed instance of a message: a producer/consumer pair bound to
/// different tiles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub message: usize,
    pub consumer: usize,
    #[serde(skip)]
    pub src_tile: TileIdx,
    #[serde(skip)]
    pub dst_tile: TileIdx,
    /// Memory read by TX on the source tile.
    pub src_bus: usize,
    /// Memory written by RX on the destination tile.
    pub dst_bus: usize,
    pub route: Vec<Link>,
    pub hops: u64,
    pub flits: u64,
}

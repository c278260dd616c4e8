//! D-dimensional hypercubic cell complexes.
//!
//! Sites are indexed lexicographically by coordinate (first axis most
//! significant). Edges are indexed by `(base site, axis)` and faces by
//! `(base site, axis pair)`, both in lexicographic order, where the base is
//! the cell corner with the smallest coordinates (modulo periodicity). The
//! indexing is therefore a pure function of `(extents, periodic)`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub base: usize,
    pub axes: (usize, usize),
    /// Boundary edges in perimeter order:
    /// `(base, a)`, `(base + e_a, b)`, `(base + e_b, a)`, `(base, b)`.
    pub edges: [usize; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    extents: Vec<usize>,
    periodic: Vec<bool>,
    strides: Vec<usize>,
    num_sites: usize,
    edge_sites: Vec<[usize; 2]>,
    edge_axis: Vec<usize>,
    /// `site * D + axis -> edge` for edges starting at `site`.
    edge_lookup: Vec<Option<usize>>,
    faces: Vec<Face>,
    site_edges: Vec<Vec<usize>>,
    edge_faces: Vec<Vec<usize>>,
}

impl Lattice {
    pub fn build_hypercubic(dim: usize, extents: &[usize], periodic: &[bool]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Lattice("dimension must be at least 1".into()));
        }
        if extents.len() != dim || periodic.len() != dim {
            return Err(Error::Lattice(format!(
                "expected {dim} extents and periodic flags, got {} and {}",
                extents.len(),
                periodic.len()
            )));
        }
        for (axis, (&len, &per)) in extents.iter().zip(periodic).enumerate() {
            if len == 0 {
                return Err(Error::Lattice(format!("axis {axis} has zero extent")));
            }
            if per && len < 2 {
                return Err(Error::Lattice(format!(
                    "periodic axis {axis} needs extent >= 2, got {len}"
                )));
            }
        }

        let mut strides = vec![1; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * extents[axis + 1];
        }
        let num_sites = extents.iter().product();

        let mut lattice = Lattice {
            extents: extents.to_vec(),
            periodic: periodic.to_vec(),
            strides,
            num_sites,
            edge_sites: Vec::new(),
            edge_axis: Vec::new(),
            edge_lookup: vec![None; num_sites * dim],
            faces: Vec::new(),
            site_edges: vec![Vec::new(); num_sites],
            edge_faces: Vec::new(),
        };

        for site in 0..num_sites {
            for axis in 0..dim {
                if let Some(next) = lattice.shift(site, axis, 1) {
                    let id = lattice.edge_sites.len();
                    lattice.edge_sites.push([site, next]);
                    lattice.edge_axis.push(axis);
                    lattice.edge_lookup[site * dim + axis] = Some(id);
                    lattice.site_edges[site].push(id);
                    lattice.site_edges[next].push(id);
                }
            }
        }
        lattice.edge_faces = vec![Vec::new(); lattice.edge_sites.len()];

        for site in 0..num_sites {
            for a in 0..dim {
                for b in (a + 1)..dim {
                    let edges = (|| {
                        let sa = lattice.shift(site, a, 1)?;
                        let sb = lattice.shift(site, b, 1)?;
                        Some([
                            lattice.edge_from(site, a)?,
                            lattice.edge_from(sa, b)?,
                            lattice.edge_from(sb, a)?,
                            lattice.edge_from(site, b)?,
                        ])
                    })();
                    if let Some(edges) = edges {
                        let id = lattice.faces.len();
                        for &e in &edges {
                            lattice.edge_faces[e].push(id);
                        }
                        lattice.faces.push(Face { base: site, axes: (a, b), edges });
                    }
                }
            }
        }

        for list in lattice.site_edges.iter_mut().chain(lattice.edge_faces.iter_mut()) {
            list.sort_unstable();
        }
        Ok(lattice)
    }

    /// Fully periodic lattice with the same extent on every axis.
    pub fn torus(dim: usize, extent: usize) -> Result<Self> {
        Self::build_hypercubic(dim, &vec![extent; dim], &vec![true; dim])
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_edges(&self) -> usize {
        self.edge_sites.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Coordination number `q = 2D` of a fully periodic lattice.
    pub fn bulk_coordination(&self) -> usize {
        2 * self.dimension()
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.extents)
            .map(|(&stride, &len)| (site / stride) % len)
            .collect()
    }

    pub fn site_at(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.dimension() {
            return None;
        }
        let mut site = 0;
        for ((&c, &len), &stride) in coords.iter().zip(&self.extents).zip(&self.strides) {
            if c >= len {
                return None;
            }
            site += c * stride;
        }
        Some(site)
    }

    /// Site reached from `site` by `step` units along `axis`, honouring
    /// periodicity. `None` when the step leaves an open boundary.
    pub fn shift(&self, site: usize, axis: usize, step: isize) -> Option<usize> {
        let len = self.extents[axis] as isize;
        let c = ((site / self.strides[axis]) % self.extents[axis]) as isize;
        let mut target = c + step;
        if self.periodic[axis] {
            target = target.rem_euclid(len);
        } else if !(0..len).contains(&target) {
            return None;
        }
        Some((site as isize + (target - c) * self.strides[axis] as isize) as usize)
    }

    /// Edge starting at `site` along `axis` (towards increasing coordinate).
    pub fn edge_from(&self, site: usize, axis: usize) -> Option<usize> {
        self.edge_lookup[site * self.dimension() + axis]
    }

    pub fn sites_of_edge(&self, edge: usize) -> [usize; 2] {
        self.edge_sites[edge]
    }

    pub fn edge_axis(&self, edge: usize) -> usize {
        self.edge_axis[edge]
    }

    pub fn edges_of_site(&self, site: usize) -> &[usize] {
        &self.site_edges[site]
    }

    pub fn face(&self, face: usize) -> &Face {
        &self.faces[face]
    }

    pub fn edges_of_face(&self, face: usize) -> [usize; 4] {
        self.faces[face].edges
    }

    pub fn faces_of_edge(&self, edge: usize) -> &[usize] {
        &self.edge_faces[edge]
    }

    /// Coordination number of `site` (number of incident edges).
    pub fn coordination(&self, site: usize) -> usize {
        self.site_edges[site].len()
    }

    /// Neighbours of `site`, one entry per incident edge. On extent-2
    /// periodic axes a neighbour therefore appears twice.
    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        self.site_edges[site]
            .iter()
            .map(|&e| {
                let [a, b] = self.edge_sites[e];
                if a == site {
                    b
                } else {
                    a
                }
            })
            .collect()
    }
}

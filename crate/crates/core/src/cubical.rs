//! Lower-star cubical filtration of a pixel grid (V-construction).
//!
//! Pixels are vertices; horizontal and vertical edges join 4-neighbours and
//! unit squares fill each 2x2 block. Every cell enters at the maximum of its
//! pixel values, and the pixel attaining that maximum is its critical vertex.
//!
//! Cell ids are laid out as: vertices `0..P`, horizontal edges, vertical edges,
//! squares, each block in row-major order.

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Cell counts and id layout of a `rows x cols` cubical grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn n_vertices(&self) -> usize {
        self.rows * self.cols
    }

    fn n_hedges(&self) -> usize {
        self.rows * (self.cols - 1)
    }

    fn n_vedges(&self) -> usize {
        (self.rows - 1) * self.cols
    }

    pub fn n_edges(&self) -> usize {
        self.n_hedges() + self.n_vedges()
    }

    pub fn n_squares(&self) -> usize {
        (self.rows - 1) * (self.cols - 1)
    }

    pub fn n_cells(&self) -> usize {
        self.n_vertices() + self.n_edges() + self.n_squares()
    }

    fn hedge_base(&self) -> usize {
        self.n_vertices()
    }

    fn vedge_base(&self) -> usize {
        self.n_vertices() + self.n_hedges()
    }

    fn square_base(&self) -> usize {
        self.n_vertices() + self.n_edges()
    }

    pub fn dim_of(&self, id: usize) -> u8 {
        if id < self.n_vertices() {
            0
        } else if id < self.square_base() {
            1
        } else {
            2
        }
    }

    /// Pixels spanned by a cell: 1, 2 or 4 linear indices.
    pub fn vertices_of(&self, id: usize) -> CellVertices {
        let c = self.cols;
        if id < self.hedge_base() {
            CellVertices::new(&[id])
        } else if id < self.vedge_base() {
            let k = id - self.hedge_base();
            let (r, j) = (k / (c - 1), k % (c - 1));
            let v = r * c + j;
            CellVertices::new(&[v, v + 1])
        } else if id < self.square_base() {
            let v = id - self.vedge_base();
            CellVertices::new(&[v, v + c])
        } else {
            let k = id - self.square_base();
            let (r, j) = (k / (c - 1), k % (c - 1));
            let v = r * c + j;
            CellVertices::new(&[v, v + 1, v + c, v + c + 1])
        }
    }

    /// Codimension-one faces of a cell, as cell ids.
    pub fn boundary_of(&self, id: usize) -> CellVertices {
        let c = self.cols;
        if id < self.square_base() {
            if id < self.hedge_base() {
                return CellVertices::new(&[]);
            }
            return self.vertices_of(id);
        }
        let k = id - self.square_base();
        let (r, j) = (k / (c - 1), k % (c - 1));
        let top = self.hedge_base() + r * (c - 1) + j;
        let bottom = top + (c - 1);
        let left = self.vedge_base() + r * c + j;
        CellVertices::new(&[top, bottom, left, left + 1])
    }
}

/// Up to four indices, stored inline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellVertices {
    ids: [usize; 4],
    len: u8,
}

impl CellVertices {
    fn new(ids: &[usize]) -> Self {
        let mut arr = [0; 4];
        arr[..ids.len()].copy_from_slice(ids);
        Self {
            ids: arr,
            len: ids.len() as u8,
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.ids[..self.len as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub dim: u8,
    pub id: usize,
    pub value: f64,
    pub critical_vertex: usize,
}

#[derive(Debug, Clone)]
pub struct CubicalFiltration {
    grid: Grid,
    cells: Vec<Cell>,
    /// `position[id]` is the index of cell `id` in `cells`.
    position: Vec<u32>,
}

impl CubicalFiltration {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn field_shape(&self) -> (usize, usize) {
        (self.grid.rows, self.grid.cols)
    }

    /// Cells in filtration order.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn position(&self, id: usize) -> usize {
        self.position[id] as usize
    }

    pub fn vertex_ids(&self, cell: &Cell) -> CellVertices {
        self.grid.vertices_of(cell.id)
    }

    /// Builds a filtration from an explicit cell order, checking that every
    /// face precedes its cofaces.
    pub fn from_cells(grid: Grid, cells: Vec<Cell>) -> Result<Self> {
        if cells.len() != grid.n_cells() {
            return Err(Error::MalformedFiltration(format!(
                "{} cells for a grid with {}",
                cells.len(),
                grid.n_cells()
            )));
        }
        let mut position = vec![u32::MAX; cells.len()];
        for (i, cell) in cells.iter().enumerate() {
            if cell.id >= cells.len() || position[cell.id] != u32::MAX {
                return Err(Error::MalformedFiltration(format!("bad cell id {}", cell.id)));
            }
            position[cell.id] = i as u32;
        }
        let filt = Self {
            grid,
            cells,
            position,
        };
        filt.validate()?;
        Ok(filt)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, cell) in self.cells.iter().enumerate() {
            for &face in self.grid.boundary_of(cell.id).as_slice() {
                if self.position(face) > i {
                    return Err(Error::MalformedFiltration(format!(
                        "face {face} enters after cell {}",
                        cell.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Lower-star filtration of `field`, cells sorted by `(value, dim, id)`.
pub fn build_filtration(field: &ScalarField) -> CubicalFiltration {
    let grid = Grid::new(field.rows(), field.cols());
    let vals = field.values();
    let mut cells = Vec::with_capacity(grid.n_cells());
    for id in 0..grid.n_cells() {
        let verts = grid.vertices_of(id);
        let verts = verts.as_slice();
        let mut crit = verts[0];
        for &v in &verts[1..] {
            if vals[v] > vals[crit] || (vals[v] == vals[crit] && v < crit) {
                crit = v;
            }
        }
        cells.push(Cell {
            dim: grid.dim_of(id),
            id,
            value: vals[crit],
            critical_vertex: crit,
        });
    }
    cells.sort_unstable_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.dim.cmp(&b.dim))
            .then(a.id.cmp(&b.id))
    });
    let mut position = vec![0u32; cells.len()];
    for (i, cell) in cells.iter().enumerate() {
        position[cell.id] = i as u32;
    }
    CubicalFiltration {
        grid,
        cells,
        position,
    }
}

/// Rank transform: the pixel with the k-th smallest value maps to `k - 1`.
pub fn ordinal_field(field: &ScalarField) -> Result<ScalarField> {
    let vals = field.values();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    if order.windows(2).any(|w| vals[w[0]] == vals[w[1]]) {
        return Err(Error::DuplicateValues);
    }
    let mut out = vec![0.0; vals.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank as f64;
    }
    ScalarField::new(field.rows(), field.cols(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(rows: usize, cols: usize, v: &[f64]) -> ScalarField {
        ScalarField::new(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn one_by_three() {
        let filt = build_filtration(&field(1, 3, &[0.0, 2.0, 1.0]));
        let cells = filt.cells();
        assert_eq!(cells.len(), 5);
        let verts: Vec<f64> = cells.iter().filter(|c| c.dim == 0).map(|c| c.value).collect();
        assert_eq!(verts, vec![0.0, 1.0, 2.0]);
        let edges: Vec<_> = cells.iter().filter(|c| c.dim == 1).collect();
        assert_eq!(edges.len(), 2);
        assert!(edges.iter().all(|e| e.value == 2.0 && e.critical_vertex == 1));
    }

    #[test]
    fn two_by_two_square() {
        let filt = build_filtration(&field(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let counts = [0u8, 1, 2].map(|d| filt.cells().iter().filter(|c| c.dim == d).count());
        assert_eq!(counts, [4, 4, 1]);
        let sq = filt.cells().last().unwrap();
        assert_eq!((sq.dim, sq.value, sq.critical_vertex), (2, 4.0, 3));
        assert_eq!(filt.vertex_ids(sq).as_slice(), &[0, 1, 2, 3]);
    }

    #[test]
    fn single_pixel() {
        let filt = build_filtration(&field(1, 1, &[3.0]));
        assert_eq!(filt.cells().len(), 1);
    }

    #[test]
    fn square_boundary_edges_span_its_vertices() {
        let g = Grid::new(3, 4);
        for id in g.square_base()..g.n_cells() {
            let mut from_edges: Vec<usize> = g
                .boundary_of(id)
                .as_slice()
                .iter()
                .flat_map(|&e| g.vertices_of(e).as_slice().to_vec())
                .collect();
            from_edges.sort();
            from_edges.dedup();
            assert_eq!(from_edges, g.vertices_of(id).as_slice());
        }
    }

    #[test]
    fn rejects_face_after_coface() {
        let filt = build_filtration(&field(1, 2, &[0.0, 1.0]));
        let mut cells = filt.cells().to_vec();
        cells.swap(1, 2);
        assert!(CubicalFiltration::from_cells(filt.grid(), cells).is_err());
    }

    #[test]
    fn ordinal_ranks() {
        let f = ordinal_field(&field(1, 3, &[5.5, -1.0, 3.0])).unwrap();
        assert_eq!(f.values(), &[2.0, 0.0, 1.0]);
        assert!(ordinal_field(&field(1, 2, &[1.0, 1.0])).is_err());
    }
}

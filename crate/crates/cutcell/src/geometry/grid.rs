use std::fmt;

/// Error raised when a grid cannot be built from the supplied abscissas.
#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// An axis has fewer than two nodes.
    TooFewNodes { axis: usize },
    /// An axis has non-increasing or non-finite nodes.
    NotIncreasing { axis: usize },
    /// Dimension outside 1..=3.
    BadDimension(usize),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::TooFewNodes { axis } => write!(f, "axis {axis} needs at least two nodes"),
            GridError::NotIncreasing { axis } => write!(f, "axis {axis} not increasing"),
            GridError::BadDimension(d) => write!(f, "dimension {d} not in 1..=3"),
        }
    }
}

impl std::error::Error for GridError {}

/// Tensor-product Cartesian grid with possibly non-uniform spacing per axis.
///
/// Cells are numbered lexicographically with the first axis fastest. Faces
/// normal to axis `a` are numbered the same way on the index box where the
/// extent along `a` is one larger than the cell count.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid {
    nodes: Vec<Vec<f64>>,
    n: [usize; 3],
}

impl CartesianGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self, GridError> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(GridError::BadDimension(axes.len()));
        }
        let mut n = [1usize; 3];
        for (a, x) in axes.iter().enumerate() {
            if x.len() < 2 {
                return Err(GridError::TooFewNodes { axis: a });
            }
            if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] <= w[0]) {
                return Err(GridError::NotIncreasing { axis: a });
            }
            n[a] = x.len() - 1;
        }
        Ok(Self { nodes: axes, n })
    }

    /// Uniform grid on the box `[lo, hi]` with `cells[a]` intervals per axis.
    pub fn uniform(lo: &[f64], hi: &[f64], cells: &[usize]) -> Result<Self, GridError> {
        let d = cells.len();
        if d == 0 || d > 3 || lo.len() != d || hi.len() != d {
            return Err(GridError::BadDimension(d));
        }
        let axes = (0..d)
            .map(|a| {
                let m = cells[a];
                (0..=m)
                    .map(|i| {
                        if i == m {
                            hi[a]
                        } else {
                            lo[a] + (hi[a] - lo[a]) * (i as f64) / (m as f64)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self, axis: usize) -> &[f64] {
        &self.nodes[axis]
    }

    /// Cell counts per axis; unused axes report 1.
    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    pub fn n_cells(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn cell_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.n[0] * (ijk[1] + self.n[1] * ijk[2])
    }

    pub fn cell_ijk(&self, c: usize) -> [usize; 3] {
        let i = c % self.n[0];
        let r = c / self.n[0];
        [i, r % self.n[1], r / self.n[1]]
    }

    /// Lower and upper corners of a cell. Unused axes collapse to 0.
    pub fn cell_bounds(&self, c: usize) -> ([f64; 3], [f64; 3]) {
        let ijk = self.cell_ijk(c);
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..self.dim() {
            lo[a] = self.nodes[a][ijk[a]];
            hi[a] = self.nodes[a][ijk[a] + 1];
        }
        (lo, hi)
    }

    pub fn cell_center(&self, c: usize) -> [f64; 3] {
        let (lo, hi) = self.cell_bounds(c);
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])]
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        let (lo, hi) = self.cell_bounds(c);
        (0..self.dim()).map(|a| hi[a] - lo[a]).product()
    }

    pub fn spacing(&self, axis: usize, i: usize) -> f64 {
        self.nodes[axis][i + 1] - self.nodes[axis][i]
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim())
            .flat_map(|a| self.nodes[a].windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim())
            .flat_map(|a| self.nodes[a].windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }

    pub fn face_shape(&self, axis: usize) -> [usize; 3] {
        let mut s = self.n;
        s[axis] += 1;
        s
    }

    pub fn n_faces(&self, axis: usize) -> usize {
        let s = self.face_shape(axis);
        s[0] * s[1] * s[2]
    }

    pub fn face_index(&self, axis: usize, ijk: [usize; 3]) -> usize {
        let s = self.face_shape(axis);
        ijk[0] + s[0] * (ijk[1] + s[1] * ijk[2])
    }

    pub fn face_ijk(&self, axis: usize, f: usize) -> [usize; 3] {
        let s = self.face_shape(axis);
        let i = f % s[0];
        let r = f / s[0];
        [i, r % s[1], r / s[1]]
    }

    /// Cells on the low and high side of a face.
    pub fn face_cells(&self, axis: usize, f: usize) -> (Option<usize>, Option<usize>) {
        let ijk = self.face_ijk(axis, f);
        let lo = if ijk[axis] > 0 {
            let mut l = ijk;
            l[axis] -= 1;
            Some(self.cell_index(l))
        } else {
            None
        };
        let hi = if ijk[axis] < self.n[axis] { Some(self.cell_index(ijk)) } else { None };
        (lo, hi)
    }

    /// Face on the low (`side = 0`) or high (`side = 1`) end of a cell along `axis`.
    pub fn cell_face(&self, c: usize, axis: usize, side: usize) -> usize {
        let mut ijk = self.cell_ijk(c);
        ijk[axis] += side;
        self.face_index(axis, ijk)
    }

    /// Bounds of a face: the coordinate along `axis` is fixed.
    pub fn face_bounds(&self, axis: usize, f: usize) -> ([f64; 3], [f64; 3]) {
        let ijk = self.face_ijk(axis, f);
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..self.dim() {
            if a == axis {
                lo[a] = self.nodes[a][ijk[a]];
                hi[a] = lo[a];
            } else {
                lo[a] = self.nodes[a][ijk[a]];
                hi[a] = self.nodes[a][ijk[a] + 1];
            }
        }
        (lo, hi)
    }

    /// Full measure of a face (length in 2D, area in 3D, 1 in 1D).
    pub fn face_measure(&self, axis: usize, f: usize) -> f64 {
        let (lo, hi) = self.face_bounds(axis, f);
        (0..self.dim()).filter(|&a| a != axis).map(|a| hi[a] - lo[a]).product()
    }

    /// Cross-section of a cell normal to `axis`.
    pub fn cell_section(&self, c: usize, axis: usize) -> f64 {
        let (lo, hi) = self.cell_bounds(c);
        (0..self.dim()).filter(|&a| a != axis).map(|a| hi[a] - lo[a]).product()
    }

    pub fn is_boundary_face(&self, axis: usize, f: usize) -> bool {
        let i = self.face_ijk(axis, f)[axis];
        i == 0 || i == self.n[axis]
    }

    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..self.dim() {
            lo[a] = self.nodes[a][0];
            hi[a] = *self.nodes[a].last().unwrap();
        }
        (lo, hi)
    }
}

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, MatrixHandle};

/// 13-point biharmonic stencil on an `(2^levels − 1)²` interior grid with
/// clamped boundaries (`u = ∂ₙu = 0`). Unknowns are ordered lexicographically
/// with `x` fastest. Points outside the grid are dropped, except that a point
/// two steps beyond an edge reflects onto the node itself (ghost `u₋₁ = u₁`),
/// adding 1 to the diagonal per reflected direction.
pub fn biharmonic_matrix(levels: u32) -> Result<MatrixHandle> {
    if !(2..=12).contains(&levels) {
        return Err(Error::InvalidParameter(format!("biharmonic levels must be in 2..=12, got {levels}")));
    }
    let nx = (1usize << levels) - 1;
    let idx = |i: usize, j: usize| j * nx + i;
    const STENCIL: [(i64, i64, f64); 13] = [
        (0, 0, 20.0),
        (1, 0, -8.0),
        (-1, 0, -8.0),
        (0, 1, -8.0),
        (0, -1, -8.0),
        (1, 1, 2.0),
        (1, -1, 2.0),
        (-1, 1, 2.0),
        (-1, -1, 2.0),
        (2, 0, 1.0),
        (-2, 0, 1.0),
        (0, 2, 1.0),
        (0, -2, 1.0),
    ];
    let inside = |k: i64| k >= 0 && (k as usize) < nx;
    let mut triplets = Vec::with_capacity(13 * nx * nx);
    for j in 0..nx {
        for i in 0..nx {
            let row = idx(i, j);
            for &(di, dj, w) in &STENCIL {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if inside(ii) && inside(jj) {
                    triplets.push((row, idx(ii as usize, jj as usize), w));
                } else if ii == -2 || ii == nx as i64 + 1 || jj == -2 || jj == nx as i64 + 1 {
                    triplets.push((row, row, w));
                }
            }
        }
    }
    Ok(MatrixHandle::Csr(CsrMatrix::from_triplets(nx * nx, nx * nx, &triplets)?))
}

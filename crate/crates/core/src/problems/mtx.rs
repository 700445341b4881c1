use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, MatrixHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_header(line: &str) -> Result<(Layout, Symmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("bad Matrix Market banner '{line}'")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported format '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(parse_err(1, format!("unsupported field '{other}', expected real or integer"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };
    Ok((layout, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

/// Parses a real Matrix Market stream into CSR. Symmetric storage is expanded,
/// duplicate coordinate entries are summed.
pub fn parse_matrix_market<R: Read>(reader: R) -> Result<CsrMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = match lines.next() {
        Some((_, l)) => l.map_err(Error::from)?,
        None => return Err(parse_err(1, "empty file")),
    };
    let (layout, symmetry) = parse_header(header.trim())?;

    let mut body = lines.filter_map(|(no, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        other => Some((no, other)),
    });
    let (size_line, size) = match body.next() {
        Some((no, l)) => (no, l.map_err(Error::from)?),
        None => return Err(parse_err(2, "missing size line")),
    };
    let mut it = size.split_whitespace();
    let nrows: usize = parse_num(it.next(), size_line, "row count")?;
    let ncols: usize = parse_num(it.next(), size_line, "column count")?;
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }

    let mut triplets = Vec::new();
    let mut push = |i: usize, j: usize, v: f64| {
        triplets.push((i, j, v));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((j, i, v)),
                Symmetry::SkewSymmetric => triplets.push((j, i, -v)),
            }
        }
    };

    match layout {
        Layout::Coordinate => {
            let nnz: usize = parse_num(it.next(), size_line, "entry count")?;
            let mut seen = 0;
            for (no, l) in body {
                let l = l.map_err(Error::from)?;
                let mut t = l.split_whitespace();
                let i: usize = parse_num(t.next(), no, "row index")?;
                let j: usize = parse_num(t.next(), no, "column index")?;
                let v: f64 = parse_num(t.next(), no, "value")?;
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(parse_err(no, format!("index ({i}, {j}) outside {nrows}x{ncols}")));
                }
                if symmetry != Symmetry::General && j > i {
                    return Err(parse_err(no, "symmetric storage expects the lower triangle"));
                }
                push(i - 1, j - 1, v);
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_line, format!("declared {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            // column-major; symmetric storage lists the lower triangle column by column
            let mut cells = Vec::new();
            for j in 0..ncols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::SkewSymmetric => j + 1,
                };
                cells.extend((start..nrows).map(|i| (i, j)));
            }
            let mut cells = cells.into_iter();
            let mut last = size_line;
            for (no, l) in body {
                let l = l.map_err(Error::from)?;
                last = no;
                for tok in l.split_whitespace() {
                    let v: f64 = parse_num(Some(tok), no, "value")?;
                    let (i, j) = cells.next().ok_or_else(|| parse_err(no, "more values than the declared size"))?;
                    if v != 0.0 {
                        push(i, j, v);
                    }
                }
            }
            if cells.next().is_some() {
                return Err(parse_err(last, "fewer values than the declared size"));
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, &triplets)
}

/// Reads a Matrix Market file into a CSR handle.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MatrixHandle> {
    let file = fs::File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    Ok(MatrixHandle::Csr(parse_matrix_market(file)?))
}

/// Coordinate/general serialization with 1-based indices.
pub fn to_matrix_market(a: &MatrixHandle) -> String {
    let csr = a.to_csr();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", csr.nrows(), csr.ncols(), csr.nnz());
    for i in 0..csr.nrows() {
        for (j, v) in csr.row(i) {
            let _ = writeln!(out, "{} {} {v:.17e}", i + 1, j + 1);
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &MatrixHandle) -> Result<()> {
    fs::write(path.as_ref(), to_matrix_market(a)).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn parse(s: &str) -> Result<DMatrix<f64>> {
        parse_matrix_market(s.as_bytes()).map(|c| c.to_dense())
    }

    #[test]
    fn identity() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n").unwrap();
        assert_eq!(a, DMatrix::identity(2, 2));
    }

    #[test]
    fn symmetric_expansion() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 1\n2 2 3\n").unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]));
        let b = parse("%%MatrixMarket matrix array real symmetric\n2 2\n2\n1\n3\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn array_is_column_major() {
        let a = parse("%%MatrixMarket matrix array real general\n2 3\n1 4\n2 5\n3 6\n").unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    }

    #[test]
    fn duplicates_summed() {
        let a = parse("%%MatrixMarket matrix coordinate integer general\n1 1 2\n1 1 2\n1 1 3\n").unwrap();
        assert_eq!(a[(0, 0)], 5.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n\n1 x 1.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e:?}");
        let e = parse("%%MatrixMarket matrix coordinate complex general\n1 1 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn round_trip() {
        let a = MatrixHandle::Dense(DMatrix::from_row_slice(2, 2, &[1.5, 0.0, -2.0, 1e-300]));
        let b = parse(&to_matrix_market(&a)).unwrap();
        assert_eq!(a.to_dense(), b);
    }
}

//! Matrix Market reader and writer for real matrices and vectors.

use std::fmt::Write as _;
use std::path::Path;

use faer::Mat;
use mor_iha::CscMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, message: message.into() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

/// A parsed file, keeping track of which storage format it used.
#[derive(Clone, Debug)]
pub enum MtxMatrix {
    Coordinate(CscMatrix),
    Array(Mat<f64>),
}

impl MtxMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            Self::Coordinate(m) => m.nrows(),
            Self::Array(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Coordinate(m) => m.ncols(),
            Self::Array(m) => m.ncols(),
        }
    }

    pub fn is_coordinate(&self) -> bool {
        matches!(self, Self::Coordinate(_))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            Self::Coordinate(m) => m.to_dense(),
            Self::Array(m) => m.clone(),
        }
    }

    pub fn to_sparse(&self) -> CscMatrix {
        match self {
            Self::Coordinate(m) => m.clone(),
            Self::Array(m) => CscMatrix::from_dense(m),
        }
    }

    /// Entries of an `n x 1` or `1 x n` matrix.
    pub fn to_vector(&self) -> Option<Vec<f64>> {
        let (r, c) = (self.nrows(), self.ncols());
        if r != 1 && c != 1 {
            return None;
        }
        let mut out = vec![0.0; r.max(c)];
        match self {
            Self::Coordinate(m) => {
                for (i, j, v) in m.triplets() {
                    out[i.max(j)] += v;
                }
            }
            Self::Array(m) => {
                for j in 0..c {
                    for i in 0..r {
                        out[i.max(j)] = m[(i, j)];
                    }
                }
            }
        }
        Some(out)
    }
}

fn parse_value(tok: Option<&str>, line: usize, pattern: bool, integer: bool) -> Result<f64, ParseError> {
    if pattern {
        return Ok(1.0);
    }
    let Some(tok) = tok else { return fail(line, "missing value") };
    let v: f64 = if integer {
        match tok.parse::<i64>() {
            Ok(v) => v as f64,
            Err(_) => return fail(line, format!("bad integer '{tok}'")),
        }
    } else {
        match tok.parse() {
            Ok(v) => v,
            Err(_) => return fail(line, format!("bad number '{tok}'")),
        }
    };
    if !v.is_finite() {
        return fail(line, format!("non-finite value '{tok}'"));
    }
    Ok(v)
}

fn parse_index(tok: Option<&str>, line: usize, bound: usize, what: &str) -> Result<usize, ParseError> {
    let Some(tok) = tok else { return fail(line, format!("missing {what} index")) };
    match tok.parse::<usize>() {
        Ok(i) if i >= 1 && i <= bound => Ok(i - 1),
        Ok(i) => fail(line, format!("{what} index {i} out of range 1..={bound}")),
        Err(_) => fail(line, format!("bad {what} index '{tok}'")),
    }
}

/// Parses Matrix Market text (`coordinate` or `array`, `real`, `integer` or
/// `pattern`, `general`, `symmetric` or `skew-symmetric`).
pub fn parse(text: &str) -> Result<MtxMatrix, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let Some((_, header)) = lines.next() else { return fail(1, "empty file") };
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return fail(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>' header");
    }
    let coordinate = match fields[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return fail(1, format!("unsupported format '{other}'")),
    };
    let (pattern, integer) = match fields[3].as_str() {
        "real" | "double" => (false, false),
        "integer" => (false, true),
        "pattern" if coordinate => (true, false),
        other => return fail(1, format!("unsupported field '{other}'")),
    };
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return fail(1, format!("unsupported symmetry '{other}'")),
    };
    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let Some((size_line, size)) = data.next() else { return fail(1, "missing size line") };
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .or_else(|_| fail(size_line, "bad size line"))?;
    let expected = if coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return fail(size_line, format!("size line needs {expected} integers"));
    }
    let (nrows, ncols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && nrows != ncols {
        return fail(size_line, "symmetric storage requires a square matrix");
    }

    if coordinate {
        let nnz = dims[2];
        let mut triplets = Vec::with_capacity(nnz * if symmetry == Symmetry::General { 1 } else { 2 });
        let mut count = 0;
        let mut last_line = size_line;
        for (ln, l) in data {
            last_line = ln;
            if count == nnz {
                return fail(ln, format!("more than the declared {nnz} entries"));
            }
            let mut toks = l.split_whitespace();
            let i = parse_index(toks.next(), ln, nrows, "row")?;
            let j = parse_index(toks.next(), ln, ncols, "column")?;
            let v = parse_value(toks.next(), ln, pattern, integer)?;
            if toks.next().is_some() {
                return fail(ln, "trailing data");
            }
            if symmetry == Symmetry::SkewSymmetric && i == j {
                return fail(ln, "diagonal entry in skew-symmetric matrix");
            }
            if symmetry != Symmetry::General && i < j {
                return fail(ln, "entry above the diagonal in symmetric storage");
            }
            triplets.push((i, j, v));
            if i != j {
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => triplets.push((j, i, v)),
                    Symmetry::SkewSymmetric => triplets.push((j, i, -v)),
                }
            }
            count += 1;
        }
        if count != nnz {
            return fail(last_line, format!("expected {nnz} entries, found {count}"));
        }
        let m = CscMatrix::from_triplets(nrows, ncols, &triplets).map_err(|e| ParseError { line: size_line, message: e.to_string() })?;
        return Ok(MtxMatrix::Coordinate(m));
    }

    // array storage is column major; symmetric variants list the lower triangle
    let slots: Vec<(usize, usize)> = (0..ncols)
        .flat_map(|j| (0..nrows).map(move |i| (i, j)))
        .filter(|&(i, j)| match symmetry {
            Symmetry::General => true,
            Symmetry::Symmetric => i >= j,
            Symmetry::SkewSymmetric => i > j,
        })
        .collect();
    let mut m = Mat::<f64>::zeros(nrows, ncols);
    let mut slot = 0;
    let mut last_line = size_line;
    for (ln, l) in data {
        last_line = ln;
        for tok in l.split_whitespace() {
            if slot == slots.len() {
                return fail(ln, format!("more than the expected {} values", slots.len()));
            }
            let v = parse_value(Some(tok), ln, false, integer)?;
            let (i, j) = slots[slot];
            m[(i, j)] = v;
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => m[(j, i)] = v,
                Symmetry::SkewSymmetric => m[(j, i)] = -v,
            }
            slot += 1;
        }
    }
    if slot != slots.len() {
        return fail(last_line, format!("expected {} values, found {slot}", slots.len()));
    }
    Ok(MtxMatrix::Array(m))
}

/// Reads and parses a file; I/O failures are reported at line 0.
pub fn read(path: &Path) -> Result<MtxMatrix, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError { line: 0, message: e.to_string() })?;
    parse(&text)
}

/// `coordinate real general` text. Values use the shortest round-trip form.
pub fn write_coordinate(m: &CscMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    out
}

/// `array real general` text in column-major order.
pub fn write_array(m: &Mat<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let _ = writeln!(out, "{:e}", m[(i, j)]);
        }
    }
    out
}

/// Column vector in `array` format.
pub fn write_vector(v: &[f64]) -> String {
    write_array(&Mat::from_fn(v.len(), 1, |i, _| v[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_general_and_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 3\n1 1 1.5\n2 1 -2\n2 2 4e0\n";
        let m = parse(text).unwrap().to_dense();
        assert_eq!((m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)]), (1.5, -2.0, 0.0, 4.0));
        let sym = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n2 1 3\n";
        let m = parse(sym).unwrap().to_dense();
        assert_eq!((m[(1, 0)], m[(0, 1)]), (3.0, 3.0));
        let skew = "%%MatrixMarket matrix coordinate integer skew-symmetric\n2 2 1\n2 1 3\n";
        let m = parse(skew).unwrap().to_dense();
        assert_eq!((m[(1, 0)], m[(0, 1)]), (3.0, -3.0));
    }

    #[test]
    fn array_and_vectors() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3 4\n";
        let m = parse(text).unwrap();
        assert!(!m.is_coordinate());
        let d = m.to_dense();
        assert_eq!((d[(0, 0)], d[(1, 0)], d[(0, 1)], d[(1, 1)]), (1.0, 2.0, 3.0, 4.0));
        let row = parse("%%MatrixMarket matrix array real general\n1 3\n1\n2\n3\n").unwrap();
        assert_eq!(row.to_vector().unwrap(), vec![1.0, 2.0, 3.0]);
        let col = parse("%%MatrixMarket matrix coordinate pattern general\n3 1 1\n2 1\n").unwrap();
        assert_eq!(col.to_vector().unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(m.to_vector().is_none());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n";
        assert_eq!(parse(bad).unwrap_err().line, 4);
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n";
        assert_eq!(parse(short).unwrap_err().line, 3);
        let word = "%%MatrixMarket matrix array real general\n1 1\nabc\n";
        assert_eq!(parse(word).unwrap_err().line, 3);
        assert_eq!(parse("hello\n").unwrap_err().line, 1);
        let complex = "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n";
        assert_eq!(parse(complex).unwrap_err().line, 1);
    }

    #[test]
    fn writers_round_trip_exactly() {
        let m = Mat::from_fn(3, 2, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0) - 0.2);
        let back = parse(&write_array(&m)).unwrap().to_dense();
        assert_eq!(back, m);
        let s = CscMatrix::from_triplets(3, 3, &[(0, 0, 1.0 / 3.0), (2, 1, -7e-300), (1, 2, 1e300)]).unwrap();
        let back = parse(&write_coordinate(&s)).unwrap().to_dense();
        assert_eq!(back, s.to_dense());
        let v = vec![0.1, -2.5e-17, 3.0];
        assert_eq!(parse(&write_vector(&v)).unwrap().to_vector().unwrap(), v);
    }
}

//! Loading `(E, A, b, c)` quadruples from Matrix Market files.

use std::path::{Path, PathBuf};

use mor_iha::{LtiSystem, MorError, SysMatrix};

use crate::error::CliError;
use crate::mtx::{self, MtxMatrix};

/// Paths of one system; `e = None` means `E = I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemFiles {
    pub e: Option<PathBuf>,
    pub a: PathBuf,
    pub b: PathBuf,
    pub c: PathBuf,
}

fn find(dir: &Path, names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

impl SystemFiles {
    /// `A.mtx`, `B.mtx`/`b.mtx`, `C.mtx`/`c.mtx` and optional `E.mtx` in `dir`.
    pub fn in_dir(dir: &Path) -> Result<Self, CliError> {
        let need = |names: &[&str]| {
            find(dir, names).ok_or_else(|| {
                CliError::Invalid(format!("{} has no {} file", dir.display(), names.join(" or ")))
            })
        };
        Ok(Self {
            e: find(dir, &["E.mtx", "e.mtx"]),
            a: need(&["A.mtx", "a.mtx"])?,
            b: need(&["B.mtx", "b.mtx"])?,
            c: need(&["C.mtx", "c.mtx"])?,
        })
    }
}

fn load(path: &Path) -> Result<MtxMatrix, CliError> {
    mtx::read(path).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

fn vector(m: &MtxMatrix, name: &str) -> Result<Vec<f64>, CliError> {
    m.to_vector().ok_or_else(|| {
        CliError::Mor(MorError::DimensionMismatch(format!("{name} is {}x{}, expected a vector", m.nrows(), m.ncols())))
    })
}

/// Reads the quadruple; storage is sparse if any file uses coordinate format.
pub fn ingest(files: &SystemFiles) -> Result<LtiSystem, CliError> {
    let a = load(&files.a)?;
    let e = files.e.as_deref().map(load).transpose()?;
    let b_file = load(&files.b)?;
    let c_file = load(&files.c)?;
    let b = vector(&b_file, "b")?;
    let c = vector(&c_file, "c")?;
    let sparse = a.is_coordinate()
        || e.as_ref().is_some_and(MtxMatrix::is_coordinate)
        || b_file.is_coordinate()
        || c_file.is_coordinate();
    let sys = if sparse {
        LtiSystem::sparse(e.map(|m| m.to_sparse()), a.to_sparse(), b, c, 0.0)
    } else {
        LtiSystem::dense(e.map(|m| m.to_dense()), a.to_dense(), b, c, 0.0)
    };
    Ok(sys?)
}

fn matrix_text(m: &SysMatrix) -> String {
    match m {
        SysMatrix::Dense(d) => mtx::write_array(d),
        SysMatrix::Sparse(s) => mtx::write_coordinate(s),
    }
}

/// Writes `E.mtx`, `A.mtx`, `b.mtx` and `c.mtx` into `dir`, keeping the
/// storage kind. The feed-forward term is not part of the quadruple.
pub fn write_system(sys: &LtiSystem, dir: &Path) -> Result<SystemFiles, CliError> {
    let files = SystemFiles {
        e: Some(dir.join("E.mtx")),
        a: dir.join("A.mtx"),
        b: dir.join("b.mtx"),
        c: dir.join("c.mtx"),
    };
    let e = files.e.as_ref().expect("set above");
    crate::job::write_atomic(e, &matrix_text(sys.e()))?;
    crate::job::write_atomic(&files.a, &matrix_text(sys.a()))?;
    crate::job::write_atomic(&files.b, &mtx::write_vector(sys.b()))?;
    crate::job::write_atomic(&files.c, &mtx::write_vector(sys.c()))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mor_iha::StorageKind;
    use num_complex::Complex64;

    fn put(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn scalar(v: f64) -> String {
        format!("%%MatrixMarket matrix array real general\n1 1\n{v}\n")
    }

    #[test]
    fn first_order_system_without_e() {
        let dir = tempfile::tempdir().unwrap();
        put(dir.path(), "A.mtx", &scalar(-1.0));
        put(dir.path(), "b.mtx", &scalar(1.0));
        put(dir.path(), "c.mtx", &scalar(1.0));
        let files = SystemFiles::in_dir(dir.path()).unwrap();
        assert!(files.e.is_none());
        let sys = ingest(&files).unwrap();
        assert_eq!(sys.storage_kind(), StorageKind::Dense);
        let h = sys.eval(Complex64::new(0.0, 2.0)).unwrap();
        assert!((h - Complex64::new(1.0, 2.0).inv()).norm() < 1e-15);
    }

    #[test]
    fn coordinate_input_gives_sparse_storage() {
        let dir = tempfile::tempdir().unwrap();
        put(dir.path(), "E.mtx", "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2\n");
        put(dir.path(), "A.mtx", &scalar(-1.0));
        put(dir.path(), "B.mtx", &scalar(1.0));
        put(dir.path(), "C.mtx", &scalar(3.0));
        let sys = ingest(&SystemFiles::in_dir(dir.path()).unwrap()).unwrap();
        assert_eq!(sys.storage_kind(), StorageKind::Sparse);
        assert!((sys.eval(Complex64::new(0.0, 0.0)).unwrap().re - 3.0).abs() < 1e-15);
    }

    #[test]
    fn mismatches_and_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        put(dir.path(), "A.mtx", "%%MatrixMarket matrix array real general\n2 2\n-1\n0\n0\n-2\n");
        put(dir.path(), "b.mtx", "%%MatrixMarket matrix array real general\n3 1\n1\n1\n1\n");
        put(dir.path(), "c.mtx", "%%MatrixMarket matrix array real general\n2 1\n1\n1\n");
        let files = SystemFiles::in_dir(dir.path()).unwrap();
        assert!(matches!(ingest(&files), Err(CliError::Mor(MorError::DimensionMismatch(_)))));

        put(dir.path(), "b.mtx", "%%MatrixMarket matrix array real general\n2 1\n1\nx\n");
        match ingest(&files) {
            Err(CliError::Parse { source, .. }) => assert_eq!(source.line, 4),
            other => panic!("{other:?}"),
        }

        put(dir.path(), "b.mtx", "%%MatrixMarket matrix array real general\n2 1\n1\n1\n");
        put(dir.path(), "E.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n1\n1\n1\n");
        let files = SystemFiles::in_dir(dir.path()).unwrap();
        assert!(matches!(ingest(&files), Err(CliError::Mor(MorError::SingularE))));

        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(SystemFiles::in_dir(empty.path()), Err(CliError::Invalid(_))));
    }
}

//! A CSR matrix whose column-index width is chosen at run time.

use magnus_core::{col_index_width, CsrMatrix};

#[derive(Clone, Debug)]
pub enum AnyCsr {
    U32(CsrMatrix<u32>),
    U64(CsrMatrix<u64>),
}

impl AnyCsr {
    pub fn n_rows(&self) -> usize {
        match self {
            Self::U32(m) => m.n_rows(),
            Self::U64(m) => m.n_rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Self::U32(m) => m.n_cols(),
            Self::U64(m) => m.n_cols(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Self::U32(m) => m.nnz(),
            Self::U64(m) => m.nnz(),
        }
    }

    pub fn col_index_bytes(&self) -> usize {
        match self {
            Self::U32(_) => 4,
            Self::U64(_) => 8,
        }
    }

    /// Converts to 8-byte indices.
    pub fn into_u64(self) -> CsrMatrix<u64> {
        match self {
            Self::U64(m) => m,
            Self::U32(m) => {
                let (r, c, ptr, col, val) = m.into_raw_parts();
                let col = col.into_iter().map(u64::from).collect();
                CsrMatrix::from_raw_parts(r, c, ptr, col, val).expect("widening keeps a valid matrix")
            }
        }
    }

    /// Narrows to 4-byte indices when the column count allows it.
    pub fn narrowest(self) -> Self {
        match self {
            Self::U64(m) if col_index_width(m.n_cols() as u64) == 4 => {
                let (r, c, ptr, col, val) = m.into_raw_parts();
                let col = col.into_iter().map(|x| x as u32).collect();
                Self::U32(CsrMatrix::from_raw_parts(r, c, ptr, col, val).expect("narrowing keeps a valid matrix"))
            }
            other => other,
        }
    }
}

impl From<CsrMatrix<u32>> for AnyCsr {
    fn from(m: CsrMatrix<u32>) -> Self {
        Self::U32(m)
    }
}

impl From<CsrMatrix<u64>> for AnyCsr {
    fn from(m: CsrMatrix<u64>) -> Self {
        Self::U64(m)
    }
}

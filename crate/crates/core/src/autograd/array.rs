use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major `f64` array with one or two dimensions.
///
/// Vectors have shape `[n]`, matrices `[rows, cols]`, scalars `[1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArray", into = "RawArray")]
pub struct Array {
    dims: [usize; 2],
    ndim: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawArray> for Array {
    type Error = Error;

    fn try_from(raw: RawArray) -> Result<Self> {
        Self::new(raw.shape, raw.data)
    }
}

impl From<Array> for RawArray {
    fn from(a: Array) -> Self {
        Self {
            shape: a.shape().to_vec(),
            data: a.data,
        }
    }
}

impl Array {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::with_shape(&shape, data)
    }

    pub fn with_shape(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 2 || shape.contains(&0) {
            return Err(Error::InvalidArray(format!(
                "need one or two positive dimensions, got {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::InvalidArray(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        let mut dims = [1; 2];
        dims[..shape.len()].copy_from_slice(shape);
        Ok(Self {
            dims,
            ndim: shape.len(),
            data,
        })
    }

    /// Panics unless `shape` has one or two positive dimensions.
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self::with_shape(shape, vec![0.0; n]).expect("valid shape")
    }

    pub fn scalar(x: f64) -> Self {
        Self::vector(vec![x])
    }

    /// Panics on an empty vector; use [`Array::new`] for fallible input.
    pub fn vector(data: Vec<f64>) -> Self {
        assert!(!data.is_empty(), "empty vector");
        Self {
            dims: [data.len(), 1],
            ndim: 1,
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArray("ragged rows".into()));
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            dims: [n, n],
            ndim: 2,
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_vector(&self) -> bool {
        self.ndim == 1
    }

    pub fn is_matrix(&self) -> bool {
        self.ndim == 2
    }

    pub fn rows(&self) -> usize {
        self.dims[0]
    }

    pub fn cols(&self) -> usize {
        self.dims[1]
    }

    /// Row `i` of a matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    /// The single value of a one-element array.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

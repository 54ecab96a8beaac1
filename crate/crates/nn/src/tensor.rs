use crate::real::Real;

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    /// `None` when the data length does not match the shape.
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Option<Self> {
        (data.len() == shape.iter().product::<usize>()).then(|| Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::of_f64(v.as_f64())).collect(),
        }
    }
}

/// An ordered list of tensors: the parameters of a network, or gradients
/// with the same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Real> ParamSet<T> {
    pub fn zeros_like(other: &ParamSet<T>) -> Self {
        Self {
            tensors: other.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn add_assign(&mut self, other: &ParamSet<T>) {
        assert_eq!(self.tensors.len(), other.tensors.len());
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            assert_eq!(a.shape(), b.shape());
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for t in &mut self.tensors {
            for x in t.data_mut() {
                *x *= factor;
            }
        }
    }

    /// Euclidean norm over all scalars, accumulated in `f64`.
    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data())
            .map(|v| v.as_f64() * v.as_f64())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flat_map(|t| t.data()).all(|v| v.is_finite())
    }

    /// Scalar at flat index `i` across all tensors.
    pub fn get_flat(&self, mut i: usize) -> T {
        for t in &self.tensors {
            if i < t.len() {
                return t.data()[i];
            }
            i -= t.len();
        }
        panic!("flat index out of range");
    }

    pub fn set_flat(&mut self, mut i: usize, v: T) {
        for t in &mut self.tensors {
            if i < t.len() {
                t.data_mut()[i] = v;
                return;
            }
            i -= t.len();
        }
        panic!("flat index out of range");
    }

    pub fn cast<U: Real>(&self) -> ParamSet<U> {
        ParamSet {
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }
}

//! Minimal tensor/layer library with exact-gradient backpropagation.
//!
//! Training runs in `f32`; gradient verification instantiates the same
//! generic code in `f64` where central differences at `eps = 1e-5` resolve
//! cleanly. The layer set is fixed (conv2d / relu / flatten / linear) and
//! layers keep no forward state: `forward` returns an explicit cache object,
//! so one parameter set can be applied several times per step (the
//! shared-weight frame branches) with gradients accumulating into the shared
//! storage.

mod gradcheck;
mod layers;
mod optim;
mod serial;

pub use gradcheck::{grad_check, GradCheckReport};
pub use layers::{Conv2d, Layer, LayerCache, Linear, Sequential};
pub use optim::{optimize_step, OptAlgo, Optimizer};
pub use serial::{load_model, save_model, SavedModel, SavedParam};

use crate::rng::SplitMix64;

/// Element type for tensors: `f32` for training, `f64` for grad checks.
pub trait Scalar:
    Copy
    + PartialOrd
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
{
    const ZERO: Self;
    const ONE: Self;
    /// Whether relu layers track kink proximity (finite-difference checks
    /// run in f64; f32 training skips the scan).
    const TRACK_KINKS: bool;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn is_finite_val(self) -> bool;
    fn sqrt_val(self) -> Self;
    fn abs_val(self) -> Self;

    /// `C = alpha * A @ B + beta * C` with explicit strides, row-major
    /// conventions. Single-threaded and deterministic.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f32 {
    const ZERO: f32 = 0.0;
    const ONE: f32 = 1.0;
    const TRACK_KINKS: bool = false;
    fn from_f64(x: f64) -> f32 {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn is_finite_val(self) -> bool {
        self.is_finite()
    }
    fn sqrt_val(self) -> f32 {
        self.sqrt()
    }
    fn abs_val(self) -> f32 {
        self.abs()
    }
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;
    const TRACK_KINKS: bool = true;
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn is_finite_val(self) -> bool {
        self.is_finite()
    }
    fn sqrt_val(self) -> f64 {
        self.sqrt()
    }
    fn abs_val(self) -> f64 {
        self.abs()
    }
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Tensor<T> {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::ZERO; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Tensor<T> {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor data length does not match shape"
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
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

    /// Reinterpret with a new shape of equal length.
    pub fn reshaped(mut self, shape: &[usize]) -> Tensor<T> {
        assert_eq!(shape.iter().product::<usize>(), self.data.len());
        self.shape = shape.to_vec();
        self
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite_val())
    }

    /// Seeded fan-in-scaled uniform init: `U(-sqrt(6/fan_in), sqrt(6/fan_in))`.
    pub fn init_he_uniform(&mut self, fan_in: usize, rng: &mut SplitMix64) {
        let limit = (6.0 / fan_in as f64).sqrt();
        for x in self.data.iter_mut() {
            *x = T::from_f64(rng.next_range(-limit, limit));
        }
    }
}
